//! Dev probe: tune the number of tolerated selection revisits before committing.
use rsris::channel::{effective_covariances, synthesize_covariances, PhaseConfiguration};
use rsris::linalg::qform;
use rsris::optimizer::*;
use rsris::rate::approx_sum_rate;
use rsris::scenario::ScenarioConfig;
use rsris::seeding::rng_from;
use rsris::CVec;

struct Selector {
    incumbent: Option<usize>,
    abandoned: Vec<usize>,
    committed: bool,
    revisits_left: usize,
}
impl Selector {
    fn new(tolerated: usize) -> Self {
        Selector { incumbent: None, abandoned: Vec::new(), committed: false, revisits_left: tolerated }
    }
    fn select(&mut self, argmin: usize) -> usize {
        match self.incumbent {
            None => { self.incumbent = Some(argmin); argmin }
            Some(inc) => {
                if self.committed || argmin == inc {
                    inc
                } else if self.abandoned.contains(&argmin) {
                    if self.revisits_left == 0 {
                        self.committed = true;
                        inc
                    } else {
                        self.revisits_left -= 1;
                        self.abandoned.retain(|&u| u != argmin);
                        self.abandoned.push(inc);
                        self.incumbent = Some(argmin);
                        argmin
                    }
                } else {
                    self.abandoned.push(inc);
                    self.incumbent = Some(argmin);
                    argmin
                }
            }
        }
    }
}

fn project(x: &CVec) -> CVec {
    let n = x.len();
    let last = x[n - 1];
    let rot = if last.norm() < 1e-12 { rsris::C64::new(1.0, 0.0) } else { (last / last.norm()).conj() };
    let mut out = CVec::from_fn(n, |i, _| {
        let e = x[i] * rot;
        if e.norm() < 1e-12 { rsris::C64::new(1.0, 0.0) } else { e / e.norm() }
    });
    out[n - 1] = rsris::C64::new(1.0, 0.0);
    out
}

fn run(stats: &rsris::channel::ChannelStatistics, pt: f64, tolerated: usize)
    -> (f64, usize, Option<usize>) {
    let cfg = OptimizerConfig::new(pt);
    let n = stats.dims().n;
    let nk = stats.dims().k;
    let mut p = default_precoders(stats, &cfg, &PhaseConfiguration::ones(n)).unwrap();
    let mut phi = PhaseConfiguration::ones(n);
    let mut cs = effective_covariances(stats, &phi).unwrap();
    let mut rate_prev: Option<f64> = None;
    let mut iters = 0;
    let mut rates = Vec::new();
    let mut sel = Selector::new(tolerated);
    for it in 1..=100 {
        iters = it;
        let (lambda, lambda_c) = update_lambdas(&cs, &p).unwrap();
        let (beta, beta_c) = update_betas(&cs, &p, &lambda, &lambda_c).unwrap();
        let mut state = FpState { lambda, lambda_c, beta, beta_c, phase: None };
        let (p_new, k_opt) = update_precoders(&cs, &state, &cfg).unwrap();
        let before = fp_objective(&cs, &p, &state, k_opt).unwrap();
        let after = fp_objective(&cs, &p_new, &state, k_opt).unwrap();
        if after >= before { p = p_new; }
        state.phase = Some(
            refresh_phase_auxiliaries(stats, &phi, &p, &state.lambda, &state.lambda_c).unwrap(),
        );
        let quad = build_phase_quadratic(stats, &p, &state).unwrap();
        let mut vals = Vec::new();
        let mut pbs = Vec::new();
        for u in 0..nk {
            let h = &quad.b + &quad.b_c[u];
            let (x, _) = principal_eigenvector(&h, 1e-9, 50_000).unwrap();
            let pb = project(&x);
            vals.push(qform(&h, &pb) + quad.t[u]);
            pbs.push(pb);
        }
        let argmin = (0..nk).min_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap()).unwrap();
        let adopt = sel.select(argmin);
        phi = PhaseConfiguration::new(CVec::from_fn(n, |i, _| pbs[adopt][i])).unwrap();
        cs = effective_covariances(stats, &phi).unwrap();
        let rate = approx_sum_rate(&cs, &p).unwrap().sum_rate;
        rates.push(rate);
        if let Some(prev) = rate_prev {
            if (rate - prev).abs() / prev.max(1e-12) < cfg.rel_tol { break; }
        }
        rate_prev = Some(rate);
    }
    let mut plateau = None;
    'outer: for t in 5..rates.len() {
        for u in (t - 4)..=t {
            if (rates[u] - rates[u - 1]).abs() / rates[u - 1].max(1e-12) >= 1e-3 { continue 'outer; }
        }
        plateau = Some(t + 1);
        break;
    }
    if plateau.is_none() && iters < 100 { plateau = Some(iters); }
    (*rates.last().unwrap(), iters, plateau)
}

fn main() {
    for tolerated in [0usize, 1, 2, 4, 8] {
        let mut sum = 0.0;
        let mut fails = 0;
        let mut worst = 0;
        let mut it_sum = 0;
        for seed in 0..10u64 {
            let mut sc = ScenarioConfig::desk_default();
            sc.seed = seed;
            let stats = synthesize_covariances(&sc, &mut rng_from(seed, &[1])).unwrap();
            let (r, it, plat) = run(&stats, 10.0, tolerated);
            sum += r;
            it_sum += it;
            match plat { Some(pl) => worst = worst.max(pl), None => fails += 1 }
        }
        println!(
            "revisits {tolerated}: mean rate {:.4}, mean iters {:.1}, fails {fails}, worst plateau {worst}",
            sum / 10.0, it_sum as f64 / 10.0
        );
    }
}
