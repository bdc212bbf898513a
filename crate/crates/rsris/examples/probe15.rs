//! Dev probe: revisit-triggered permanent commitment of common-user selection.
use rsris::channel::{effective_covariances, synthesize_covariances, PhaseConfiguration};
use rsris::linalg::qform;
use rsris::optimizer::*;
use rsris::rate::approx_sum_rate;
use rsris::scenario::{RisSpec, ScenarioConfig, UserRanges};
use rsris::seeding::rng_from;
use rsris::CVec;

fn scen(which: u32) -> ScenarioConfig {
    let mut s = ScenarioConfig::desk_default();
    if which == 1 {
        s.delta = 0.3;
        s.ris = Some(RisSpec {
            los_angle_bs_deg: 15.0, los_angle_ris_deg: -25.0, los_entry_gain: 0.5,
            corr_angle_ris_deg: 0.0, corr_spread_ris_deg: 30.0,
            corr_angle_tx_deg: 0.0, corr_spread_tx_deg: 10.0,
        });
        s.ranges = Some(UserRanges {
            direct_paths: 3, direct_angle_deg: [-60.0, 60.0], direct_spread_deg: [2.0, 8.0],
            direct_power: [0.01, 0.06],
            ris_paths: 2, ris_angle_deg: [-60.0, 60.0], ris_spread_deg: [10.0, 20.0],
            ris_power: [2.0, 6.0],
        });
    }
    s
}

#[derive(Default)]
struct Selector {
    incumbent: Option<usize>,
    abandoned: Vec<usize>,
    committed: bool,
}
impl Selector {
    fn select(&mut self, argmin: usize) -> usize {
        match self.incumbent {
            None => { self.incumbent = Some(argmin); argmin }
            Some(inc) => {
                if self.committed || argmin == inc {
                    inc
                } else if self.abandoned.contains(&argmin) {
                    self.committed = true; // cycle detected: stick with incumbent
                    inc
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

fn run(stats: &rsris::channel::ChannelStatistics, pt: f64, commit_prec: bool)
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
    let mut phase_sel = Selector::default();
    let mut prec_sel = Selector::default();
    for it in 1..=100 {
        iters = it;
        let (lambda, lambda_c) = update_lambdas(&cs, &p).unwrap();
        let (beta, beta_c) = update_betas(&cs, &p, &lambda, &lambda_c).unwrap();
        let mut state = FpState { lambda, lambda_c, beta, beta_c, phase: None };
        let cands = precoder_candidates(&cs, &state, &cfg).unwrap();
        let argmin_p = (0..nk)
            .min_by(|&a, &b| cands[a].objective.partial_cmp(&cands[b].objective).unwrap())
            .unwrap();
        let chosen_p = if commit_prec { prec_sel.select(argmin_p) } else { argmin_p };
        let p_new = cands[chosen_p].precoders.clone();
        let before = fp_objective(&cs, &p, &state, chosen_p).unwrap();
        let after = fp_objective(&cs, &p_new, &state, chosen_p).unwrap();
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
        let adopt = phase_sel.select(argmin);
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
    for which in [0u32, 1] {
        for commit_prec in [false, true] {
            let mut sum = 0.0;
            let mut fails = 0;
            let mut worst = 0;
            let mut it_sum = 0;
            for seed in 0..10u64 {
                let mut sc = scen(which);
                sc.seed = seed;
                let stats = synthesize_covariances(&sc, &mut rng_from(seed, &[1])).unwrap();
                let (r, it, plat) = run(&stats, 10.0, commit_prec);
                sum += r;
                it_sum += it;
                match plat { Some(pl) => worst = worst.max(pl), None => fails += 1 }
            }
            println!(
                "scenario {which} commit_prec {commit_prec}: mean rate {:.4}, mean iters {:.1}, fails {fails}, worst plateau {worst}",
                sum / 10.0, it_sum as f64 / 10.0
            );
        }
    }
}
