//! Dev probe: warm-started power iteration in the phase step.
use rsris::channel::{effective_covariances, synthesize_covariances, PhaseConfiguration};
use rsris::linalg::qform;
use rsris::optimizer::*;
use rsris::rate::approx_sum_rate;
use rsris::scenario::ScenarioConfig;
use rsris::seeding::rng_from;
use rsris::{C64, CVec};

// power iteration with warm start
fn pi_warm(h: &rsris::CMat, start: &CVec, tol: f64, iters: usize) -> (CVec, f64) {
    let n = h.nrows();
    let h_norm = h.norm();
    let mut shift = 0.0f64;
    for i in 0..n {
        let radius: f64 = (0..n).filter(|&j| j != i).map(|j| h[(i, j)].norm()).sum();
        shift = shift.max(-(h[(i, i)].re - radius));
    }
    let mut hs = h.clone();
    for i in 0..n {
        hs[(i, i)] += C64::new(shift, 0.0);
    }
    let mut v = start / C64::new(start.norm(), 0.0);
    for _ in 0..iters {
        let hv = h * &v;
        let lam = v.dotc(&hv).re;
        let resid = (&hv - &v * C64::new(lam, 0.0)).norm();
        if resid <= tol * h_norm {
            return (v, lam);
        }
        let w = &hs * &v;
        let nw = w.norm();
        if nw <= f64::MIN_POSITIVE {
            return (v, -shift);
        }
        v = w / C64::new(nw, 0.0);
    }
    let hv = h * &v;
    let lam = v.dotc(&hv).re;
    (v, lam)
}

fn project(x: &CVec) -> CVec {
    let n = x.len();
    let last = x[n - 1];
    let rot = if last.norm() < 1e-12 { C64::new(1.0, 0.0) } else { (last / last.norm()).conj() };
    let mut out = CVec::from_fn(n, |i, _| {
        let e = x[i] * rot;
        if e.norm() < 1e-12 { C64::new(1.0, 0.0) } else { e / e.norm() }
    });
    out[n - 1] = C64::new(1.0, 0.0);
    out
}

fn run(seed: u64, warm: bool, guard: bool) -> (f64, usize, Option<usize>, f64) {
    let mut scenario = ScenarioConfig::desk_default();
    scenario.seed = seed;
    let stats = synthesize_covariances(&scenario, &mut rng_from(seed, &[1])).unwrap();
    let cfg = OptimizerConfig::new(10.0);
    let n = 40;
    let phi0 = PhaseConfiguration::ones(n);
    let mut p = default_precoders(&stats, &cfg, &phi0).unwrap();
    let mut phi = phi0;
    let mut cs = effective_covariances(&stats, &phi).unwrap();
    let mut rate_prev: Option<f64> = None;
    let mut iters = 0;
    let mut rates = Vec::new();
    let mut worst_dip = 0.0f64;
    for it in 1..=100 {
        iters = it;
        let (lambda, lambda_c) = update_lambdas(&cs, &p).unwrap();
        let (beta, beta_c) = update_betas(&cs, &p, &lambda, &lambda_c).unwrap();
        let mut state = FpState { lambda, lambda_c, beta, beta_c, phase: None };
        let (p_new, k_opt) = update_precoders(&cs, &state, &cfg).unwrap();
        let before = fp_objective(&cs, &p, &state, k_opt).unwrap();
        let after = fp_objective(&cs, &p_new, &state, k_opt).unwrap();
        if !guard || after >= before - 1e-9 {
            p = p_new;
            worst_dip = worst_dip.max(before - after);
        }
        state.phase = Some(
            refresh_phase_auxiliaries(&stats, &phi, &p, &state.lambda, &state.lambda_c).unwrap(),
        );
        let quad = build_phase_quadratic(&stats, &p, &state).unwrap();
        // per-user eigen + project + select
        let mut best: Option<(f64, CVec)> = None;
        let phibar0 = phi.augmented();
        for kk in 0..3 {
            let h = &quad.b + &quad.b_c[kk];
            let (x, _) = if warm {
                pi_warm(&h, &phibar0, 1e-9, 50_000)
            } else {
                let (x, l) = principal_eigenvector(&h, 1e-9, 50_000).unwrap();
                (x, l)
            };
            let pb = project(&x);
            let value = qform(&h, &pb) + quad.t[kk];
            if best.as_ref().map_or(true, |(v, _)| value < *v) {
                best = Some((value, pb));
            }
        }
        let (_, pb) = best.unwrap();
        phi = PhaseConfiguration::new(CVec::from_fn(n, |i, _| pb[i])).unwrap();
        cs = effective_covariances(&stats, &phi).unwrap();
        let rate = approx_sum_rate(&cs, &p).unwrap().sum_rate;
        rates.push(rate);
        if let Some(prev) = rate_prev {
            if (rate - prev).abs() / prev.max(1e-12) < cfg.rel_tol {
                break;
            }
        }
        rate_prev = Some(rate);
    }
    let mut plateau = None;
    'outer: for t in 5..rates.len() {
        for u in (t - 4)..=t {
            if (rates[u] - rates[u - 1]).abs() / rates[u - 1].max(1e-12) >= 1e-3 {
                continue 'outer;
            }
        }
        plateau = Some(t + 1);
        break;
    }
    (*rates.last().unwrap(), iters, plateau, worst_dip)
}

fn main() {
    for (warm, guard, name) in
        [(false, false, "cold plain"), (true, false, "warm plain"), (true, true, "warm guard")]
    {
        let mut sum = 0.0;
        let mut plat_fail = 0;
        let mut plat_worst = 0;
        let mut it_sum = 0;
        for seed in 0..12u64 {
            let (r, it, plat, _d) = run(seed, warm, guard);
            sum += r;
            it_sum += it;
            match plat {
                Some(p) => plat_worst = plat_worst.max(p),
                None => plat_fail += 1,
            }
        }
        println!(
            "{name}: mean rate {:.4}, mean iters {:.1}, plateau fails {plat_fail}, worst plateau {plat_worst}",
            sum / 12.0,
            it_sum as f64 / 12.0
        );
    }
}
