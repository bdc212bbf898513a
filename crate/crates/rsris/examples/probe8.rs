//! Dev probe: guarded precoder adoption + rate-checked phase adoption.
use rsris::channel::{effective_covariances, synthesize_covariances, PhaseConfiguration};
use rsris::optimizer::*;
use rsris::rate::approx_sum_rate;
use rsris::scenario::ScenarioConfig;
use rsris::seeding::rng_from;
use rsris::CVec;

fn run(seed: u64, guard: bool) -> (f64, usize, Option<usize>, usize, usize) {
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
    let mut p_rejects = 0;
    let mut phi_rejects = 0;
    for it in 1..=100 {
        iters = it;
        let (lambda, lambda_c) = update_lambdas(&cs, &p).unwrap();
        let (beta, beta_c) = update_betas(&cs, &p, &lambda, &lambda_c).unwrap();
        let mut state = FpState { lambda, lambda_c, beta, beta_c, phase: None };
        let (p_new, k_opt) = update_precoders(&cs, &state, &cfg).unwrap();
        if guard {
            let before = fp_objective(&cs, &p, &state, k_opt).unwrap();
            let after = fp_objective(&cs, &p_new, &state, k_opt).unwrap();
            if after >= before {
                p = p_new;
            } else {
                p_rejects += 1;
            }
        } else {
            p = p_new;
        }
        state.phase = Some(
            refresh_phase_auxiliaries(&stats, &phi, &p, &state.lambda, &state.lambda_c).unwrap(),
        );
        let quad = build_phase_quadratic(&stats, &p, &state).unwrap();
        let (phi_new, _) = update_phases(&quad).unwrap();
        if guard {
            let rate_old = approx_sum_rate(&cs, &p).unwrap().sum_rate;
            let cs_new = effective_covariances(&stats, &phi_new).unwrap();
            let rate_new = approx_sum_rate(&cs_new, &p).unwrap().sum_rate;
            if rate_new >= rate_old {
                phi = phi_new;
                cs = cs_new;
            } else {
                phi_rejects += 1;
            }
        } else {
            phi = phi_new;
            cs = effective_covariances(&stats, &phi).unwrap();
        }
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
    let _ = CVec::zeros(0);
    (*rates.last().unwrap(), iters, plateau, p_rejects, phi_rejects)
}

fn main() {
    for (guard, name) in [(false, "plain  "), (true, "guarded")] {
        let mut sum = 0.0;
        let mut it_sum = 0;
        let mut plat_fail = 0;
        let mut plat_worst = 0;
        let mut rej = (0, 0);
        for seed in 0..12u64 {
            let (r, it, plat, pr, fr) = run(seed, guard);
            sum += r;
            it_sum += it;
            rej.0 += pr;
            rej.1 += fr;
            match plat {
                Some(p) => plat_worst = plat_worst.max(p),
                None => plat_fail += 1,
            }
        }
        println!(
            "{name}: mean rate {:.4}, mean iters {:.1}, plateau fails {plat_fail}, worst plateau it {plat_worst}, rejects p/phi {}/{}",
            sum / 12.0,
            it_sum as f64 / 12.0,
            rej.0,
            rej.1
        );
    }
}
