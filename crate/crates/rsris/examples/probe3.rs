//! Dev probe: effect of a monotone safeguard on the precoder adoption.
use rsris::channel::{effective_covariances, synthesize_covariances};
use rsris::optimizer::*;
use rsris::rate::approx_sum_rate;
use rsris::scenario::ScenarioConfig;
use rsris::seeding::rng_from;

fn main() {
    // manual BCD loop with safeguard, vs library optimize()
    let mut rates_guard = Vec::new();
    let mut rates_plain = Vec::new();
    for seed in 0..15u64 {
        let mut scenario = ScenarioConfig::desk_default();
        scenario.seed = seed;
        let stats = synthesize_covariances(&scenario, &mut rng_from(seed, &[1])).unwrap();
        let cfg = OptimizerConfig::new(10.0);

        // plain
        let mut c2 = cfg.clone();
        c2.max_iters = 60;
        let plain = optimize(&stats, &c2, None, None).unwrap();
        rates_plain.push(plain.rate.sum_rate);

        // safeguarded manual loop
        let phi0 = rsris::channel::PhaseConfiguration::ones(40);
        let mut p = default_precoders(&stats, &cfg, &phi0).unwrap();
        let mut phi = phi0;
        let mut cs = effective_covariances(&stats, &phi).unwrap();
        let mut worst_dip = 0.0f64;
        let mut n_reject = 0;
        let mut rate_prev = None;
        let mut iters = 0;
        for it in 1..=60 {
            iters = it;
            let (lambda, lambda_c) = update_lambdas(&cs, &p).unwrap();
            let (beta, beta_c) = update_betas(&cs, &p, &lambda, &lambda_c).unwrap();
            let mut state = FpState { lambda, lambda_c, beta, beta_c, phase: None };
            let (p_new, k_opt) = update_precoders(&cs, &state, &cfg).unwrap();
            let before = fp_objective(&cs, &p, &state, k_opt).unwrap();
            let after = fp_objective(&cs, &p_new, &state, k_opt).unwrap();
            if after >= before - 1e-12 {
                p = p_new;
            } else {
                n_reject += 1;
                worst_dip = worst_dip.max(before - after);
            }
            state.phase = Some(
                refresh_phase_auxiliaries(&stats, &phi, &p, &state.lambda, &state.lambda_c)
                    .unwrap(),
            );
            let quad = build_phase_quadratic(&stats, &p, &state).unwrap();
            let (phi_new, _) = update_phases(&quad).unwrap();
            phi = phi_new;
            cs = effective_covariances(&stats, &phi).unwrap();
            let rate = approx_sum_rate(&cs, &p).unwrap().sum_rate;
            if let Some(prev) = rate_prev {
                if (rate - prev as f64).abs() / f64::max(prev, 1e-12) < cfg.rel_tol {
                    break;
                }
            }
            rate_prev = Some(rate);
        }
        let rate = approx_sum_rate(&cs, &p).unwrap().sum_rate;
        rates_guard.push(rate);
        println!(
            "seed {seed}: plain {:.4} ({} it) | guarded {:.4} ({} it, {} rejects, biggest avoided dip {:.2e})",
            plain.rate.sum_rate, plain.iterations_used, rate, iters, n_reject, worst_dip
        );
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!("mean plain {:.4} | mean guarded {:.4}", mean(&rates_plain), mean(&rates_guard));
}
