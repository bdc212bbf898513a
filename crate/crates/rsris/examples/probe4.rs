//! Dev probe: refresh lambdas at the new precoders before the phase step.
use rsris::channel::{effective_covariances, synthesize_covariances, PhaseConfiguration};
use rsris::optimizer::*;
use rsris::rate::approx_sum_rate;
use rsris::scenario::ScenarioConfig;
use rsris::seeding::rng_from;

fn main() {
    let mut sum_plain = 0.0;
    let mut sum_fresh = 0.0;
    let mut worst_d2 = 0.0f64;
    let mut worst_rate_drop = 0.0f64;
    for seed in 0..15u64 {
        let mut scenario = ScenarioConfig::desk_default();
        scenario.seed = seed;
        let stats = synthesize_covariances(&scenario, &mut rng_from(seed, &[1])).unwrap();
        let cfg = OptimizerConfig::new(10.0);
        let mut c2 = cfg.clone();
        c2.max_iters = 60;
        let plain = optimize(&stats, &c2, None, None).unwrap();
        sum_plain += plain.rate.sum_rate;

        // fresh-lambda phase step
        let phi0 = PhaseConfiguration::ones(40);
        let mut p = default_precoders(&stats, &cfg, &phi0).unwrap();
        let mut phi = phi0;
        let mut cs = effective_covariances(&stats, &phi).unwrap();
        let mut rate_prev: Option<f64> = None;
        let mut iters = 0;
        let mut trace = Vec::new();
        for it in 1..=60 {
            iters = it;
            let (lambda, lambda_c) = update_lambdas(&cs, &p).unwrap();
            let (beta, beta_c) = update_betas(&cs, &p, &lambda, &lambda_c).unwrap();
            let mut state = FpState { lambda, lambda_c, beta, beta_c, phase: None };
            let (p_new, k_opt) = update_precoders(&cs, &state, &cfg).unwrap();
            let before = fp_objective(&cs, &p, &state, k_opt).unwrap();
            let after = fp_objective(&cs, &p_new, &state, k_opt).unwrap();
            worst_d2 = worst_d2.max(before - after);
            p = p_new;
            // refresh the ratio auxiliaries at the new precoders
            let (l2, lc2) = update_lambdas(&cs, &p).unwrap();
            state.lambda = l2;
            state.lambda_c = lc2;
            state.phase = Some(
                refresh_phase_auxiliaries(&stats, &phi, &p, &state.lambda, &state.lambda_c)
                    .unwrap(),
            );
            let quad = build_phase_quadratic(&stats, &p, &state).unwrap();
            let (phi_new, _) = update_phases(&quad).unwrap();
            // measure the true-rate effect of the phase move alone
            let rate_before_phase = approx_sum_rate(&cs, &p).unwrap().sum_rate;
            phi = phi_new;
            cs = effective_covariances(&stats, &phi).unwrap();
            let rate = approx_sum_rate(&cs, &p).unwrap().sum_rate;
            worst_rate_drop = worst_rate_drop.max(rate_before_phase - rate);
            trace.push(rate);
            if let Some(prev) = rate_prev {
                if (rate - prev).abs() / prev.max(1e-12) < cfg.rel_tol {
                    break;
                }
            }
            rate_prev = Some(rate);
        }
        let rate = approx_sum_rate(&cs, &p).unwrap().sum_rate;
        sum_fresh += rate;
        if seed < 4 {
            let show: Vec<String> = trace.iter().take(14).map(|r| format!("{r:.2}")).collect();
            println!("seed {seed}: plain {:.4}/{} it | fresh {:.4}/{} it | {}",
                plain.rate.sum_rate, plain.iterations_used, rate, iters, show.join(" "));
        }
    }
    println!("mean plain {:.4} | mean fresh-lambda {:.4}", sum_plain / 15.0, sum_fresh / 15.0);
    println!("worst precoder d2 {:.3e} | worst phase-step true-rate drop {:.3e}", worst_d2, worst_rate_drop);
}
