//! Dev probe: does the projected eigenvector beat the incumbent phases on
//! the phase surrogate itself? Test acceptance variants.
use rsris::channel::{effective_covariances, synthesize_covariances, PhaseConfiguration};
use rsris::linalg::qform;
use rsris::optimizer::*;
use rsris::rate::approx_sum_rate;
use rsris::scenario::ScenarioConfig;
use rsris::seeding::rng_from;

fn run(seed: u64, fresh_lambda: bool, accept_only_better: bool, verbose: bool) -> (f64, usize) {
    let mut scenario = ScenarioConfig::desk_default();
    scenario.seed = seed;
    let stats = synthesize_covariances(&scenario, &mut rng_from(seed, &[1])).unwrap();
    let cfg = OptimizerConfig::new(10.0);
    let phi0 = PhaseConfiguration::ones(40);
    let mut p = default_precoders(&stats, &cfg, &phi0).unwrap();
    let mut phi = phi0;
    let mut cs = effective_covariances(&stats, &phi).unwrap();
    let mut rate_prev: Option<f64> = None;
    let mut iters = 0;
    for it in 1..=60 {
        iters = it;
        let (lambda, lambda_c) = update_lambdas(&cs, &p).unwrap();
        let (beta, beta_c) = update_betas(&cs, &p, &lambda, &lambda_c).unwrap();
        let mut state = FpState { lambda, lambda_c, beta, beta_c, phase: None };
        let (p_new, _) = update_precoders(&cs, &state, &cfg).unwrap();
        p = p_new;
        if fresh_lambda {
            let (l2, lc2) = update_lambdas(&cs, &p).unwrap();
            state.lambda = l2;
            state.lambda_c = lc2;
        }
        state.phase = Some(
            refresh_phase_auxiliaries(&stats, &phi, &p, &state.lambda, &state.lambda_c).unwrap(),
        );
        let quad = build_phase_quadratic(&stats, &p, &state).unwrap();
        let (phi_new, k_opt) = update_phases(&quad).unwrap();
        // compare surrogate at incumbent vs new for the chosen user
        let v_inc = quad.value(&phi.augmented(), k_opt);
        let v_new = quad.value(&phi_new.augmented(), k_opt);
        if verbose && it <= 12 {
            let h = &quad.b + &quad.b_c[k_opt];
            let (x, _) = principal_eigenvector(&h, 1e-9, 50_000).unwrap();
            let border_mass = x[40].norm_sqr();
            println!(
                "  it {it}: inc {v_inc:.4} new {v_new:.4} delta {:+.4} border-mass {border_mass:.3}",
                v_new - v_inc
            );
        }
        if !accept_only_better || v_new >= v_inc {
            phi = phi_new;
        }
        cs = effective_covariances(&stats, &phi).unwrap();
        let rate = approx_sum_rate(&cs, &p).unwrap().sum_rate;
        if let Some(prev) = rate_prev {
            if (rate - prev).abs() / prev.max(1e-12) < cfg.rel_tol {
                break;
            }
        }
        rate_prev = Some(rate);
    }
    (approx_sum_rate(&cs, &p).unwrap().sum_rate, iters)
}

fn main() {
    println!("== seed 2 diagnostics (fresh lambda, no acceptance):");
    run(2, true, false, true);
    for (fl, acc, name) in [
        (false, false, "stale  plain "),
        (true, false, "fresh  plain "),
        (false, true, "stale  accept"),
        (true, true, "fresh  accept"),
    ] {
        let mut sum = 0.0;
        let mut sum_it = 0usize;
        for seed in 0..15u64 {
            let (r, it) = run(seed, fl, acc, false);
            sum += r;
            sum_it += it;
        }
        println!("{name}: mean rate {:.4}, mean iters {:.1}", sum / 15.0, sum_it as f64 / 15.0);
    }
}
