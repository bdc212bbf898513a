//! Dev probe: tail microstructure of an oscillating run.
use rsris::channel::{effective_covariances, synthesize_covariances, PhaseConfiguration};
use rsris::optimizer::*;
use rsris::rate::approx_sum_rate;
use rsris::scenario::ScenarioConfig;
use rsris::seeding::rng_from;
use rsris::CVec;

fn main() {
    let mut scenario = ScenarioConfig::desk_default();
    scenario.seed = 0;
    let stats = synthesize_covariances(&scenario, &mut rng_from(0, &[1])).unwrap();
    let cfg = OptimizerConfig::new(10.0);
    let n = 40;
    let mut p = default_precoders(&stats, &cfg, &PhaseConfiguration::ones(n)).unwrap();
    let mut phi = PhaseConfiguration::ones(n);
    let mut cs = effective_covariances(&stats, &phi).unwrap();
    let mut phi_prev: Option<CVec> = None;
    for it in 1..=70 {
        let (lambda, lambda_c) = update_lambdas(&cs, &p).unwrap();
        let (beta, beta_c) = update_betas(&cs, &p, &lambda, &lambda_c).unwrap();
        let mut state = FpState { lambda, lambda_c, beta, beta_c, phase: None };
        let (p_new, k_prec) = update_precoders(&cs, &state, &cfg).unwrap();
        p = p_new;
        state.phase = Some(
            refresh_phase_auxiliaries(&stats, &phi, &p, &state.lambda, &state.lambda_c).unwrap(),
        );
        let quad = build_phase_quadratic(&stats, &p, &state).unwrap();
        let (phi_new, k_phase) = update_phases(&quad).unwrap();
        let dist = phi_prev
            .as_ref()
            .map(|prev| (phi_new.vector() - prev).norm() / (n as f64).sqrt())
            .unwrap_or(f64::NAN);
        phi_prev = Some(phi_new.vector().clone());
        let move_dist = (phi_new.vector() - phi.vector()).norm() / (n as f64).sqrt();
        phi = phi_new;
        cs = effective_covariances(&stats, &phi).unwrap();
        let rate = approx_sum_rate(&cs, &p).unwrap().sum_rate;
        if it > 40 {
            println!(
                "it {it}: rate {rate:.4} k_prec {k_prec} k_phase {k_phase} |dphi| {move_dist:.3} |phi_t - phi_t-1(out)| {dist:.3}"
            );
        }
    }
}
