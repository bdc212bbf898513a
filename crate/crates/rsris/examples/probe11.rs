//! Dev probe: inner alternation of the phase block (aux refresh <-> eigen step).
use rsris::channel::{effective_covariances, synthesize_covariances, PhaseConfiguration};
use rsris::optimizer::*;
use rsris::rate::approx_sum_rate;
use rsris::scenario::ScenarioConfig;
use rsris::seeding::rng_from;

fn run(seed: u64, inner_max: usize) -> (f64, usize, Option<usize>, f64) {
    let mut scenario = ScenarioConfig::desk_default();
    scenario.seed = seed;
    let stats = synthesize_covariances(&scenario, &mut rng_from(seed, &[1])).unwrap();
    let cfg = OptimizerConfig::new(10.0);
    let n = 40;
    let mut p = default_precoders(&stats, &cfg, &PhaseConfiguration::ones(n)).unwrap();
    let mut phi = PhaseConfiguration::ones(n);
    let mut cs = effective_covariances(&stats, &phi).unwrap();
    let mut rate_prev: Option<f64> = None;
    let mut iters = 0;
    let mut rates = Vec::new();
    let mut worst_d2 = 0.0f64;
    for it in 1..=100 {
        iters = it;
        let (lambda, lambda_c) = update_lambdas(&cs, &p).unwrap();
        let (beta, beta_c) = update_betas(&cs, &p, &lambda, &lambda_c).unwrap();
        let mut state = FpState { lambda, lambda_c, beta, beta_c, phase: None };
        let (p_new, k_opt) = update_precoders(&cs, &state, &cfg).unwrap();
        let before = fp_objective(&cs, &p, &state, k_opt).unwrap();
        let after = fp_objective(&cs, &p_new, &state, k_opt).unwrap();
        worst_d2 = worst_d2.max(before - after);
        p = p_new;
        // inner alternation: refresh auxiliaries at current phi, solve, repeat
        for _inner in 0..inner_max {
            state.phase = Some(
                refresh_phase_auxiliaries(&stats, &phi, &p, &state.lambda, &state.lambda_c)
                    .unwrap(),
            );
            let quad = build_phase_quadratic(&stats, &p, &state).unwrap();
            let (phi_new, _) = update_phases(&quad).unwrap();
            let dist = (phi_new.vector() - phi.vector()).norm() / (n as f64).sqrt();
            phi = phi_new;
            if dist < 1e-6 {
                break;
            }
        }
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
    (*rates.last().unwrap(), iters, plateau, worst_d2)
}

fn main() {
    for inner in [1usize, 5, 20] {
        let mut sum = 0.0;
        let mut it_sum = 0;
        let mut fails = 0;
        let mut worst_plat = 0;
        let mut worst_dip = 0.0f64;
        for seed in 0..12u64 {
            let (r, it, plat, d2) = run(seed, inner);
            sum += r;
            it_sum += it;
            worst_dip = worst_dip.max(d2);
            match plat {
                Some(p) => worst_plat = worst_plat.max(p),
                None => fails += 1,
            }
        }
        println!(
            "inner {inner:2}: mean rate {:.4}, mean iters {:.1}, plateau fails {fails}, worst plateau {worst_plat}, worst d2 {worst_dip:.2e}",
            sum / 12.0,
            it_sum as f64 / 12.0
        );
    }
}
