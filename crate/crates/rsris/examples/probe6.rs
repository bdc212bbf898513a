//! Dev probe: scenario tuning for smooth dynamics + variant ordering, with
//! guarded precoder adoption.
use rsris::channel::{effective_covariances, synthesize_covariances, PhaseConfiguration};
use rsris::optimizer::*;
use rsris::rate::approx_sum_rate;
use rsris::scenario::{ScenarioConfig, RisSpec, UserRanges};
use rsris::seeding::rng_from;

fn scenario_variant(which: u32) -> ScenarioConfig {
    let mut s = ScenarioConfig::desk_default();
    match which {
        0 => {} // current default
        1 => {
            s.delta = 0.3;
            s.ris = Some(RisSpec {
                los_angle_bs_deg: 15.0,
                los_angle_ris_deg: -25.0,
                los_entry_gain: 0.5,
                corr_angle_ris_deg: 0.0,
                corr_spread_ris_deg: 6.0,
                corr_angle_tx_deg: 0.0,
                corr_spread_tx_deg: 12.0,
            });
            s.ranges = Some(UserRanges {
                direct_paths: 3,
                direct_angle_deg: [-60.0, 60.0],
                direct_spread_deg: [2.0, 8.0],
                direct_power: [0.02, 0.08],
                ris_paths: 2,
                ris_angle_deg: [-60.0, 60.0],
                ris_spread_deg: [2.0, 6.0],
                ris_power: [1.0, 3.0],
            });
        }
        2 => {
            s.delta = 0.2;
            s.ris = Some(RisSpec {
                los_angle_bs_deg: 15.0,
                los_angle_ris_deg: -25.0,
                los_entry_gain: 0.3,
                corr_angle_ris_deg: 0.0,
                corr_spread_ris_deg: 8.0,
                corr_angle_tx_deg: 0.0,
                corr_spread_tx_deg: 15.0,
            });
            s.ranges = Some(UserRanges {
                direct_paths: 3,
                direct_angle_deg: [-60.0, 60.0],
                direct_spread_deg: [3.0, 9.0],
                direct_power: [0.02, 0.08],
                ris_paths: 2,
                ris_angle_deg: [-60.0, 60.0],
                ris_spread_deg: [3.0, 8.0],
                ris_power: [0.8, 2.0],
            });
        }
        _ => unreachable!(),
    }
    s
}

// optimize with guarded precoder adoption, returns (rate, iters, rejections, plateau_iter)
fn run_guarded(
    stats: &rsris::channel::ChannelStatistics,
    cfg: &OptimizerConfig,
    init_phi: Option<PhaseConfiguration>,
) -> (f64, usize, usize, Option<usize>) {
    let n = stats.dims().n;
    let phi0 = init_phi.unwrap_or_else(|| PhaseConfiguration::ones(n));
    let mut p = default_precoders(stats, cfg, &phi0).unwrap();
    let mut phi = phi0;
    let mut cs = effective_covariances(stats, &phi).unwrap();
    let mut rate_prev: Option<f64> = None;
    let mut iters = 0;
    let mut rejects = 0;
    let mut rates = Vec::new();
    for it in 1..=cfg.max_iters {
        iters = it;
        let (lambda, lambda_c) = update_lambdas(&cs, &p).unwrap();
        let (beta, beta_c) = update_betas(&cs, &p, &lambda, &lambda_c).unwrap();
        let mut state = FpState { lambda, lambda_c, beta, beta_c, phase: None };
        let (p_new, k_opt) = update_precoders(&cs, &state, cfg).unwrap();
        let before = fp_objective(&cs, &p, &state, k_opt).unwrap();
        let after = fp_objective(&cs, &p_new, &state, k_opt).unwrap();
        if after >= before - 1e-9 {
            p = p_new;
        } else {
            rejects += 1;
        }
        if cfg.phase_update_enabled && n > 0 {
            state.phase = Some(
                refresh_phase_auxiliaries(stats, &phi, &p, &state.lambda, &state.lambda_c)
                    .unwrap(),
            );
            let quad = build_phase_quadratic(stats, &p, &state).unwrap();
            let (phi_new, _) = update_phases(&quad).unwrap();
            phi = phi_new;
            cs = effective_covariances(stats, &phi).unwrap();
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
    // plateau: first iteration t (1-based) such that the 5 consecutive
    // relative changes ending at t are all < 1e-3
    let mut plateau = None;
    'outer: for t in 5..rates.len() {
        for u in (t - 4)..=t {
            let prev = rates[u - 1];
            if (rates[u] - prev).abs() / prev.max(1e-12) >= 1e-3 {
                continue 'outer;
            }
        }
        plateau = Some(t + 1);
        break;
    }
    (*rates.last().unwrap(), iters, rejects, plateau)
}

fn main() {
    for which in 0..3u32 {
        let mut opt_rates = Vec::new();
        let mut rand_rates = Vec::new();
        let mut noris_rates = Vec::new();
        let mut rejects_total = 0;
        let mut plateau_fail = 0;
        let mut plateau_max = 0usize;
        for seed in 0..12u64 {
            let mut s = scenario_variant(which);
            s.seed = seed;
            let stats = synthesize_covariances(&s, &mut rng_from(seed, &[1])).unwrap();
            let mut cfg = OptimizerConfig::new(10.0);
            cfg.max_iters = 100;
            // OptRIS
            let (r, _it, rej, plat) = run_guarded(&stats, &cfg, None);
            rejects_total += rej;
            match plat {
                Some(pit) => plateau_max = plateau_max.max(pit),
                None => plateau_fail += 1,
            }
            // evaluate by MC for fairness
            let mut mc = rng_from(seed, &[9]);
            let _ = r;
            // re-run via library optimize for MC eval with final (p, phi)?
            // use guarded result's approx rate for ordering probes
            opt_rates.push(r);
            // RandRIS
            let mut cfg2 = cfg.clone();
            cfg2.phase_update_enabled = false;
            let phi_rand = PhaseConfiguration::random(40, &mut rng_from(seed, &[2]));
            let (rr, _, _, _) = run_guarded(&stats, &cfg2, Some(phi_rand));
            rand_rates.push(rr);
            // noRIS
            let stripped = stats.without_ris();
            let (rn, _, _, _) = run_guarded(&stripped, &cfg2, Some(PhaseConfiguration::ones(0)));
            noris_rates.push(rn);
            let _ = &mut mc;
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!(
            "scenario {which}: OptRIS {:.3} RandRIS {:.3} noRIS {:.3} | rejects {} | plateau: {} fails, worst {}",
            mean(&opt_rates), mean(&rand_rates), mean(&noris_rates),
            rejects_total, plateau_fail, plateau_max
        );
    }
}
