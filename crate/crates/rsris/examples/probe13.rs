//! Dev probe: failing-seed trajectories under config C; also noRS/N=0 dip decay.
use rsris::channel::{effective_covariances, synthesize_covariances, PhaseConfiguration};
use rsris::optimizer::*;
use rsris::rate::approx_sum_rate;
use rsris::scenario::{RisSpec, ScenarioConfig, UserRanges};
use rsris::seeding::rng_from;

fn scenario_c() -> ScenarioConfig {
    let mut s = ScenarioConfig::desk_default();
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
    s
}

fn main() {
    for seed in 0..10u64 {
        let mut sc = scenario_c();
        sc.seed = seed;
        let stats = synthesize_covariances(&sc, &mut rng_from(seed, &[1])).unwrap();
        let mut cfg = OptimizerConfig::new(10.0);
        cfg.trace_enabled = true;
        cfg.max_iters = 100;
        // plain optimize (library)
        let sol = optimize(&stats, &cfg, None, None).unwrap();
        let rates: Vec<f64> = sol.trace.iter().map(|r| r.sum_rate_bits).collect();
        let kphases: Vec<String> =
            sol.trace.iter().map(|r| format!("{}", r.k_opt_phase.unwrap())).collect();
        // plateau point
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
        if plateau.is_none() && sol.iterations_used < cfg.max_iters {
            plateau = Some(sol.iterations_used);
        }
        println!(
            "seed {seed}: iters {} plateau {:?} final {:.3} | last rates: {} | k: {}",
            sol.iterations_used,
            plateau,
            sol.rate.sum_rate,
            rates.iter().rev().take(8).rev().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(" "),
            kphases.join("")
        );
        let _ = (effective_covariances(&stats, &PhaseConfiguration::ones(40)), approx_sum_rate);
    }
}
