//! Dev probe: scenario-space scan for stable plain dynamics + ordering gaps.
use rsris::channel::{synthesize_covariances, PhaseConfiguration};
use rsris::optimizer::*;
use rsris::scenario::{RisSpec, ScenarioConfig, UserRanges};
use rsris::seeding::rng_from;

fn scenario(delta: f64, los: f64, corr_spread: f64, ris_pow: [f64; 2], ris_spread: [f64; 2]) -> ScenarioConfig {
    let mut s = ScenarioConfig::desk_default();
    s.delta = delta;
    s.ris = Some(RisSpec {
        los_angle_bs_deg: 15.0,
        los_angle_ris_deg: -25.0,
        los_entry_gain: los,
        corr_angle_ris_deg: 0.0,
        corr_spread_ris_deg: corr_spread,
        corr_angle_tx_deg: 0.0,
        corr_spread_tx_deg: 10.0,
    });
    s.ranges = Some(UserRanges {
        direct_paths: 3,
        direct_angle_deg: [-60.0, 60.0],
        direct_spread_deg: [2.0, 8.0],
        direct_power: [0.01, 0.06],
        ris_paths: 2,
        ris_angle_deg: [-60.0, 60.0],
        ris_spread_deg: ris_spread,
        ris_power: ris_pow,
    });
    s
}

fn plateau_of(trace: &[IterationTrace]) -> Option<usize> {
    let rates: Vec<f64> = trace.iter().map(|r| r.sum_rate_bits).collect();
    'outer: for t in 5..rates.len() {
        for u in (t - 4)..=t {
            if (rates[u] - rates[u - 1]).abs() / rates[u - 1].max(1e-12) >= 1e-3 {
                continue 'outer;
            }
        }
        return Some(t + 1);
    }
    None
}

fn main() {
    let configs: Vec<(&str, ScenarioConfig)> = vec![
        ("d.4 los1 cs4 rp[2,6] rs[1,5]", scenario(0.4, 1.0, 4.0, [2.0, 6.0], [1.0, 5.0])),
        ("d0  los1 cs4 rp[2,6] rs[1,5]", scenario(0.0, 1.0, 4.0, [2.0, 6.0], [1.0, 5.0])),
        ("d.7 los1 cs4 rp[2,6] rs[1,5]", scenario(0.7, 1.0, 4.0, [2.0, 6.0], [1.0, 5.0])),
        ("d1  los-  cs4 rp[2,6] rs[1,5]", scenario(1.0, 1.0, 4.0, [2.0, 6.0], [1.0, 5.0])),
        ("d.4 los.3 cs4 rp[2,6] rs[1,5]", scenario(0.4, 0.3, 4.0, [2.0, 6.0], [1.0, 5.0])),
        ("d.4 los1 cs12 rp[2,6] rs[4,10]", scenario(0.4, 1.0, 12.0, [2.0, 6.0], [4.0, 10.0])),
        ("d.4 los1 cs4 rp[.5,1.5] rs[1,5]", scenario(0.4, 1.0, 4.0, [0.5, 1.5], [1.0, 5.0])),
        ("d.2 los.5 cs8 rp[1,3] rs[2,8]", scenario(0.2, 0.5, 8.0, [1.0, 3.0], [2.0, 8.0])),
    ];
    for (name, s) in configs {
        let mut fails = 0;
        let mut worst_plat = 0;
        let mut opt_sum = 0.0;
        let mut rand_sum = 0.0;
        for seed in 0..10u64 {
            let mut sc = s.clone();
            sc.seed = seed;
            let stats = synthesize_covariances(&sc, &mut rng_from(seed, &[1])).unwrap();
            let mut cfg = OptimizerConfig::new(10.0);
            cfg.max_iters = 100;
            cfg.trace_enabled = true;
            let sol = optimize(&stats, &cfg, None, None).unwrap();
            opt_sum += sol.rate.sum_rate;
            match plateau_of(&sol.trace) {
                Some(p) => worst_plat = worst_plat.max(p),
                None => fails += 1,
            }
            let mut cfg2 = cfg.clone();
            cfg2.phase_update_enabled = false;
            cfg2.trace_enabled = false;
            let phi_rand = PhaseConfiguration::random(40, &mut rng_from(seed, &[2]));
            let sol2 = optimize(&stats, &cfg2, None, Some(phi_rand)).unwrap();
            rand_sum += sol2.rate.sum_rate;
        }
        println!(
            "{name}: plateau fails {fails}/10 (worst {worst_plat}), OptRIS {:.3}, RandRIS {:.3}",
            opt_sum / 10.0,
            rand_sum / 10.0
        );
    }
}
