//! Dev probe: per-iteration dip structure for a non-converging seed.
use rsris::channel::synthesize_covariances;
use rsris::optimizer::*;
use rsris::scenario::ScenarioConfig;
use rsris::seeding::rng_from;

fn main() {
    for seed in [0u64, 1, 2] {
        let mut scenario = ScenarioConfig::desk_default();
        scenario.seed = seed;
        let stats = synthesize_covariances(&scenario, &mut rng_from(seed, &[1])).unwrap();
        let mut cfg = OptimizerConfig::new(10.0);
        cfg.trace_enabled = true;
        cfg.max_iters = 40;
        let sol = optimize(&stats, &cfg, None, None).unwrap();
        println!("== seed {seed}: iters {}, rate {:.4}", sol.iterations_used, sol.rate.sum_rate);
        for r in sol.trace.iter() {
            let d1 = r.fp_pre - r.fp_after_aux;
            let d2 = r.fp_after_aux - r.fp_after_precoder;
            println!(
                "it {:2} pre {:8.4} aux {:8.4} prec {:8.4} d1 {:9.2e} d2 {:9.2e} rate {:7.4} kp {} kf {:?}",
                r.iteration, r.fp_pre, r.fp_after_aux, r.fp_after_precoder, d1, d2,
                r.sum_rate_bits, r.k_opt_precoder, r.k_opt_phase
            );
        }
    }
}
