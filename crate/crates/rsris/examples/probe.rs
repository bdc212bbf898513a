//! Dev probe: monotonicity of steps 2-4 along real trajectories, and phase
//! heuristic quality vs exhaustive grid at trajectory states.
use rsris::channel::{effective_covariances, synthesize_covariances, PhaseConfiguration};
use rsris::linalg::qform;
use rsris::optimizer::*;
use rsris::rate::approx_sum_rate;
use rsris::scenario::ScenarioConfig;
use rsris::seeding::rng_from;
use rsris::{C64, CVec};

fn main() {
    // --- monotonicity along real trajectories, many random scenarios ---
    let mut worst_dip = 0.0f64;
    let mut n_dips = 0;
    for seed in 0..40u64 {
        let mut scenario = ScenarioConfig::desk_default();
        scenario.seed = seed;
        let stats = synthesize_covariances(&scenario, &mut rng_from(seed, &[1])).unwrap();
        let mut cfg = OptimizerConfig::new(10.0);
        cfg.trace_enabled = true;
        cfg.max_iters = 60;
        let sol = optimize(&stats, &cfg, None, None).unwrap();
        for row in &sol.trace {
            let d1 = row.fp_pre - row.fp_after_aux;
            let d2 = row.fp_after_aux - row.fp_after_precoder;
            if d1 > 1e-9 || d2 > 1e-9 {
                n_dips += 1;
            }
            worst_dip = worst_dip.max(d1).max(d2);
        }
        if seed < 3 {
            println!(
                "seed {seed}: iters {}, final rate {:.4}, max equivalence gap {:.2e}",
                sol.iterations_used,
                sol.rate.sum_rate,
                sol.trace
                    .iter()
                    .filter_map(|r| r.phase_equivalence_gap)
                    .fold(0.0f64, f64::max)
            );
        }
    }
    println!("monotonicity: worst dip {worst_dip:.3e}, dips {n_dips}");

    // --- phase heuristic vs grid at trajectory states (N=2) ---
    let mut ratios_with_t = Vec::new();
    let mut ratios_no_t = Vec::new();
    for seed in 100..120u64 {
        let mut scenario = ScenarioConfig::desk_default();
        scenario.n = 2;
        scenario.seed = seed;
        let stats = synthesize_covariances(&scenario, &mut rng_from(seed, &[1])).unwrap();
        let mut cfg = OptimizerConfig::new(10.0);
        cfg.max_iters = 2 + (seed % 5) as usize;
        cfg.rel_tol = 1e-12;
        let sol = optimize(&stats, &cfg, None, None).unwrap();
        // state at the end of the short run
        let phi = sol.phi.clone();
        let p = sol.precoders.clone();
        let cs = effective_covariances(&stats, &phi).unwrap();
        let (lambda, lambda_c) = update_lambdas(&cs, &p).unwrap();
        let (beta, beta_c) = update_betas(&cs, &p, &lambda, &lambda_c).unwrap();
        let mut state = FpState { lambda: lambda.clone(), lambda_c: lambda_c.clone(), beta, beta_c, phase: None };
        state.phase = Some(refresh_phase_auxiliaries(&stats, &phi, &p, &lambda, &lambda_c).unwrap());
        let quad = build_phase_quadratic(&stats, &p, &state).unwrap();
        for kk in 0..stats.dims().k {
            let h = &quad.b + &quad.b_c[kk];
            let (x, _) = principal_eigenvector(&h, 1e-11, 200_000).unwrap();
            // replicate projection
            let n = x.len();
            let last = x[n-1];
            let rot = if last.norm() < 1e-12 { C64::new(1.0,0.0) } else { (last/last.norm()).conj() };
            let mut pb = CVec::from_fn(n, |i,_| { let e = x[i]*rot; if e.norm()<1e-12 { C64::new(1.0,0.0) } else { e/e.norm() } });
            pb[n-1] = C64::new(1.0, 0.0);
            let heur_q = qform(&h, &pb);
            let mut best_q = f64::NEG_INFINITY;
            for a in 0..64 {
                for b in 0..64 {
                    let t1 = 2.0*std::f64::consts::PI*a as f64/64.0;
                    let t2 = 2.0*std::f64::consts::PI*b as f64/64.0;
                    let cand = CVec::from_vec(vec![C64::from_polar(1.0,t1), C64::from_polar(1.0,t2), C64::new(1.0,0.0)]);
                    best_q = best_q.max(qform(&h, &cand));
                }
            }
            ratios_with_t.push((heur_q + quad.t[kk]) / (best_q + quad.t[kk]));
            ratios_no_t.push(heur_q / best_q);
        }
    }
    let min_wt = ratios_with_t.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_nt = ratios_no_t.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("phase heuristic ratios with t: min {min_wt:.4}");
    println!("phase heuristic ratios no t:   min {min_nt:.4} (sign caution)");
    // also check rate improvement direction at full run
    let mut scenario = ScenarioConfig::desk_default();
    scenario.seed = 7;
    let stats = synthesize_covariances(&scenario, &mut rng_from(7, &[1])).unwrap();
    let cfg = OptimizerConfig::new(10.0);
    let sol = optimize(&stats, &cfg, None, None).unwrap();
    let p0 = default_precoders(&stats, &cfg, &PhaseConfiguration::ones(40)).unwrap();
    let cs0 = effective_covariances(&stats, &PhaseConfiguration::ones(40)).unwrap();
    println!("full N=40 run: init rate {:.3} -> final {:.3} in {} iters",
        approx_sum_rate(&cs0, &p0).unwrap().sum_rate, sol.rate.sum_rate, sol.iterations_used);
}
