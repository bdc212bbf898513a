//! Dev probe: N=2 heuristic vs grid under aperture-scaled powers.
use rsris::channel::{effective_covariances, synthesize_covariances};
use rsris::linalg::qform;
use rsris::optimizer::*;
use rsris::scenario::ScenarioConfig;
use rsris::seeding::rng_from;
use rsris::{C64, CVec};

fn main() {
    for (delta, cspread, name) in [(0.4, 4.0, "d.4 cs4"), (0.0, 4.0, "d0  cs4"), (0.4, 30.0, "d.4 cs30"), (0.8, 10.0, "d.8 cs10")] {
    for scale_power in [true] {
        let mut min_with_t: f64 = f64::INFINITY;
        let mut min_rate_ratio: f64 = f64::INFINITY;
        for trial in 0..20u64 {
            let mut scenario = ScenarioConfig::desk_default();
            scenario.n = 2;
            scenario.seed = trial;
            if scale_power {
                let r = scenario.ranges.as_mut().unwrap();
                r.ris_power = [2.0 * 2.0 / 40.0, 6.0 * 2.0 / 40.0];
            }
            scenario.delta = delta;
            scenario.ris.as_mut().unwrap().corr_spread_ris_deg = cspread;
            let stats = synthesize_covariances(&scenario, &mut rng_from(trial, &[41])).unwrap();
            let mut cfg = OptimizerConfig::new(10.0);
            cfg.max_iters = 100;
            let sol = optimize(&stats, &cfg, None, None).unwrap();
            let (p, phi) = (sol.precoders, sol.phi);
            let cs = effective_covariances(&stats, &phi).unwrap();
            let (lambda, lambda_c) = update_lambdas(&cs, &p).unwrap();
            let (beta, beta_c) = update_betas(&cs, &p, &lambda, &lambda_c).unwrap();
            let mut state = FpState { lambda, lambda_c, beta, beta_c, phase: None };
            state.phase = Some(
                refresh_phase_auxiliaries(&stats, &phi, &p, &state.lambda, &state.lambda_c)
                    .unwrap(),
            );
            let quad = build_phase_quadratic(&stats, &p, &state).unwrap();
            let cands = phase_candidates(&quad).unwrap();
            let mut grid_vals = Vec::new();
            for kk in 0..cands.len() {
                let h = &quad.b + &quad.b_c[kk];
                let mut best = f64::NEG_INFINITY;
                for a in 0..64 {
                    for b in 0..64 {
                        let t1 = 2.0 * std::f64::consts::PI * a as f64 / 64.0;
                        let t2 = 2.0 * std::f64::consts::PI * b as f64 / 64.0;
                        let g = CVec::from_vec(vec![
                            C64::from_polar(1.0, t1),
                            C64::from_polar(1.0, t2),
                            C64::new(1.0, 0.0),
                        ]);
                        best = best.max(qform(&h, &g) + quad.t[kk]);
                    }
                }
                grid_vals.push(best);
            }
            let heur_min = cands.iter().map(|c| c.value).fold(f64::INFINITY, f64::min);
            let grid_min = grid_vals.iter().cloned().fold(f64::INFINITY, f64::min);
            min_with_t = min_with_t.min(heur_min / grid_min);
            let _ = &min_rate_ratio;
        }
        println!("{name} aperture-scaled {scale_power}: min value ratio {min_with_t:.4}");
    }
    }
}
