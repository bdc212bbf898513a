//! Dev probe: diffuse-RIS ensembles, guarded precoder adoption; plateau,
//! ordering gaps, guard cost.
use rsris::channel::{effective_covariances, synthesize_covariances, PhaseConfiguration};
use rsris::optimizer::*;
use rsris::rate::approx_sum_rate;
use rsris::scenario::{RisSpec, ScenarioConfig, UserRanges};
use rsris::seeding::rng_from;

fn scenario(delta: f64, los: f64, cs: f64, rs_lo: f64, rs_hi: f64, rp: [f64; 2]) -> ScenarioConfig {
    let mut s = ScenarioConfig::desk_default();
    s.delta = delta;
    s.ris = Some(RisSpec {
        los_angle_bs_deg: 15.0,
        los_angle_ris_deg: -25.0,
        los_entry_gain: los,
        corr_angle_ris_deg: 0.0,
        corr_spread_ris_deg: cs,
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
        ris_spread_deg: [rs_lo, rs_hi],
        ris_power: rp,
    });
    s
}

fn run_guarded(stats: &rsris::channel::ChannelStatistics, cfg: &OptimizerConfig,
               init_phi: Option<PhaseConfiguration>) -> (f64, usize, Option<usize>, usize) {
    let n = stats.dims().n;
    let phi0 = init_phi.unwrap_or_else(|| PhaseConfiguration::ones(n));
    let mut p = default_precoders(stats, cfg, &phi0).unwrap();
    let mut phi = phi0;
    let mut cs = effective_covariances(stats, &phi).unwrap();
    let mut rate_prev: Option<f64> = None;
    let mut iters = 0;
    let mut rates = Vec::new();
    let mut rejects = 0;
    for it in 1..=cfg.max_iters {
        iters = it;
        let (lambda, lambda_c) = update_lambdas(&cs, &p).unwrap();
        let (beta, beta_c) = update_betas(&cs, &p, &lambda, &lambda_c).unwrap();
        let mut state = FpState { lambda, lambda_c, beta, beta_c, phase: None };
        let (p_new, k_opt) = update_precoders(&cs, &state, cfg).unwrap();
        let before = fp_objective(&cs, &p, &state, k_opt).unwrap();
        let after = fp_objective(&cs, &p_new, &state, k_opt).unwrap();
        if after >= before { p = p_new; } else { rejects += 1; }
        if cfg.phase_update_enabled && n > 0 {
            state.phase = Some(refresh_phase_auxiliaries(stats, &phi, &p, &state.lambda, &state.lambda_c).unwrap());
            let quad = build_phase_quadratic(stats, &p, &state).unwrap();
            let (phi_new, _) = update_phases(&quad).unwrap();
            phi = phi_new;
            cs = effective_covariances(stats, &phi).unwrap();
        }
        let rate = approx_sum_rate(&cs, &p).unwrap().sum_rate;
        rates.push(rate);
        if let Some(prev) = rate_prev {
            if (rate - prev).abs() / prev.max(1e-12) < cfg.rel_tol { break; }
        }
        rate_prev = Some(rate);
    }
    let mut plateau = None;
    'outer: for t in 5..rates.len() {
        for u in (t - 4)..=t {
            if (rates[u] - rates[u - 1]).abs() / rates[u - 1].max(1e-12) >= 1e-3 { continue 'outer; }
        }
        plateau = Some(t + 1);
        break;
    }
    if plateau.is_none() && rates.len() >= 5 && iters < cfg.max_iters {
        plateau = Some(iters); // converged by rel_tol before a 5-window existed
    }
    (*rates.last().unwrap(), iters, plateau, rejects)
}

fn main() {
    let configs = vec![
        ("A d.4 los.8 cs15 rs[6,12] rp[2,6]", scenario(0.4, 0.8, 15.0, 6.0, 12.0, [2.0, 6.0])),
        ("B d.4 los.8 cs20 rs[8,16] rp[2,6]", scenario(0.4, 0.8, 20.0, 8.0, 16.0, [2.0, 6.0])),
        ("C d.3 los.5 cs30 rs[10,20] rp[2,6]", scenario(0.3, 0.5, 30.0, 10.0, 20.0, [2.0, 6.0])),
        ("D d.5 los1. cs20 rs[8,16] rp[3,8]", scenario(0.5, 1.0, 20.0, 8.0, 16.0, [3.0, 8.0])),
    ];
    for (name, s) in configs {
        let mut opt = Vec::new();
        let mut rnd = Vec::new();
        let mut nor = Vec::new();
        let mut fails = 0;
        let mut worst_plat = 0;
        let mut rejects = 0;
        let mut it_sum = 0;
        for seed in 0..10u64 {
            let mut sc = s.clone();
            sc.seed = seed;
            let stats = synthesize_covariances(&sc, &mut rng_from(seed, &[1])).unwrap();
            let cfg = OptimizerConfig::new(10.0);
            let (r, it, plat, rej) = run_guarded(&stats, &cfg, None);
            opt.push(r);
            it_sum += it;
            rejects += rej;
            match plat { Some(p) => worst_plat = worst_plat.max(p), None => fails += 1 }
            let mut cfg2 = cfg.clone();
            cfg2.phase_update_enabled = false;
            let phi_rand = PhaseConfiguration::random(40, &mut rng_from(seed, &[2]));
            let (rr, _, _, _) = run_guarded(&stats, &cfg2, Some(phi_rand));
            rnd.push(rr);
            let stripped = stats.without_ris();
            let (rn, _, _, _) = run_guarded(&stripped, &cfg2, Some(PhaseConfiguration::ones(0)));
            nor.push(rn);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let se = |v: &[f64]| {
            let m = mean(v);
            (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64 / v.len() as f64).sqrt()
        };
        let gap_se = (se(&opt).powi(2) + se(&rnd).powi(2)).sqrt();
        println!(
            "{name}: Opt {:.3} Rand {:.3} noRIS {:.3} | gap/2se {:.1} | plateau fails {fails} worst {worst_plat} | rejects {rejects} | mean iters {:.0}",
            mean(&opt), mean(&rnd), mean(&nor),
            (mean(&opt) - mean(&rnd)) / (2.0 * gap_se),
            it_sum as f64 / 10.0
        );
    }
}
