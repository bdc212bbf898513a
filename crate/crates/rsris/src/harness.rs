//! Monte Carlo experiment harness: sweeps transmit power, covariance
//! realizations and algorithm variants, aggregating mean sum rates and their
//! standard errors.
//!
//! Statistics-based designs are optimized once per covariance realization and
//! evaluated by the ergodic-rate estimator over many channel draws; the
//! per-interval (imperfect-CSI) designs re-optimize for every channel draw
//! and are scored on the true channels of that draw. Every cell derives its
//! random stream from the master seed and its coordinates, so worker count
//! and scheduling never change a result. Failed cells are recorded and
//! skipped rather than aborting the sweep.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{synthesize_covariances, ChannelStatistics, PhaseConfiguration};
use crate::imperfect::{evaluate_true_rate, optimize_imperfect, ImperfectScenario};
use crate::optimizer::{optimize, OptimizerConfig, Solution};
use crate::rate::ergodic_sum_rate_mc;
use crate::scenario::ScenarioConfig;
use crate::seeding::{labels, rng_from};
use crate::{CMat, Error, Result, C64};

/// How channel knowledge enters the optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CsiMode {
    /// Second-order statistics only; one design per covariance realization.
    Stat,
    /// Noisy per-interval estimates with known error covariance.
    Imp,
    /// Per-interval estimates treated as exact (error covariance ignored
    /// inside the optimizer), scored on the true channels.
    Naive,
}

/// How the RIS phases are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RisMode {
    /// Phases optimized by the eigenvector heuristic.
    Opt,
    /// Phases drawn uniformly once per covariance realization, then fixed.
    Rand,
    /// No RIS: all RIS-dependent terms removed.
    None,
}

/// One algorithm variant of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variant {
    pub csi: CsiMode,
    pub rs: bool,
    pub ris: RisMode,
}

impl Variant {
    pub const fn new(csi: CsiMode, rs: bool, ris: RisMode) -> Self {
        Variant { csi, rs, ris }
    }

    /// Stable small integer used in seed derivation paths.
    fn seed_id(&self) -> u64 {
        let c = match self.csi {
            CsiMode::Stat => 0,
            CsiMode::Imp => 1,
            CsiMode::Naive => 2,
        };
        let r = match self.ris {
            RisMode::Opt => 0,
            RisMode::Rand => 1,
            RisMode::None => 2,
        };
        c * 16 + (self.rs as u64) * 4 + r
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let csi = match self.csi {
            CsiMode::Stat => "stat",
            CsiMode::Imp => "imp",
            CsiMode::Naive => "naive",
        };
        let rs = if self.rs { "rs" } else { "nors" };
        let ris = match self.ris {
            RisMode::Opt => "optris",
            RisMode::Rand => "randris",
            RisMode::None => "noris",
        };
        write!(f, "{csi}:{rs}:{ris}")
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "variant '{s}' must look like 'stat:rs:optris'"
            )));
        }
        let csi = match parts[0] {
            "stat" => CsiMode::Stat,
            "imp" => CsiMode::Imp,
            "naive" => CsiMode::Naive,
            other => return Err(Error::Config(format!("unknown CSI mode '{other}'"))),
        };
        let rs = match parts[1] {
            "rs" => true,
            "nors" => false,
            other => return Err(Error::Config(format!("unknown RS flag '{other}'"))),
        };
        let ris = match parts[2] {
            "optris" => RisMode::Opt,
            "randris" => RisMode::Rand,
            "noris" => RisMode::None,
            other => return Err(Error::Config(format!("unknown RIS mode '{other}'"))),
        };
        Ok(Variant { csi, rs, ris })
    }
}

impl Serialize for Variant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Variant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Full sweep description (serialized as the plan file).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub scenario: ScenarioConfig,
    #[serde(rename = "Pt_grid_dB")]
    pub pt_grid_db: Vec<f64>,
    pub n_cov_realizations: usize,
    pub n_channel_realizations: usize,
    pub variants: Vec<Variant>,
    pub master_seed: u64,
    /// Estimation-error covariance is `err_cov_scale * I` for the
    /// imperfect-CSI variants.
    #[serde(default = "default_err_cov_scale")]
    pub err_cov_scale: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

fn default_err_cov_scale() -> f64 {
    1.0
}

fn default_max_iters() -> usize {
    100
}

fn default_rel_tol() -> f64 {
    1e-4
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.pt_grid_db.is_empty() {
            return Err(Error::Config("Pt_grid_dB must be non-empty".into()));
        }
        if self.n_cov_realizations == 0 || self.n_channel_realizations == 0 {
            return Err(Error::Config("realization counts must be >= 1".into()));
        }
        if self.err_cov_scale < 0.0 {
            return Err(Error::Config("err_cov_scale must be >= 0".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let plan: ExperimentPlan =
            toml::from_str(text).map_err(|e| Error::Parse(format!("plan: {e}")))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("plan serializes")
    }
}

/// One aggregated sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub variant: String,
    pub pt_db: f64,
    pub sum_rate_mean: f64,
    pub sum_rate_stderr: f64,
    pub mean_iterations: f64,
    pub wall_time_s: f64,
    pub n_failed: usize,
}

/// A cell that could not be completed; the sweep continues without it.
#[derive(Debug, Clone)]
pub struct CellFailure {
    pub variant: String,
    pub pt_db: f64,
    pub cov_index: usize,
    pub reason: String,
}

/// Sweep output: aggregated rows in (variant, power) order plus failures.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<CellFailure>,
}

struct CellOutcome {
    value: f64,
    iterations: f64,
    seconds: f64,
}

fn optimizer_config(plan: &ExperimentPlan, variant: Variant, pt: f64) -> OptimizerConfig {
    OptimizerConfig {
        pt,
        max_iters: plan.max_iters,
        rel_tol: plan.rel_tol,
        phase_update_enabled: variant.ris == RisMode::Opt,
        rs_enabled: variant.rs,
        trace_enabled: false,
    }
}

/// Statistics used by a variant: the full set, or the RIS-stripped version.
fn variant_stats<'a>(
    variant: Variant,
    full: &'a ChannelStatistics,
    stripped: &'a ChannelStatistics,
) -> &'a ChannelStatistics {
    match variant.ris {
        RisMode::None => stripped,
        _ => full,
    }
}

fn run_cell(
    plan: &ExperimentPlan,
    variant: Variant,
    pt: f64,
    pt_index: usize,
    cov_index: usize,
    full: &ChannelStatistics,
    stripped: &ChannelStatistics,
) -> Result<CellOutcome> {
    let start = Instant::now();
    let stats = variant_stats(variant, full, stripped);
    let dims = stats.dims();
    let cfg = optimizer_config(plan, variant, pt);
    let vid = variant.seed_id();

    // random phases are shared across variants at one covariance realization
    let init_phi = match variant.ris {
        RisMode::Rand => Some(PhaseConfiguration::random(
            dims.n,
            &mut rng_from(plan.master_seed, &[labels::PHASES, cov_index as u64]),
        )),
        _ => None,
    };

    let (value, iterations) = match variant.csi {
        CsiMode::Stat => {
            let sol: Solution = optimize(stats, &cfg, None, init_phi)?;
            let mut mc_rng = rng_from(
                plan.master_seed,
                &[labels::MONTE_CARLO, vid, pt_index as u64, cov_index as u64],
            );
            let report = ergodic_sum_rate_mc(
                stats,
                &sol.phi,
                &sol.precoders,
                plan.n_channel_realizations,
                &mut mc_rng,
            )?;
            (report.sum_rate, sol.iterations_used as f64)
        }
        CsiMode::Imp | CsiMode::Naive => {
            let c_err: Vec<CMat> = (0..dims.k)
                .map(|_| CMat::identity(dims.m, dims.m) * C64::new(plan.err_cov_scale, 0.0))
                .collect();
            let mut acc = 0.0;
            let mut iters = 0.0;
            for ch in 0..plan.n_channel_realizations {
                let mut rng = rng_from(
                    plan.master_seed,
                    &[labels::ESTIMATION, vid, cov_index as u64, ch as u64],
                );
                let draw_phi = PhaseConfiguration::ones(dims.n);
                let scenario =
                    ImperfectScenario::draw(stats, &draw_phi, c_err.clone(), cfg.clone(), &mut rng)?;
                // the naive baseline ignores the error statistics inside the
                // optimizer but still works from the noisy estimate
                let scenario = if variant.csi == CsiMode::Naive {
                    let zeros: Vec<CMat> = (0..dims.k).map(|_| CMat::zeros(dims.m, dims.m)).collect();
                    scenario.with_error_covariance(zeros)?
                } else {
                    scenario
                };
                let sol = optimize_imperfect(&scenario, None, init_phi.clone())?;
                let achieved = evaluate_true_rate(&scenario, &sol)?;
                acc += achieved.sum_rate;
                iters += sol.iterations_used as f64;
            }
            let nch = plan.n_channel_realizations as f64;
            (acc / nch, iters / nch)
        }
    };

    Ok(CellOutcome { value, iterations, seconds: start.elapsed().as_secs_f64() })
}

/// Runs the full sweep. Cells (variant x power x covariance realization) are
/// independent and evaluated in parallel; the reduction into rows follows the
/// plan order regardless of scheduling.
pub fn run_plan(plan: &ExperimentPlan) -> Result<RunOutput> {
    plan.validate()?;

    // one statistics draw per covariance realization, shared by all variants
    let stats_pool: Vec<(ChannelStatistics, ChannelStatistics)> = (0..plan.n_cov_realizations)
        .into_par_iter()
        .map(|cov| {
            let mut rng = rng_from(plan.master_seed, &[labels::COVARIANCE, cov as u64]);
            let full = synthesize_covariances(&plan.scenario, &mut rng)?;
            let stripped = full.without_ris();
            Ok((full, stripped))
        })
        .collect::<Result<_>>()?;

    struct Cell {
        variant: Variant,
        pt_index: usize,
        cov_index: usize,
    }
    let mut cells = Vec::new();
    for &variant in &plan.variants {
        for pt_index in 0..plan.pt_grid_db.len() {
            for cov_index in 0..plan.n_cov_realizations {
                cells.push(Cell { variant, pt_index, cov_index });
            }
        }
    }

    let outcomes: Vec<Result<CellOutcome>> = cells
        .par_iter()
        .map(|cell| {
            let pt = 10f64.powf(plan.pt_grid_db[cell.pt_index] / 10.0);
            let (full, stripped) = &stats_pool[cell.cov_index];
            run_cell(plan, cell.variant, pt, cell.pt_index, cell.cov_index, full, stripped)
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut idx = 0;
    for &variant in &plan.variants {
        for (pt_index, &pt_db) in plan.pt_grid_db.iter().enumerate() {
            let _ = pt_index;
            let mut values = Vec::new();
            let mut iters = Vec::new();
            let mut seconds = 0.0;
            let mut n_failed = 0;
            for cov_index in 0..plan.n_cov_realizations {
                match &outcomes[idx] {
                    Ok(out) => {
                        values.push(out.value);
                        iters.push(out.iterations);
                        seconds += out.seconds;
                    }
                    Err(e) => {
                        n_failed += 1;
                        failures.push(CellFailure {
                            variant: variant.to_string(),
                            pt_db,
                            cov_index,
                            reason: e.to_string(),
                        });
                    }
                }
                idx += 1;
            }
            let n = values.len();
            let (mean, stderr) = if n == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let mean = values.iter().sum::<f64>() / n as f64;
                let var = if n > 1 {
                    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
                } else {
                    0.0
                };
                (mean, (var / n as f64).sqrt())
            };
            let mean_iterations =
                if n == 0 { f64::NAN } else { iters.iter().sum::<f64>() / n as f64 };
            rows.push(ResultRow {
                variant: variant.to_string(),
                pt_db,
                sum_rate_mean: mean,
                sum_rate_stderr: stderr,
                mean_iterations,
                wall_time_s: seconds,
                n_failed,
            });
        }
    }
    Ok(RunOutput { rows, failures })
}

/// One traced optimization run on a single covariance realization.
pub fn convergence_experiment(scenario: &ScenarioConfig, cfg: &OptimizerConfig) -> Result<Solution> {
    let mut rng = rng_from(scenario.seed, &[labels::COVARIANCE, 0]);
    let stats = synthesize_covariances(scenario, &mut rng)?;
    let mut cfg = cfg.clone();
    cfg.trace_enabled = true;
    optimize(&stats, &cfg, None, None)
}

/// Writes the aggregated result table. The `seconds` column carries measured
/// wall time only when `include_timing` is set; it is written as zero
/// otherwise so that repeated runs produce byte-identical tables (timings are
/// always available in the run manifest).
pub fn write_results_csv<W: std::io::Write>(
    w: &mut W,
    rows: &[ResultRow],
    include_timing: bool,
) -> Result<()> {
    writeln!(w, "variant,Pt_dB,mean,stderr,iters,seconds")?;
    for row in rows {
        let seconds = if include_timing { row.wall_time_s } else { 0.0 };
        writeln!(
            w,
            "{},{:.2},{:.6},{:.6},{:.2},{:.3}",
            row.variant, row.pt_db, row.sum_rate_mean, row.sum_rate_stderr, row.mean_iterations,
            seconds
        )?;
    }
    Ok(())
}

/// Writes the per-iteration trace table of a solution.
pub fn write_trace_csv<W: std::io::Write>(w: &mut W, sol: &Solution) -> Result<()> {
    writeln!(w, "iteration,fp_objective,sum_rate_bits,k_opt_precoder,k_opt_phase,power_residual")?;
    for row in &sol.trace {
        let k_phase = row.k_opt_phase.map(|k| k.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{:.9},{:.9},{},{},{:.3e}",
            row.iteration,
            row.fp_after_precoder,
            row.sum_rate_bits,
            row.k_opt_precoder,
            k_phase,
            row.power_residual
        )?;
    }
    Ok(())
}

/// Writes the run manifest: the full plan, real timings and any failures,
/// enough to replay the sweep exactly.
pub fn write_manifest<W: std::io::Write>(
    w: &mut W,
    plan: &ExperimentPlan,
    out: &RunOutput,
    total_seconds: f64,
) -> Result<()> {
    writeln!(w, "# run manifest")?;
    writeln!(w, "total_seconds = {total_seconds:.3}")?;
    writeln!(w, "n_rows = {}", out.rows.len())?;
    writeln!(w, "n_failures = {}", out.failures.len())?;
    writeln!(w)?;
    for row in &out.rows {
        writeln!(
            w,
            "# {} Pt={} dB: mean={:.6} stderr={:.6} seconds={:.3} failed_cells={}",
            row.variant, row.pt_db, row.sum_rate_mean, row.sum_rate_stderr, row.wall_time_s,
            row.n_failed
        )?;
    }
    for f in &out.failures {
        writeln!(
            w,
            "# FAILED {} Pt={} dB cov={}: {}",
            f.variant, f.pt_db, f.cov_index, f.reason
        )?;
    }
    writeln!(w)?;
    // the plan follows verbatim, so the manifest itself parses as a plan file
    writeln!(w, "# plan:")?;
    let plan_text = plan.to_toml_string();
    for line in plan_text.lines() {
        writeln!(w, "{line}")?;
    }
    Ok(())
}
