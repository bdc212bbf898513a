//! Statistical-CSI optimizer: block coordinate descent on a fractional-
//! programming surrogate of the approximate ergodic sum rate.
//!
//! One sweep alternates between
//! 1. closed-form auxiliary updates (`lambda` equals the covariance-based
//!    SINRs, `beta` a scaled matched filter through the covariance root),
//! 2. a quasi closed-form precoder solve per candidate common user: each
//!    stacked-precoder subproblem is an unconstrained concave quadratic whose
//!    positive definite system matrix folds the power budget in through
//!    `1/Pt` identity loading, solved blockwise and rescaled onto the power
//!    sphere,
//! 3. a RIS phase step that rewrites the surrogate as a Hermitian quadratic
//!    form in the augmented phase vector `[phi; 1]`, takes the principal
//!    eigenvector by a shifted power iteration, and projects it onto the
//!    unit-modulus constraint.
//!
//! The common user is re-selected in both the precoder and phase steps by
//! minimizing the respective surrogate objective over users (the max-min
//! upper bound). The surrogate math is expressed over per-user pairs of a
//! "signal" covariance (numerators) and a "total" covariance (denominators);
//! with both equal to the effective covariance this is the statistical-CSI
//! problem, and the imperfect-CSI benchmark reuses the identical machinery
//! with a rank-one signal term plus an error covariance.
//!
//! Internal objective values use natural logs; rates reported to callers are
//! bits per channel use (a single `1/ln 2` conversion).

use crate::channel::{
    effective_covariances, ChannelStatistics, EffectiveCovariance, PhaseConfiguration,
};
use crate::linalg::{gershgorin_lower, qform};
use crate::rate::{approx_sinrs, approx_sum_rate, PrecoderSet, RateReport};
use crate::{C64, CMat, CVec, Error, Result};

use rand_chacha::rand_core::SeedableRng;

/// Residual tolerance (relative to the Frobenius norm) for the power
/// iterations run inside the optimizer.
pub const PI_TOL: f64 = 1e-9;
/// Iteration cap for the power iterations run inside the optimizer.
pub const PI_MAX_ITERS: usize = 50_000;

/// Optimizer knobs. `pt` is the linear transmit power (the transmit SNR,
/// since the noise variance is one).
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub pt: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub phase_update_enabled: bool,
    pub rs_enabled: bool,
    pub trace_enabled: bool,
}

impl OptimizerConfig {
    pub fn new(pt: f64) -> Self {
        OptimizerConfig {
            pt,
            max_iters: 100,
            rel_tol: 1e-4,
            phase_update_enabled: true,
            rs_enabled: true,
            trace_enabled: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pt > 0.0) {
            return Err(Error::Config(format!("Pt must be positive, got {}", self.pt)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Config("rel_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Auxiliary variables of the surrogate objective.
#[derive(Debug, Clone)]
pub struct FpState {
    /// Private-stream ratio auxiliaries, one per user.
    pub lambda: Vec<f64>,
    /// Common-stream ratio auxiliaries, one per candidate common user.
    pub lambda_c: Vec<f64>,
    /// Private quadratic-transform auxiliaries (length-M vectors).
    pub beta: Vec<CVec>,
    /// Common quadratic-transform auxiliaries per candidate user.
    pub beta_c: Vec<CVec>,
    /// Extra auxiliaries of the phase step, when refreshed.
    pub phase: Option<PhaseAuxiliaries>,
}

impl FpState {
    pub fn zeros(m: usize, k: usize) -> Self {
        FpState {
            lambda: vec![0.0; k],
            lambda_c: vec![0.0; k],
            beta: vec![CVec::zeros(m); k],
            beta_c: vec![CVec::zeros(m); k],
            phase: None,
        }
    }
}

/// Phase-step auxiliaries: the three-part decomposition of every numerator
/// quadratic form, its quadratic-transform auxiliaries and the derived
/// scalars entering the phase quadratic.
#[derive(Debug, Clone)]
pub struct PhaseAuxiliaries {
    pub x1: Vec<CVec>,
    pub x2: Vec<CVec>,
    pub x3: Vec<CVec>,
    pub x1_c: Vec<CVec>,
    pub x2_c: Vec<CVec>,
    pub x3_c: Vec<CVec>,
    /// `l_k = delta * p_k^H R_tx p_k`.
    pub l: Vec<f64>,
    /// `l_c = delta * p_c^H R_tx p_c`.
    pub l_c: f64,
    /// `f = sum_j p_j^H R_tx p_j` over private streams.
    pub f: f64,
    pub beta_m: Vec<[CVec; 3]>,
    pub beta_c_m: Vec<[CVec; 3]>,
    /// `a_k = sum_m ||beta_{m,k}||^2`.
    pub a: Vec<f64>,
    pub a_c: Vec<f64>,
    /// `d_k = C_r,k^{1/2} beta_{2,k}`.
    pub d: Vec<CVec>,
    pub d_c: Vec<CVec>,
}

/// Hermitian quadratic form of the phase subproblem: the surrogate equals
/// `phibar^H (B + B_c[k]) phibar + t[k]` for the augmented unit-modulus
/// vector `phibar = [phi; 1]`.
#[derive(Debug, Clone)]
pub struct PhaseQuadratic {
    pub b: CMat,
    pub b_c: Vec<CMat>,
    pub t: Vec<f64>,
}

impl PhaseQuadratic {
    /// Surrogate value at an augmented phase vector for common user `k`.
    pub fn value(&self, phi_aug: &CVec, k: usize) -> f64 {
        let h = &self.b + &self.b_c[k];
        qform(&h, phi_aug) + self.t[k]
    }
}

/// One rescaled precoder solve, for a fixed candidate common user.
#[derive(Debug, Clone)]
pub struct PrecoderCandidate {
    pub precoders: PrecoderSet,
    /// `-v^H A_k v + 2 Re{b_k^H v} + u_k` at the rescaled solution.
    pub objective: f64,
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub iteration: usize,
    /// Surrogate before the auxiliary updates (previous auxiliaries, this
    /// iteration's selected common user).
    pub fp_pre: f64,
    /// Surrogate after the lambda/beta updates.
    pub fp_after_aux: f64,
    /// Surrogate after the precoder update; this is the `fp_objective`
    /// column of the emitted trace table.
    pub fp_after_precoder: f64,
    pub sum_rate_bits: f64,
    pub k_opt_precoder: usize,
    pub k_opt_phase: Option<usize>,
    /// `| ||v||^2 - Pt |` of the emitted precoders.
    pub power_residual: f64,
    /// Worst absolute gap between the phase quadratic form and the directly
    /// evaluated surrogate over users; populated when tracing is enabled.
    pub phase_equivalence_gap: Option<f64>,
}

/// Optimizer output.
#[derive(Debug, Clone)]
pub struct Solution {
    pub precoders: PrecoderSet,
    pub phi: PhaseConfiguration,
    pub rate: RateReport,
    pub trace: Vec<IterationTrace>,
    pub iterations_used: usize,
    pub common_user: usize,
}

// ---------------------------------------------------------------------------
// Generic surrogate core over (signal, total) covariance pairs.
// ---------------------------------------------------------------------------

/// Per-user quadratic data. `signal` appears in ratio numerators (through its
/// Hermitian root), `total` in the full denominators. Statistical CSI sets
/// both to the effective covariance.
pub(crate) struct FpUserView<'a> {
    pub signal: &'a CMat,
    pub signal_sqrt: &'a CMat,
    pub total: &'a CMat,
}

pub(crate) struct FpProblem<'a> {
    pub users: Vec<FpUserView<'a>>,
    pub pt: f64,
    pub rs: bool,
}

impl<'a> FpProblem<'a> {
    pub fn from_covariances(cs: &'a [EffectiveCovariance], pt: f64, rs: bool) -> Self {
        FpProblem {
            users: cs
                .iter()
                .map(|c| FpUserView { signal: &c.matrix, signal_sqrt: &c.sqrt, total: &c.matrix })
                .collect(),
            pt,
            rs,
        }
    }

    pub fn k(&self) -> usize {
        self.users.len()
    }

    fn m(&self) -> usize {
        self.users[0].signal.nrows()
    }

    /// Full private denominator `sum_j p_j^H Z_i p_j + 1` of user i.
    fn full_denominator(&self, i: usize, p: &PrecoderSet) -> f64 {
        (0..self.k()).map(|j| qform(self.users[i].total, p.private(j))).sum::<f64>() + 1.0
    }

    /// Full common denominator, additionally carrying the common stream.
    fn full_denominator_c(&self, k: usize, p: &PrecoderSet) -> f64 {
        self.full_denominator(k, p) + qform(self.users[k].total, p.common())
    }

    /// Ratio auxiliaries: the SINRs of the underlying problem.
    pub fn lambdas(&self, p: &PrecoderSet) -> (Vec<f64>, Vec<f64>) {
        let k = self.k();
        let mut lambda = Vec::with_capacity(k);
        let mut lambda_c = Vec::with_capacity(k);
        for i in 0..k {
            let u = &self.users[i];
            let num = qform(u.signal, p.private(i));
            let den = self.full_denominator(i, p) - qform(u.signal, p.private(i));
            lambda.push(num / den);
            let num_c = qform(u.signal, p.common());
            let den_c = self.full_denominator_c(i, p) - qform(u.signal, p.common());
            lambda_c.push(num_c / den_c);
        }
        (lambda, lambda_c)
    }

    /// Quadratic-transform auxiliaries at fixed lambdas.
    pub fn betas(
        &self,
        p: &PrecoderSet,
        lambda: &[f64],
        lambda_c: &[f64],
    ) -> (Vec<CVec>, Vec<CVec>) {
        let k = self.k();
        let mut beta = Vec::with_capacity(k);
        let mut beta_c = Vec::with_capacity(k);
        for i in 0..k {
            let u = &self.users[i];
            let den = self.full_denominator(i, p);
            beta.push(
                u.signal_sqrt.adjoint()
                    * p.private(i)
                    * C64::new((1.0 + lambda[i]).sqrt() / den, 0.0),
            );
            let den_c = self.full_denominator_c(i, p);
            beta_c.push(
                u.signal_sqrt.adjoint()
                    * p.common()
                    * C64::new((1.0 + lambda_c[i]).sqrt() / den_c, 0.0),
            );
        }
        (beta, beta_c)
    }

    /// Surrogate objective (natural logs) for candidate common user `k`.
    pub fn objective(
        &self,
        p: &PrecoderSet,
        lambda: &[f64],
        lambda_c: &[f64],
        beta: &[CVec],
        beta_c: &[CVec],
        k: usize,
    ) -> f64 {
        let mut obj = 0.0;
        for i in 0..self.k() {
            let u = &self.users[i];
            let den = self.full_denominator(i, p);
            let cross = beta[i].dotc(&(u.signal_sqrt.adjoint() * p.private(i))).re;
            obj += (1.0 + lambda[i]).ln() - lambda[i]
                + 2.0 * (1.0 + lambda[i]).sqrt() * cross
                - beta[i].norm_squared() * den;
        }
        if self.rs {
            let u = &self.users[k];
            let den_c = self.full_denominator_c(k, p);
            let cross = beta_c[k].dotc(&(u.signal_sqrt.adjoint() * p.common())).re;
            obj += (1.0 + lambda_c[k]).ln() - lambda_c[k]
                + 2.0 * (1.0 + lambda_c[k]).sqrt() * cross
                - beta_c[k].norm_squared() * den_c;
        }
        obj
    }

    /// Solves the per-user concave quadratic precoder subproblems and
    /// rescales each solution onto the power sphere.
    pub fn precoder_candidates(
        &self,
        lambda: &[f64],
        lambda_c: &[f64],
        beta: &[CVec],
        beta_c: &[CVec],
    ) -> Result<Vec<PrecoderCandidate>> {
        let k = self.k();
        let m = self.m();
        let beta_norm_sq: Vec<f64> = beta.iter().map(|b| b.norm_squared()).collect();
        let beta_total: f64 = beta_norm_sq.iter().sum();

        // Private right-hand-side blocks are shared by all candidates.
        let b_priv: Vec<CVec> = (0..k)
            .map(|j| self.users[j].signal_sqrt * &beta[j] * C64::new((1.0 + lambda[j]).sqrt(), 0.0))
            .collect();
        let b_priv_norm_sq: f64 = b_priv.iter().map(|b| b.norm_squared()).sum();

        let b_com_all: Vec<CVec> = (0..k)
            .map(|kk| {
                if self.rs {
                    self.users[kk].signal_sqrt
                        * &beta_c[kk]
                        * C64::new((1.0 + lambda_c[kk]).sqrt(), 0.0)
                } else {
                    CVec::zeros(m)
                }
            })
            .collect();
        let max_common = b_com_all.iter().map(|b| b.norm_squared()).fold(0.0f64, f64::max);
        if b_priv_norm_sq + max_common == 0.0 {
            return Err(Error::Degenerate(
                "all precoder right-hand sides vanished; reinitialize the precoders".into(),
            ));
        }

        // Shared part of the private diagonal blocks.
        let mut base = CMat::zeros(m, m);
        for i in 0..k {
            base += self.users[i].total * C64::new(beta_norm_sq[i], 0.0);
        }

        let mut out = Vec::with_capacity(k);
        for cand in 0..k {
            let bc_norm_sq = if self.rs { beta_c[cand].norm_squared() } else { 0.0 };
            let load = (beta_total + bc_norm_sq) / self.pt;
            let mut a_priv = base.clone();
            if self.rs {
                a_priv += self.users[cand].total * C64::new(bc_norm_sq, 0.0);
            }
            for i in 0..m {
                a_priv[(i, i)] += C64::new(load, 0.0);
            }
            let chol_priv = nalgebra::linalg::Cholesky::new(a_priv.clone()).ok_or_else(|| {
                Error::Degenerate("private precoder system is not positive definite".into())
            })?;
            let w_priv: Vec<CVec> = b_priv.iter().map(|b| chol_priv.solve(b)).collect();

            let (w_com, a_com) = if self.rs {
                let mut a_com = self.users[cand].total * C64::new(bc_norm_sq, 0.0);
                for i in 0..m {
                    a_com[(i, i)] += C64::new(load, 0.0);
                }
                let chol_com = nalgebra::linalg::Cholesky::new(a_com.clone()).ok_or_else(|| {
                    Error::Degenerate("common precoder system is not positive definite".into())
                })?;
                (chol_com.solve(&b_com_all[cand]), a_com)
            } else {
                (CVec::zeros(m), CMat::zeros(m, m))
            };

            let norm_sq =
                w_com.norm_squared() + w_priv.iter().map(|w| w.norm_squared()).sum::<f64>();
            if norm_sq == 0.0 {
                return Err(Error::Degenerate(
                    "precoder solve produced the zero vector; reinitialize".into(),
                ));
            }
            let scale = (self.pt / norm_sq).sqrt();
            let v_com = &w_com * C64::new(scale, 0.0);
            let v_priv: Vec<CVec> = w_priv.iter().map(|w| w * C64::new(scale, 0.0)).collect();

            // objective at the rescaled point: -v^H A v + 2 Re{b^H v} + u
            let mut quad = if self.rs { qform(&a_com, &v_com) } else { 0.0 };
            let mut lin = if self.rs { 2.0 * b_com_all[cand].dotc(&v_com).re } else { 0.0 };
            for j in 0..k {
                quad += qform(&a_priv, &v_priv[j]);
                lin += 2.0 * b_priv[j].dotc(&v_priv[j]).re;
            }
            let u = if self.rs { (1.0 + lambda_c[cand]).ln() - lambda_c[cand] } else { 0.0 };
            out.push(PrecoderCandidate {
                precoders: PrecoderSet::new(v_com, v_priv)?,
                objective: -quad + lin + u,
            });
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Public statistical-CSI operations.
// ---------------------------------------------------------------------------

/// Ratio-auxiliary update: the lambdas equal the covariance-based SINRs.
pub fn update_lambdas(
    cs: &[EffectiveCovariance],
    p: &PrecoderSet,
) -> Result<(Vec<f64>, Vec<f64>)> {
    approx_sinrs(cs, p)
}

/// Quadratic-transform auxiliary update. The private denominator carries all
/// private streams plus noise; the common denominator additionally carries
/// the common stream itself.
pub fn update_betas(
    cs: &[EffectiveCovariance],
    p: &PrecoderSet,
    lambda: &[f64],
    lambda_c: &[f64],
) -> Result<(Vec<CVec>, Vec<CVec>)> {
    if cs.len() != p.k() || lambda.len() != p.k() || lambda_c.len() != p.k() {
        return Err(Error::Dimension("per-user input counts disagree".into()));
    }
    let prob = FpProblem::from_covariances(cs, 1.0, true);
    Ok(prob.betas(p, lambda, lambda_c))
}

/// Surrogate objective (natural logs) at the given state for common user `k`.
pub fn fp_objective(
    cs: &[EffectiveCovariance],
    p: &PrecoderSet,
    state: &FpState,
    k: usize,
) -> Result<f64> {
    if k >= p.k() {
        return Err(Error::Dimension(format!("common user {k} out of range")));
    }
    let prob = FpProblem::from_covariances(cs, 1.0, true);
    Ok(prob.objective(p, &state.lambda, &state.lambda_c, &state.beta, &state.beta_c, k))
}

/// All per-user rescaled precoder solves (exposed for the stationarity and
/// power oracles).
pub fn precoder_candidates(
    cs: &[EffectiveCovariance],
    state: &FpState,
    cfg: &OptimizerConfig,
) -> Result<Vec<PrecoderCandidate>> {
    let prob = FpProblem::from_covariances(cs, cfg.pt, cfg.rs_enabled);
    prob.precoder_candidates(&state.lambda, &state.lambda_c, &state.beta, &state.beta_c)
}

/// Precoder update: solves every candidate common user's subproblem and
/// returns the minimizer of the per-user objective (the max-min selection).
pub fn update_precoders(
    cs: &[EffectiveCovariance],
    state: &FpState,
    cfg: &OptimizerConfig,
) -> Result<(PrecoderSet, usize)> {
    let candidates = precoder_candidates(cs, state, cfg)?;
    let (k_opt, best) = candidates
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1.objective.partial_cmp(&b.1.objective).expect("finite objectives"))
        .expect("at least one user");
    Ok((best.precoders, k_opt))
}

/// Recomputes the phase-step auxiliaries at the current phases, precoders and
/// lambdas: the three-part numerator decomposition `x_{1..3}`, its
/// quadratic-transform auxiliaries, and the derived scalars.
pub fn refresh_phase_auxiliaries(
    stats: &ChannelStatistics,
    phi: &PhaseConfiguration,
    p: &PrecoderSet,
    lambda: &[f64],
    lambda_c: &[f64],
) -> Result<PhaseAuxiliaries> {
    let dims = stats.dims();
    let k = dims.k;
    if p.k() != k || lambda.len() != k || lambda_c.len() != k {
        return Err(Error::Dimension("per-user input counts disagree".into()));
    }
    let cs = effective_covariances(stats, phi)?;
    let delta = stats.delta();
    let t_bar = stats.t_bar();

    let l: Vec<f64> = (0..k).map(|i| delta * qform(stats.r_tx(), p.private(i))).collect();
    let l_c = delta * qform(stats.r_tx(), p.common());
    let f: f64 = (0..k).map(|j| qform(stats.r_tx(), p.private(j))).sum();

    let mut aux = PhaseAuxiliaries {
        x1: Vec::with_capacity(k),
        x2: Vec::with_capacity(k),
        x3: Vec::with_capacity(k),
        x1_c: Vec::with_capacity(k),
        x2_c: Vec::with_capacity(k),
        x3_c: Vec::with_capacity(k),
        l,
        l_c,
        f,
        beta_m: Vec::with_capacity(k),
        beta_c_m: Vec::with_capacity(k),
        a: Vec::with_capacity(k),
        a_c: Vec::with_capacity(k),
        d: Vec::with_capacity(k),
        d_c: Vec::with_capacity(k),
    };

    for i in 0..k {
        let x1 = stats.c_d_sqrt(i).adjoint() * p.private(i);
        let x2 = stats.c_r_sqrt(i).adjoint() * phi.conj_scale(&(t_bar * p.private(i)));
        let x3 = stats.x_sqrt(i).adjoint() * phi.vector() * C64::new(aux.l[i].sqrt(), 0.0);
        let x1_c = stats.c_d_sqrt(i).adjoint() * p.common();
        let x2_c = stats.c_r_sqrt(i).adjoint() * phi.conj_scale(&(t_bar * p.common()));
        let x3_c = stats.x_sqrt(i).adjoint() * phi.vector() * C64::new(aux.l_c.sqrt(), 0.0);

        let den: f64 = (0..k).map(|j| qform(&cs[i].matrix, p.private(j))).sum::<f64>() + 1.0;
        let den_c = den + qform(&cs[i].matrix, p.common());
        let sp = (1.0 + lambda[i]).sqrt() / den;
        let sc = (1.0 + lambda_c[i]).sqrt() / den_c;
        let beta_m = [&x1 * C64::new(sp, 0.0), &x2 * C64::new(sp, 0.0), &x3 * C64::new(sp, 0.0)];
        let beta_c_m =
            [&x1_c * C64::new(sc, 0.0), &x2_c * C64::new(sc, 0.0), &x3_c * C64::new(sc, 0.0)];
        aux.a.push(beta_m.iter().map(|b| b.norm_squared()).sum());
        aux.a_c.push(beta_c_m.iter().map(|b| b.norm_squared()).sum());
        aux.d.push(stats.c_r_sqrt(i) * &beta_m[1]);
        aux.d_c.push(stats.c_r_sqrt(i) * &beta_c_m[1]);
        aux.beta_m.push(beta_m);
        aux.beta_c_m.push(beta_c_m);
        aux.x1.push(x1);
        aux.x2.push(x2);
        aux.x3.push(x3);
        aux.x1_c.push(x1_c);
        aux.x2_c.push(x2_c);
        aux.x3_c.push(x3_c);
    }
    Ok(aux)
}

/// Assembles the phase-update quadratic: bordered Hermitian blocks
/// `B = [[-R, g], [g^H, 0]]` for the private part, one `B_c[k]` per candidate
/// common user, and the phase-independent constants `t[k]`.
pub fn build_phase_quadratic(
    stats: &ChannelStatistics,
    p: &PrecoderSet,
    state: &FpState,
) -> Result<PhaseQuadratic> {
    let aux = state
        .phase
        .as_ref()
        .ok_or_else(|| Error::Config("phase auxiliaries not refreshed".into()))?;
    let dims = stats.dims();
    let k = dims.k;
    let n = dims.n;
    let t_bar = stats.t_bar();
    let delta = stats.delta();

    // steered precoders at the RIS and the Hadamard interference kernels
    let u: Vec<CVec> = (0..k).map(|i| t_bar * p.private(i)).collect();
    let u_c = t_bar * p.common();
    let m_mat = |ui: &CVec, j: usize| -> CMat {
        let outer = ui * ui.adjoint();
        outer.component_mul(&stats.c_r(j).transpose())
    };

    let mut g = CVec::zeros(n);
    let mut r = CMat::zeros(n, n);
    for j in 0..k {
        let w = (1.0 + state.lambda[j]).sqrt();
        let lin1 = CVec::from_fn(n, |row, _| aux.d[j][row].conj() * u[j][row]);
        let lin2 = stats.x_sqrt(j) * &aux.beta_m[j][2] * C64::new(aux.l[j].sqrt(), 0.0);
        g += (lin1 + lin2) * C64::new(w, 0.0);
        let mut m_sum = CMat::zeros(n, n);
        for i in 0..k {
            m_sum += m_mat(&u[i], j);
        }
        r += (m_sum + stats.x(j) * C64::new(delta * aux.f, 0.0)) * C64::new(aux.a[j], 0.0);
    }

    let bordered = |r: &CMat, g: &CVec| -> CMat {
        CMat::from_fn(n + 1, n + 1, |row, col| match (row == n, col == n) {
            (false, false) => -r[(row, col)],
            (false, true) => g[row],
            (true, false) => g[col].conj(),
            (true, true) => C64::new(0.0, 0.0),
        })
    };
    let b = bordered(&r, &g);

    // private phase-independent constants shared by every candidate
    let mut t_priv = 0.0;
    for j in 0..k {
        let den_d: f64 = (0..k).map(|i| qform(stats.c_d(j), p.private(i))).sum::<f64>() + 1.0;
        t_priv += (1.0 + state.lambda[j]).ln() - state.lambda[j]
            + 2.0 * (1.0 + state.lambda[j]).sqrt() * aux.beta_m[j][0].dotc(&aux.x1[j]).re
            - aux.a[j] * den_d;
    }

    let mut b_c = Vec::with_capacity(k);
    let mut t = Vec::with_capacity(k);
    for kk in 0..k {
        let w = (1.0 + state.lambda_c[kk]).sqrt();
        let lin1 = CVec::from_fn(n, |row, _| aux.d_c[kk][row].conj() * u_c[row]);
        let lin2 = stats.x_sqrt(kk) * &aux.beta_c_m[kk][2] * C64::new(aux.l_c.sqrt(), 0.0);
        let g_c = (lin1 + lin2) * C64::new(w, 0.0);
        let mut m_sum = m_mat(&u_c, kk);
        for j in 0..k {
            m_sum += m_mat(&u[j], kk);
        }
        let pc_rtx = qform(stats.r_tx(), p.common());
        let r_c = (m_sum + stats.x(kk) * C64::new(delta * (aux.f + pc_rtx), 0.0))
            * C64::new(aux.a_c[kk], 0.0);
        b_c.push(bordered(&r_c, &g_c));

        let den_dc: f64 = (0..k).map(|i| qform(stats.c_d(kk), p.private(i))).sum::<f64>()
            + qform(stats.c_d(kk), p.common())
            + 1.0;
        let t_common = (1.0 + state.lambda_c[kk]).ln() - state.lambda_c[kk]
            + 2.0 * w * aux.beta_c_m[kk][0].dotc(&aux.x1_c[kk]).re
            - aux.a_c[kk] * den_dc;
        t.push(t_priv + t_common);
    }

    Ok(PhaseQuadratic { b, b_c, t })
}

/// Principal eigenvector of a Hermitian matrix by shifted power iteration.
///
/// A Gershgorin-based spectral shift makes the dominant eigenvalue of the
/// shifted matrix correspond to the largest algebraic eigenvalue of `h`
/// (which may be indefinite). Returns a unit-norm eigenvector and its
/// Rayleigh quotient once `||H x - lambda x|| <= tol * ||H||_F`.
pub fn principal_eigenvector(h: &CMat, tol: f64, max_pi_iters: usize) -> Result<(CVec, f64)> {
    let n = h.nrows();
    if n == 0 || h.ncols() != n {
        return Err(Error::Dimension("power iteration needs a square matrix".into()));
    }
    let h_norm = h.norm();
    let shift = (-gershgorin_lower(h)).max(0.0);
    let mut shifted = h.clone();
    for i in 0..n {
        shifted[(i, i)] += C64::new(shift, 0.0);
    }

    // deterministic pseudorandom start; a fixed structured vector could be
    // orthogonal to the dominant eigenspace
    let mut seed_rng = rand_chacha::ChaCha12Rng::seed_from_u64(0x0eed_f00d_5eed_cafe);
    let mut v = CVec::from_fn(n, |_, _| crate::channel::cn01(&mut seed_rng));
    v /= C64::new(v.norm(), 0.0);

    let mut residual = f64::INFINITY;
    for _ in 0..max_pi_iters {
        let hv = h * &v;
        let rayleigh = v.dotc(&hv).re;
        residual = (hv - &v * C64::new(rayleigh, 0.0)).norm();
        if residual <= tol * h_norm {
            return Ok((v, rayleigh));
        }
        let w = &shifted * &v;
        let nw = w.norm();
        if nw <= f64::MIN_POSITIVE {
            // the shifted matrix annihilates v, so h acts as -shift*I on v
            // and v is already an eigenvector
            return Ok((v, -shift));
        }
        v = w / C64::new(nw, 0.0);
    }
    Err(Error::NonConvergence { residual, iters: max_pi_iters })
}

/// Unit-modulus projection of an eigenvector: rotate the global phase so the
/// last entry is positive real, then map every entry to its phase (entries
/// with magnitude below 1e-12 map to 1). The last entry becomes exactly 1.
fn project_unit_modulus(x: &CVec) -> CVec {
    let n = x.len();
    let last = x[n - 1];
    let rot = if last.norm() < 1e-12 { C64::new(1.0, 0.0) } else { (last / last.norm()).conj() };
    let mut out = CVec::from_fn(n, |i, _| {
        let e = x[i] * rot;
        if e.norm() < 1e-12 {
            C64::new(1.0, 0.0)
        } else {
            e / e.norm()
        }
    });
    out[n - 1] = C64::new(1.0, 0.0);
    out
}

/// One per-user phase solve: the projected principal eigenvector of
/// `B + B_c[k]` and its surrogate value.
#[derive(Debug, Clone)]
pub struct PhaseCandidate {
    /// Augmented unit-modulus vector with last entry one.
    pub phibar: CVec,
    /// `phibar^H (B + B_c[k]) phibar + t[k]` at the projected point.
    pub value: f64,
}

/// Solves the phase subproblem for every candidate common user: principal
/// eigenvector of `B + B_c[k]` by shifted power iteration, projected onto
/// unit modulus with the last entry fixed to one.
pub fn phase_candidates(quad: &PhaseQuadratic) -> Result<Vec<PhaseCandidate>> {
    (0..quad.b_c.len())
        .map(|kk| {
            let h = &quad.b + &quad.b_c[kk];
            let (x, _) = principal_eigenvector(&h, PI_TOL, PI_MAX_ITERS)?;
            let phibar = project_unit_modulus(&x);
            let value = qform(&h, &phibar) + quad.t[kk];
            Ok(PhaseCandidate { phibar, value })
        })
        .collect()
}

/// Phase update: per candidate common user, takes the principal eigenvector
/// of `B + B_c[k]`, projects it onto unit modulus with the last entry fixed
/// to one, and selects the user minimizing the projected surrogate value.
/// Returns the new phase vector (first N entries) and the selected user.
pub fn update_phases(quad: &PhaseQuadratic) -> Result<(PhaseConfiguration, usize)> {
    let candidates = phase_candidates(quad)?;
    let (k_opt, best) = candidates
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1.value.partial_cmp(&b.1.value).expect("finite values"))
        .expect("at least one user");
    let n = quad.b.nrows() - 1;
    let phi = CVec::from_fn(n, |i, _| best.phibar[i]);
    Ok((PhaseConfiguration::new(phi)?, k_opt))
}

/// Breaks limit cycles in the per-step common-user selection.
///
/// The max-min selection flips between users whose objectives cross; near a
/// crossing the flip re-targets the phase solution each sweep and the loop
/// orbits instead of settling. The tracker follows the plain argmin until the
/// selection revisits a user it previously abandoned (the signature of a
/// cycle), then freezes the incumbent for the rest of the run.
#[derive(Debug, Clone, Default)]
pub(crate) struct SelectionCommitment {
    incumbent: Option<usize>,
    abandoned: Vec<usize>,
    committed: bool,
}

impl SelectionCommitment {
    pub fn select(&mut self, argmin: usize) -> usize {
        match self.incumbent {
            None => {
                self.incumbent = Some(argmin);
                argmin
            }
            Some(inc) => {
                if self.committed || argmin == inc {
                    inc
                } else if self.abandoned.contains(&argmin) {
                    self.committed = true;
                    inc
                } else {
                    self.abandoned.push(inc);
                    self.incumbent = Some(argmin);
                    argmin
                }
            }
        }
    }
}

/// Deterministic initialization: each private precoder is a matched filter to
/// the dominant eigenvector of its user's effective covariance at the given
/// phases; the common precoder (when rate splitting is on) points at the
/// dominant eigenvector of the user-averaged covariance. Power is split
/// equally across streams.
pub fn default_precoders(
    stats: &ChannelStatistics,
    cfg: &OptimizerConfig,
    phi: &PhaseConfiguration,
) -> Result<PrecoderSet> {
    let dims = stats.dims();
    let cs = effective_covariances(stats, phi)?;
    let streams = if cfg.rs_enabled { dims.k + 1 } else { dims.k };
    let per_stream = (cfg.pt / streams as f64).sqrt();
    let private: Vec<CVec> = (0..dims.k)
        .map(|k| {
            let (v, _) = principal_eigenvector(&cs[k].matrix, PI_TOL, PI_MAX_ITERS)?;
            Ok(v * C64::new(per_stream, 0.0))
        })
        .collect::<Result<_>>()?;
    let common = if cfg.rs_enabled {
        let mut avg = CMat::zeros(dims.m, dims.m);
        for c in &cs {
            avg += &c.matrix;
        }
        avg /= C64::new(dims.k as f64, 0.0);
        let (v, _) = principal_eigenvector(&avg, PI_TOL, PI_MAX_ITERS)?;
        v * C64::new(per_stream, 0.0)
    } else {
        CVec::zeros(dims.m)
    };
    PrecoderSet::new(common, private)
}

/// Full block coordinate descent. Per iteration: recompute the effective
/// covariances at the current phases, update lambdas and betas, update the
/// precoders (selecting a common user), refresh the phase auxiliaries, build
/// the phase quadratic and update the phases (selecting its own common
/// user). Stops when the relative change of the approximate sum rate falls
/// below `rel_tol` or after `max_iters` sweeps.
///
/// Two adoption rules keep the sweep an ascent method:
/// - the rescaled precoder candidate is adopted only if it does not decrease
///   the surrogate at the fresh auxiliaries (the power renormalization can
///   otherwise lose more than the solve gains, since the surrogate is tangent
///   to the rate from below this also keeps the rate non-decreasing here);
/// - the phase step's common-user selection is frozen once it revisits an
///   abandoned user, which breaks the selection limit cycles that otherwise
///   keep the phases orbiting near a crossing of two users' objectives.
///
/// `init_phi` defaults to all ones, `init_p` to [`default_precoders`] at the
/// initial phases. The run is fully deterministic given its inputs.
pub fn optimize(
    stats: &ChannelStatistics,
    cfg: &OptimizerConfig,
    init_p: Option<PrecoderSet>,
    init_phi: Option<PhaseConfiguration>,
) -> Result<Solution> {
    cfg.validate()?;
    let dims = stats.dims();
    let phi_start = match init_phi {
        Some(phi) => {
            if phi.len() != dims.n {
                return Err(Error::Dimension("initial phases do not match N".into()));
            }
            phi
        }
        None => PhaseConfiguration::ones(dims.n),
    };
    let p_start = match init_p {
        Some(p) => {
            if p.m() != dims.m || p.k() != dims.k {
                return Err(Error::Dimension("initial precoders do not match the system".into()));
            }
            p
        }
        None => default_precoders(stats, cfg, &phi_start)?,
    };
    let (mut p, mut phi) = (p_start, phi_start);

    let mut state = FpState::zeros(dims.m, dims.k);
    let mut cs = effective_covariances(stats, &phi)?;
    let mut trace = Vec::new();
    let mut prev_rate: Option<f64> = None;
    let mut iterations_used = 0;
    let mut common_user = 0;
    let mut phase_selection = SelectionCommitment::default();

    for iteration in 1..=cfg.max_iters {
        iterations_used = iteration;
        let prev_lambda = state.lambda.clone();
        let prev_lambda_c = state.lambda_c.clone();
        let prev_beta = state.beta.clone();
        let prev_beta_c = state.beta_c.clone();
        let p_old = p.clone();

        let (lambda, lambda_c) = update_lambdas(&cs, &p)?;
        let (beta, beta_c) = update_betas(&cs, &p, &lambda, &lambda_c)?;
        state.lambda = lambda;
        state.lambda_c = lambda_c;
        state.beta = beta;
        state.beta_c = beta_c;

        let (p_new, k_prec) = update_precoders(&cs, &state, cfg)?;
        common_user = k_prec;

        let prob = FpProblem::from_covariances(&cs, cfg.pt, cfg.rs_enabled);
        let fp_pre =
            prob.objective(&p_old, &prev_lambda, &prev_lambda_c, &prev_beta, &prev_beta_c, k_prec);
        let fp_after_aux = prob.objective(
            &p_old,
            &state.lambda,
            &state.lambda_c,
            &state.beta,
            &state.beta_c,
            k_prec,
        );
        let fp_candidate = prob.objective(
            &p_new,
            &state.lambda,
            &state.lambda_c,
            &state.beta,
            &state.beta_c,
            k_prec,
        );
        let fp_after_precoder = if fp_candidate >= fp_after_aux {
            p = p_new;
            fp_candidate
        } else {
            fp_after_aux
        };

        let mut k_phase = None;
        let mut equivalence_gap = None;
        if cfg.phase_update_enabled && dims.n > 0 {
            let aux = refresh_phase_auxiliaries(stats, &phi, &p, &state.lambda, &state.lambda_c)?;
            state.phase = Some(aux);
            let quad = build_phase_quadratic(stats, &p, &state)?;

            if cfg.trace_enabled {
                // check the quadratic against the directly evaluated
                // surrogate at the current phases, with betas refreshed for
                // the adopted precoders
                let (vb, vb_c) = update_betas(&cs, &p, &state.lambda, &state.lambda_c)?;
                let phibar = phi.augmented();
                let mut worst = 0.0f64;
                for kk in 0..dims.k {
                    let direct =
                        prob.objective(&p, &state.lambda, &state.lambda_c, &vb, &vb_c, kk);
                    let gap = (quad.value(&phibar, kk) - direct).abs();
                    worst = worst.max(gap);
                }
                equivalence_gap = Some(worst);
            }

            let candidates = phase_candidates(&quad)?;
            let argmin = candidates
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.value.partial_cmp(&b.1.value).expect("finite values"))
                .map(|(i, _)| i)
                .expect("at least one user");
            let kp = phase_selection.select(argmin);
            phi = PhaseConfiguration::new(CVec::from_fn(dims.n, |i, _| {
                candidates[kp].phibar[i]
            }))?;
            k_phase = Some(kp);
        }

        cs = effective_covariances(stats, &phi)?;
        let report = approx_sum_rate(&cs, &p)?;
        let rate = report.sum_rate;

        trace.push(IterationTrace {
            iteration,
            fp_pre,
            fp_after_aux,
            fp_after_precoder,
            sum_rate_bits: rate,
            k_opt_precoder: k_prec,
            k_opt_phase: k_phase,
            power_residual: (p.total_power() - cfg.pt).abs(),
            phase_equivalence_gap: equivalence_gap,
        });

        if let Some(prev) = prev_rate {
            if (rate - prev).abs() / prev.max(1e-12) < cfg.rel_tol {
                break;
            }
        }
        prev_rate = Some(rate);
    }

    let rate = approx_sum_rate(&cs, &p)?;
    Ok(Solution { precoders: p, phi, rate, trace, iterations_used, common_user })
}
