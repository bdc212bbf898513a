//! SINR and rate computation for rate-splitting transmission.
//!
//! Covers four routes to a rate figure:
//! - instantaneous SINRs from a channel realization,
//! - covariance-based SINR approximations (the statistical-CSI surrogate),
//! - a seeded Monte Carlo estimator of the ergodic sum rate,
//! - estimate-based SINRs under imperfect CSI with known error covariance.
//!
//! The receiver noise variance is fixed to one throughout, so the transmit
//! power doubles as the transmit SNR. Rates are in bits per channel use; the
//! optimizer's internal objective uses natural logs and converts once.

use rand::Rng;

use crate::channel::{
    sample_channels, ChannelStatistics, EffectiveCovariance, PhaseConfiguration,
};
use crate::linalg::{check_hermitian_psd, hermitian_sqrt, qform, real_trace};
use crate::{C64, CMat, CVec, Error, Result};

/// Common precoder plus one private precoder per user.
///
/// The stacked view places the common block first: `v = [p_c; p_1; ...; p_K]`,
/// matching the selection-matrix convention of the precoder update.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    common: CVec,
    private: Vec<CVec>,
}

impl PrecoderSet {
    pub fn new(common: CVec, private: Vec<CVec>) -> Result<Self> {
        if private.is_empty() {
            return Err(Error::Dimension("need at least one private precoder".into()));
        }
        let m = common.len();
        if private.iter().any(|p| p.len() != m) {
            return Err(Error::Dimension("all precoders must share the BS antenna count".into()));
        }
        Ok(PrecoderSet { common, private })
    }

    /// All-zero precoders.
    pub fn zeros(m: usize, k: usize) -> Self {
        PrecoderSet { common: CVec::zeros(m), private: vec![CVec::zeros(m); k] }
    }

    /// Rebuilds the set from a stacked vector `[p_c; p_1; ...; p_K]`.
    pub fn from_stacked(v: &CVec, m: usize, k: usize) -> Result<Self> {
        if v.len() != (k + 1) * m {
            return Err(Error::Dimension(format!(
                "stacked precoder length {} != (K+1)M = {}",
                v.len(),
                (k + 1) * m
            )));
        }
        let block = |i: usize| CVec::from_fn(m, |r, _| v[i * m + r]);
        Ok(PrecoderSet { common: block(0), private: (1..=k).map(block).collect() })
    }

    pub fn stacked(&self) -> CVec {
        let m = self.m();
        let k = self.k();
        CVec::from_fn((k + 1) * m, |i, _| {
            let (blk, row) = (i / m, i % m);
            if blk == 0 {
                self.common[row]
            } else {
                self.private[blk - 1][row]
            }
        })
    }

    pub fn m(&self) -> usize {
        self.common.len()
    }

    /// Number of users (private streams).
    pub fn k(&self) -> usize {
        self.private.len()
    }

    pub fn common(&self) -> &CVec {
        &self.common
    }

    pub fn private(&self, i: usize) -> &CVec {
        &self.private[i]
    }

    pub fn total_power(&self) -> f64 {
        self.common.norm_squared() + self.private.iter().map(|p| p.norm_squared()).sum::<f64>()
    }

    /// Checks the power budget with the standard slack.
    pub fn check_power(&self, pt: f64) -> Result<()> {
        let p = self.total_power();
        if p > pt + 1e-9 {
            return Err(Error::Config(format!("precoder power {p} exceeds budget {pt}")));
        }
        Ok(())
    }

    /// Scales every precoder by a real factor.
    pub fn scaled(&self, factor: f64) -> PrecoderSet {
        let f = C64::new(factor, 0.0);
        PrecoderSet {
            common: &self.common * f,
            private: self.private.iter().map(|p| p * f).collect(),
        }
    }
}

/// Per-user rates and the selected common rate, in bits per channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub private_rate: Vec<f64>,
    pub common_rate_candidate: Vec<f64>,
    /// User attaining the minimum common-rate candidate.
    pub common_user: usize,
    pub sum_rate: f64,
    /// Monte Carlo standard error of `sum_rate`, when estimated.
    pub stderr: Option<f64>,
}

impl RateReport {
    fn from_rates(private: Vec<f64>, common: Vec<f64>, stderr: Option<f64>) -> RateReport {
        let (common_user, min_common) = common
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("rates are finite"))
            .map(|(i, &v)| (i, v))
            .expect("at least one user");
        let sum_rate = private.iter().sum::<f64>() + min_common;
        RateReport { private_rate: private, common_rate_candidate: common, common_user, sum_rate, stderr }
    }
}

/// Channel estimates with known error covariance.
#[derive(Debug, Clone)]
pub struct EstimationModel {
    h_hat: Vec<CVec>,
    c_err: Vec<CMat>,
    c_err_sqrt: Vec<CMat>,
}

impl EstimationModel {
    pub fn new(h_hat: Vec<CVec>, c_err: Vec<CMat>) -> Result<Self> {
        if h_hat.len() != c_err.len() || h_hat.is_empty() {
            return Err(Error::Dimension("estimate/error-covariance count mismatch".into()));
        }
        let m = h_hat[0].len();
        for (k, (h, c)) in h_hat.iter().zip(&c_err).enumerate() {
            if h.len() != m {
                return Err(Error::Dimension(format!("estimate {k} has wrong length")));
            }
            let tol = 1e-10 * (1.0 + real_trace(c).abs());
            check_hermitian_psd(&format!("C_err[{k}]"), c, m, tol, 1e-10)?;
        }
        let c_err_sqrt = c_err.iter().map(hermitian_sqrt).collect();
        Ok(EstimationModel { h_hat, c_err, c_err_sqrt })
    }

    pub fn k(&self) -> usize {
        self.h_hat.len()
    }

    pub fn h_hat(&self, k: usize) -> &CVec {
        &self.h_hat[k]
    }

    pub fn c_err(&self, k: usize) -> &CMat {
        &self.c_err[k]
    }

    pub fn c_err_sqrt(&self, k: usize) -> &CMat {
        &self.c_err_sqrt[k]
    }
}

fn check_counts(cs_len: usize, p: &PrecoderSet) -> Result<()> {
    if cs_len != p.k() {
        return Err(Error::Dimension(format!(
            "covariance count {} != user count {}",
            cs_len,
            p.k()
        )));
    }
    Ok(())
}

/// Covariance-based SINR approximations.
///
/// Private stream i: `p_i^H C_i p_i / (sum_{j!=i} p_j^H C_i p_j + 1)`.
/// Common stream at user k: `p_c^H C_k p_c / (sum_j p_j^H C_k p_j + 1)`.
pub fn approx_sinrs(cs: &[EffectiveCovariance], p: &PrecoderSet) -> Result<(Vec<f64>, Vec<f64>)> {
    check_counts(cs.len(), p)?;
    let k = p.k();
    let mut gamma_p = Vec::with_capacity(k);
    let mut gamma_c = Vec::with_capacity(k);
    for i in 0..k {
        let ci = &cs[i].matrix;
        let signal = qform(ci, p.private(i));
        let mut interference = 0.0;
        for j in 0..k {
            if j != i {
                interference += qform(ci, p.private(j));
            }
        }
        gamma_p.push(signal / (interference + 1.0));
        let common_signal = qform(ci, p.common());
        let all_private: f64 = (0..k).map(|j| qform(ci, p.private(j))).sum();
        gamma_c.push(common_signal / (all_private + 1.0));
    }
    Ok((gamma_p, gamma_c))
}

/// Approximate ergodic sum rate from the covariance-based SINRs.
pub fn approx_sum_rate(cs: &[EffectiveCovariance], p: &PrecoderSet) -> Result<RateReport> {
    let (gamma_p, gamma_c) = approx_sinrs(cs, p)?;
    Ok(RateReport::from_rates(
        gamma_p.iter().map(|g| (1.0 + g).log2()).collect(),
        gamma_c.iter().map(|g| (1.0 + g).log2()).collect(),
        None,
    ))
}

/// Instantaneous SINRs for one channel realization.
pub fn instantaneous_sinrs(h: &[CVec], p: &PrecoderSet) -> Result<(Vec<f64>, Vec<f64>)> {
    check_counts(h.len(), p)?;
    let k = p.k();
    let mut gamma_p = Vec::with_capacity(k);
    let mut gamma_c = Vec::with_capacity(k);
    for i in 0..k {
        let gains: Vec<f64> = (0..k).map(|j| h[i].dotc(p.private(j)).norm_sqr()).collect();
        let interference: f64 =
            gains.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| g).sum();
        gamma_p.push(gains[i] / (interference + 1.0));
        let common_gain = h[i].dotc(p.common()).norm_sqr();
        let all: f64 = gains.iter().sum();
        gamma_c.push(common_gain / (all + 1.0));
    }
    Ok((gamma_p, gamma_c))
}

/// Per-realization achievable sum rate (common rate set by the worst user).
pub fn instantaneous_sum_rate(h: &[CVec], p: &PrecoderSet) -> Result<RateReport> {
    let (gamma_p, gamma_c) = instantaneous_sinrs(h, p)?;
    Ok(RateReport::from_rates(
        gamma_p.iter().map(|g| (1.0 + g).log2()).collect(),
        gamma_c.iter().map(|g| (1.0 + g).log2()).collect(),
        None,
    ))
}

/// Monte Carlo estimate of the ergodic sum rate.
///
/// The private part averages `sum_i log2(1 + gamma_p,i)` over draws; the
/// common part takes per-user sample means of `log2(1 + gamma_c,k)` first and
/// then the minimum over users (the expectation sits inside the min). The
/// standard error treats the minimizing user as fixed. Draws are consumed
/// sequentially from `rng` and reduced in draw order.
pub fn ergodic_sum_rate_mc<R: Rng>(
    stats: &ChannelStatistics,
    phi: &PhaseConfiguration,
    p: &PrecoderSet,
    n_samples: usize,
    rng: &mut R,
) -> Result<RateReport> {
    if n_samples == 0 {
        return Err(Error::Config("n_samples must be >= 1".into()));
    }
    let k = p.k();
    let mut private_draws = vec![0.0f64; k];
    let mut private_sum = Vec::with_capacity(n_samples);
    let mut common_draws: Vec<Vec<f64>> = vec![Vec::with_capacity(n_samples); k];
    for _ in 0..n_samples {
        let real = sample_channels(stats, phi, rng)?;
        let (gamma_p, gamma_c) = instantaneous_sinrs(&real.h_eff, p)?;
        let mut a = 0.0;
        for i in 0..k {
            let r = (1.0 + gamma_p[i]).log2();
            private_draws[i] += r;
            a += r;
        }
        private_sum.push(a);
        for i in 0..k {
            common_draws[i].push((1.0 + gamma_c[i]).log2());
        }
    }
    let nf = n_samples as f64;
    let private_means: Vec<f64> = private_draws.iter().map(|s| s / nf).collect();
    let common_means: Vec<f64> =
        common_draws.iter().map(|d| d.iter().sum::<f64>() / nf).collect();
    let report = RateReport::from_rates(private_means, common_means, None);
    let k_star = report.common_user;
    let mut var_acc = 0.0;
    for t in 0..n_samples {
        let v = private_sum[t] + common_draws[k_star][t];
        let mean = report.sum_rate;
        var_acc += (v - mean) * (v - mean);
    }
    let stderr = if n_samples > 1 { (var_acc / (nf * (nf - 1.0))).sqrt() } else { 0.0 };
    Ok(RateReport { stderr: Some(stderr), ..report })
}

/// Estimate-based SINRs under imperfect CSI.
///
/// Private: `|hhat_k^H p_k|^2 / (sum_j p_j^H C_err,k p_j + sum_{j!=k} |hhat_k^H p_j|^2 + 1)`.
/// Common: `|hhat_k^H p_c|^2 / (p_c^H C_err,k p_c + sum_j p_j^H C_err,k p_j + sum_j |hhat_k^H p_j|^2 + 1)`.
pub fn imperfect_sinrs(est: &EstimationModel, p: &PrecoderSet) -> Result<(Vec<f64>, Vec<f64>)> {
    check_counts(est.k(), p)?;
    let k = p.k();
    let mut gamma_p = Vec::with_capacity(k);
    let mut gamma_c = Vec::with_capacity(k);
    for i in 0..k {
        let h = est.h_hat(i);
        let cerr = est.c_err(i);
        let gains: Vec<f64> = (0..k).map(|j| h.dotc(p.private(j)).norm_sqr()).collect();
        let err_private: f64 = (0..k).map(|j| qform(cerr, p.private(j))).sum();
        let cross: f64 = gains.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| g).sum();
        gamma_p.push(gains[i] / (err_private + cross + 1.0));
        let common_gain = h.dotc(p.common()).norm_sqr();
        let err_common = qform(cerr, p.common());
        let all: f64 = gains.iter().sum();
        gamma_c.push(common_gain / (err_common + err_private + all + 1.0));
    }
    Ok((gamma_p, gamma_c))
}

/// Design sum rate of the imperfect-CSI problem at the current estimates.
pub fn imperfect_sum_rate(est: &EstimationModel, p: &PrecoderSet) -> Result<RateReport> {
    let (gamma_p, gamma_c) = imperfect_sinrs(est, p)?;
    Ok(RateReport::from_rates(
        gamma_p.iter().map(|g| (1.0 + g).log2()).collect(),
        gamma_c.iter().map(|g| (1.0 + g).log2()).collect(),
        None,
    ))
}

impl EffectiveCovariance {
    /// Wraps a plain Hermitian PSD matrix, computing its root.
    pub fn from_matrix(matrix: CMat) -> Self {
        let sqrt = hermitian_sqrt(&matrix);
        EffectiveCovariance { matrix, sqrt }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::SystemDims;
    use crate::seeding::rng_from;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn e1(m: usize, scale: f64) -> CVec {
        let mut v = CVec::zeros(m);
        v[0] = c(scale, 0.0);
        v
    }

    fn identity_cov(m: usize) -> EffectiveCovariance {
        EffectiveCovariance::from_matrix(CMat::identity(m, m))
    }

    fn random_cov<R: Rng>(m: usize, rng: &mut R) -> EffectiveCovariance {
        let b = CMat::from_fn(m, m, |_, _| crate::channel::cn01(rng));
        EffectiveCovariance::from_matrix(&b * b.adjoint())
    }

    fn random_vec<R: Rng>(m: usize, rng: &mut R) -> CVec {
        CVec::from_fn(m, |_, _| crate::channel::cn01(rng))
    }

    #[test]
    fn single_user_no_interference() {
        let pt = 2.5f64;
        let p = PrecoderSet::new(CVec::zeros(3), vec![e1(3, pt.sqrt())]).unwrap();
        let (gp, gc) = approx_sinrs(&[identity_cov(3)], &p).unwrap();
        assert!((gp[0] - pt).abs() < 1e-12);
        assert_eq!(gc[0], 0.0);
    }

    #[test]
    fn symmetric_two_user_split() {
        let pt = 4.0f64;
        let p = PrecoderSet::new(
            CVec::zeros(2),
            vec![e1(2, (pt / 2.0).sqrt()), e1(2, (pt / 2.0).sqrt())],
        )
        .unwrap();
        let cs = [identity_cov(2), identity_cov(2)];
        let (gp, _) = approx_sinrs(&cs, &p).unwrap();
        let expect = (pt / 2.0) / (pt / 2.0 + 1.0);
        assert!((gp[0] - expect).abs() < 1e-12);
        assert!((gp[1] - expect).abs() < 1e-12);
    }

    #[test]
    fn zero_precoders_zero_rate() {
        let p = PrecoderSet::zeros(3, 2);
        let cs = [identity_cov(3), identity_cov(3)];
        let report = approx_sum_rate(&cs, &p).unwrap();
        assert_eq!(report.sum_rate, 0.0);
    }

    #[test]
    fn unit_power_single_user_one_bit() {
        let p = PrecoderSet::new(CVec::zeros(2), vec![e1(2, 1.0)]).unwrap();
        let report = approx_sum_rate(&[identity_cov(2)], &p).unwrap();
        assert!((report.sum_rate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sum_rate_recomposes_from_sinrs() {
        let mut rng = rng_from(21, &[]);
        for _ in 0..10 {
            let cs: Vec<_> = (0..3).map(|_| random_cov(4, &mut rng)).collect();
            let p = PrecoderSet::new(
                random_vec(4, &mut rng),
                (0..3).map(|_| random_vec(4, &mut rng)).collect(),
            )
            .unwrap();
            let report = approx_sum_rate(&cs, &p).unwrap();
            let (gp, gc) = approx_sinrs(&cs, &p).unwrap();
            let expect = gp.iter().map(|g| (1.0 + g).log2()).sum::<f64>()
                + gc.iter().map(|g| (1.0 + g).log2()).fold(f64::INFINITY, f64::min);
            assert!((report.sum_rate - expect).abs() < 1e-12);
            assert!(report.sum_rate
                >= report.private_rate.iter().sum::<f64>()
                    + report.common_rate_candidate[report.common_user]
                    - 1e-12);
        }
    }

    #[test]
    fn orthogonal_interferer_drops_out() {
        let h1 = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let h2 = CVec::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let p1 = CVec::from_vec(vec![c(1.3, 0.4), c(0.0, 0.0)]);
        let p2 = CVec::from_vec(vec![c(0.0, 0.0), c(0.8, -0.2)]);
        let p = PrecoderSet::new(CVec::zeros(2), vec![p1.clone(), p2]).unwrap();
        let (gp, gc) = instantaneous_sinrs(&[h1.clone(), h2], &p).unwrap();
        assert!((gp[0] - h1.dotc(&p1).norm_sqr()).abs() < 1e-12);
        assert_eq!(gc[0], 0.0);
    }

    #[test]
    fn instantaneous_matches_scalar_expansion() {
        // independent route: expand every quadratic form entry by entry
        let mut rng = rng_from(22, &[]);
        let k = 3;
        let m = 4;
        let h: Vec<CVec> = (0..k).map(|_| random_vec(m, &mut rng)).collect();
        let p = PrecoderSet::new(
            random_vec(m, &mut rng),
            (0..k).map(|_| random_vec(m, &mut rng)).collect(),
        )
        .unwrap();
        let (gp, gc) = instantaneous_sinrs(&h, &p).unwrap();
        let inner = |a: &CVec, b: &CVec| -> C64 {
            (0..m).map(|i| a[i].conj() * b[i]).sum()
        };
        for i in 0..k {
            let sig = inner(&h[i], p.private(i)).norm_sqr();
            let mut interf = 0.0;
            for j in 0..k {
                if j != i {
                    interf += inner(&h[i], p.private(j)).norm_sqr();
                }
            }
            assert!((gp[i] - sig / (interf + 1.0)).abs() <= 1e-12 * (1.0 + gp[i]));
            let csig = inner(&h[i], p.common()).norm_sqr();
            let all: f64 = (0..k).map(|j| inner(&h[i], p.private(j)).norm_sqr()).sum();
            assert!((gc[i] - csig / (all + 1.0)).abs() <= 1e-12 * (1.0 + gc[i]));
        }
    }

    #[test]
    fn mc_zero_power_zero_rate_and_stderr() {
        let dims = SystemDims::new(2, 2, 0).unwrap();
        let stats = ChannelStatistics::new(
            dims,
            0.0,
            vec![CMat::identity(2, 2); 2],
            vec![CMat::zeros(0, 0); 2],
            CMat::zeros(0, 2),
            CMat::zeros(0, 0),
            CMat::identity(2, 2),
        )
        .unwrap();
        let p = PrecoderSet::zeros(2, 2);
        let phi = PhaseConfiguration::ones(0);
        let report =
            ergodic_sum_rate_mc(&stats, &phi, &p, 500, &mut rng_from(23, &[])).unwrap();
        assert_eq!(report.sum_rate, 0.0);
        assert_eq!(report.stderr, Some(0.0));
    }

    /// Exponential integral E1 by composite Simpson on a transformed axis.
    fn expint_e1(x: f64) -> f64 {
        // E1(x) = int_x^inf e^-t / t dt; substitute t = x + u, integrate far
        let n = 400_000;
        let upper = x + 60.0;
        let h = (upper - x) / n as f64;
        let f = |t: f64| (-t).exp() / t;
        let mut acc = f(x) + f(upper);
        for i in 1..n {
            let t = x + i as f64 * h;
            acc += f(t) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn mc_matches_rayleigh_closed_form() {
        // K=1, M=1, C_d=1: E[log2(1 + Pt |h|^2)] = log2(e) e^{1/Pt} E1(1/Pt)
        let dims = SystemDims::new(1, 1, 0).unwrap();
        let stats = ChannelStatistics::new(
            dims,
            0.0,
            vec![CMat::identity(1, 1)],
            vec![CMat::zeros(0, 0)],
            CMat::zeros(0, 1),
            CMat::zeros(0, 0),
            CMat::identity(1, 1),
        )
        .unwrap();
        let phi = PhaseConfiguration::ones(0);
        for (seed, pt_db) in [(31u64, 0.0), (32, 10.0)] {
            let pt = 10f64.powf(pt_db / 10.0);
            let p = PrecoderSet::new(CVec::zeros(1), vec![e1(1, pt.sqrt())]).unwrap();
            let report =
                ergodic_sum_rate_mc(&stats, &phi, &p, 100_000, &mut rng_from(seed, &[])).unwrap();
            let closed = std::f64::consts::LOG2_E * (1.0 / pt).exp() * expint_e1(1.0 / pt);
            let se = report.stderr.unwrap();
            assert!(
                (report.sum_rate - closed).abs() <= 3.0 * se,
                "Pt={pt_db} dB: mc {} vs closed {closed}, 3se {}",
                report.sum_rate,
                3.0 * se
            );
        }
    }

    #[test]
    fn mc_high_snr_slope_one_bit_per_3db() {
        let dims = SystemDims::new(1, 1, 0).unwrap();
        let stats = ChannelStatistics::new(
            dims,
            0.0,
            vec![CMat::identity(1, 1)],
            vec![CMat::zeros(0, 0)],
            CMat::zeros(0, 1),
            CMat::zeros(0, 0),
            CMat::identity(1, 1),
        )
        .unwrap();
        let phi = PhaseConfiguration::ones(0);
        let rate_at = |pt_db: f64, seed: u64| {
            let pt = 10f64.powf(pt_db / 10.0);
            let p = PrecoderSet::new(CVec::zeros(1), vec![e1(1, pt.sqrt())]).unwrap();
            ergodic_sum_rate_mc(&stats, &phi, &p, 100_000, &mut rng_from(seed, &[]))
                .unwrap()
                .sum_rate
        };
        let r20 = rate_at(20.0, 41);
        let r40 = rate_at(40.0, 42);
        // 20 dB of extra power is log2(100) extra bits at slope 1
        let slope = (r40 - r20) / 100f64.log2();
        assert!((slope - 1.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn imperfect_reduces_to_instantaneous_without_error() {
        let mut rng = rng_from(24, &[]);
        let k = 3;
        let m = 4;
        let h: Vec<CVec> = (0..k).map(|_| random_vec(m, &mut rng)).collect();
        let p = PrecoderSet::new(
            random_vec(m, &mut rng),
            (0..k).map(|_| random_vec(m, &mut rng)).collect(),
        )
        .unwrap();
        let est = EstimationModel::new(h.clone(), vec![CMat::zeros(m, m); k]).unwrap();
        let (gp_hat, gc_hat) = imperfect_sinrs(&est, &p).unwrap();
        let (gp, gc) = instantaneous_sinrs(&h, &p).unwrap();
        for i in 0..k {
            assert!((gp_hat[i] - gp[i]).abs() <= 1e-12 * (1.0 + gp[i]));
            assert!((gc_hat[i] - gc[i]).abs() <= 1e-12 * (1.0 + gc[i]));
        }
    }

    #[test]
    fn imperfect_matches_scalar_expansion() {
        let mut rng = rng_from(25, &[]);
        let k = 2;
        let m = 3;
        let h: Vec<CVec> = (0..k).map(|_| random_vec(m, &mut rng)).collect();
        let c_err: Vec<CMat> = (0..k)
            .map(|_| {
                let b = CMat::from_fn(m, m, |_, _| crate::channel::cn01(&mut rng));
                &b * b.adjoint()
            })
            .collect();
        let p = PrecoderSet::new(
            random_vec(m, &mut rng),
            (0..k).map(|_| random_vec(m, &mut rng)).collect(),
        )
        .unwrap();
        let est = EstimationModel::new(h.clone(), c_err.clone()).unwrap();
        let (gp, gc) = imperfect_sinrs(&est, &p).unwrap();
        let inner = |a: &CVec, b: &CVec| -> C64 { (0..m).map(|i| a[i].conj() * b[i]).sum() };
        let quad = |a: &CMat, x: &CVec| -> f64 {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..m {
                for j in 0..m {
                    acc += x[i].conj() * a[(i, j)] * x[j];
                }
            }
            acc.re
        };
        for i in 0..k {
            let sig = inner(&h[i], p.private(i)).norm_sqr();
            let err: f64 = (0..k).map(|j| quad(&c_err[i], p.private(j))).sum();
            let cross: f64 = (0..k)
                .filter(|&j| j != i)
                .map(|j| inner(&h[i], p.private(j)).norm_sqr())
                .sum();
            let expect = sig / (err + cross + 1.0);
            assert!((gp[i] - expect).abs() <= 1e-12 * (1.0 + expect));
            let csig = inner(&h[i], p.common()).norm_sqr();
            let cerr = quad(&c_err[i], p.common());
            let all: f64 = (0..k).map(|j| inner(&h[i], p.private(j)).norm_sqr()).sum();
            let expect_c = csig / (cerr + err + all + 1.0);
            assert!((gc[i] - expect_c).abs() <= 1e-12 * (1.0 + expect_c));
        }
    }

    #[test]
    fn degenerate_statistics_give_exact_deterministic_rate() {
        // all-zero covariances leave no randomness; the MC estimate must
        // equal the deterministic (zero-channel) rate with zero stderr
        let dims = SystemDims::new(2, 1, 2).unwrap();
        let stats = ChannelStatistics::new(
            dims,
            0.0,
            vec![CMat::zeros(2, 2)],
            vec![CMat::zeros(2, 2)],
            CMat::from_fn(2, 2, |i, j| c((i + j) as f64 * 0.3, 0.1)),
            CMat::identity(2, 2),
            CMat::identity(2, 2),
        )
        .unwrap();
        let phi = PhaseConfiguration::ones(2);
        let p = PrecoderSet::new(CVec::zeros(2), vec![e1(2, 1.0)]).unwrap();
        let report = ergodic_sum_rate_mc(&stats, &phi, &p, 64, &mut rng_from(26, &[])).unwrap();
        assert_eq!(report.sum_rate, 0.0);
        assert_eq!(report.stderr, Some(0.0));
    }

    #[test]
    fn stacking_round_trip() {
        let mut rng = rng_from(27, &[]);
        let p = PrecoderSet::new(
            random_vec(3, &mut rng),
            (0..2).map(|_| random_vec(3, &mut rng)).collect(),
        )
        .unwrap();
        let v = p.stacked();
        let back = PrecoderSet::from_stacked(&v, 3, 2).unwrap();
        assert_eq!(p, back);
    }
}
