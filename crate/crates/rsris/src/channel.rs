//! Channel model: second-order statistics, covariance synthesis and seeded
//! sampling of channel realizations.
//!
//! The downlink has three links per user: a direct BS-user channel `h_d`, a
//! RIS-user channel `r`, and the shared BS-RIS channel `T`. `h_d` and `r` are
//! zero-mean complex Gaussian with per-user covariances. `T` follows a
//! Kronecker-correlated model with a deterministic LoS component,
//!
//! `T = sqrt(1 - delta) T' + sqrt(delta) R_ris^{1/2} W R_tx^{1/2}`,
//!
//! where `W` has i.i.d. unit-variance complex Gaussian entries. The effective
//! channel seen by user k under the phase configuration `Phi = diag(phi)` is
//! `h_k = h_d,k + T^H Phi r_k`, whose covariance has the closed form
//!
//! `C_k = C_d,k + Tbar^H Phi C_r,k Phi^H Tbar + delta (phi^H X_k phi) R_tx`
//!
//! with `X_k = R_ris (hadamard) C_r,k^T`. Covariances are synthesized as
//! path-cluster mixtures of steering-vector outer products integrated over a
//! truncated Laplacian power-angle density on a half-wavelength ULA.
//!
//! Complex Gaussian convention: `CN(0, C)` draws have real and imaginary
//! parts each carrying half the variance, matching the unit-variance entries
//! of `W`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{check_hermitian_psd, hadamard, hermitian_part, hermitian_sqrt, qform, real_trace};
use crate::scenario::{PathCluster, ScenarioConfig, UserSpec};
use crate::{C64, CMat, CVec, Error, Result};

/// Number of midpoint quadrature nodes for the Laplacian angular integral.
const ANGULAR_QUAD_POINTS: usize = 2000;

/// Antenna/user/RIS-element counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemDims {
    /// BS antennas.
    pub m: usize,
    /// Users.
    pub k: usize,
    /// RIS elements (0 disables the RIS entirely).
    pub n: usize,
}

impl SystemDims {
    pub fn new(m: usize, k: usize, n: usize) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(Error::Dimension(format!(
                "M >= 1 and K >= 1 required, got M={m}, K={k}"
            )));
        }
        Ok(SystemDims { m, k, n })
    }
}

/// Unit-modulus RIS phase vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfiguration {
    phi: CVec,
}

impl PhaseConfiguration {
    /// Validates unit modulus within 1e-12 on every entry.
    pub fn new(phi: CVec) -> Result<Self> {
        for (i, p) in phi.iter().enumerate() {
            if (p.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "phase entry {i} has modulus {:.15}, expected 1",
                    p.norm()
                )));
            }
        }
        Ok(PhaseConfiguration { phi })
    }

    /// All-ones phases (the optimizer's default start).
    pub fn ones(n: usize) -> Self {
        PhaseConfiguration { phi: CVec::from_element(n, C64::new(1.0, 0.0)) }
    }

    /// Phases drawn independently and uniformly on the unit circle.
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        let phi = CVec::from_fn(n, |_, _| {
            let theta: f64 = rng.random::<f64>() * 2.0 * PI;
            C64::from_polar(1.0, theta)
        });
        PhaseConfiguration { phi }
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.len() == 0
    }

    pub fn vector(&self) -> &CVec {
        &self.phi
    }

    /// Augmented vector `[phi; 1]` used by the phase-update quadratic form.
    pub fn augmented(&self) -> CVec {
        let n = self.phi.len();
        CVec::from_fn(n + 1, |i, _| if i < n { self.phi[i] } else { C64::new(1.0, 0.0) })
    }

    /// `diag(phi)^H v = conj(phi) .* v`
    pub fn conj_scale(&self, v: &CVec) -> CVec {
        CVec::from_fn(v.len(), |i, _| self.phi[i].conj() * v[i])
    }
}

/// All second-order channel statistics, with precomputed Hermitian PSD roots
/// of every covariance used by the optimizer and the sampler.
#[derive(Debug, Clone)]
pub struct ChannelStatistics {
    dims: SystemDims,
    delta: f64,
    c_d: Vec<CMat>,
    c_r: Vec<CMat>,
    t_bar: CMat,
    r_ris: CMat,
    r_tx: CMat,
    // precomputed
    c_d_sqrt: Vec<CMat>,
    c_r_sqrt: Vec<CMat>,
    r_ris_sqrt: CMat,
    r_tx_sqrt: CMat,
    x: Vec<CMat>,
    x_sqrt: Vec<CMat>,
}

impl ChannelStatistics {
    /// Validates Hermitian/PSD structure and dimensions, then precomputes the
    /// PSD roots and the Hadamard matrices `X_k`.
    pub fn new(
        dims: SystemDims,
        delta: f64,
        c_d: Vec<CMat>,
        c_r: Vec<CMat>,
        t_bar: CMat,
        r_ris: CMat,
        r_tx: CMat,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::Stats(format!("delta must lie in [0, 1], got {delta}")));
        }
        if c_d.len() != dims.k || c_r.len() != dims.k {
            return Err(Error::Dimension(format!(
                "expected {} per-user covariances, got C_d: {}, C_r: {}",
                dims.k,
                c_d.len(),
                c_r.len()
            )));
        }
        if t_bar.nrows() != dims.n || t_bar.ncols() != dims.m {
            return Err(Error::Dimension(format!(
                "T_bar: expected {}x{}, got {}x{}",
                dims.n,
                dims.m,
                t_bar.nrows(),
                t_bar.ncols()
            )));
        }
        for (k, m) in c_d.iter().enumerate() {
            let tol = 1e-10 * (1.0 + real_trace(m).abs());
            check_hermitian_psd(&format!("C_d[{k}]"), m, dims.m, tol, 1e-10)?;
        }
        for (k, m) in c_r.iter().enumerate() {
            let tol = 1e-10 * (1.0 + real_trace(m).abs());
            check_hermitian_psd(&format!("C_r[{k}]"), m, dims.n, tol, 1e-10)?;
        }
        let tol = 1e-10 * (1.0 + real_trace(&r_ris).abs());
        check_hermitian_psd("R_RIS", &r_ris, dims.n, tol, 1e-10)?;
        let tol = 1e-10 * (1.0 + real_trace(&r_tx).abs());
        check_hermitian_psd("R_Tx", &r_tx, dims.m, tol, 1e-10)?;

        let c_d_sqrt = c_d.iter().map(hermitian_sqrt).collect();
        let c_r_sqrt: Vec<CMat> = c_r.iter().map(hermitian_sqrt).collect();
        let r_ris_sqrt = hermitian_sqrt(&r_ris);
        let r_tx_sqrt = hermitian_sqrt(&r_tx);
        // X_k = R_ris (hadamard) C_r,k^T is PSD by the Schur product theorem.
        let x: Vec<CMat> = c_r
            .iter()
            .map(|c| hermitian_part(&hadamard(&r_ris, &c.transpose())))
            .collect();
        let x_sqrt = x.iter().map(hermitian_sqrt).collect();

        Ok(ChannelStatistics {
            dims,
            delta,
            c_d,
            c_r,
            t_bar,
            r_ris,
            r_tx,
            c_d_sqrt,
            c_r_sqrt,
            r_ris_sqrt,
            r_tx_sqrt,
            x,
            x_sqrt,
        })
    }

    pub fn dims(&self) -> SystemDims {
        self.dims
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn c_d(&self, k: usize) -> &CMat {
        &self.c_d[k]
    }

    pub fn c_r(&self, k: usize) -> &CMat {
        &self.c_r[k]
    }

    pub fn t_bar(&self) -> &CMat {
        &self.t_bar
    }

    pub fn r_ris(&self) -> &CMat {
        &self.r_ris
    }

    pub fn r_tx(&self) -> &CMat {
        &self.r_tx
    }

    pub fn c_d_sqrt(&self, k: usize) -> &CMat {
        &self.c_d_sqrt[k]
    }

    pub fn c_r_sqrt(&self, k: usize) -> &CMat {
        &self.c_r_sqrt[k]
    }

    pub fn r_tx_sqrt(&self) -> &CMat {
        &self.r_tx_sqrt
    }

    /// `X_k = R_ris (hadamard) C_r,k^T`.
    pub fn x(&self, k: usize) -> &CMat {
        &self.x[k]
    }

    pub fn x_sqrt(&self, k: usize) -> &CMat {
        &self.x_sqrt[k]
    }

    /// Copy with the RIS stripped out (N = 0): direct-link statistics only.
    pub fn without_ris(&self) -> ChannelStatistics {
        let dims = SystemDims { n: 0, ..self.dims };
        ChannelStatistics::new(
            dims,
            self.delta,
            self.c_d.clone(),
            vec![CMat::zeros(0, 0); self.dims.k],
            CMat::zeros(0, self.dims.m),
            CMat::zeros(0, 0),
            self.r_tx.clone(),
        )
        .expect("stripping the RIS keeps statistics valid")
    }
}

/// One sampled realization of all links plus the effective channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_d: Vec<CVec>,
    pub r: Vec<CVec>,
    pub t: CMat,
    pub h_eff: Vec<CVec>,
}

/// Effective per-user covariance together with its Hermitian PSD root.
#[derive(Debug, Clone)]
pub struct EffectiveCovariance {
    pub matrix: CMat,
    pub sqrt: CMat,
}

/// Unit-norm ULA steering vector at half-wavelength spacing.
pub fn steering(n: usize, angle_rad: f64) -> CVec {
    let scale = 1.0 / (n as f64).sqrt();
    CVec::from_fn(n, |i, _| C64::from_polar(scale, PI * i as f64 * angle_rad.sin()))
}

/// How a Laplacian path-cluster covariance is scaled.
#[derive(Debug, Clone, Copy)]
enum ClusterScaling {
    /// Unit-norm steering vectors: trace equals the cluster power.
    PathPower(f64),
    /// Unit-modulus steering entries: unit diagonal (correlation matrix).
    UnitDiagonal,
}

/// Covariance of one path cluster: steering outer products averaged over a
/// truncated Laplacian power-angle density with standard deviation
/// `spread_deg` centred at `angle_deg`, by midpoint quadrature.
fn laplacian_cluster(n: usize, angle_deg: f64, spread_deg: f64, scaling: ClusterScaling) -> CMat {
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let theta0 = angle_deg.to_radians();
    let make = |theta: f64| -> CVec {
        match scaling {
            ClusterScaling::PathPower(_) => steering(n, theta),
            ClusterScaling::UnitDiagonal => {
                CVec::from_fn(n, |i, _| C64::from_polar(1.0, PI * i as f64 * theta.sin()))
            }
        }
    };
    let power = match scaling {
        ClusterScaling::PathPower(p) => p,
        ClusterScaling::UnitDiagonal => 1.0,
    };
    if spread_deg == 0.0 {
        let a = make(theta0);
        return &a * a.adjoint() * C64::new(power, 0.0);
    }
    let sigma = spread_deg.to_radians();
    let half_width = PI / 2.0;
    let step = 2.0 * half_width / ANGULAR_QUAD_POINTS as f64;
    let mut weights = Vec::with_capacity(ANGULAR_QUAD_POINTS);
    let mut total = 0.0;
    for i in 0..ANGULAR_QUAD_POINTS {
        let theta = theta0 - half_width + (i as f64 + 0.5) * step;
        let w = (-(2.0f64).sqrt() * (theta - theta0).abs() / sigma).exp();
        weights.push((theta, w));
        total += w;
    }
    let mut c = CMat::zeros(n, n);
    for (theta, w) in weights {
        let a = make(theta);
        c += &a * a.adjoint() * C64::new(power * w / total, 0.0);
    }
    hermitian_part(&c)
}

fn cluster_sum(n: usize, clusters: &[PathCluster]) -> CMat {
    let mut c = CMat::zeros(n, n);
    for cl in clusters {
        c += laplacian_cluster(n, cl.angle_deg, cl.spread_deg, ClusterScaling::PathPower(cl.power));
    }
    c
}

fn draw_clusters<R: Rng>(
    rng: &mut R,
    paths: usize,
    angle: [f64; 2],
    spread: [f64; 2],
    total_power: [f64; 2],
) -> Vec<PathCluster> {
    let uniform = |rng: &mut R, [lo, hi]: [f64; 2]| lo + (hi - lo) * rng.random::<f64>();
    let mut clusters: Vec<PathCluster> = (0..paths)
        .map(|_| PathCluster {
            angle_deg: uniform(rng, angle),
            spread_deg: uniform(rng, spread),
            // raw weight, normalized below; floor keeps every path alive
            power: 0.2 + 0.8 * rng.random::<f64>(),
        })
        .collect();
    let total = uniform(rng, total_power);
    let weight_sum: f64 = clusters.iter().map(|c| c.power).sum();
    for c in &mut clusters {
        c.power *= total / weight_sum;
    }
    clusters
}

/// Synthesizes a full set of channel statistics from a scenario.
///
/// With explicit `[[user]]` tables the result is deterministic and `rng` is
/// untouched; otherwise user geometries and path powers are drawn from the
/// scenario ranges (direct link first, then RIS link, user by user), so a
/// fixed stream yields a fixed ensemble member.
pub fn synthesize_covariances<R: Rng>(
    scenario: &ScenarioConfig,
    rng: &mut R,
) -> Result<ChannelStatistics> {
    scenario.validate()?;
    let dims = SystemDims::new(scenario.m, scenario.k, scenario.n)?;

    let users: Vec<UserSpec> = if !scenario.users.is_empty() {
        scenario.users.clone()
    } else {
        let ranges = scenario.ranges.as_ref().expect("validated");
        (0..dims.k)
            .map(|_| {
                let direct = draw_clusters(
                    rng,
                    ranges.direct_paths,
                    ranges.direct_angle_deg,
                    ranges.direct_spread_deg,
                    ranges.direct_power,
                );
                let ris = if dims.n > 0 {
                    draw_clusters(
                        rng,
                        ranges.ris_paths,
                        ranges.ris_angle_deg,
                        ranges.ris_spread_deg,
                        ranges.ris_power,
                    )
                } else {
                    Vec::new()
                };
                UserSpec { direct, ris }
            })
            .collect()
    };
    for user in &users {
        for cl in user.direct.iter().chain(user.ris.iter()) {
            if cl.power <= 0.0 {
                return Err(Error::Config(format!(
                    "path powers must be positive, got {}",
                    cl.power
                )));
            }
        }
    }

    let c_d: Vec<CMat> = users.iter().map(|u| cluster_sum(dims.m, &u.direct)).collect();
    let c_r: Vec<CMat> = users.iter().map(|u| cluster_sum(dims.n, &u.ris)).collect();

    let (t_bar, r_ris, r_tx) = if dims.n > 0 {
        let ris = scenario.ris.as_ref().expect("validated");
        let a_ris = steering(dims.n, ris.los_angle_ris_deg.to_radians());
        let a_bs = steering(dims.m, ris.los_angle_bs_deg.to_radians());
        // T' has per-entry power los_entry_gain; the LoS weight sqrt(1-delta)
        // is folded in here so t_bar is the mean of T.
        let scale = (ris.los_entry_gain * (dims.n * dims.m) as f64).sqrt()
            * (1.0 - scenario.delta).sqrt();
        let t_prime_scaled = &a_ris * a_bs.adjoint() * C64::new(scale, 0.0);
        let r_ris = laplacian_cluster(
            dims.n,
            ris.corr_angle_ris_deg,
            ris.corr_spread_ris_deg,
            ClusterScaling::UnitDiagonal,
        );
        let r_tx = laplacian_cluster(
            dims.m,
            ris.corr_angle_tx_deg,
            ris.corr_spread_tx_deg,
            ClusterScaling::UnitDiagonal,
        );
        (t_prime_scaled, r_ris, r_tx)
    } else {
        (CMat::zeros(0, dims.m), CMat::zeros(0, 0), CMat::identity(dims.m, dims.m))
    };

    ChannelStatistics::new(dims, scenario.delta, c_d, c_r, t_bar, r_ris, r_tx)
}

/// Effective covariance of user `k` for the phase configuration `phi`,
/// `C_k = C_d,k + Tbar^H Phi C_r,k Phi^H Tbar + delta (phi^H X_k phi) R_tx`,
/// together with its Hermitian PSD root.
pub fn effective_covariance(
    stats: &ChannelStatistics,
    phi: &PhaseConfiguration,
    k: usize,
) -> Result<EffectiveCovariance> {
    let dims = stats.dims();
    if k >= dims.k {
        return Err(Error::Dimension(format!("user index {k} out of range (K={})", dims.k)));
    }
    if phi.len() != dims.n {
        return Err(Error::Dimension(format!(
            "phase vector length {} does not match N={}",
            phi.len(),
            dims.n
        )));
    }
    let mut c = stats.c_d(k).clone();
    if dims.n > 0 {
        // Phi^H Tbar scales row i of Tbar by conj(phi_i)
        let mut phit = stats.t_bar().clone();
        for (i, mut row) in phit.row_iter_mut().enumerate() {
            row *= phi.vector()[i].conj();
        }
        c += phit.adjoint() * stats.c_r(k) * &phit;
        let gain = qform(stats.x(k), phi.vector());
        c += stats.r_tx() * C64::new(stats.delta() * gain, 0.0);
    }
    let c = hermitian_part(&c);
    let sqrt = hermitian_sqrt(&c);
    Ok(EffectiveCovariance { matrix: c, sqrt })
}

/// Effective covariances of all users.
pub fn effective_covariances(
    stats: &ChannelStatistics,
    phi: &PhaseConfiguration,
) -> Result<Vec<EffectiveCovariance>> {
    (0..stats.dims().k).map(|k| effective_covariance(stats, phi, k)).collect()
}

/// Standard complex Gaussian scalar `CN(0, 1)`.
pub fn cn01<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn gaussian_vec<R: Rng>(root: &CMat, rng: &mut R) -> CVec {
    let n = root.ncols();
    let white = CVec::from_fn(n, |_, _| cn01(rng));
    root * white
}

/// Draws one channel realization. Links are mutually independent and drawn
/// in a fixed order (direct links for users 0..K, then RIS-user links, then
/// the BS-RIS matrix), so a given stream position maps to a fixed draw.
pub fn sample_channels<R: Rng>(
    stats: &ChannelStatistics,
    phi: &PhaseConfiguration,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let dims = stats.dims();
    if phi.len() != dims.n {
        return Err(Error::Dimension(format!(
            "phase vector length {} does not match N={}",
            phi.len(),
            dims.n
        )));
    }
    let h_d: Vec<CVec> = (0..dims.k).map(|k| gaussian_vec(stats.c_d_sqrt(k), rng)).collect();
    let r: Vec<CVec> = (0..dims.k).map(|k| gaussian_vec(stats.c_r_sqrt(k), rng)).collect();
    let t = if dims.n > 0 {
        let w = CMat::from_fn(dims.n, dims.m, |_, _| cn01(rng));
        stats.t_bar() + &stats.r_ris_sqrt * w * &stats.r_tx_sqrt * C64::new(stats.delta().sqrt(), 0.0)
    } else {
        CMat::zeros(0, dims.m)
    };
    let h_eff: Vec<CVec> = (0..dims.k)
        .map(|k| {
            if dims.n > 0 {
                &h_d[k] + t.adjoint() * CVec::from_fn(dims.n, |i, _| phi.vector()[i] * r[k][i])
            } else {
                h_d[k].clone()
            }
        })
        .collect();
    Ok(ChannelRealization { h_d, r, t, h_eff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::RisSpec;
    use crate::seeding::rng_from;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn fixed_scenario(m: usize, k: usize, n: usize, delta: f64) -> ScenarioConfig {
        ScenarioConfig {
            schema_version: crate::scenario::SCHEMA_VERSION,
            m,
            k,
            n,
            delta,
            seed: 3,
            users: (0..k)
                .map(|i| UserSpec {
                    direct: vec![PathCluster {
                        angle_deg: -30.0 + 17.0 * i as f64,
                        spread_deg: 6.0,
                        power: 0.05,
                    }],
                    ris: if n > 0 {
                        vec![PathCluster {
                            angle_deg: 10.0 + 11.0 * i as f64,
                            spread_deg: 3.0,
                            power: 2.0,
                        }]
                    } else {
                        Vec::new()
                    },
                })
                .collect(),
            ris: (n > 0).then(|| RisSpec {
                los_angle_bs_deg: 12.0,
                los_angle_ris_deg: -20.0,
                los_entry_gain: 1.0,
                corr_angle_ris_deg: 5.0,
                corr_spread_ris_deg: 4.0,
                corr_angle_tx_deg: 0.0,
                corr_spread_tx_deg: 10.0,
            }),
            ranges: None,
        }
    }

    #[test]
    fn zero_spread_cluster_is_rank_one() {
        let rho = 1.7;
        let cmat = laplacian_cluster(4, 25.0, 0.0, ClusterScaling::PathPower(rho));
        let a = steering(4, 25.0f64.to_radians());
        let expect = &a * a.adjoint() * c(rho, 0.0);
        assert!((&cmat - &expect).norm() < 1e-12);
        let eig = nalgebra::linalg::SymmetricEigen::new(cmat);
        let mut ev: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((ev[0] - rho).abs() < 1e-12);
        assert!(ev[1].abs() < 1e-12);
    }

    #[test]
    fn full_los_zeroes_the_mean_weight() {
        let mut scenario = fixed_scenario(3, 2, 5, 1.0);
        scenario.delta = 1.0;
        let mut rng = rng_from(1, &[]);
        let stats = synthesize_covariances(&scenario, &mut rng).unwrap();
        assert!(stats.t_bar().norm() < 1e-14);
    }

    #[test]
    fn cluster_trace_matches_path_powers() {
        // independent oracle: trapezoid integration of the same density at a
        // different resolution, unnormalized, then normalized by its own mass
        let clusters = [
            PathCluster { angle_deg: -20.0, spread_deg: 10.0, power: 0.5 },
            PathCluster { angle_deg: 5.0, spread_deg: 10.0, power: 1.25 },
            PathCluster { angle_deg: 40.0, spread_deg: 10.0, power: 0.25 },
        ];
        let m = 4;
        let built = cluster_sum(m, &clusters);
        let total: f64 = clusters.iter().map(|c| c.power).sum();
        assert!((real_trace(&built) - total).abs() < 1e-9);

        // entrywise against the oracle integration
        let mut oracle = CMat::zeros(m, m);
        for cl in &clusters {
            let theta0 = cl.angle_deg.to_radians();
            let sigma = cl.spread_deg.to_radians();
            let pts = 4001;
            let lo = theta0 - PI / 2.0;
            let hi = theta0 + PI / 2.0;
            let h = (hi - lo) / (pts - 1) as f64;
            let mut acc = CMat::zeros(m, m);
            let mut mass = 0.0;
            for i in 0..pts {
                let theta = lo + i as f64 * h;
                let w = (-(2.0f64).sqrt() * (theta - theta0).abs() / sigma).exp()
                    * if i == 0 || i == pts - 1 { 0.5 } else { 1.0 };
                let a = steering(m, theta);
                acc += &a * a.adjoint() * c(w, 0.0);
                mass += w;
            }
            oracle += acc * c(cl.power / mass, 0.0);
        }
        // midpoint vs trapezoid at different resolutions agree to ~1e-6
        assert!(
            (&built - &oracle).norm() < 1e-5,
            "cluster covariance deviates from integration oracle by {}",
            (&built - &oracle).norm()
        );
    }

    #[test]
    fn effective_covariance_without_ris_link_is_direct_only() {
        let scenario = fixed_scenario(3, 1, 4, 0.3);
        let mut rng = rng_from(2, &[]);
        let stats = synthesize_covariances(&scenario, &mut rng).unwrap();
        // zero out the RIS-user covariance by hand
        let stats = ChannelStatistics::new(
            stats.dims(),
            stats.delta(),
            vec![stats.c_d(0).clone()],
            vec![CMat::zeros(4, 4)],
            stats.t_bar().clone(),
            stats.r_ris().clone(),
            stats.r_tx().clone(),
        )
        .unwrap();
        let phi = PhaseConfiguration::ones(4);
        let eff = effective_covariance(&stats, &phi, 0).unwrap();
        assert!((&eff.matrix - stats.c_d(0)).norm() < 1e-12);
    }

    #[test]
    fn scalar_effective_covariance_drops_phase() {
        // M = N = 1, delta = 0: C = c_d + |tbar|^2 c_r for any phase
        let c_d = 0.3;
        let c_r = 1.1;
        let tbar = c(0.7, -0.4);
        let dims = SystemDims::new(1, 1, 1).unwrap();
        let stats = ChannelStatistics::new(
            dims,
            0.0,
            vec![CMat::from_element(1, 1, c(c_d, 0.0))],
            vec![CMat::from_element(1, 1, c(c_r, 0.0))],
            CMat::from_element(1, 1, tbar),
            CMat::identity(1, 1),
            CMat::identity(1, 1),
        )
        .unwrap();
        let phi =
            PhaseConfiguration::new(CVec::from_element(1, C64::from_polar(1.0, 1.234))).unwrap();
        let eff = effective_covariance(&stats, &phi, 0).unwrap();
        let expect = c_d + tbar.norm_sqr() * c_r;
        assert!((eff.matrix[(0, 0)].re - expect).abs() < 1e-12);
        assert!(eff.matrix[(0, 0)].im.abs() < 1e-14);
    }

    #[test]
    fn sample_covariance_matches_closed_form() {
        // entrywise match of the sample covariance of h_eff draws against the
        // closed form, within 3 Monte Carlo standard errors
        let scenario = fixed_scenario(2, 1, 3, 0.5);
        let mut rng = rng_from(5, &[]);
        let stats = synthesize_covariances(&scenario, &mut rng).unwrap();
        let mut phase_rng = rng_from(6, &[]);
        let phi = PhaseConfiguration::random(3, &mut phase_rng);
        let closed = effective_covariance(&stats, &phi, 0).unwrap().matrix;

        let n_draws = 200_000;
        let m = 2;
        let mut mean = CMat::zeros(m, m);
        let mut sq_re = nalgebra::DMatrix::<f64>::zeros(m, m);
        let mut sq_im = nalgebra::DMatrix::<f64>::zeros(m, m);
        let mut draw_rng = rng_from(7, &[]);
        for _ in 0..n_draws {
            let real = sample_channels(&stats, &phi, &mut draw_rng).unwrap();
            let h = &real.h_eff[0];
            let outer = h * h.adjoint();
            for i in 0..m {
                for j in 0..m {
                    mean[(i, j)] += outer[(i, j)];
                    sq_re[(i, j)] += outer[(i, j)].re * outer[(i, j)].re;
                    sq_im[(i, j)] += outer[(i, j)].im * outer[(i, j)].im;
                }
            }
        }
        let nf = n_draws as f64;
        mean /= c(nf, 0.0);
        for i in 0..m {
            for j in 0..m {
                let var_re = (sq_re[(i, j)] / nf - mean[(i, j)].re.powi(2)).max(0.0);
                let var_im = (sq_im[(i, j)] / nf - mean[(i, j)].im.powi(2)).max(0.0);
                let se_re = (var_re / nf).sqrt();
                let se_im = (var_im / nf).sqrt();
                let d = mean[(i, j)] - closed[(i, j)];
                assert!(
                    d.re.abs() <= 3.0 * se_re.max(1e-12),
                    "entry ({i},{j}) re off by {} > 3se {}",
                    d.re.abs(),
                    3.0 * se_re
                );
                assert!(
                    d.im.abs() <= 3.0 * se_im.max(1e-12),
                    "entry ({i},{j}) im off by {} > 3se {}",
                    d.im.abs(),
                    3.0 * se_im
                );
            }
        }
    }

    #[test]
    fn deterministic_mean_when_delta_zero() {
        let scenario = fixed_scenario(3, 2, 4, 0.0);
        let mut rng = rng_from(8, &[]);
        let stats = synthesize_covariances(&scenario, &mut rng).unwrap();
        let phi = PhaseConfiguration::ones(4);
        let real = sample_channels(&stats, &phi, &mut rng).unwrap();
        assert!((&real.t - stats.t_bar()).norm() < 1e-14);
    }

    #[test]
    fn identity_covariance_norm_moment() {
        // C_d = I_M: E||h_d||^2 = M, each |h_i|^2 is Exp(1) so Var = M
        let m = 4;
        let dims = SystemDims::new(m, 1, 0).unwrap();
        let stats = ChannelStatistics::new(
            dims,
            0.0,
            vec![CMat::identity(m, m)],
            vec![CMat::zeros(0, 0)],
            CMat::zeros(0, m),
            CMat::zeros(0, 0),
            CMat::identity(m, m),
        )
        .unwrap();
        let phi = PhaseConfiguration::ones(0);
        let n_draws = 100_000;
        let mut rng = rng_from(9, &[]);
        let mut acc = 0.0;
        for _ in 0..n_draws {
            let real = sample_channels(&stats, &phi, &mut rng).unwrap();
            acc += real.h_d[0].norm_squared();
        }
        let mean = acc / n_draws as f64;
        let se = (m as f64 / n_draws as f64).sqrt();
        assert!((mean - m as f64).abs() < 3.0 * se, "mean {mean}, expected {m} +- {}", 3.0 * se);
    }

    #[test]
    fn no_ris_effective_channel_is_direct() {
        let scenario = fixed_scenario(3, 2, 0, 0.0);
        let mut rng = rng_from(10, &[]);
        let stats = synthesize_covariances(&scenario, &mut rng).unwrap();
        let phi = PhaseConfiguration::ones(0);
        let real = sample_channels(&stats, &phi, &mut rng).unwrap();
        for k in 0..2 {
            assert_eq!(real.h_eff[k], real.h_d[k]);
        }
    }

    #[test]
    fn third_term_invariant_under_global_phase() {
        let scenario = fixed_scenario(2, 1, 5, 0.6);
        let mut rng = rng_from(11, &[]);
        let stats = synthesize_covariances(&scenario, &mut rng).unwrap();
        let phi = PhaseConfiguration::random(5, &mut rng);
        let base = qform(stats.x(0), phi.vector());
        for alpha in [0.3, 1.9, -2.4] {
            let rot = C64::from_polar(1.0, alpha);
            let rotated =
                PhaseConfiguration::new(CVec::from_fn(5, |i, _| phi.vector()[i] * rot)).unwrap();
            let val = qform(stats.x(0), rotated.vector());
            assert!((val - base).abs() < 1e-9 * base.abs().max(1.0));
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        let scenario = fixed_scenario(3, 2, 6, 0.5);
        let mut rng = rng_from(12, &[]);
        let stats = synthesize_covariances(&scenario, &mut rng).unwrap();
        let phi = PhaseConfiguration::ones(6);
        let r1 = sample_channels(&stats, &phi, &mut rng_from(13, &[])).unwrap();
        let r2 = sample_channels(&stats, &phi, &mut rng_from(13, &[])).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn effective_covariance_is_hermitian_psd() {
        let scenario = fixed_scenario(4, 3, 6, 0.5);
        let mut rng = rng_from(14, &[]);
        let stats = synthesize_covariances(&scenario, &mut rng).unwrap();
        for trial in 0..8 {
            let phi = PhaseConfiguration::random(6, &mut rng);
            for k in 0..3 {
                let eff = effective_covariance(&stats, &phi, k).unwrap();
                assert!(crate::linalg::max_asymmetry(&eff.matrix) < 1e-10);
                let min_eig = crate::linalg::min_eigenvalue(&eff.matrix);
                let trace = real_trace(&eff.matrix);
                assert!(
                    min_eig >= -1e-10 * trace,
                    "trial {trial} user {k}: min eig {min_eig}, trace {trace}"
                );
                // root reproduces the matrix
                let back = &eff.sqrt * eff.sqrt.adjoint();
                assert!((&back - &eff.matrix).norm() < 1e-9 * trace.max(1.0));
            }
        }
    }
}
