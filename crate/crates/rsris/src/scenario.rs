//! Scenario configuration: system dimensions plus the parametric description
//! of every link's second-order statistics.
//!
//! A scenario either pins each user's path clusters explicitly (`[[user]]`
//! tables) or gives uniform ranges (`[ranges]`) from which user positions and
//! path powers are drawn anew for every covariance realization. Angles are
//! degrees in the file, powers are linear. Keys carrying decibel values are
//! suffixed `_dB` everywhere in this crate to avoid unit confusion.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Current scenario schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// One propagation path cluster: nominal angle, Laplacian angular spread and
/// linear power.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PathCluster {
    pub angle_deg: f64,
    pub spread_deg: f64,
    pub power: f64,
}

/// Explicit per-user link description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct UserSpec {
    /// Clusters of the direct BS-user link (covariance over the BS array).
    pub direct: Vec<PathCluster>,
    /// Clusters of the RIS-user link (covariance over the RIS array).
    pub ris: Vec<PathCluster>,
}

/// BS-RIS segment: deterministic LoS geometry and the Kronecker correlation
/// of the random component.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RisSpec {
    /// LoS departure angle at the BS array (degrees).
    pub los_angle_bs_deg: f64,
    /// LoS arrival angle at the RIS array (degrees).
    pub los_angle_ris_deg: f64,
    /// Per-entry power of the LoS matrix before the LoS-strength weighting.
    pub los_entry_gain: f64,
    pub corr_angle_ris_deg: f64,
    pub corr_spread_ris_deg: f64,
    pub corr_angle_tx_deg: f64,
    pub corr_spread_tx_deg: f64,
}

/// Uniform ranges used to draw user link parameters per covariance
/// realization when explicit `[[user]]` tables are absent.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct UserRanges {
    pub direct_paths: usize,
    pub direct_angle_deg: [f64; 2],
    pub direct_spread_deg: [f64; 2],
    /// Range of the total direct-link power (split across paths).
    pub direct_power: [f64; 2],
    pub ris_paths: usize,
    pub ris_angle_deg: [f64; 2],
    pub ris_spread_deg: [f64; 2],
    /// Range of the total RIS-user link power (split across paths).
    pub ris_power: [f64; 2],
}

/// Full scenario file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    /// LoS-strength factor of the BS-RIS channel, in [0, 1].
    pub delta: f64,
    pub seed: u64,
    /// Explicit users; when empty, `ranges` must be present.
    #[serde(default, rename = "user")]
    pub users: Vec<UserSpec>,
    /// BS-RIS segment; required when N > 0.
    pub ris: Option<RisSpec>,
    pub ranges: Option<UserRanges>,
}

impl ScenarioConfig {
    /// Structural validation (dimensions, delta range, path powers).
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {})",
                self.schema_version, SCHEMA_VERSION
            )));
        }
        if self.m == 0 || self.k == 0 {
            return Err(Error::Config("M and K must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::Config(format!(
                "delta must lie in [0, 1], got {}",
                self.delta
            )));
        }
        if self.n > 0 && self.ris.is_none() {
            return Err(Error::Config("N > 0 requires a [ris] section".into()));
        }
        if let Some(ris) = &self.ris {
            if ris.los_entry_gain < 0.0 {
                return Err(Error::Config("ris.los_entry_gain must be >= 0".into()));
            }
        }
        if self.users.is_empty() && self.ranges.is_none() {
            return Err(Error::Config(
                "scenario needs either [[user]] tables or a [ranges] section".into(),
            ));
        }
        if !self.users.is_empty() && self.users.len() != self.k {
            return Err(Error::Config(format!(
                "expected {} [[user] ] tables, got {}",
                self.k,
                self.users.len()
            )));
        }
        for (k, user) in self.users.iter().enumerate() {
            for cluster in user.direct.iter().chain(user.ris.iter()) {
                if cluster.power <= 0.0 {
                    return Err(Error::Config(format!(
                        "user {k}: path powers must be positive, got {}",
                        cluster.power
                    )));
                }
                if cluster.spread_deg < 0.0 {
                    return Err(Error::Config(format!(
                        "user {k}: angular spread must be >= 0, got {}",
                        cluster.spread_deg
                    )));
                }
            }
            if user.direct.is_empty() {
                return Err(Error::Config(format!("user {k}: needs >= 1 direct path")));
            }
            if self.n > 0 && user.ris.is_empty() {
                return Err(Error::Config(format!("user {k}: needs >= 1 RIS path")));
            }
        }
        if let Some(r) = &self.ranges {
            for (name, [lo, hi]) in [
                ("direct_angle_deg", r.direct_angle_deg),
                ("direct_spread_deg", r.direct_spread_deg),
                ("direct_power", r.direct_power),
                ("ris_angle_deg", r.ris_angle_deg),
                ("ris_spread_deg", r.ris_spread_deg),
                ("ris_power", r.ris_power),
            ] {
                if lo > hi {
                    return Err(Error::Config(format!("ranges.{name}: lower bound above upper")));
                }
            }
            if r.direct_power[0] <= 0.0 || (self.n > 0 && r.ris_power[0] <= 0.0) {
                return Err(Error::Config("ranges: path powers must be positive".into()));
            }
            if r.direct_paths == 0 {
                return Err(Error::Config("ranges.direct_paths must be >= 1".into()));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Parse(format!("scenario: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    /// Copy of this scenario with the RIS removed (N = 0, direct links kept).
    pub fn without_ris(&self) -> ScenarioConfig {
        let mut out = self.clone();
        out.n = 0;
        out
    }

    /// Desk-scale default used by tests and as a CLI template: K = 3 users,
    /// M = 4 BS antennas, N = 40 RIS elements, weak direct links and a strong
    /// RIS cascade with small angular spread at the surface.
    pub fn desk_default() -> ScenarioConfig {
        ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            m: 4,
            k: 3,
            n: 40,
            delta: 0.4,
            seed: 1,
            users: Vec::new(),
            ris: Some(RisSpec {
                los_angle_bs_deg: 15.0,
                los_angle_ris_deg: -25.0,
                los_entry_gain: 1.0,
                corr_angle_ris_deg: 0.0,
                corr_spread_ris_deg: 4.0,
                corr_angle_tx_deg: 0.0,
                corr_spread_tx_deg: 10.0,
            }),
            ranges: Some(UserRanges {
                direct_paths: 3,
                direct_angle_deg: [-60.0, 60.0],
                direct_spread_deg: [2.0, 8.0],
                direct_power: [0.01, 0.06],
                ris_paths: 2,
                ris_angle_deg: [-60.0, 60.0],
                ris_spread_deg: [1.0, 5.0],
                ris_power: [2.0, 6.0],
            }),
        }
    }
}
