//! Experiment configuration read from TOML.

use crate::code::NestedLatticeCode;
use crate::embed::CrcSpec;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SuOneshot,
    SuRetry,
    AlphaSearch,
    Cf,
    Bound,
    Pud,
    OptimizeCrc,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::SuOneshot => "su-oneshot",
            ExperimentKind::SuRetry => "su-retry",
            ExperimentKind::AlphaSearch => "alpha-search",
            ExperimentKind::Cf => "cf",
            ExperimentKind::Bound => "bound",
            ExperimentKind::Pud => "pud",
            ExperimentKind::OptimizeCrc => "optimize-crc",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeConfig {
    /// `z<n>`, `a2`, `e8`, `bw16`, or a path given by `matrix_file`.
    #[serde(default)]
    pub lattice: Option<String>,
    #[serde(default)]
    pub matrix_file: Option<PathBuf>,
    /// Bits per dimension; sets the hypercube edge.
    #[serde(default)]
    pub rate: Option<f64>,
    /// Hypercube edge, as an alternative to `rate`.
    #[serde(default)]
    pub edge: Option<f64>,
}

impl CodeConfig {
    pub fn lattice(&self, base: &Path) -> Result<Lattice> {
        match (&self.lattice, &self.matrix_file) {
            (Some(name), None) => Lattice::by_name(name),
            (None, Some(file)) => Lattice::from_matrix_file(&base.join(file)),
            _ => Err(Error::Config("give exactly one of code.lattice and code.matrix_file".into())),
        }
    }

    pub fn build(&self, base: &Path) -> Result<NestedLatticeCode> {
        let lattice = self.lattice(base)?;
        match (self.rate, self.edge) {
            (Some(rate), None) => NestedLatticeCode::with_rate(lattice, rate),
            (None, Some(edge)) => NestedLatticeCode::hypercube(lattice, edge),
            _ => Err(Error::Config("give exactly one of code.rate and code.edge".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryConfig {
    /// Decoding levels, the first being MMSE scaling alone.
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_bounds")]
    pub bounds: (f64, f64),
    /// Candidate list from `search-alpha`; searched on the fly if absent.
    #[serde(default)]
    pub candidates: Option<PathBuf>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_min_conditioned")]
    pub min_conditioned: usize,
    #[serde(default = "default_target_conditioned")]
    pub target_conditioned: usize,
    #[serde(default = "default_max_draws")]
    pub max_draws: u64,
    /// Build lists from this many importance-sampled draws instead of the
    /// plain conditioned search.
    #[serde(default)]
    pub importance_draws: Option<u64>,
    #[serde(default = "default_plain_fraction")]
    pub plain_fraction: f64,
    /// Genie decoder: evenly spaced scalings tried in `bounds`.
    #[serde(default = "default_genie_points")]
    pub genie_points: usize,
}

fn default_levels() -> usize {
    2
}
fn default_bounds() -> (f64, f64) {
    (0.5, 1.5)
}
fn default_grid() -> usize {
    400
}
fn default_min_conditioned() -> usize {
    2000
}
fn default_target_conditioned() -> usize {
    20_000
}
fn default_max_draws() -> u64 {
    200_000_000
}
fn default_genie_points() -> usize {
    200
}

impl Default for RetryConfig {
    fn default() -> Self {
        RetryConfig {
            levels: default_levels(),
            bounds: default_bounds(),
            candidates: None,
            grid: default_grid(),
            min_conditioned: default_min_conditioned(),
            target_conditioned: default_target_conditioned(),
            max_draws: default_max_draws(),
            importance_draws: None,
            plain_fraction: default_plain_fraction(),
            genie_points: default_genie_points(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfConfig {
    #[serde(default = "default_users")]
    pub users: usize,
    /// Coefficient candidates tried by the relay.
    #[serde(default = "default_levels")]
    pub attempts: usize,
}

fn default_users() -> usize {
    2
}

impl Default for CfConfig {
    fn default() -> Self {
        CfConfig { users: default_users(), attempts: default_levels() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    /// Covering radius; the lattice's own value when absent.
    #[serde(default)]
    pub covering_radius: Option<f64>,
    /// Also simulate the genie decoder over `retry.bounds`.
    #[serde(default)]
    pub simulate_genie: bool,
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig { covering_radius: None, simulate_genie: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PudConfig {
    pub lengths: Vec<usize>,
    /// Calibrate the SNR to this word error rate when `snr_db` is empty.
    #[serde(default)]
    pub target_wer: Option<f64>,
    #[serde(default = "default_calibration_trials")]
    pub calibration_trials: u64,
    /// Decoding errors to collect before stopping.
    #[serde(default = "default_target_errors")]
    pub target_errors: u64,
}

fn default_calibration_trials() -> u64 {
    200_000
}
fn default_target_errors() -> u64 {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub target: f64,
    pub lengths: Vec<usize>,
    /// `kissing` or `parity`.
    #[serde(default = "default_estimator")]
    pub estimator: String,
    /// SNR points around the target, spaced by `step_db`.
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_step")]
    pub step_db: f64,
    /// Importance-sampled draws per SNR point.
    #[serde(default = "default_draws")]
    pub draws: u64,
    #[serde(default = "default_plain_fraction")]
    pub plain_fraction: f64,
    /// Score scalings on draws not used to choose them.
    #[serde(default = "default_holdout")]
    pub holdout: bool,
}

fn default_holdout() -> bool {
    true
}

fn default_estimator() -> String {
    "kissing".into()
}
fn default_points() -> usize {
    5
}
fn default_step() -> f64 {
    0.25
}
fn default_draws() -> u64 {
    100_000
}
fn default_plain_fraction() -> f64 {
    0.2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Stop an SNR point after this many errors.
    #[serde(default)]
    pub max_errors: Option<u64>,
    #[serde(default)]
    pub snr_db: Vec<f64>,
    pub code: CodeConfig,
    /// CRC polynomial with its leading term, e.g. `0xB`.
    #[serde(default)]
    pub crc: Option<String>,
    #[serde(default)]
    pub retry: RetryConfig,
    #[serde(default)]
    pub cf: CfConfig,
    #[serde(default)]
    pub bound: BoundConfig,
    #[serde(default)]
    pub pud: Option<PudConfig>,
    #[serde(default)]
    pub optimize: Option<OptimizeConfig>,
}

fn default_trials() -> u64 {
    100_000
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        let needs_snr = !matches!(self.kind, ExperimentKind::Pud | ExperimentKind::OptimizeCrc);
        if needs_snr && self.snr_db.is_empty() {
            return Err(Error::Config("snr_db must list at least one point".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("snr_db entries must be finite".into()));
        }
        if self.retry.levels == 0 || self.cf.attempts == 0 || self.cf.users == 0 {
            return Err(Error::Config("levels, attempts and users must be positive".into()));
        }
        if !(self.retry.bounds.0 < self.retry.bounds.1) {
            return Err(Error::Config("retry.bounds must be increasing".into()));
        }
        match self.kind {
            ExperimentKind::Pud => {
                let pud = self.pud.as_ref().ok_or_else(|| Error::Config("pud experiment needs a [pud] table".into()))?;
                if self.snr_db.is_empty() && pud.target_wer.is_none() {
                    return Err(Error::Config("pud needs snr_db or pud.target_wer".into()));
                }
            }
            ExperimentKind::OptimizeCrc => {
                let opt = self.optimize.as_ref().ok_or_else(|| Error::Config("optimize-crc needs an [optimize] table".into()))?;
                if !(opt.target > 0.0 && opt.target < 1.0) {
                    return Err(Error::Config("optimize.target must lie in (0, 1)".into()));
                }
                if opt.estimator != "kissing" && opt.estimator != "parity" {
                    return Err(Error::Config(format!("unknown estimator {:?}", opt.estimator)));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn crc(&self) -> Result<Option<CrcSpec>> {
        self.crc.as_deref().map(CrcSpec::parse).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
kind = "su-oneshot"
seed = 7
trials = 1000
snr_db = [17.0]
[code]
lattice = "e8"
rate = 2.0
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = SimConfig::from_toml(BASIC).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::SuOneshot);
        assert_eq!(cfg.retry.levels, 2);
        let code = cfg.code.build(Path::new(".")).unwrap();
        assert_eq!(code.moduli(), &[8, 4, 4, 4, 4, 4, 4, 2]);
    }

    #[test]
    fn rejects_bad_configs() {
        let zero = BASIC.replace("trials = 1000", "trials = 0");
        assert!(matches!(SimConfig::from_toml(&zero), Err(Error::Config(_))));
        let empty = BASIC.replace("snr_db = [17.0]", "snr_db = []");
        assert!(SimConfig::from_toml(&empty).is_err());
        let no_seed = BASIC.replace("seed = 7", "");
        assert!(SimConfig::from_toml(&no_seed).is_err());
        let typo = BASIC.replace("trials = 1000", "trails = 1000");
        assert!(SimConfig::from_toml(&typo).is_err());
        let unknown = BASIC.replace("\"e8\"", "\"e9\"");
        let cfg = SimConfig::from_toml(&unknown).unwrap();
        assert!(cfg.code.build(Path::new(".")).is_err());
        let pud = BASIC.replace("su-oneshot", "pud");
        assert!(SimConfig::from_toml(&pud).is_err());
    }
}
