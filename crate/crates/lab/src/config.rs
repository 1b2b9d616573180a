//! Experiment configuration: one JSON document per experiment.
//!
//! Relative file references (MDP and feature tables) are resolved against the
//! directory holding the configuration file. The configuration hash is the
//! SHA-256 of the parsed document re-serialized with a fixed field order, so
//! whitespace and key order in the source file do not change it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use saclab_core::simulate::{InitialDistribution, SamplingMode};

use crate::error::{LabError, LabResult};

/// Environment variable naming the directory that `output_dir` is relative to.
pub const OUTPUT_ROOT_ENV: &str = "SACLAB_OUTPUT_ROOT";

/// Checkpoint density used when `checkpoint_every` is omitted: about this
/// many checkpoints per run.
pub const DEFAULT_CHECKPOINTS_PER_RUN: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub mdp: MdpSource,
    pub features: FeatureSpec,
    #[serde(default)]
    pub init: InitSpec,
    pub mode: Mode,
    /// Horizons `T`, one experiment cell each.
    pub horizons: Vec<u64>,
    /// Actor/critic step ratio for `run`.
    #[serde(default)]
    pub c: StepRatioSetting,
    /// Ratio grid for `sweep`; falls back to `[c]` when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub c_values: Vec<StepRatioSetting>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Steps between checkpoints; `max(1, T/4096)` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_every: Option<u64>,
    /// Critic radius; the worst-case `2U_r/λ` over the probe set when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_omega: Option<f64>,
    #[serde(default)]
    pub initial_state: InitialStateSpec,
    #[serde(default = "default_one")]
    pub mu_refresh_every: u64,
    #[serde(default)]
    pub probes: ProbeSpec,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_seeds() -> usize {
    32
}

fn default_one() -> u64 {
    1
}

fn default_output_dir() -> String {
    "saclab-out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MdpSource {
    /// The two-state, two-action fixture.
    TwoState,
    Inline {
        transition: Vec<Vec<Vec<f64>>>,
        reward: Vec<Vec<f64>>,
        #[serde(default = "default_u_r")]
        u_r: f64,
    },
    File {
        path: PathBuf,
    },
    Garnet {
        n_states: usize,
        n_actions: usize,
        branching: usize,
        seed: u64,
        #[serde(default = "default_u_r")]
        u_r: f64,
        #[serde(default = "default_attempts")]
        max_attempts: usize,
    },
}

fn default_u_r() -> f64 {
    1.0
}

fn default_attempts() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureSpec {
    CenteredOnehot,
    Onehot,
    RandomBounded { dim: usize, seed: u64 },
    Inline { table: Vec<Vec<f64>> },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<f64>>,
    #[serde(default)]
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Markovian,
    Iid,
}

impl From<Mode> for SamplingMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Markovian => SamplingMode::Markovian,
            Mode::Iid => SamplingMode::Iid,
        }
    }
}

/// `"auto"` (the threshold value) or a positive number.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Value", into = "serde_json::Value")]
pub enum StepRatioSetting {
    #[default]
    Auto,
    Fixed(f64),
}

impl TryFrom<serde_json::Value> for StepRatioSetting {
    type Error = String;

    fn try_from(v: serde_json::Value) -> Result<Self, String> {
        match v {
            serde_json::Value::String(s) if s == "auto" => Ok(StepRatioSetting::Auto),
            serde_json::Value::Number(n) => match n.as_f64() {
                Some(c) if c > 0.0 && c.is_finite() => Ok(StepRatioSetting::Fixed(c)),
                _ => Err(format!("step ratio must be positive, got {n}")),
            },
            other => Err(format!("step ratio must be \"auto\" or a number, got {other}")),
        }
    }
}

impl From<StepRatioSetting> for serde_json::Value {
    fn from(c: StepRatioSetting) -> Self {
        match c {
            StepRatioSetting::Auto => "auto".into(),
            StepRatioSetting::Fixed(c) => c.into(),
        }
    }
}

impl StepRatioSetting {
    pub fn label(&self) -> String {
        match self {
            StepRatioSetting::Auto => "auto".into(),
            StepRatioSetting::Fixed(c) => format!("{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStateSpec {
    #[default]
    Uniform,
    State(usize),
    Weights(Vec<f64>),
}

impl From<&InitialStateSpec> for InitialDistribution {
    fn from(spec: &InitialStateSpec) -> Self {
        match spec {
            InitialStateSpec::Uniform => InitialDistribution::Uniform,
            InitialStateSpec::State(s) => InitialDistribution::State(*s),
            InitialStateSpec::Weights(w) => InitialDistribution::Weights(w.clone()),
        }
    }
}

/// Policy parameters at which `λ`, `m`, `ρ` and `ε_app` are probed: `θ₀`
/// plus `count` random parameters with entries uniform in `[−scale, scale]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub count: usize,
    pub scale: f64,
    pub seed: u64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            count: 4,
            scale: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Longest horizon of the total-variation probe behind `(m, ρ)`.
    pub mixing_tau_max: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { mixing_tau_max: 64 }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> LabResult<()> {
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(LabError::config("horizons must be a nonempty list of positive integers"));
        }
        if self.seeds == 0 {
            return Err(LabError::config("seeds must be at least 1"));
        }
        if self.checkpoint_every == Some(0) || self.mu_refresh_every == 0 {
            return Err(LabError::config("checkpoint_every and mu_refresh_every must be at least 1"));
        }
        if let Some(u) = self.u_omega {
            if !(u > 0.0 && u.is_finite()) {
                return Err(LabError::config(format!("u_omega must be positive, got {u}")));
            }
        }
        if !(self.probes.scale >= 0.0 && self.probes.scale.is_finite()) {
            return Err(LabError::config("probes.scale must be finite and nonnegative"));
        }
        if self.tolerances.mixing_tau_max == 0 {
            return Err(LabError::config("tolerances.mixing_tau_max must be at least 1"));
        }
        Ok(())
    }

    pub fn checkpoint_every_for(&self, t_total: u64) -> u64 {
        self.checkpoint_every
            .unwrap_or_else(|| (t_total / DEFAULT_CHECKPOINTS_PER_RUN).max(1))
    }

    pub fn ratio_grid(&self) -> Vec<StepRatioSetting> {
        if self.c_values.is_empty() {
            vec![self.c]
        } else {
            self.c_values.clone()
        }
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configuration serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// A configuration together with the directory its relative paths refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
    pub hash: String,
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str_in(&text, base_dir).map_err(|e| match e {
            LabError::Config(msg) => LabError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_str_in(text: &str, base_dir: PathBuf) -> LabResult<Self> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| LabError::config(e.to_string()))?;
        Self::new(config, base_dir)
    }

    pub fn new(config: ExperimentConfig, base_dir: PathBuf) -> LabResult<Self> {
        config.validate()?;
        let hash = config.hash();
        Ok(Self { config, base_dir, hash })
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}

/// Output directory for a configuration: `root/output_dir`, where `root` is
/// the explicit override, else `$SACLAB_OUTPUT_ROOT`, else the working
/// directory.
pub fn output_dir(config: &ExperimentConfig, root: Option<&Path>) -> PathBuf {
    let root = root
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    root.join(&config.output_dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "mdp": {"kind": "two_state"},
        "features": {"kind": "inline", "table": [[1.0], [-1.0]]},
        "mode": "iid",
        "horizons": [4096]
    }"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = LoadedConfig::from_str_in(MINIMAL, PathBuf::new()).unwrap().config;
        assert_eq!(cfg.seeds, 32);
        assert_eq!(cfg.c, StepRatioSetting::Auto);
        assert_eq!(cfg.ratio_grid(), vec![StepRatioSetting::Auto]);
        assert_eq!(cfg.checkpoint_every_for(4096), 1);
        assert_eq!(cfg.checkpoint_every_for(65536), 16);
        assert_eq!(cfg.initial_state, InitialStateSpec::Uniform);
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = LoadedConfig::from_str_in(MINIMAL, PathBuf::new()).unwrap();
        let compact: String = MINIMAL.split_whitespace().collect();
        let b = LoadedConfig::from_str_in(&compact, PathBuf::new()).unwrap();
        assert_eq!(a.hash, b.hash);
        let mut changed = a.config.clone();
        changed.master_seed = 1;
        assert_ne!(changed.hash(), a.hash);
    }

    #[test]
    fn ratio_settings_parse() {
        let v: Vec<StepRatioSetting> = serde_json::from_str(r#"["auto", 0.5]"#).unwrap();
        assert_eq!(v, vec![StepRatioSetting::Auto, StepRatioSetting::Fixed(0.5)]);
        assert!(serde_json::from_str::<StepRatioSetting>("-1").is_err());
        assert!(serde_json::from_str::<StepRatioSetting>(r#""fast""#).is_err());
    }

    #[test]
    fn bad_configs_are_config_errors() {
        let no_t = MINIMAL.replace("[4096]", "[]");
        let err = LoadedConfig::from_str_in(&no_t, PathBuf::new()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let unknown = MINIMAL.replace("\"mode\"", "\"colour\": 1, \"mode\"");
        assert_eq!(LoadedConfig::from_str_in(&unknown, PathBuf::new()).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn output_root_override_wins() {
        let cfg = LoadedConfig::from_str_in(MINIMAL, PathBuf::new()).unwrap().config;
        assert_eq!(output_dir(&cfg, Some(Path::new("/tmp/x"))), PathBuf::from("/tmp/x/saclab-out"));
    }
}
