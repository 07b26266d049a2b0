//! TOML run configuration. Every key is optional; unknown keys are rejected.
//!
//! ```toml
//! kernel = "gaussian"          # gaussian | laplacian | brownian_distance
//! lag_kernel = "laplacian"     # kernel on X_{t-m}; defaults to `kernel`
//! bandwidth = "median"         # or a fixed positive number
//! max_lag = 3                  # M
//! bootstrap = 499              # B
//! level = 0.05
//! seed = 42
//! threads = 0                  # 0 lets the runtime choose
//! include_replicates = false
//! model = "garch11"            # diagnose only: garch11 | iid_scale
//! output = "results"
//!
//! [simulate]
//! preset = "table2"
//! replications = 200           # overrides the preset's R
//! bootstrap = 300              # overrides the preset's B
//! ```

use std::path::{Path, PathBuf};

use autohsic::simulation::{ExperimentConfig, PRESET_NAMES};
use autohsic::{Bandwidth, KernelSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    #[default]
    Gaussian,
    Laplacian,
    BrownianDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BandwidthSetting {
    Fixed(f64),
    Policy(BandwidthPolicy),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthPolicy {
    Median,
}

impl Default for BandwidthSetting {
    fn default() -> Self {
        BandwidthSetting::Policy(BandwidthPolicy::Median)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    #[default]
    Garch11,
    IidScale,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub preset: Option<String>,
    pub replications: Option<usize>,
    pub bootstrap: Option<usize>,
    /// Explicit experiment cells, run after any preset.
    pub experiments: Vec<ExperimentConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub kernel: KernelFamily,
    pub lag_kernel: Option<KernelFamily>,
    pub bandwidth: BandwidthSetting,
    pub max_lag: usize,
    pub bootstrap: usize,
    pub level: f64,
    pub seed: u64,
    pub threads: usize,
    pub include_replicates: bool,
    pub model: ModelChoice,
    pub output: Option<PathBuf>,
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kernel: KernelFamily::Gaussian,
            lag_kernel: None,
            bandwidth: BandwidthSetting::default(),
            max_lag: 3,
            bootstrap: 499,
            level: 0.05,
            seed: 0,
            threads: 0,
            include_replicates: false,
            model: ModelChoice::Garch11,
            output: None,
            simulate: SimulateConfig::default(),
        }
    }
}

/// 1-based line of the first `key = ...` assignment in `text`.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        l.trim_start()
            .strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses and validates; `origin` labels error messages.
    pub fn parse(text: &str, origin: &Path) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start].matches('\n').count() + 1)
                .unwrap_or(1);
            CliError::at_line(origin, line, e.message())
        })?;
        cfg.validate().map_err(|(key, msg)| match line_of(text, key) {
            Some(line) => CliError::at_line(origin, line, msg),
            None => CliError::config(format!("{}: {msg}", origin.display())),
        })?;
        Ok(cfg)
    }

    /// Checks value ranges; on failure returns the offending key and a message.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.max_lag == 0 {
            return Err(("max_lag", "max_lag (M) must be at least 1".into()));
        }
        if self.bootstrap == 0 {
            return Err(("bootstrap", "bootstrap (B) must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(("level", format!("level {} must lie in (0, 1)", self.level)));
        }
        if let BandwidthSetting::Fixed(g) = self.bandwidth {
            if !(g.is_finite() && g > 0.0) {
                return Err(("bandwidth", format!("fixed bandwidth {g} must be finite and positive")));
            }
        }
        let sim = &self.simulate;
        if let Some(name) = &sim.preset {
            if !PRESET_NAMES.contains(&name.as_str()) {
                return Err(("preset", unknown_preset(name)));
            }
        }
        if sim.replications == Some(0) {
            return Err(("replications", "replications (R) must be at least 1".into()));
        }
        if sim.bootstrap == Some(0) {
            return Err(("bootstrap", "bootstrap (B) must be at least 1".into()));
        }
        for e in &sim.experiments {
            e.validate().map_err(|err| ("experiments", err.to_string()))?;
        }
        Ok(())
    }

    fn spec(&self, family: KernelFamily) -> KernelSpec {
        let bandwidth = match self.bandwidth {
            BandwidthSetting::Fixed(g) => Bandwidth::Fixed(g),
            BandwidthSetting::Policy(BandwidthPolicy::Median) => Bandwidth::Median,
        };
        match family {
            KernelFamily::Gaussian => KernelSpec::Gaussian { bandwidth },
            KernelFamily::Laplacian => KernelSpec::Laplacian { bandwidth },
            KernelFamily::BrownianDistance => KernelSpec::BrownianDistance,
        }
    }

    /// Kernel specs for X_t and X_{t-m}.
    pub fn kernels(&self) -> (KernelSpec, KernelSpec) {
        (self.spec(self.kernel), self.spec(self.lag_kernel.unwrap_or(self.kernel)))
    }
}

pub fn unknown_preset(name: &str) -> String {
    format!("unknown preset {name:?}; known presets: {}", PRESET_NAMES.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> CliResult<RunConfig> {
        RunConfig::parse(s, Path::new("run.toml"))
    }

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn full_document() {
        let cfg = parse(
            r#"
kernel = "laplacian"
lag_kernel = "brownian_distance"
bandwidth = 1.5
max_lag = 6
bootstrap = 99
level = 0.1
seed = 7
model = "iid_scale"

[simulate]
preset = "table1"
replications = 5

[[simulate.experiments]]
dgp = { kind = "iid_normal", d = 2 }
sample_size = 50
replications = 3
bootstrap = 9
level = 0.05
single_lags = [1]
portmanteau_lags = []
kernels = [{ k = { family = "gaussian", bandwidth = "median" }, l = { family = "brownian_distance" } }]
master_seed = 1
"#,
        )
        .unwrap();
        let (k, l) = cfg.kernels();
        assert_eq!(k, KernelSpec::Laplacian { bandwidth: Bandwidth::Fixed(1.5) });
        assert_eq!(l, KernelSpec::BrownianDistance);
        assert_eq!(cfg.simulate.experiments.len(), 1);
        assert_eq!(cfg.model, ModelChoice::IidScale);
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let err = parse("max_lag = 2\ncolour = \"red\"\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("run.toml:2:"), "{err}");
        let err = parse("[simulate]\npreset = \"table1\"\nfoo = 1\n").unwrap_err();
        assert!(err.to_string().contains("run.toml:3:"), "{err}");
    }

    #[test]
    fn invalid_values_name_their_line() {
        let err = parse("seed = 1\nmax_lag = 0\n").unwrap_err();
        assert!(err.to_string().contains("run.toml:2:"), "{err}");
        assert!(parse("level = 1.0").is_err());
        assert!(parse("bandwidth = -1.0").is_err());
        assert!(parse("bandwidth = \"mean\"").is_err());
        assert!(parse("[simulate]\npreset = \"table99\"").is_err());
    }
}
