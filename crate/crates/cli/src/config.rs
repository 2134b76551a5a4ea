//! Pipeline configuration files.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use geochart_core::chart::{MdsConfig, Method, SammonConfig, TrainConfig};
use geochart_core::sim::{EnvironmentSpec, RadioConfig, TrajectorySpec};

/// Where the environment comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnvironmentSource {
    /// `"industrial_hall"` or `"open_area"`.
    Preset(String),
    File { file: PathBuf },
    Inline(EnvironmentSpec),
}

impl Default for EnvironmentSource {
    fn default() -> Self {
        EnvironmentSource::Preset("industrial_hall".into())
    }
}

impl EnvironmentSource {
    /// Relative file paths resolve against `base`.
    pub fn resolve(&self, base: Option<&Path>) -> Result<EnvironmentSpec> {
        let env = match self {
            EnvironmentSource::Preset(name) => match name.as_str() {
                "industrial_hall" => EnvironmentSpec::industrial_hall(),
                "open_area" => EnvironmentSpec::open_area(20.0, 20.0),
                other => bail!("unknown environment preset {other:?}"),
            },
            EnvironmentSource::File { file } => {
                let path = match base {
                    Some(b) if file.is_relative() => b.join(file),
                    _ => file.clone(),
                };
                let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                parse_structured(&path, &text)?
            }
            EnvironmentSource::Inline(spec) => spec.clone(),
        };
        env.validate()?;
        Ok(env)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    pub k: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self { k: 15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// CT/TW neighbourhood size; `None` uses 5% of the split size.
    pub k: Option<usize>,
    /// Training neighbours used to place test points of non-parametric charts.
    pub out_of_sample_k: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { k: None, out_of_sample_k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    /// Number of random pairs.
    pub pairs: usize,
    /// Width of the d_euc bins in metres.
    pub bin_width: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self { pairs: 20_000, bin_width: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub environment: EnvironmentSource,
    pub radio: RadioConfig,
    pub train_trajectory: TrajectorySpec,
    pub test_trajectory: TrajectorySpec,
    pub graph: GraphConfig,
    pub train: TrainConfig,
    pub mds: MdsConfig,
    pub sammon: SammonConfig,
    pub methods: Vec<Method>,
    pub eval: EvalConfig,
    pub study: StudyConfig,
    /// Extra samples kept after the latest aligned arrival in the training set.
    pub window_headroom: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            environment: EnvironmentSource::default(),
            radio: RadioConfig { cir_length: 96, ..RadioConfig::default() },
            train_trajectory: TrajectorySpec::Grid { spacing: 0.41, dt: 0.2, margin: 1.0 },
            test_trajectory: TrajectorySpec::RandomWaypoint { n: 500, speed: 1.5, dt: 0.2, margin: 1.0 },
            graph: GraphConfig::default(),
            train: TrainConfig::default(),
            mds: MdsConfig::default(),
            sammon: SammonConfig::default(),
            methods: Method::ALL.to_vec(),
            eval: EvalConfig::default(),
            study: StudyConfig::default(),
            window_headroom: 32,
            seed: 0,
            out: PathBuf::from("run"),
        }
    }
}

fn parse_structured<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T> {
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if is_toml {
        toml::from_str(text).with_context(|| format!("parsing {}", path.display()))
    } else {
        serde_json::from_str(text).with_context(|| format!("parsing {}", path.display()))
    }
}

impl PipelineConfig {
    /// Read a JSON or TOML file, chosen by extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: PipelineConfig = parse_structured(path, &text)?;
        if let EnvironmentSource::File { file } = &mut cfg.environment {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    /// Apply a `--seed` override; the encoder seed follows the run seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.train.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.methods.is_empty(), "at least one method is required");
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        ensure!(seen.len() == self.methods.len(), "methods listed twice");
        ensure!(self.graph.k >= 1, "graph.k must be at least 1");
        ensure!(self.eval.out_of_sample_k >= 1, "eval.out_of_sample_k must be at least 1");
        ensure!(self.study.bin_width > 0.0 && self.study.bin_width.is_finite(), "study.bin_width must be positive");
        if let EnvironmentSource::File { file } = &self.environment {
            ensure!(file.exists(), "environment file {} does not exist", file.display());
        }
        let env = self.environment.resolve(None)?;
        self.radio.validate(&env)?;
        self.train.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json_and_toml() {
        let cfg = PipelineConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<PipelineConfig>(&json).unwrap(), cfg);
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<PipelineConfig>(&text).unwrap(), cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg: PipelineConfig = serde_json::from_str(r#"{"methods": ["pca"], "seed": 7}"#).unwrap();
        assert_eq!(cfg.methods, vec![Method::Pca]);
        assert_eq!(cfg.graph.k, 15);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn empty_method_list_is_rejected() {
        let cfg = PipelineConfig { methods: vec![], ..PipelineConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn missing_environment_file_is_rejected() {
        let cfg = PipelineConfig {
            environment: EnvironmentSource::File { file: "/nonexistent/env.json".into() },
            ..PipelineConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_preset_is_rejected() {
        assert!(EnvironmentSource::Preset("cave".into()).resolve(None).is_err());
    }
}
