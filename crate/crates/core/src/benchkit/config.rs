//! Declarative benchmark configuration (TOML).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ingest::DatasetSpec;
use super::pipeline::{Candidate, ModelId};
use crate::error::{Error, Result};
use crate::generator::{DEFAULT_QUANTILES, DEFAULT_SCENARIOS};
use crate::regfit::ValueTransform;
use crate::smoothing::SmoothingKind;
use crate::synth::{Archetype, SynthSpec};

pub const DEFAULT_HOLDOUTS: [usize; 2] = [1000, 5000];
pub const DEFAULT_AWS: [usize; 4] = [4, 12, 24, 48];
pub const DEFAULT_LAMBDAS: [f64; 2] = [1e-6, 1e-2];
pub const DEFAULT_TRANSFORMS: [ValueTransform; 2] = [ValueTransform::Identity, ValueTransform::Log1p];

/// A model together with the hyperparameter values swept for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelGrid {
    Ses,
    Holt,
    Hwes,
    Std {
        #[serde(default = "default_lambdas")]
        lambdas: Vec<f64>,
        #[serde(default = "default_transforms")]
        transforms: Vec<ValueTransform>,
    },
    Star {
        #[serde(default = "default_aws")]
        aws: Vec<usize>,
        #[serde(default = "default_lambdas")]
        lambdas: Vec<f64>,
        #[serde(default = "default_transforms")]
        transforms: Vec<ValueTransform>,
    },
}

fn default_lambdas() -> Vec<f64> {
    DEFAULT_LAMBDAS.to_vec()
}

fn default_transforms() -> Vec<ValueTransform> {
    DEFAULT_TRANSFORMS.to_vec()
}

fn default_aws() -> Vec<usize> {
    DEFAULT_AWS.to_vec()
}

impl ModelGrid {
    /// Grid with the default sweep for `id`.
    pub fn default_for(id: ModelId) -> Self {
        match id {
            ModelId::Ses => ModelGrid::Ses,
            ModelId::Holt => ModelGrid::Holt,
            ModelId::Hwes => ModelGrid::Hwes,
            ModelId::Std => ModelGrid::Std {
                lambdas: default_lambdas(),
                transforms: default_transforms(),
            },
            ModelId::Star => ModelGrid::Star {
                aws: default_aws(),
                lambdas: default_lambdas(),
                transforms: default_transforms(),
            },
        }
    }

    pub fn id(&self) -> ModelId {
        match self {
            ModelGrid::Ses => ModelId::Ses,
            ModelGrid::Holt => ModelId::Holt,
            ModelGrid::Hwes => ModelId::Hwes,
            ModelGrid::Std { .. } => ModelId::Std,
            ModelGrid::Star { .. } => ModelId::Star,
        }
    }

    /// Every grid point, in a fixed order. Smoothing models contribute a
    /// single candidate whose weights come from the in-sample lattice search.
    pub fn candidates(&self, period: usize) -> Vec<Candidate> {
        let smoothing = |kind| vec![Candidate::Smoothing { kind, params: None }];
        match self {
            ModelGrid::Ses => smoothing(SmoothingKind::Ses),
            ModelGrid::Holt => smoothing(SmoothingKind::Holt),
            ModelGrid::Hwes => smoothing(SmoothingKind::HoltWinters { period }),
            ModelGrid::Std { lambdas, transforms } => lambdas
                .iter()
                .flat_map(|&lambda| {
                    transforms
                        .iter()
                        .map(move |&transform| Candidate::Std { lambda, transform })
                })
                .collect(),
            ModelGrid::Star {
                aws,
                lambdas,
                transforms,
            } => aws
                .iter()
                .flat_map(|&aw| {
                    lambdas.iter().flat_map(move |&lambda| {
                        transforms
                            .iter()
                            .map(move |&transform| Candidate::Star { aw, lambda, transform })
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub datasets: Vec<DatasetSpec>,
    pub models: Vec<ModelGrid>,
    #[serde(default = "default_holdouts")]
    pub holdouts: Vec<usize>,
    #[serde(default = "default_scenarios")]
    pub scenarios: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_quantiles")]
    pub quantiles: Vec<f64>,
    /// Also select hyperparameters on the last 10% of each training split.
    #[serde(default = "default_true")]
    pub validation_selection: bool,
    /// Run rows concurrently. Scores are unaffected; runtimes become noisier.
    #[serde(default)]
    pub parallel_rows: bool,
}

fn default_holdouts() -> Vec<usize> {
    DEFAULT_HOLDOUTS.to_vec()
}

fn default_scenarios() -> usize {
    DEFAULT_SCENARIOS
}

fn default_quantiles() -> Vec<f64> {
    DEFAULT_QUANTILES.to_vec()
}

fn default_true() -> bool {
    true
}

impl BenchmarkConfig {
    pub fn new(datasets: Vec<DatasetSpec>, models: Vec<ModelGrid>, holdouts: Vec<usize>) -> Self {
        Self {
            datasets,
            models,
            holdouts,
            scenarios: DEFAULT_SCENARIOS,
            seed: 0,
            quantiles: default_quantiles(),
            validation_selection: true,
            parallel_rows: false,
        }
    }

    /// Four synthetic archetypes standing in for flow, LTE, enterprise and
    /// social traffic, each benchmarked with every model at the default
    /// holdouts.
    pub fn default_synthetic() -> Self {
        let synth = |archetype, length, interval, seed| SynthSpec {
            archetype,
            length,
            interval,
            noise_scale: 0.15,
            seed,
        };
        let mut flows = DatasetSpec::synthetic("flows-1min", synth(Archetype::NoisyLevels, 14_400, 60, 1));
        flows.period = Some(60);
        let mut lte = DatasetSpec::synthetic("lte-hourly", synth(Archetype::DailySeasonal, 8_760, 3_600, 2));
        lte.holdout_overrides = vec![(5_000, 4_380)];
        let enterprise = DatasetSpec::synthetic("enterprise-15min", synth(Archetype::GrowingSeasonal, 35_040, 900, 3));
        let social = DatasetSpec::synthetic("social-5min", synth(Archetype::GlobalConcentrated, 15_840, 300, 4));
        let mut config = Self::new(
            vec![flows, lte, enterprise, social],
            [ModelId::Ses, ModelId::Holt, ModelId::Hwes, ModelId::Std, ModelId::Star]
                .into_iter()
                .map(ModelGrid::default_for)
                .collect(),
            default_holdouts(),
        );
        config.seed = 42;
        config
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() || self.models.is_empty() || self.holdouts.is_empty() {
            return Err(Error::Config(
                "datasets, models and holdouts must all be non-empty".into(),
            ));
        }
        if self.holdouts.contains(&0) {
            return Err(Error::Config("holdouts must be positive".into()));
        }
        if self.scenarios == 0 {
            return Err(Error::Config("scenarios must be positive".into()));
        }
        if self.quantiles.is_empty() || self.quantiles.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            return Err(Error::Config("quantiles must be non-empty and inside (0, 1)".into()));
        }
        for d in &self.datasets {
            if d.interval <= 0 {
                return Err(Error::Config(format!(
                    "dataset '{}': interval must be positive",
                    d.name
                )));
            }
            if let Some((_, 0)) = d.holdout_overrides.iter().find(|(_, to)| *to == 0) {
                return Err(Error::Config(format!(
                    "dataset '{}': holdout override must be positive",
                    d.name
                )));
            }
        }
        for m in &self.models {
            match m {
                ModelGrid::Std { lambdas, transforms }
                | ModelGrid::Star {
                    lambdas, transforms, ..
                } if lambdas.is_empty() || transforms.is_empty() => {
                    return Err(Error::Config(format!("model {}: empty hyperparameter grid", m.id())));
                }
                ModelGrid::Star { aws, .. } if aws.is_empty() || aws.contains(&0) => {
                    return Err(Error::Config("model STAR: aws must be non-empty and positive".into()));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let text = r#"
            seed = 7
            holdouts = [100]

            [[datasets]]
            name = "twitter"
            source = { file = "Twitter_volume_AAPL.csv" }
            interval = 300

            [[datasets]]
            name = "lte"
            interval = 3600
            holdout_overrides = [[5000, 4380]]
            source = { synth = { archetype = "daily-seasonal", length = 8760, interval = 3600, noise_scale = 0.1, seed = 1 } }

            [[models]]
            model = "hwes"

            [[models]]
            model = "star"
            aws = [24]
        "#;
        let c = BenchmarkConfig::from_toml_str(text).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.scenarios, DEFAULT_SCENARIOS);
        assert_eq!(c.datasets[1].holdout_overrides, vec![(5000, 4380)]);
        assert_eq!(c.models[0], ModelGrid::Hwes);
        assert_eq!(c.models[1].candidates(24).len(), 4);
        assert!(c.validation_selection);
    }

    #[test]
    fn default_config_roundtrips_through_toml() {
        let c = BenchmarkConfig::default_synthetic();
        let text = c.to_toml_string().unwrap();
        assert_eq!(BenchmarkConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn rejects_invalid() {
        assert!(BenchmarkConfig::from_toml_str("models = []\ndatasets = []").is_err());
        let mut c = BenchmarkConfig::default_synthetic();
        c.quantiles = vec![1.5];
        assert!(c.validate().is_err());
        let mut c = BenchmarkConfig::default_synthetic();
        c.models = vec![ModelGrid::Star {
            aws: vec![0],
            lambdas: vec![1.0],
            transforms: vec![ValueTransform::Identity],
        }];
        assert!(c.validate().is_err());
        assert!(BenchmarkConfig::from_toml_str("this is not toml").is_err());
    }

    #[test]
    fn default_grids() {
        assert_eq!(ModelGrid::default_for(ModelId::Star).candidates(24).len(), 16);
        assert_eq!(ModelGrid::default_for(ModelId::Std).candidates(24).len(), 4);
        assert_eq!(
            ModelGrid::Hwes.candidates(288),
            vec![Candidate::Smoothing {
                kind: SmoothingKind::HoltWinters { period: 288 },
                params: None
            }]
        );
    }
}
