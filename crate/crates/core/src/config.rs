//! Experiment configuration (one JSON file per experiment).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::AugmentationPlan;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Node,
    Link,
}

/// Pseudo-label selection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Top-k by multi-view averaged confidence.
    Cautious,
    /// Uniformly random k, labeled by the teacher's hard decision.
    Random,
    /// No pseudo labeling: the pre-trained model is the result.
    None,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cautious" => Ok(Strategy::Cautious),
            "random" => Ok(Strategy::Random),
            "none" => Ok(Strategy::None),
            other => Err(Error::Config(format!(
                "unknown strategy `{other}` (expected cautious, random or none)"
            ))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Cautious => "cautious",
            Strategy::Random => "random",
            Strategy::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    /// Stochastic block model with Gaussian class-conditional features.
    Sbm {
        block_sizes: Vec<usize>,
        p_in: f64,
        p_out: f64,
        #[serde(default = "default_feature_dim")]
        feature_dim: usize,
        #[serde(default = "default_feature_signal")]
        feature_signal: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Edge list plus optional features (identity when absent) and labels.
    Files {
        edges: PathBuf,
        #[serde(default)]
        features: Option<PathBuf>,
        #[serde(default)]
        labels: Option<PathBuf>,
    },
}

fn default_feature_dim() -> usize {
    16
}

fn default_feature_signal() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub hidden: usize,
    /// Embedding width for link prediction; node classification uses the class count.
    pub embedding_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            embedding_dim: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub pretrain_epochs: usize,
    pub finetune_epochs: usize,
    pub lr: f64,
    /// Re-initialize the student before every fine-tune instead of continuing.
    pub retrain_from_scratch: bool,
    /// Start every fine-tune with fresh Adam moments instead of carrying
    /// them over from the previous phase.
    pub reset_optimizer: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            pretrain_epochs: 200,
            finetune_epochs: 50,
            lr: 0.01,
            retrain_from_scratch: false,
            reset_optimizer: false,
        }
    }
}

/// Link-task candidate pool: every unobserved pair up to `full_max_nodes`
/// nodes, a seeded uniform sample of `sample_size` pairs beyond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoolConfig {
    pub full_max_nodes: usize,
    pub sample_size: usize,
}

impl Default for PoolConfig {
    fn default() -> Self {
        Self {
            full_max_nodes: 3000,
            sample_size: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub dataset: DatasetSpec,
    /// Train/validation/test fractions.
    #[serde(default)]
    pub split: Option<[f64; 3]>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub augmentation: AugmentationPlan,
    /// Pseudo labels committed per iteration.
    pub k: usize,
    /// Cap on the observed-set size; pseudo labeling stops once reached.
    pub cap: usize,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub candidate_pool: PoolConfig,
    /// Compute ground-truth diagnostics (covariance, PL error). Never used for selection.
    #[serde(default = "default_true")]
    pub benchmark_diagnostics: bool,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_strategy() -> Strategy {
    Strategy::Cautious
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_true() -> bool {
    true
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn split_ratios(&self) -> [f64; 3] {
        self.split.unwrap_or(match self.task {
            TaskKind::Node => [0.05, 0.15, 0.80],
            TaskKind::Link => [0.10, 0.40, 0.50],
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if self.model.hidden == 0 || self.model.embedding_dim == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if !(self.train.lr > 0.0 && self.train.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.train.lr)));
        }
        let r = self.split_ratios();
        if r.iter().any(|v| !(0.0..=1.0).contains(v)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split ratios {r:?} must sum to 1")));
        }
        self.augmentation
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if let DatasetSpec::Files { labels: None, .. } = &self.dataset {
            if self.task == TaskKind::Node {
                return Err(Error::Config("node task requires a labels file".into()));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config; relative dataset paths resolve against the file's
    /// directory. An unreadable file is a config error, not a data error.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let (DatasetSpec::Files { edges, features, labels }, Some(base)) = (&mut cfg.dataset, path.parent()) {
            for p in std::iter::once(edges).chain(features.iter_mut()).chain(labels.iter_mut()) {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }
}
