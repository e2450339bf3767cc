use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{FfConfig, LearnerKind, LrConfig, LrPenalty, Penalty};
use crate::preprocess::{ScalerKind, Transform};

/// Class-balancing step of a pre-processing chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sampler {
    None,
    Smote { k_neighbors: usize },
    Fuzzy { times: usize },
}

/// Optimizer settings shared by every neural configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Training {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for Training {
    fn default() -> Self {
        Training { epochs: 50, learning_rate: 0.1, batch_size: 32 }
    }
}

/// One logistic-regression grid point; `penalty: none` ignores `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrOption {
    pub penalty: LrPenalty,
    pub c: f64,
}

/// Grid of pre-processing chains and per-learner hyper-parameters.
///
/// Pre-processing points are the product `scalers × samplers × label_engineering`;
/// a configuration index enumerates pre-processing in the outer loop and the
/// learner grid in the inner loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpace {
    pub scalers: Vec<ScalerKind>,
    pub samplers: Vec<Sampler>,
    pub label_engineering: Vec<bool>,
    pub ff_hidden_layers: Vec<usize>,
    pub ff_units: Vec<usize>,
    pub lr_options: Vec<LrOption>,
    pub training: Training,
}

impl Default for SearchSpace {
    /// 60 pre-processing chains; 100 network shapes, 7 regression settings, 1 Naive Bayes.
    fn default() -> Self {
        let mut lr_options = vec![LrOption { penalty: LrPenalty::None, c: 1.0 }];
        for penalty in [LrPenalty::L1, LrPenalty::L2] {
            for c in [0.1, 1.0, 10.0] {
                lr_options.push(LrOption { penalty, c });
            }
        }
        SearchSpace {
            scalers: ScalerKind::ALL.to_vec(),
            samplers: vec![
                Sampler::None,
                Sampler::Smote { k_neighbors: 3 },
                Sampler::Smote { k_neighbors: 5 },
                Sampler::Smote { k_neighbors: 7 },
                Sampler::Fuzzy { times: 1 },
                Sampler::Fuzzy { times: 2 },
            ],
            label_engineering: vec![false, true],
            ff_hidden_layers: (1..=20).collect(),
            ff_units: (2..=6).collect(),
            lr_options,
            training: Training::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerChoice {
    Ff { hidden_layers: usize, units: usize },
    Lr { penalty: LrPenalty, c: f64 },
    Gnb,
}

/// One point of a [`SearchSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Position in the space's enumeration.
    pub id: usize,
    pub scaler: ScalerKind,
    pub sampler: Sampler,
    pub label_engineering: bool,
    pub learner: LearnerChoice,
}

impl Config {
    /// Scale, then rebalance, then relabel.
    pub fn chain(&self) -> Vec<Transform> {
        let mut chain = vec![Transform::Scale { scaler: self.scaler }];
        match self.sampler {
            Sampler::None => {}
            Sampler::Smote { k_neighbors } => chain.push(Transform::Smote { k_neighbors }),
            Sampler::Fuzzy { times } => chain.push(Transform::Fuzzy { times }),
        }
        if self.label_engineering {
            chain.push(Transform::LabelEngineer);
        }
        chain
    }

    pub fn kind(&self) -> LearnerKind {
        match self.learner {
            LearnerChoice::Ff { .. } => LearnerKind::Ff,
            LearnerChoice::Lr { .. } => LearnerKind::Lr,
            LearnerChoice::Gnb => LearnerKind::Gnb,
        }
    }

    pub fn ff_config(&self, training: &Training, seed: u64) -> Option<FfConfig> {
        match self.learner {
            LearnerChoice::Ff { hidden_layers, units } => Some(FfConfig {
                hidden_layers,
                units,
                epochs: training.epochs,
                learning_rate: training.learning_rate,
                batch_size: training.batch_size,
                penalty: Penalty::None,
                seed,
            }),
            _ => None,
        }
    }

    pub fn lr_config(&self, training: &Training, seed: u64) -> Option<LrConfig> {
        match self.learner {
            LearnerChoice::Lr { penalty, c } => Some(LrConfig {
                penalty,
                c,
                epochs: training.epochs,
                learning_rate: training.learning_rate,
                batch_size: training.batch_size,
                seed,
            }),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        let chain: Vec<String> = self.chain().iter().map(Transform::label).collect();
        let learner = match &self.learner {
            LearnerChoice::Ff { hidden_layers, units } => format!("ff({hidden_layers}x{units})"),
            LearnerChoice::Lr { penalty, c } => format!("lr({penalty:?},C={c})").to_lowercase(),
            LearnerChoice::Gnb => "gnb".into(),
        };
        format!("{} | {learner}", chain.join(" > "))
    }
}

impl SearchSpace {
    pub fn preprocess_size(&self) -> usize {
        self.scalers.len() * self.samplers.len() * self.label_engineering.len()
    }

    pub fn learner_size(&self, kind: LearnerKind) -> usize {
        match kind {
            LearnerKind::Ff => self.ff_hidden_layers.len() * self.ff_units.len(),
            LearnerKind::Lr => self.lr_options.len(),
            LearnerKind::Gnb => 1,
        }
    }

    /// Pre-processing options × learner options.
    pub fn total_size(&self, kind: LearnerKind) -> usize {
        self.preprocess_size() * self.learner_size(kind)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("search space: {what}")));
        if self.scalers.is_empty() || self.samplers.is_empty() || self.label_engineering.is_empty() {
            return bad("every pre-processing axis needs at least one option");
        }
        if self.ff_hidden_layers.is_empty() || self.ff_units.is_empty() || self.lr_options.is_empty() {
            return bad("every learner grid needs at least one option");
        }
        if self.ff_units.contains(&0) {
            return bad("ff_units must be >= 1");
        }
        if self.samplers.iter().any(|s| matches!(s, Sampler::Smote { k_neighbors: 0 })) {
            return bad("smote k_neighbors must be >= 1");
        }
        if self.samplers.iter().any(|s| matches!(s, Sampler::Fuzzy { times } if !(1..=2).contains(times))) {
            return bad("fuzzy times must be 1 or 2");
        }
        if self.lr_options.iter().any(|o| !(o.c > 0.0 && o.c.is_finite())) {
            return bad("logistic regression C must be positive");
        }
        let t = &self.training;
        if t.epochs == 0 || t.batch_size == 0 || !(t.learning_rate >= 0.0 && t.learning_rate.is_finite()) {
            return bad("training needs epochs >= 1, batch_size >= 1 and a finite learning_rate >= 0");
        }
        Ok(())
    }

    /// Decodes configuration `id` for `kind`.
    pub fn config(&self, kind: LearnerKind, id: usize) -> Result<Config> {
        let size = self.total_size(kind);
        if id >= size {
            return Err(Error::SpaceTooSmall { requested: id + 1, available: size });
        }
        let inner = self.learner_size(kind);
        let (mut pre, learner_idx) = (id / inner, id % inner);
        let label_engineering = self.label_engineering[pre % self.label_engineering.len()];
        pre /= self.label_engineering.len();
        let sampler = self.samplers[pre % self.samplers.len()];
        pre /= self.samplers.len();
        let scaler = self.scalers[pre];
        let learner = match kind {
            LearnerKind::Ff => {
                let units = self.ff_units.len();
                LearnerChoice::Ff {
                    hidden_layers: self.ff_hidden_layers[learner_idx / units],
                    units: self.ff_units[learner_idx % units],
                }
            }
            LearnerKind::Lr => {
                let o = self.lr_options[learner_idx];
                LearnerChoice::Lr { penalty: o.penalty, c: o.c }
            }
            LearnerKind::Gnb => LearnerChoice::Gnb,
        };
        Ok(Config { id, scaler, sampler, label_engineering, learner })
    }
}
