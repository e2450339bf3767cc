use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{load_csv, load_csv_pair, Dataset, Source, SplitPolicy};
use crate::error::{Error, Result};
use crate::hpo::{Direction, SearchSpace};
use crate::learners::LearnerKind;
use crate::stats::Metric;
use crate::synth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Smoothie,
    Random,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Smoothie => "smoothie",
            Method::Random => "random",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Benchmark,
    Blobs,
    Checkerboard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// One file, split by ratio each repeat.
    Csv { path: PathBuf, label: String },
    /// Fixed train and test files.
    CsvPair { train: PathBuf, test: PathBuf, label: String },
    Synthetic {
        generator: Generator,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    pub source: DataSource,
    /// Train fraction for single-file sources.
    #[serde(default = "default_ratio")]
    pub ratio: f64,
}

fn default_ratio() -> f64 {
    0.8
}

impl DatasetSpec {
    /// Loads the data, resolving relative paths against `base`.
    pub fn load(&self, base: &Path) -> Result<Source> {
        let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        Ok(match &self.source {
            DataSource::Csv { path, label } => Source::Single(load_csv(resolve(path), label)?.renamed(&self.name)),
            DataSource::CsvPair { train, test, label } => {
                let (a, b) = load_csv_pair(resolve(train), resolve(test), label)?;
                Source::Pair(a.renamed(&self.name), b.renamed(&self.name))
            }
            DataSource::Synthetic { generator, seed } => Source::Single(
                match generator {
                    Generator::Benchmark => synth::benchmark(*seed),
                    Generator::Blobs => synth::blobs(400, 4, 3.0, 1.0, *seed),
                    Generator::Checkerboard => synth::checkerboard(400, 4, *seed),
                }
                .renamed(&self.name),
            ),
        })
    }

    pub fn policy(&self, seed: u64) -> SplitPolicy {
        match self.source {
            DataSource::CsvPair { .. } => SplitPolicy::Presplit,
            _ => SplitPolicy::Ratio { ratio: self.ratio, seed },
        }
    }
}

/// A declarative experiment: repeats × datasets × learners × methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub datasets: Vec<DatasetSpec>,
    pub learners: Vec<LearnerKind>,
    pub methods: Vec<Method>,
    pub space: SearchSpace,
    pub n1: usize,
    pub n2: usize,
    /// Random-search budget; defaults to `n1`.
    pub random_n: Option<usize>,
    pub direction: Direction,
    pub repeats: usize,
    pub seed: u64,
    /// Reported metrics; the first one drives selection.
    pub metrics: Vec<Metric>,
    pub alpha: f64,
    pub output: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            datasets: Vec::new(),
            learners: vec![LearnerKind::Ff],
            methods: vec![Method::Smoothie, Method::Random],
            space: SearchSpace::default(),
            n1: 30,
            n2: 5,
            random_n: None,
            direction: Direction::MinBeta,
            repeats: 20,
            seed: 0,
            metrics: vec![Metric::F1],
            alpha: 0.05,
            output: None,
            jobs: 0,
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates; syntax errors carry line and column.
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))?;
        cfg.validate().map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{origin}: {msg}")),
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn selection_metric(&self) -> Metric {
        self.metrics[0]
    }

    pub fn random_budget(&self) -> usize {
        self.random_n.unwrap_or(self.n1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.datasets.is_empty() {
            return bad("`datasets` must list at least one dataset".into());
        }
        for (i, d) in self.datasets.iter().enumerate() {
            if !(d.ratio > 0.0 && d.ratio < 1.0) {
                return bad(format!("datasets[{i}].ratio must lie in (0, 1), got {}", d.ratio));
            }
            if self.datasets[..i].iter().any(|o| o.name == d.name) {
                return bad(format!("datasets[{i}].name `{}` is not unique", d.name));
            }
        }
        if self.learners.is_empty() {
            return bad("`learners` must not be empty".into());
        }
        if self.methods.is_empty() {
            return bad("`methods` must not be empty".into());
        }
        if self.metrics.is_empty() {
            return bad("`metrics` must not be empty".into());
        }
        if self.repeats == 0 {
            return bad("`repeats` must be >= 1".into());
        }
        if self.n2 == 0 || self.n2 > self.n1 {
            return bad(format!("need 1 <= n2 <= n1, got n1={}, n2={}", self.n1, self.n2));
        }
        if self.random_n == Some(0) {
            return bad("`random_n` must be >= 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("`alpha` must lie in (0, 1), got {}", self.alpha));
        }
        self.space.validate()?;
        for &kind in &self.learners {
            let size = self.space.total_size(kind);
            let need = self.n1.max(self.random_budget());
            if need > size {
                return bad(format!("{} space has {size} configurations, fewer than the {need} requested", kind.name()));
            }
        }
        Ok(())
    }
}

/// Loads every dataset once.
pub fn load_all(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<(DatasetSpec, Source)>> {
    cfg.datasets.iter().map(|d| Ok((d.clone(), d.load(base)?))).collect()
}

pub(crate) fn split(source: &Source, spec: &DatasetSpec, seed: u64) -> Result<(Dataset, Dataset)> {
    source.clone().split(spec.policy(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
  "datasets": [{"name": "syn", "source": {"kind": "synthetic", "generator": "benchmark"}}],
  "repeats": 1
}"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_json(MINIMAL, "mem").unwrap();
        assert_eq!((cfg.n1, cfg.n2, cfg.repeats), (30, 5, 1));
        assert_eq!(cfg.methods, vec![Method::Smoothie, Method::Random]);
        assert_eq!(cfg.datasets[0].ratio, 0.8);
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = "{\n  \"datasets\": [],\n  \"repeat\": 3\n}";
        let err = ExperimentConfig::from_json(text, "cfg.json").unwrap_err().to_string();
        assert!(err.contains("cfg.json:3:"), "{err}");
        assert!(err.contains("repeat"), "{err}");
    }

    #[test]
    fn semantic_validation() {
        let text = MINIMAL.replace("\"repeats\": 1", "\"repeats\": 1, \"n1\": 3, \"n2\": 4");
        let err = ExperimentConfig::from_json(&text, "c").unwrap_err().to_string();
        assert!(err.contains("n2"), "{err}");
        let text = MINIMAL.replace("\"repeats\": 1", "\"repeats\": 1, \"learners\": [\"gnb\"], \"n1\": 61, \"n2\": 5");
        assert!(ExperimentConfig::from_json(&text, "c").is_err());
    }

    #[test]
    fn pair_sources_are_presplit() {
        let spec = DatasetSpec {
            name: "p".into(),
            source: DataSource::CsvPair { train: "a.csv".into(), test: "b.csv".into(), label: "y".into() },
            ratio: 0.8,
        };
        assert_eq!(spec.policy(3), SplitPolicy::Presplit);
    }
}
