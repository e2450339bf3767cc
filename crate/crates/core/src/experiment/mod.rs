//! Declarative experiments: configuration, the runner, JSON reports and the
//! statistical comparison embedded in (and recomputable from) every report.

mod config;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{load_all, DataSource, DatasetSpec, ExperimentConfig, Generator, Method};

use crate::error::{Error, Result};
use crate::hpo::{random_search, smoothie, Direction, Problem, SearchOutcome, SearchSpace, SmoothieParams, TrialResult};
use crate::learners::LearnerKind;
use crate::rng::derive_seed;
use crate::stats::{rank_treatments, Metric, Ranking, WinTieLoss};

pub const SEED_DERIVATION: &str = "repeat r: derive_seed(seed, r); split: derive_seed(repeat, 0); \
search: derive_seed(repeat, 1); trial: derive_seed(search, config_id); \
pre-processing: derive_seed(trial, 0), chain step s: derive_seed(pre-processing, s); learner: derive_seed(trial, 1)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub name: String,
    pub tool_version: String,
    pub seed: u64,
    pub seed_derivation: String,
    pub repeat_seeds: Vec<u64>,
    pub datasets: Vec<DatasetSpec>,
    pub learners: Vec<LearnerKind>,
    pub methods: Vec<Method>,
    pub n1: usize,
    pub n2: usize,
    pub random_n: usize,
    pub direction: Direction,
    pub metrics: Vec<Metric>,
    pub alpha: f64,
    pub space: SearchSpace,
}

/// One search on one split. Externally produced results need only
/// `dataset`, `learner`, `method`, `repeat` and `scores`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub dataset: String,
    pub learner: String,
    pub method: String,
    pub repeat: usize,
    #[serde(default)]
    pub repeat_seed: u64,
    #[serde(default)]
    pub split_seed: u64,
    #[serde(default)]
    pub search_seed: u64,
    /// Metric name → value of the returned configuration on test.
    #[serde(default)]
    pub scores: BTreeMap<String, f64>,
    #[serde(default)]
    pub best: Option<TrialResult>,
    #[serde(default)]
    pub trials: Vec<TrialResult>,
    #[serde(default)]
    pub probe_secs: f64,
    #[serde(default)]
    pub full_secs: f64,
    #[serde(default)]
    pub wall_clock_secs: f64,
    #[serde(default)]
    pub error: Option<String>,
}

impl Run {
    pub fn failed_trials(&self) -> usize {
        self.trials.iter().filter(|t| !t.is_ok()).count()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub probe_secs: f64,
    pub full_secs: f64,
    pub wall_clock_secs: f64,
}

/// Summed per-trial times, split by phase; `probe_fraction = probe/(probe + full)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub probe_secs: f64,
    pub full_secs: f64,
    pub probe_fraction: f64,
    pub total_secs: f64,
    pub by_method: BTreeMap<String, PhaseTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatBlock {
    pub dataset: String,
    pub learner: String,
    pub metric: Metric,
    /// Treatment → per-repeat scores.
    pub samples: BTreeMap<String, Vec<f64>>,
    pub ranking: Ranking,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Statistics {
    pub alpha: f64,
    pub blocks: Vec<StatBlock>,
    /// Treatment → outcome against its strongest rival, counted over blocks.
    pub summary: BTreeMap<String, WinTieLoss>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub header: Header,
    pub runs: Vec<Run>,
    pub timing: Timing,
    pub statistics: Statistics,
    pub failed_trials: usize,
    pub failed_runs: usize,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))
    }

    pub fn has_failures(&self) -> bool {
        self.failed_trials > 0 || self.failed_runs > 0
    }
}

fn search(method: Method, problem: &Problem, cfg: &ExperimentConfig, seed: u64) -> Result<SearchOutcome> {
    match method {
        Method::Smoothie => {
            let params = SmoothieParams { n1: cfg.n1, n2: cfg.n2, seed, direction: cfg.direction };
            smoothie(problem, &params)
        }
        Method::Random => random_search(problem, cfg.random_budget(), seed),
    }
}

/// Executes every repeat × dataset × learner × method and assembles the report.
/// Relative dataset paths resolve against `base`.
pub fn run(cfg: &ExperimentConfig, base: &Path) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let sources = load_all(cfg, base)?;
    let repeat_seeds: Vec<u64> = (0..cfg.repeats).map(|r| derive_seed(cfg.seed, r as u64)).collect();
    let metric = cfg.selection_metric();
    let mut runs = Vec::new();
    for (spec, source) in &sources {
        for (repeat, &repeat_seed) in repeat_seeds.iter().enumerate() {
            let split_seed = derive_seed(repeat_seed, 0);
            let search_seed = derive_seed(repeat_seed, 1);
            let split = config::split(source, spec, split_seed);
            for &kind in &cfg.learners {
                for &method in &cfg.methods {
                    log::info!("{} repeat {repeat} {} {}", spec.name, kind.name(), method.name());
                    let mut record = Run {
                        dataset: spec.name.clone(),
                        learner: kind.name().into(),
                        method: method.name().into(),
                        repeat,
                        repeat_seed,
                        split_seed,
                        search_seed,
                        scores: BTreeMap::new(),
                        best: None,
                        trials: Vec::new(),
                        probe_secs: 0.0,
                        full_secs: 0.0,
                        wall_clock_secs: 0.0,
                        error: None,
                    };
                    let outcome = match &split {
                        Ok((train, test)) => {
                            let problem =
                                Problem { train, test, space: &cfg.space, kind, metric, jobs: cfg.jobs };
                            search(method, &problem, cfg, search_seed).map_err(|e| e.to_string())
                        }
                        Err(e) => Err(format!("split failed: {e}")),
                    };
                    match outcome {
                        Ok(out) => {
                            let m = out.best.metrics.as_ref().expect("ok full run carries metrics");
                            record.scores = cfg.metrics.iter().map(|&k| (k.name().to_string(), m.get(k))).collect();
                            record.probe_secs = out.probe_secs;
                            record.full_secs = out.full_secs;
                            record.wall_clock_secs = out.wall_clock_secs;
                            record.best = Some(out.best);
                            record.trials = out.trials;
                        }
                        Err(e) => {
                            log::warn!("run failed: {e}");
                            record.error = Some(e);
                        }
                    }
                    runs.push(record);
                }
            }
        }
    }

    let mut timing = Timing::default();
    for r in &runs {
        let t = timing.by_method.entry(r.method.clone()).or_default();
        t.probe_secs += r.probe_secs;
        t.full_secs += r.full_secs;
        t.wall_clock_secs += r.wall_clock_secs;
        timing.probe_secs += r.probe_secs;
        timing.full_secs += r.full_secs;
    }
    let busy = timing.probe_secs + timing.full_secs;
    timing.probe_fraction = if busy > 0.0 { timing.probe_secs / busy } else { 0.0 };
    timing.total_secs = start.elapsed().as_secs_f64();

    let header = Header {
        name: cfg.name.clone(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        seed_derivation: SEED_DERIVATION.into(),
        repeat_seeds,
        datasets: cfg.datasets.clone(),
        learners: cfg.learners.clone(),
        methods: cfg.methods.clone(),
        n1: cfg.n1,
        n2: cfg.n2,
        random_n: cfg.random_budget(),
        direction: cfg.direction,
        metrics: cfg.metrics.clone(),
        alpha: cfg.alpha,
        space: cfg.space.clone(),
    };
    let failed_trials = runs.iter().map(Run::failed_trials).sum();
    let failed_runs = runs.iter().filter(|r| r.error.is_some()).count();
    let mut report =
        Report { header, runs, timing, statistics: Statistics::default(), failed_trials, failed_runs };
    report.statistics = compare(std::slice::from_ref(&report), cfg.alpha)?;
    Ok(report)
}

/// Dataset, learner and metric.
type BlockKey = (String, String, Metric);

/// Ranks treatments (methods) per dataset, learner and metric over all runs of
/// all `reports`. Applied to a single report it reproduces the embedded statistics.
pub fn compare(reports: &[Report], alpha: f64) -> Result<Statistics> {
    let mut metrics: Vec<Metric> = reports.iter().flat_map(|r| r.header.metrics.iter().copied()).collect();
    metrics.sort();
    metrics.dedup();
    let mut grouped: BTreeMap<BlockKey, BTreeMap<String, Vec<(usize, f64)>>> = BTreeMap::new();
    for run in reports.iter().flat_map(|r| &r.runs) {
        for &metric in &metrics {
            if let Some(&v) = run.scores.get(metric.name()) {
                grouped
                    .entry((run.dataset.clone(), run.learner.clone(), metric))
                    .or_default()
                    .entry(run.method.clone())
                    .or_default()
                    .push((run.repeat, v));
            }
        }
    }
    let mut stats = Statistics { alpha, ..Statistics::default() };
    for ((dataset, learner, metric), treatments) in grouped {
        if treatments.len() < 2 {
            continue;
        }
        let samples: BTreeMap<String, Vec<f64>> = treatments
            .into_iter()
            .map(|(name, mut v)| {
                v.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
                (name, v.into_iter().map(|(_, x)| x).collect())
            })
            .collect();
        let ranking = rank_treatments(&samples, alpha, metric.higher_is_better())?;
        for name in samples.keys() {
            let t = WinTieLoss::tally(std::iter::once(&ranking), name, metric.higher_is_better());
            let s = stats.summary.entry(name.clone()).or_default();
            s.wins += t.wins;
            s.ties += t.ties;
            s.losses += t.losses;
        }
        stats.blocks.push(StatBlock { dataset, learner, metric, samples, ranking });
    }
    Ok(stats)
}

/// One row per treatment per block, for plotting.
pub fn statistics_csv(stats: &Statistics) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["dataset", "learner", "metric", "treatment", "median", "rank", "adjusted_p", "wins", "ties", "losses"])?;
    for b in &stats.blocks {
        for (name, t) in &b.ranking.treatments {
            w.write_record([
                b.dataset.clone(),
                b.learner.clone(),
                b.metric.name().to_string(),
                name.clone(),
                t.median.to_string(),
                t.rank.to_string(),
                t.adjusted_p.map(|p| p.to_string()).unwrap_or_default(),
                t.wins.to_string(),
                t.ties.to_string(),
                t.losses.to_string(),
            ])?;
        }
    }
    finish_csv(w)
}

/// One row per run with its scores and timing ledger.
pub fn runs_csv(report: &Report) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let metric_names: Vec<&str> = report.header.metrics.iter().map(|m| m.name()).collect();
    let mut head = vec!["dataset", "learner", "method", "repeat", "probe_secs", "full_secs", "wall_clock_secs"];
    head.extend(&metric_names);
    w.write_record(&head)?;
    for r in &report.runs {
        let mut row = vec![
            r.dataset.clone(),
            r.learner.clone(),
            r.method.clone(),
            r.repeat.to_string(),
            r.probe_secs.to_string(),
            r.full_secs.to_string(),
            r.wall_clock_secs.to_string(),
        ];
        row.extend(metric_names.iter().map(|m| r.scores.get(*m).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&row)?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpo::{Phase, Training};

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            datasets: vec![DatasetSpec {
                name: "syn".into(),
                source: DataSource::Synthetic { generator: Generator::Benchmark, seed: 1 },
                ratio: 0.8,
            }],
            space: SearchSpace {
                ff_hidden_layers: vec![1, 2],
                ff_units: vec![2, 3],
                training: Training { epochs: 3, ..Training::default() },
                ..SearchSpace::default()
            },
            n1: 6,
            n2: 2,
            repeats: 3,
            metrics: vec![Metric::F1, Metric::Pf],
            jobs: 1,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn report_structure() {
        let report = run(&tiny(), Path::new(".")).unwrap();
        assert_eq!(report.runs.len(), 6);
        let seeds: std::collections::HashSet<u64> = report.header.repeat_seeds.iter().copied().collect();
        assert_eq!(seeds.len(), 3);
        for r in report.runs.iter().filter(|r| r.method == "smoothie") {
            assert_eq!(r.trials.iter().filter(|t| t.phase == Phase::Probe && t.is_ok()).count(), 6);
            assert_eq!(r.trials.iter().filter(|t| t.phase == Phase::Full).count(), 2);
        }
        for r in report.runs.iter().filter(|r| r.method == "random") {
            assert_eq!(r.trials.iter().filter(|t| t.phase == Phase::Full).count(), 6);
        }
        assert_eq!(report.statistics.blocks.len(), 2);
    }

    #[test]
    fn compare_reproduces_embedded_statistics() {
        let report = run(&tiny(), Path::new(".")).unwrap();
        let json = report.to_json().unwrap();
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(compare(&[back], report.header.alpha).unwrap(), report.statistics);
    }

    #[test]
    fn reruns_are_identical_apart_from_time() {
        let strip = |r: Report| -> Vec<(String, BTreeMap<String, f64>, Vec<u64>)> {
            r.runs
                .into_iter()
                .map(|run| {
                    let ids = run.trials.iter().map(|t| t.config.id as u64).collect();
                    (run.method, run.scores, ids)
                })
                .collect()
        };
        let a = run(&tiny(), Path::new(".")).unwrap();
        let b = run(&ExperimentConfig { jobs: 3, ..tiny() }, Path::new(".")).unwrap();
        assert_eq!(strip(a), strip(b));
    }

    #[test]
    fn external_runs_join_the_ranking() {
        let report = run(&tiny(), Path::new(".")).unwrap();
        let mut external = report.clone();
        external.runs = (0..3)
            .map(|repeat| {
                serde_json::from_value(serde_json::json!({
                    "dataset": "syn", "learner": "ff", "method": "bohb", "repeat": repeat,
                    "scores": {"f1": 0.1, "pf": 0.9}
                }))
                .unwrap()
            })
            .collect();
        let stats = compare(&[report, external], 0.05).unwrap();
        assert!(stats.blocks.iter().all(|b| b.samples.contains_key("bohb") && b.samples.len() == 3));
        let csv = statistics_csv(&stats).unwrap();
        assert_eq!(csv.lines().count(), 1 + 2 * 3);
    }
}
