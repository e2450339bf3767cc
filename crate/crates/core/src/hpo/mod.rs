//! Configuration sampling, the two-stage smoothness-guided search, a random
//! search baseline and the coverage calculator behind the default budget.

mod coverage;
mod space;

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use coverage::{budget, coverage_lower, coverage_upper};
pub use space::{Config, LearnerChoice, LrOption, Sampler, SearchSpace, Training};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::{confusion, fit_gnb, train_ff, train_lr, Classifier, LearnerKind};
use crate::preprocess::apply_chain;
use crate::rng::{derive_seed, rng_from};
use crate::smoothness::{smoothness_ff, smoothness_gnb, smoothness_lr, SmoothnessReport};
use crate::stats::{Metric, Metrics};

/// Stream used to top up the sample after failed probes.
const TOPUP_STREAM: u64 = u64::MAX;

/// Which end of the β ranking is trained in full.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Flattest landscapes first.
    #[default]
    MinBeta,
    MaxBeta,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min_beta" => Ok(Direction::MinBeta),
            "max_beta" => Ok(Direction::MaxBeta),
            _ => Err(Error::Config(format!("unknown direction `{s}` (expected min_beta or max_beta)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothieParams {
    /// Configurations probed.
    pub n1: usize,
    /// Configurations trained in full.
    pub n2: usize,
    pub seed: u64,
    pub direction: Direction,
}

impl Default for SmoothieParams {
    fn default() -> Self {
        SmoothieParams { n1: 30, n2: 5, seed: 0, direction: Direction::MinBeta }
    }
}

impl SmoothieParams {
    /// Preset for static-code-warning tasks.
    pub fn static_code(seed: u64) -> Self {
        SmoothieParams { n1: 50, n2: 10, seed, direction: Direction::MinBeta }
    }

    pub fn validate(&self, total_size: usize) -> Result<()> {
        if self.n2 == 0 || self.n2 > self.n1 {
            return Err(Error::InvalidParams(format!("need 1 <= N2 <= N1, got N1={}, N2={}", self.n1, self.n2)));
        }
        if self.n1 > total_size {
            return Err(Error::SpaceTooSmall { requested: self.n1, available: total_size });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Pre-processing plus one epoch (or the closed form) and β.
    Probe,
    /// Full training and test evaluation.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", content = "reason", rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub config: Config,
    /// Position in the sampling order.
    pub sample_index: usize,
    pub phase: Phase,
    /// `derive_seed(master, config.id)`; every draw in the trial descends from it.
    pub seed: u64,
    pub smoothness: Option<SmoothnessReport>,
    pub metrics: Option<Metrics>,
    pub preprocess_secs: f64,
    pub wall_clock_secs: f64,
    pub status: TrialStatus,
}

impl TrialResult {
    pub fn is_ok(&self) -> bool {
        self.status == TrialStatus::Ok
    }

    pub fn beta(&self) -> Option<f64> {
        self.smoothness.as_ref().map(|s| s.beta)
    }

    pub fn metric(&self, metric: Metric) -> Option<f64> {
        self.metrics.as_ref().map(|m| m.get(metric))
    }
}

/// Everything a search needs besides its own parameters.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub train: &'a Dataset,
    pub test: &'a Dataset,
    pub space: &'a SearchSpace,
    pub kind: LearnerKind,
    pub metric: Metric,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: TrialResult,
    /// Probes in sampling order, then full runs in sampling order.
    pub trials: Vec<TrialResult>,
    pub probe_secs: f64,
    pub full_secs: f64,
    pub wall_clock_secs: f64,
}

impl SearchOutcome {
    pub fn full_runs(&self) -> impl Iterator<Item = &TrialResult> {
        self.trials.iter().filter(|t| t.phase == Phase::Full)
    }

    pub fn probes(&self) -> impl Iterator<Item = &TrialResult> {
        self.trials.iter().filter(|t| t.phase == Phase::Probe)
    }
}

/// `n` distinct configurations drawn uniformly without replacement.
pub fn sample_configs(space: &SearchSpace, kind: LearnerKind, n: usize, seed: u64) -> Result<Vec<Config>> {
    let total = space.total_size(kind);
    if n > total {
        return Err(Error::SpaceTooSmall { requested: n, available: total });
    }
    let mut rng = rng_from(seed);
    index::sample(&mut rng, total, n).into_iter().map(|id| space.config(kind, id)).collect()
}

struct Prepared {
    train: Dataset,
    test: Dataset,
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))
}

fn prepare(p: &Problem, config: &Config, seed: u64) -> Result<Prepared> {
    let (train, test) = apply_chain(&config.chain(), p.train, p.test, derive_seed(seed, 0))?;
    Ok(Prepared { train, test })
}

fn probe_inner(p: &Problem, config: &Config, seed: u64, data: &Prepared) -> Result<SmoothnessReport> {
    let learner_seed = derive_seed(seed, 1);
    let report = match p.kind {
        LearnerKind::Ff => {
            let cfg = config.ff_config(&p.space.training, learner_seed).expect("ff config");
            smoothness_ff(&train_ff(&data.train, &cfg, Some(1))?, &data.train)?
        }
        LearnerKind::Lr => {
            let cfg = config.lr_config(&p.space.training, learner_seed).expect("lr config");
            smoothness_lr(&train_lr(&data.train, &cfg, Some(1))?, &data.train)?
        }
        LearnerKind::Gnb => smoothness_gnb(&fit_gnb(&data.train)?, &data.train)?,
    };
    if !report.beta.is_finite() {
        return Err(Error::NonFiniteProbe);
    }
    Ok(report)
}

fn full_inner(p: &Problem, config: &Config, seed: u64, data: &Prepared) -> Result<Metrics> {
    let learner_seed = derive_seed(seed, 1);
    let model: Box<dyn Classifier> = match p.kind {
        LearnerKind::Ff => {
            let cfg = config.ff_config(&p.space.training, learner_seed).expect("ff config");
            Box::new(train_ff(&data.train, &cfg, None)?)
        }
        LearnerKind::Lr => {
            let cfg = config.lr_config(&p.space.training, learner_seed).expect("lr config");
            Box::new(train_lr(&data.train, &cfg, None)?)
        }
        LearnerKind::Gnb => Box::new(fit_gnb(&data.train)?),
    };
    Ok(confusion(model.as_ref(), &data.test)?.metrics())
}

fn failed(config: &Config, sample_index: usize, phase: Phase, seed: u64, pre: f64, start: Instant, e: &Error) -> TrialResult {
    log::warn!("{phase:?} of config {} failed: {e}", config.id);
    TrialResult {
        config: config.clone(),
        sample_index,
        phase,
        seed,
        smoothness: None,
        metrics: None,
        preprocess_secs: pre,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        status: TrialStatus::Failed(e.to_string()),
    }
}

fn run_probe(p: &Problem, config: &Config, sample_index: usize, master: u64) -> (TrialResult, Option<Prepared>) {
    let seed = derive_seed(master, config.id as u64);
    let start = Instant::now();
    let data = match prepare(p, config, seed) {
        Ok(d) => d,
        Err(e) => return (failed(config, sample_index, Phase::Probe, seed, start.elapsed().as_secs_f64(), start, &e), None),
    };
    let pre = start.elapsed().as_secs_f64();
    match probe_inner(p, config, seed, &data) {
        Ok(report) => {
            let trial = TrialResult {
                config: config.clone(),
                sample_index,
                phase: Phase::Probe,
                seed,
                smoothness: Some(report),
                metrics: None,
                preprocess_secs: pre,
                wall_clock_secs: start.elapsed().as_secs_f64(),
                status: TrialStatus::Ok,
            };
            (trial, Some(data))
        }
        Err(e) => (failed(config, sample_index, Phase::Probe, seed, pre, start, &e), None),
    }
}

fn run_full(p: &Problem, config: &Config, sample_index: usize, master: u64, cached: Option<Prepared>) -> TrialResult {
    let seed = derive_seed(master, config.id as u64);
    let start = Instant::now();
    let data = match cached.map_or_else(|| prepare(p, config, seed), Ok) {
        Ok(d) => d,
        Err(e) => return failed(config, sample_index, Phase::Full, seed, start.elapsed().as_secs_f64(), start, &e),
    };
    let pre = start.elapsed().as_secs_f64();
    match full_inner(p, config, seed, &data) {
        Ok(metrics) => TrialResult {
            config: config.clone(),
            sample_index,
            phase: Phase::Full,
            seed,
            smoothness: None,
            metrics: Some(metrics),
            preprocess_secs: pre,
            wall_clock_secs: start.elapsed().as_secs_f64(),
            status: TrialStatus::Ok,
        },
        Err(e) => failed(config, sample_index, Phase::Full, seed, pre, start, &e),
    }
}

/// Metric-best successful full run; ties go to the smaller configuration index.
pub fn best_trial<'a>(trials: impl IntoIterator<Item = &'a TrialResult>, metric: Metric) -> Option<&'a TrialResult> {
    trials
        .into_iter()
        .filter(|t| t.phase == Phase::Full && t.is_ok())
        .fold(None, |best: Option<&TrialResult>, t| match best {
            None => Some(t),
            Some(b) => {
                let (tv, bv) = (t.metric(metric).unwrap_or(f64::NAN), b.metric(metric).unwrap_or(f64::NAN));
                if metric.better(tv, bv) || (tv == bv && t.config.id < b.config.id) {
                    Some(t)
                } else {
                    Some(b)
                }
            }
        })
}

fn finish(p: &Problem, trials: Vec<TrialResult>, start: Instant) -> Result<SearchOutcome> {
    let best = best_trial(&trials, p.metric).cloned().ok_or(Error::AllRunsFailed)?;
    let sum = |phase| trials.iter().filter(|t| t.phase == phase).fold(0.0, |acc, t| acc + t.wall_clock_secs);
    Ok(SearchOutcome {
        best,
        probe_secs: sum(Phase::Probe),
        full_secs: sum(Phase::Full),
        trials,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

/// Probes `n1` configurations, trains the `n2` best by β in full and returns
/// the metric-best of those. Failed probes are replaced by fresh draws.
pub fn smoothie(p: &Problem, params: &SmoothieParams) -> Result<SearchOutcome> {
    let start = Instant::now();
    let total = p.space.total_size(p.kind);
    params.validate(total)?;
    let workers = pool(p.jobs)?;
    let initial = sample_configs(p.space, p.kind, params.n1, params.seed)?;

    let mut tried: HashSet<usize> = initial.iter().map(|c| c.id).collect();
    let mut probes: Vec<(TrialResult, Option<Prepared>)> = workers.install(|| {
        initial.par_iter().enumerate().map(|(i, c)| run_probe(p, c, i, params.seed)).collect()
    });

    let mut spare: Vec<usize> = (0..total).filter(|id| !tried.contains(id)).collect();
    spare.shuffle(&mut rng_from(derive_seed(params.seed, TOPUP_STREAM)));
    let mut spare = spare.into_iter();
    loop {
        let valid = probes.iter().filter(|(t, _)| t.is_ok()).count();
        if valid >= params.n1 {
            break;
        }
        let batch: Vec<Config> = spare
            .by_ref()
            .take(params.n1 - valid)
            .map(|id| p.space.config(p.kind, id))
            .collect::<Result<_>>()?;
        if batch.is_empty() {
            break;
        }
        log::info!("topping up {} failed probes", batch.len());
        tried.extend(batch.iter().map(|c| c.id));
        let offset = probes.len();
        let more: Vec<_> = workers.install(|| {
            batch.par_iter().enumerate().map(|(i, c)| run_probe(p, c, offset + i, params.seed)).collect()
        });
        probes.extend(more);
    }

    let mut ranked: Vec<usize> = (0..probes.len()).filter(|&i| probes[i].0.is_ok()).collect();
    if ranked.is_empty() {
        return Err(Error::AllProbesFailed);
    }
    ranked.sort_by(|&a, &b| {
        let (ta, tb) = (&probes[a].0, &probes[b].0);
        let (ba, bb) = (ta.beta().expect("ok probe"), tb.beta().expect("ok probe"));
        let order = match params.direction {
            Direction::MinBeta => ba.total_cmp(&bb),
            Direction::MaxBeta => bb.total_cmp(&ba),
        };
        order.then(ta.config.id.cmp(&tb.config.id))
    });
    ranked.truncate(params.n2);
    ranked.sort_unstable();

    let selected: Vec<(Config, usize, Option<Prepared>)> = ranked
        .iter()
        .map(|&i| (probes[i].0.config.clone(), probes[i].0.sample_index, probes[i].1.take()))
        .collect();
    let full: Vec<TrialResult> = workers.install(|| {
        selected.into_par_iter().map(|(c, idx, data)| run_full(p, &c, idx, params.seed, data)).collect()
    });

    let trials = probes.into_iter().map(|(t, _)| t).chain(full).collect();
    finish(p, trials, start)
}

/// Trains `n` sampled configurations in full and returns the metric-best.
pub fn random_search(p: &Problem, n: usize, seed: u64) -> Result<SearchOutcome> {
    let start = Instant::now();
    if n == 0 {
        return Err(Error::InvalidParams("random search needs N >= 1".into()));
    }
    let configs = sample_configs(p.space, p.kind, n, seed)?;
    let trials = pool(p.jobs)?.install(|| {
        configs.par_iter().enumerate().map(|(i, c)| run_full(p, c, i, seed, None)).collect()
    });
    finish(p, trials, start)
}
