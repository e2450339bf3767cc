//! Smoothness-guided hyper-parameter optimization.
//!
//! Candidate configurations are ranked by a closed-form β-smoothness probe of
//! their loss landscape (one training epoch for neural learners, pure data
//! statistics for Gaussian Naive Bayes). Only the flattest few are trained to
//! completion, and results are compared with rank-based statistics.
//!
//! Module map:
//!
//! * [`data`]: CSV loading, dense label encoding, split policies.
//! * [`preprocess`]: scalers, SMOTE, fuzzy sampling, label engineering.
//! * [`learners`]: feedforward nets, logistic regression, Gaussian Naive Bayes.
//! * [`smoothness`]: per-learner β formulas, regularization addend, profiling.
//! * [`hpo`]: search space, sampling, the two-stage optimizer, coverage bounds.
//! * [`stats`]: task metrics, Kruskal-Wallis, Mann-Whitney U, Benjamini-Hochberg.
//! * [`experiment`]: declarative experiment configs, the runner and JSON reports.
//! * [`selftest`]: the acceptance checks against independent oracles.

pub mod data;
pub mod error;
pub mod experiment;
pub mod hpo;
pub mod kdtree;
pub mod learners;
pub mod oracle;
pub mod preprocess;
pub mod rng;
pub mod selftest;
pub mod smoothness;
pub mod stats;
pub mod synth;

pub use data::{Dataset, SplitPolicy};
pub use error::{Error, Result};
