//! From-scratch learners whose loss smoothness has a closed form:
//! feedforward networks, logistic regression (a network with no hidden
//! layer) and Gaussian Naive Bayes with a shared covariance.

mod ff;
mod gnb;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use ff::{train_ff, train_lr, FfConfig, FfState, LrConfig, LrPenalty, LrState, Network, Penalty};
pub use gnb::{fit_gnb, fit_gnb_with_ridge, GnbState, MAX_RIDGE_DOUBLINGS, RIDGE_SCALE};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::stats::{Confusion, Metric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Ff,
    Lr,
    Gnb,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Ff => "ff",
            LearnerKind::Lr => "lr",
            LearnerKind::Gnb => "gnb",
        }
    }
}

/// Anything that scores classes for a batch of rows.
pub trait Classifier {
    fn n_features(&self) -> usize;

    /// `m × k` class scores; larger is more likely.
    fn scores(&self, x: &DMatrix<f64>) -> DMatrix<f64>;

    /// Argmax per row; ties go to the lowest class id.
    fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<usize>> {
        if x.ncols() != self.n_features() {
            return Err(Error::WidthMismatch { expected: self.n_features(), found: x.ncols() });
        }
        let s = self.scores(x);
        Ok(s.row_iter().map(|r| argmax(r.iter().copied())).collect())
    }
}

/// Index of the first maximum.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Confusion counts of `model` on `test`.
pub fn confusion(model: &dyn Classifier, test: &Dataset) -> Result<Confusion> {
    let pred = model.predict(test.x())?;
    Ok(Confusion::from_labels(test.y(), &pred, test.k()))
}

pub fn evaluate(model: &dyn Classifier, test: &Dataset, metric: Metric) -> Result<f64> {
    Ok(confusion(model, test)?.metric(metric))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax([0.5, 0.5]), 0);
        assert_eq!(argmax([0.1, 0.7, 0.7]), 1);
    }
}
