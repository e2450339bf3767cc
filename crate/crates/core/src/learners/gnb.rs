use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::Classifier;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Initial ridge is `RIDGE_SCALE · trace(Σ)/n` (or `RIDGE_SCALE` when the trace is 0).
pub const RIDGE_SCALE: f64 = 1e-6;
pub const MAX_RIDGE_DOUBLINGS: usize = 20;

/// Gaussian class-conditional model with one shared covariance.
#[derive(Debug, Clone)]
pub struct GnbState {
    pub priors: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    /// Pooled within-class covariance plus `ridge · I`.
    pub cov: DMatrix<f64>,
    pub cov_inv: DMatrix<f64>,
    pub ridge: f64,
    log_det: f64,
}

/// Priors, class means and the pooled covariance.
type Moments = (Vec<f64>, Vec<DVector<f64>>, DMatrix<f64>);

fn moments(train: &Dataset) -> Result<Moments> {
    let (m, n, k) = (train.m(), train.n(), train.k());
    let counts = train.class_counts();
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(c));
    }
    let mut means = vec![DVector::zeros(n); k];
    for (i, &c) in train.y().iter().enumerate() {
        means[c] += train.x().row(i).transpose();
    }
    for (mu, &count) in means.iter_mut().zip(&counts) {
        *mu /= count as f64;
    }
    let mut centered = train.x().clone();
    for (i, &c) in train.y().iter().enumerate() {
        let mut row = centered.row_mut(i);
        row -= means[c].transpose();
    }
    let cov = centered.tr_mul(&centered) / m as f64;
    let priors = counts.iter().map(|&c| c as f64 / m as f64).collect();
    Ok((priors, means, cov))
}

fn finish(priors: Vec<f64>, means: Vec<DVector<f64>>, cov: DMatrix<f64>, ridge: f64, chol: Cholesky<f64, Dyn>) -> GnbState {
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let cov_inv = chol.inverse();
    GnbState { priors, means, cov, cov_inv, ridge, log_det }
}

/// Fits class means, priors and the pooled covariance. The ridge starts at
/// `RIDGE_SCALE · trace/n` and doubles until the covariance is positive definite.
pub fn fit_gnb(train: &Dataset) -> Result<GnbState> {
    let (priors, means, pooled) = moments(train)?;
    let n = train.n();
    let mut ridge = RIDGE_SCALE * pooled.trace() / n as f64;
    if ridge <= 0.0 || !ridge.is_finite() {
        ridge = RIDGE_SCALE;
    }
    for _ in 0..=MAX_RIDGE_DOUBLINGS {
        let cov = &pooled + DMatrix::identity(n, n) * ridge;
        if let Some(chol) = Cholesky::new(cov.clone()) {
            if chol.l_dirty().diagonal().iter().all(|d| *d > 0.0 && d.is_finite()) {
                return Ok(finish(priors, means, cov, ridge, chol));
            }
        }
        ridge *= 2.0;
    }
    Err(Error::SingularCovariance)
}

/// Like [`fit_gnb`] with a fixed ridge.
pub fn fit_gnb_with_ridge(train: &Dataset, ridge: f64) -> Result<GnbState> {
    let (priors, means, pooled) = moments(train)?;
    let n = train.n();
    let cov = pooled + DMatrix::identity(n, n) * ridge;
    let chol = Cholesky::new(cov.clone()).ok_or(Error::SingularCovariance)?;
    Ok(finish(priors, means, cov, ridge, chol))
}

impl GnbState {
    pub fn n(&self) -> usize {
        self.cov.nrows()
    }

    /// Joint Gaussian log-likelihood `Σ log φ_y + log N(x; μ_y, Σ)` of `data`.
    pub fn log_likelihood(&self, data: &Dataset) -> f64 {
        let n = self.n() as f64;
        let norm = -0.5 * (n * (2.0 * std::f64::consts::PI).ln() + self.log_det);
        (0..data.m())
            .map(|i| {
                let c = data.y()[i];
                let w = data.x().row(i).transpose() - &self.means[c];
                self.priors[c].ln() + norm - 0.5 * (w.transpose() * &self.cov_inv * &w)[0]
            })
            .sum()
    }
}

impl Classifier for GnbState {
    fn n_features(&self) -> usize {
        self.n()
    }

    fn scores(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), self.means.len(), |i, c| {
            let w = x.row(i).transpose() - &self.means[c];
            self.priors[c].ln() - 0.5 * (w.transpose() * &self.cov_inv * &w)[0]
        })
    }
}
