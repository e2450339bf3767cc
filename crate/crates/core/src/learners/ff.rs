use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from};

/// Weight penalty, in units of the mean (1/m-scaled) loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "lambda", rename_all = "snake_case")]
pub enum Penalty {
    None,
    /// `λ Σ|w|`; subgradient 0 at 0.
    L1(f64),
    /// `λ/2 ‖w‖²`.
    L2(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfConfig {
    /// Hidden layers; 0 gives the logistic-regression shape.
    pub hidden_layers: usize,
    pub units: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub penalty: Penalty,
    pub seed: u64,
}

impl Default for FfConfig {
    fn default() -> Self {
        FfConfig {
            hidden_layers: 1,
            units: 4,
            epochs: 50,
            learning_rate: 0.1,
            batch_size: 32,
            penalty: Penalty::None,
            seed: 0,
        }
    }
}

impl FfConfig {
    fn validate(&self) -> Result<()> {
        if self.units == 0 && self.hidden_layers > 0 {
            return Err(Error::InvalidConfig("units must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be finite and >= 0".into()));
        }
        match self.penalty {
            Penalty::L1(l) | Penalty::L2(l) if !(l >= 0.0 && l.is_finite()) => {
                Err(Error::InvalidConfig("penalty strength must be finite and >= 0".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Dense ReLU network with a softmax output; layer `l` computes
/// `z = Wᵀa + b` (weights stored `fan_in × fan_out`).
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

/// Per-layer values of one batch forward pass.
struct Trace {
    /// `activations[l]` is the input to layer `l`; the last entry is the softmax.
    activations: Vec<DMatrix<f64>>,
    pre: Vec<DMatrix<f64>>,
}

impl Network {
    /// Glorot-uniform weights `U(−r, r)`, `r = √(6/(fan_in + fan_out))`; zero biases.
    pub fn init(n_in: usize, hidden_layers: usize, units: usize, k: usize, seed: u64) -> Self {
        let mut rng = rng_from(seed);
        let mut dims = vec![n_in];
        dims.extend(std::iter::repeat_n(units, hidden_layers));
        dims.push(k);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in dims.windows(2) {
            let r = (6.0 / (w[0] + w[1]) as f64).sqrt();
            weights.push(DMatrix::from_fn(w[0], w[1], |_, _| rng.random_range(-r..r)));
            biases.push(DVector::zeros(w[1]));
        }
        Network { weights, biases }
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn n_in(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn n_out(&self) -> usize {
        self.weights.last().expect("at least one layer").ncols()
    }

    fn forward(&self, x: &DMatrix<f64>) -> Trace {
        let last = self.n_layers() - 1;
        let mut activations = vec![x.clone()];
        let mut pre = Vec::with_capacity(self.n_layers());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = activations[l].clone() * w;
            for mut row in z.row_iter_mut() {
                row += b.transpose();
            }
            let a = if l == last { softmax_rows(&z) } else { z.map(|v| v.max(0.0)) };
            pre.push(z);
            activations.push(a);
        }
        Trace { activations, pre }
    }

    /// Softmax outputs, one row per sample.
    pub fn predict_proba(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.forward(x).activations.pop().expect("output layer")
    }

    fn penalty_value(&self, penalty: Penalty) -> f64 {
        match penalty {
            Penalty::None => 0.0,
            Penalty::L1(l) => l * self.weights.iter().map(|w| w.iter().map(|v| v.abs()).sum::<f64>()).sum::<f64>(),
            Penalty::L2(l) => 0.5 * l * self.weights.iter().map(|w| w.norm_squared()).sum::<f64>(),
        }
    }

    /// Mean cross-entropy plus penalty on `(x, y)`.
    pub fn loss(&self, x: &DMatrix<f64>, y: &[usize], penalty: Penalty) -> f64 {
        let p = self.predict_proba(x);
        cross_entropy(&p, y) + self.penalty_value(penalty)
    }

    /// Backpropagated gradients of [`Network::loss`].
    pub fn gradients(
        &self,
        x: &DMatrix<f64>,
        y: &[usize],
        penalty: Penalty,
    ) -> (Vec<DMatrix<f64>>, Vec<DVector<f64>>) {
        let trace = self.forward(x);
        self.backward(&trace, y, penalty)
    }

    fn backward(
        &self,
        trace: &Trace,
        y: &[usize],
        penalty: Penalty,
    ) -> (Vec<DMatrix<f64>>, Vec<DVector<f64>>) {
        let batch = y.len() as f64;
        let layers = self.n_layers();
        // dE/dz at the output: (softmax − onehot)/batch
        let mut delta = trace.activations[layers].clone();
        for (i, &c) in y.iter().enumerate() {
            delta[(i, c)] -= 1.0;
        }
        delta /= batch;
        let mut gw = vec![DMatrix::zeros(0, 0); layers];
        let mut gb = vec![DVector::zeros(0); layers];
        for l in (0..layers).rev() {
            let mut dw = trace.activations[l].transpose() * &delta;
            match penalty {
                Penalty::None => {}
                Penalty::L1(lambda) => dw += self.weights[l].map(|w| lambda * sign0(w)),
                Penalty::L2(lambda) => dw += &self.weights[l] * lambda,
            }
            gb[l] = delta.row_sum().transpose();
            gw[l] = dw;
            if l > 0 {
                let mut back = &delta * self.weights[l].transpose();
                back.zip_apply(&trace.pre[l - 1], |d, z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
        }
        (gw, gb)
    }
}

fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn softmax_rows(z: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = z.clone();
    for mut row in out.row_iter_mut() {
        let max = row.max();
        row.apply(|v| *v = (*v - max).exp());
        let s = row.sum();
        row /= s;
    }
    out
}

fn cross_entropy(p: &DMatrix<f64>, y: &[usize]) -> f64 {
    let total: f64 = y.iter().enumerate().map(|(i, &c)| -p[(i, c)].max(f64::MIN_POSITIVE).ln()).sum();
    total / y.len() as f64
}

impl Classifier for Network {
    fn n_features(&self) -> usize {
        self.n_in()
    }

    fn scores(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.predict_proba(x)
    }
}

/// A trained network plus what the smoothness formula needs.
#[derive(Debug, Clone)]
pub struct FfState {
    pub network: Network,
    pub config: FfConfig,
    /// `‖a[L−1]‖₂` per training sample, recorded during the final epoch.
    pub activation_norms: Vec<f64>,
    /// Mean batch loss of each epoch.
    pub loss_history: Vec<f64>,
}

impl FfState {
    /// `‖W[L]‖_F` of the output layer.
    pub fn last_weight_norm(&self) -> f64 {
        self.network.weights.last().expect("output layer").norm()
    }

    pub fn activation_norm_sup(&self) -> f64 {
        self.activation_norms.iter().copied().fold(0.0, f64::max)
    }
}

impl Classifier for FfState {
    fn n_features(&self) -> usize {
        self.network.n_in()
    }

    fn scores(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.network.predict_proba(x)
    }
}

/// Mini-batch gradient descent on mean cross-entropy.
///
/// `epochs_override` replaces `cfg.epochs`; the smoothness probe passes 1.
pub fn train_ff(train: &Dataset, cfg: &FfConfig, epochs_override: Option<usize>) -> Result<FfState> {
    cfg.validate()?;
    let epochs = epochs_override.unwrap_or(cfg.epochs);
    if epochs == 0 {
        return Err(Error::InvalidConfig("epochs must be >= 1".into()));
    }
    let mut net = Network::init(train.n(), cfg.hidden_layers, cfg.units, train.k(), derive_seed(cfg.seed, 0));
    let mut rng = rng_from(derive_seed(cfg.seed, 1));
    let m = train.m();
    let mut order: Vec<usize> = (0..m).collect();
    let mut activation_norms = vec![0.0; m];
    let mut loss_history = Vec::with_capacity(epochs);
    let last_hidden = net.n_layers() - 1;

    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xb = train.x().select_rows(batch);
            let yb: Vec<usize> = batch.iter().map(|&i| train.y()[i]).collect();
            let trace = net.forward(&xb);
            let loss = cross_entropy(&trace.activations[net.n_layers()], &yb) + net.penalty_value(cfg.penalty);
            if !loss.is_finite() {
                return Err(Error::NumericOverflow { epoch: epoch + 1 });
            }
            epoch_loss += loss * batch.len() as f64;
            if epoch + 1 == epochs {
                for (r, &i) in batch.iter().enumerate() {
                    activation_norms[i] = trace.activations[last_hidden].row(r).norm();
                }
            }
            let (gw, gb) = net.backward(&trace, &yb, cfg.penalty);
            for (w, g) in net.weights.iter_mut().zip(&gw) {
                *w -= g * cfg.learning_rate;
            }
            for (b, g) in net.biases.iter_mut().zip(&gb) {
                *b -= g * cfg.learning_rate;
            }
        }
        let mean = epoch_loss / m as f64;
        if !mean.is_finite() || net.weights.iter().any(|w| w.iter().any(|v| !v.is_finite())) {
            return Err(Error::NumericOverflow { epoch: epoch + 1 });
        }
        loss_history.push(mean);
    }
    Ok(FfState { network: net, config: cfg.clone(), activation_norms, loss_history })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrPenalty {
    None,
    L1,
    L2,
}

/// Logistic regression settings. `c` is the inverse regularization strength,
/// so the mean-loss penalty coefficient is `1/(c·m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrConfig {
    pub penalty: LrPenalty,
    pub c: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig { penalty: LrPenalty::L2, c: 1.0, epochs: 50, learning_rate: 0.1, batch_size: 32, seed: 0 }
    }
}

impl LrConfig {
    /// The equivalent zero-hidden-layer network config for `m` training rows.
    pub fn as_ff(&self, m: usize) -> Result<FfConfig> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!("C must be positive, got {}", self.c)));
        }
        let lambda = 1.0 / (self.c * m as f64);
        let penalty = match self.penalty {
            LrPenalty::None => Penalty::None,
            LrPenalty::L1 => Penalty::L1(lambda),
            LrPenalty::L2 => Penalty::L2(lambda),
        };
        Ok(FfConfig {
            hidden_layers: 0,
            units: 1,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            penalty,
            seed: self.seed,
        })
    }
}

/// Trained logistic regression: `W` is `n × k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LrState {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub penalty: Penalty,
    pub loss_history: Vec<f64>,
}

impl LrState {
    pub fn weight_norm(&self) -> f64 {
        self.weights.norm()
    }
}

impl Classifier for LrState {
    fn n_features(&self) -> usize {
        self.weights.nrows()
    }

    fn scores(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = x * &self.weights;
        for mut row in z.row_iter_mut() {
            row += self.bias.transpose();
        }
        softmax_rows(&z)
    }
}

/// Runs the zero-hidden-layer network path with the configured penalty.
pub fn train_lr(train: &Dataset, cfg: &LrConfig, epochs_override: Option<usize>) -> Result<LrState> {
    let ff = cfg.as_ff(train.m())?;
    let state = train_ff(train, &ff, epochs_override)?;
    let Network { mut weights, mut biases } = state.network;
    Ok(LrState {
        weights: weights.pop().expect("one layer"),
        bias: biases.pop().expect("one layer"),
        penalty: ff.penalty,
        loss_history: state.loss_history,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::oracle::fd_network_gradient;
    use crate::synth;

    #[test]
    fn softmax_rows_sum_to_one() {
        let net = Network::init(3, 2, 4, 3, 5);
        let x = DMatrix::from_fn(10, 3, |i, j| (i as f64 - 4.0) * (j as f64 + 0.5) * 10.0);
        for row in net.predict_proba(&x).row_iter() {
            assert_abs_diff_eq!(row.sum(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn one_epoch_override() {
        let d = synth::blobs(40, 2, 3.0, 1.0, 1);
        let st = train_ff(&d, &FfConfig::default(), Some(1)).unwrap();
        assert_eq!(st.loss_history.len(), 1);
        assert!(st.activation_norms.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn separable_blobs_reach_full_accuracy() {
        let d = synth::blobs(60, 2, 4.0, 0.5, 2);
        // brute-force separability check: some direction on a fine angular grid separates the classes
        let separable = (0..360).any(|deg| {
            let t = (deg as f64).to_radians();
            let proj: Vec<f64> = (0..d.m()).map(|i| d.x()[(i, 0)] * t.cos() + d.x()[(i, 1)] * t.sin()).collect();
            let max0 = (0..d.m()).filter(|&i| d.y()[i] == 0).map(|i| proj[i]).fold(f64::MIN, f64::max);
            let min1 = (0..d.m()).filter(|&i| d.y()[i] == 1).map(|i| proj[i]).fold(f64::MAX, f64::min);
            max0 < min1
        });
        assert!(separable);
        let cfg = FfConfig { hidden_layers: 1, units: 4, epochs: 200, learning_rate: 0.1, batch_size: 16, ..Default::default() };
        let st = train_ff(&d, &cfg, None).unwrap();
        let pred = st.predict(d.x()).unwrap();
        assert_eq!(pred, d.y());
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let d = synth::blobs(12, 2, 1.0, 1.0, 3);
        let penalties = [Penalty::None, Penalty::L2(0.3)];
        for (seed, penalty) in (0..4).zip(penalties.iter().cycle()) {
            let net = Network::init(2, 1, 3, 2, seed);
            let (gw, gb) = net.gradients(d.x(), d.y(), *penalty);
            let (fw, fb) = fd_network_gradient(&net, d.x(), d.y(), *penalty, 1e-5);
            let analytic: Vec<f64> = gw.iter().flat_map(|m| m.iter().copied()).chain(gb.iter().flat_map(|v| v.iter().copied())).collect();
            let numeric: Vec<f64> = fw.iter().flat_map(|m| m.iter().copied()).chain(fb.iter().flat_map(|v| v.iter().copied())).collect();
            let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt() + numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(diff / scale < 1e-6, "seed {seed}: rel err {}", diff / scale);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let d = synth::blobs(50, 3, 2.0, 1.0, 4);
        let cfg = FfConfig { hidden_layers: 2, units: 3, epochs: 5, seed: 11, ..Default::default() };
        let a = train_ff(&d, &cfg, None).unwrap();
        let b = train_ff(&d, &cfg, None).unwrap();
        assert_eq!(a.last_weight_norm().to_bits(), b.last_weight_norm().to_bits());
        assert_eq!(a.network, b.network);
    }

    #[test]
    fn overflow_is_reported() {
        let d = synth::blobs(20, 2, 1e150, 1e150, 5);
        let cfg = FfConfig { learning_rate: 1e100, epochs: 3, ..Default::default() };
        assert!(matches!(train_ff(&d, &cfg, None), Err(Error::NumericOverflow { .. })));
    }

    #[test]
    fn lr_learns_sign_boundary() {
        let rows: Vec<Vec<f64>> = (-20..20).map(|i| vec![i as f64 + 0.5]).collect();
        let y: Vec<usize> = rows.iter().map(|r| usize::from(r[0] > 0.0)).collect();
        let d = Dataset::from_rows("line", &rows, y, 2).unwrap();
        let cfg = LrConfig { penalty: LrPenalty::None, epochs: 300, learning_rate: 0.05, batch_size: 8, ..Default::default() };
        let st = train_lr(&d, &cfg, None).unwrap();
        // exhaustive over training points
        assert_eq!(st.predict(d.x()).unwrap(), d.y());
    }

    #[test]
    fn zero_learning_rate_keeps_init() {
        let d = synth::blobs(20, 2, 1.0, 1.0, 6);
        let cfg = LrConfig { learning_rate: 0.0, seed: 3, ..Default::default() };
        let st = train_lr(&d, &cfg, Some(1)).unwrap();
        let init = Network::init(2, 0, 1, 2, derive_seed(3, 0));
        assert_eq!(st.weights, init.weights[0]);
    }

    #[test]
    fn weaker_regularization_gives_larger_weights() {
        let d = synth::blobs(80, 3, 2.0, 1.0, 7);
        let run = |c| {
            let cfg = LrConfig { penalty: LrPenalty::L2, c, epochs: 200, seed: 1, ..Default::default() };
            train_lr(&d, &cfg, None).unwrap().weight_norm()
        };
        assert!(run(10.0) > run(0.1));
    }
}
