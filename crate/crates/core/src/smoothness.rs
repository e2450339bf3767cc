//! β-smoothness of the training loss for each supported learner.
//!
//! β bounds the Lipschitz constant of the loss gradient, i.e. the Hessian
//! norm. All norms are Frobenius; only the ordering of β within one dataset
//! matters to the optimizer, so proportionality constants are taken as 1.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::{fit_gnb, FfConfig, FfState, GnbState, LearnerKind, LrState, Penalty};

/// The quantities a β value was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub k: usize,
    pub m: usize,
    /// `sup ‖a[L−1]‖₂` (or `sup ‖x‖₂` for logistic regression).
    pub activation_norm_sup: Option<f64>,
    /// `‖W[L]‖_F`.
    pub weight_norm: Option<f64>,
    /// Sample attaining the supremum.
    pub argmax_sample: Option<usize>,
    pub raw_beta: f64,
    pub reg_addend: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    /// `raw_beta + reg_addend`.
    pub beta: f64,
    pub learner: LearnerKind,
    pub components: Components,
    pub norm_kind: String,
}

impl SmoothnessReport {
    fn new(learner: LearnerKind, components: Components) -> Self {
        SmoothnessReport {
            beta: components.raw_beta + components.reg_addend,
            learner,
            components,
            norm_kind: "frobenius".into(),
        }
    }

    /// Replaces the regularization addend and recomputes β.
    pub fn with_regularization(mut self, reg: &Regularization) -> Self {
        self.components.reg_addend = regularization_addend(reg);
        self.beta = self.components.raw_beta + self.components.reg_addend;
        self
    }
}

/// A weight-penalty term added to the loss.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularization {
    None,
    /// `λ/2 ‖w‖²`.
    L2(f64),
    /// `‖Γw‖²`.
    Tikhonov(DMatrix<f64>),
}

impl From<Penalty> for Regularization {
    /// L1 is not twice differentiable at 0 and contributes no curvature.
    fn from(p: Penalty) -> Self {
        match p {
            Penalty::L2(l) => Regularization::L2(l),
            Penalty::None | Penalty::L1(_) => Regularization::None,
        }
    }
}

/// Increase in β from a penalty: `λ` for L2, `2‖Γ‖²_F` for Tikhonov.
pub fn regularization_addend(reg: &Regularization) -> f64 {
    match reg {
        Regularization::None => 0.0,
        Regularization::L2(lambda) => *lambda,
        Regularization::Tikhonov(gamma) => 2.0 * gamma.norm_squared(),
    }
}

fn class_factor(k: usize, m: usize) -> f64 {
    (k as f64 - 1.0) / (k as f64 * m as f64)
}

/// `β = (k−1)/(k·m) · sup ‖a[L−1]‖ / ‖W[L]‖` from the final probe epoch.
pub fn smoothness_ff(state: &FfState, train: &Dataset) -> Result<SmoothnessReport> {
    let weight_norm = state.last_weight_norm();
    if weight_norm <= 0.0 {
        return Err(Error::ZeroWeightNorm);
    }
    let (argmax, sup) = sup_with_index(&state.activation_norms);
    let (k, m) = (train.k(), train.m());
    let components = Components {
        k,
        m,
        activation_norm_sup: Some(sup),
        weight_norm: Some(weight_norm),
        argmax_sample: argmax,
        raw_beta: class_factor(k, m) * sup / weight_norm,
        reg_addend: regularization_addend(&state.config.penalty.into()),
    };
    Ok(SmoothnessReport::new(LearnerKind::Ff, components))
}

/// `β = (k−1)/(k·m) · sup ‖x‖ / ‖W‖` over the training rows.
pub fn smoothness_lr(state: &LrState, train: &Dataset) -> Result<SmoothnessReport> {
    let weight_norm = state.weight_norm();
    if weight_norm <= 0.0 {
        return Err(Error::ZeroWeightNorm);
    }
    let norms: Vec<f64> = train.x().row_iter().map(|r| r.norm()).collect();
    let (argmax, sup) = sup_with_index(&norms);
    let (k, m) = (train.k(), train.m());
    let components = Components {
        k,
        m,
        activation_norm_sup: Some(sup),
        weight_norm: Some(weight_norm),
        argmax_sample: argmax,
        raw_beta: class_factor(k, m) * sup / weight_norm,
        reg_addend: regularization_addend(&state.penalty.into()),
    };
    Ok(SmoothnessReport::new(LearnerKind::Lr, components))
}

fn sup_with_index(values: &[f64]) -> (Option<usize>, f64) {
    values
        .iter()
        .enumerate()
        .fold((None, 0.0), |(bi, bv), (i, &v)| if bi.is_none() || v > bv { (Some(i), v) } else { (bi, bv) })
}

/// Frobenius norm of the `n² × n²` Hessian tensor
/// `P⊗̇G − ½P⊗̇P + G⊗̇P` for one deviation `w = x − μ_y`, where `P = Σ⁻¹`,
/// `G = P(wwᵀ + ½Σ)P` and `(M⊗̇N)_{ijkl} = M_ik N_jl`.
///
/// The tensor is a sum of Kronecker products, so its squared norm expands
/// to `2⟨P,P⟩⟨G,G⟩ + ¼⟨P,P⟩² + 2⟨P,G⟩² − 2⟨P,P⟩⟨P,G⟩`. With `v = Pw`,
/// `s = ‖v‖²` and `t = vᵀPv`, `G = vvᵀ + ½P` gives `⟨G,G⟩ = s² + t + ¼⟨P,P⟩`
/// and `⟨P,G⟩ = t + ½⟨P,P⟩`, which collapses to the cancellation-free
/// `2⟨P,P⟩(s² + t) + 2t² + ¼⟨P,P⟩²`; each sample costs `O(n²)`.
pub fn gnb_sample_beta(cov_inv: &DMatrix<f64>, w: &nalgebra::DVector<f64>) -> f64 {
    let pp = cov_inv.norm_squared();
    let v = cov_inv * w;
    let s = v.norm_squared();
    let t = (v.transpose() * cov_inv * &v)[0].max(0.0);
    (2.0 * pp * (s * s + t) + 2.0 * t * t + 0.25 * pp * pp).sqrt()
}

/// `β = sup_x ‖∂G/∂Σ‖` over the training samples, each with its own class mean.
pub fn smoothness_gnb(state: &GnbState, train: &Dataset) -> Result<SmoothnessReport> {
    if train.n() != state.n() {
        return Err(Error::WidthMismatch { expected: state.n(), found: train.n() });
    }
    if state.cov_inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularCovariance);
    }
    let betas: Vec<f64> = (0..train.m())
        .map(|i| {
            let w = train.x().row(i).transpose() - &state.means[train.y()[i]];
            gnb_sample_beta(&state.cov_inv, &w)
        })
        .collect();
    let (argmax, sup) = sup_with_index(&betas);
    let components = Components {
        k: train.k(),
        m: train.m(),
        activation_norm_sup: None,
        weight_norm: None,
        argmax_sample: argmax,
        raw_beta: sup,
        reg_addend: 0.0,
    };
    Ok(SmoothnessReport::new(LearnerKind::Gnb, components))
}

/// Central second difference `|E(x+h) − 2E(x) + E(x−h)| / h²`; error is `O(h²)`.
pub fn finite_diff_smoothness(mut e: impl FnMut(f64) -> f64, x: f64, h: f64) -> Result<f64> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidParams(format!("step h must be positive, got {h}")));
    }
    let (a, b, c) = (e(x + h), e(x), e(x - h));
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(Error::NonFiniteProbe);
    }
    Ok(((a - 2.0 * b + c) / (h * h)).abs())
}

/// [`finite_diff_smoothness`] along coordinate `axis` of a multivariate probe.
pub fn finite_diff_smoothness_along(
    e: impl Fn(&[f64]) -> f64,
    x: &[f64],
    axis: usize,
    h: f64,
) -> Result<f64> {
    let mut p = x.to_vec();
    finite_diff_smoothness(
        |t| {
            p[axis] = t;
            e(&p)
        },
        x[axis],
        h,
    )
}

/// Mean β of the two reference populations: software-analytics data
/// clusters near 2, generic machine-learning benchmarks near 5.
pub const SE_REFERENCE_MEAN: f64 = 2.0;
pub const AI_REFERENCE_MEAN: f64 = 5.0;

/// Default upper β for which the smoothness-guided optimizer is recommended.
pub const DEFAULT_RECOMMEND_THRESHOLD: f64 = 5.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Smoothie,
    Standard,
}

/// `Smoothie` iff `beta ≤ threshold` (boundary inclusive).
pub fn recommend_optimizer(beta: f64, threshold: f64) -> Optimizer {
    if beta <= threshold {
        Optimizer::Smoothie
    } else {
        Optimizer::Standard
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataLabel {
    #[serde(rename = "SE-like")]
    SeLike,
    #[serde(rename = "AI-like")]
    AiLike,
}

impl std::fmt::Display for DataLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DataLabel::SeLike => "SE-like",
            DataLabel::AiLike => "AI-like",
        })
    }
}

/// Which learner the profile probes.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileLearner {
    /// Closed form from data moments; no training.
    Gnb,
    /// One epoch of the given network.
    Ff(FfConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub beta: f64,
    pub label: DataLabel,
    pub recommendation: Optimizer,
    pub threshold: f64,
    pub report: SmoothnessReport,
}

/// Profiles a dataset: SE-like iff `β < threshold`.
pub fn dataset_profile(d: &Dataset, threshold: f64) -> Result<Profile> {
    dataset_profile_with(d, threshold, &ProfileLearner::Gnb)
}

pub fn dataset_profile_with(d: &Dataset, threshold: f64, learner: &ProfileLearner) -> Result<Profile> {
    let report = match learner {
        ProfileLearner::Gnb => smoothness_gnb(&fit_gnb(d)?, d)?,
        ProfileLearner::Ff(cfg) => smoothness_ff(&crate::learners::train_ff(d, cfg, Some(1))?, d)?,
    };
    let beta = report.beta;
    Ok(Profile {
        beta,
        label: if beta < threshold { DataLabel::SeLike } else { DataLabel::AiLike },
        recommendation: recommend_optimizer(beta, threshold),
        threshold,
        report,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use proptest::prelude::*;

    use super::*;
    use crate::learners::{train_ff, train_lr, LrConfig, LrPenalty, Network};
    use crate::oracle::dense_gnb_tensor_norm;
    use crate::synth;

    fn fake_ff(k: usize, m: usize, sup: f64, w_norm: f64) -> (FfState, Dataset) {
        let mut net = Network::init(2, 1, 2, k, 0);
        let last = net.weights.last_mut().unwrap();
        let scale = w_norm / last.norm();
        *last *= scale;
        let mut norms = vec![sup / 2.0; m];
        norms[m / 2] = sup;
        let state = FfState { network: net, config: FfConfig::default(), activation_norms: norms, loss_history: vec![] };
        let rows: Vec<Vec<f64>> = (0..m).map(|i| vec![i as f64, 0.0]).collect();
        let y = (0..m).map(|i| i % k).collect();
        (state, Dataset::from_rows("f", &rows, y, k).unwrap())
    }

    #[test]
    fn ff_formula_plug_in() {
        let (st, d) = fake_ff(2, 100, 10.0, 5.0);
        let r = smoothness_ff(&st, &d).unwrap();
        assert_abs_diff_eq!(r.beta, 0.01, epsilon = 1e-15);
        assert_eq!(r.components.argmax_sample, Some(50));
    }

    #[test]
    fn doubling_last_weights_halves_beta() {
        let (mut st, d) = fake_ff(3, 60, 4.0, 2.0);
        let b1 = smoothness_ff(&st, &d).unwrap().beta;
        *st.network.weights.last_mut().unwrap() *= 2.0;
        let b2 = smoothness_ff(&st, &d).unwrap().beta;
        assert_abs_diff_eq!(b2, b1 / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_weights_rejected() {
        let (mut st, d) = fake_ff(2, 10, 1.0, 1.0);
        st.network.weights.last_mut().unwrap().fill(0.0);
        assert!(matches!(smoothness_ff(&st, &d), Err(Error::ZeroWeightNorm)));
    }

    #[test]
    fn lr_formula_plug_in() {
        let mut rows = vec![vec![1.0, 0.0]; 200];
        rows[7] = vec![12.0, 16.0];
        let y = (0..200).map(|i| i % 2).collect();
        let d = Dataset::from_rows("lr", &rows, y, 2).unwrap();
        let w = DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 2.0, 2.0]);
        let st = LrState { weights: w, bias: DVector::zeros(2), penalty: Penalty::None, loss_history: vec![] };
        let r = smoothness_lr(&st, &d).unwrap();
        assert_abs_diff_eq!(r.beta, 0.0125, epsilon = 1e-15);
    }

    #[test]
    fn minmax_scaled_lr_bound() {
        let d = synth::blobs(80, 4, 2.0, 1.0, 3);
        let (x, _, _) = crate::preprocess::fit_apply_scaler(d.x(), d.x(), crate::preprocess::ScalerKind::MinMax);
        let d = d.with_features(x).unwrap();
        let st = train_lr(&d, &LrConfig { penalty: LrPenalty::None, ..Default::default() }, Some(1)).unwrap();
        let r = smoothness_lr(&st, &d).unwrap();
        let bound = (d.k() - 1) as f64 * (d.n() as f64).sqrt() / (d.k() * d.m()) as f64 / st.weight_norm();
        assert!(r.beta <= bound + 1e-15);
    }

    #[test]
    fn lr_equals_zero_hidden_ff() {
        let d = synth::blobs(90, 3, 2.0, 1.0, 4);
        let lr_cfg = LrConfig { penalty: LrPenalty::L2, c: 1.0, seed: 5, ..Default::default() };
        let lr = smoothness_lr(&train_lr(&d, &lr_cfg, Some(1)).unwrap(), &d).unwrap();
        let ff = smoothness_ff(&train_ff(&d, &lr_cfg.as_ff(d.m()).unwrap(), Some(1)).unwrap(), &d).unwrap();
        assert_abs_diff_eq!(lr.beta, ff.beta, epsilon = 1e-9);
    }

    #[test]
    fn gnb_identity_zero_deviation() {
        let p = DMatrix::identity(2, 2);
        assert_abs_diff_eq!(gnb_sample_beta(&p, &DVector::zeros(2)), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn gnb_scalar_case() {
        let p = DMatrix::identity(1, 1);
        assert_abs_diff_eq!(gnb_sample_beta(&p, &DVector::from_element(1, 1.0)), 2.5, epsilon = 1e-15);
    }

    #[test]
    fn gnb_matches_dense_tensor() {
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.7]);
        let w = DVector::from_column_slice(&[0.4, -1.1]);
        assert_abs_diff_eq!(gnb_sample_beta(&p, &w), dense_gnb_tensor_norm(&p, &w), epsilon = 1e-10);
    }

    #[test]
    fn gnb_invariant_to_duplication_and_permutation() {
        let d = synth::gaussian_classes(40, 3, 2, 8);
        let b = smoothness_gnb(&fit_gnb(&d).unwrap(), &d).unwrap().beta;
        let idx: Vec<usize> = (0..d.m()).chain(0..d.m()).collect();
        let dup = d.subset(&idx).unwrap();
        let b_dup = smoothness_gnb(&fit_gnb(&dup).unwrap(), &dup).unwrap().beta;
        assert_abs_diff_eq!(b, b_dup, epsilon = 1e-9 * b);
        let rev: Vec<usize> = (0..d.m()).rev().collect();
        let perm = d.subset(&rev).unwrap();
        let b_perm = smoothness_gnb(&fit_gnb(&perm).unwrap(), &perm).unwrap().beta;
        assert_abs_diff_eq!(b, b_perm, epsilon = 1e-9 * b);
    }

    #[test]
    fn regularization_addends() {
        assert_eq!(regularization_addend(&Regularization::L2(0.1)), 0.1);
        assert_eq!(regularization_addend(&Regularization::Tikhonov(DMatrix::identity(2, 2))), 4.0);
        assert_eq!(regularization_addend(&Regularization::None), 0.0);
    }

    #[test]
    fn trained_l2_penalty_lands_in_report() {
        let d = synth::blobs(40, 2, 2.0, 1.0, 9);
        let cfg = FfConfig { penalty: Penalty::L2(0.25), ..Default::default() };
        let r = smoothness_ff(&train_ff(&d, &cfg, Some(1)).unwrap(), &d).unwrap();
        assert_eq!(r.components.reg_addend, 0.25);
        assert_eq!(r.beta, r.components.raw_beta + 0.25);
    }

    #[test]
    fn finite_differences() {
        assert_eq!(finite_diff_smoothness(|x| x * x, 1.0, 0.5).unwrap(), 2.0);
        assert_eq!(finite_diff_smoothness(|x| x * x, -3.0, 0.25).unwrap(), 2.0);
        assert_abs_diff_eq!(finite_diff_smoothness(|x| 3.0 * x + 1.0, 2.0, 0.5).unwrap(), 0.0, epsilon = 1e-12);
        // (1.1⁴ − 2 + 0.9⁴)/0.01 = (1.4641 − 2 + 0.6561)/0.01
        assert_abs_diff_eq!(finite_diff_smoothness(|x| x.powi(4), 1.0, 0.1).unwrap(), 12.02, epsilon = 1e-9);
        assert!(matches!(finite_diff_smoothness(|x| 1.0 / x, 0.0, 0.1), Err(Error::NonFiniteProbe)));
        assert!(finite_diff_smoothness(|x| x, 0.0, 0.0).is_err());
    }

    #[test]
    fn gnb_nll_probe_along_sigma_entry() {
        let d = synth::gaussian_classes(30, 2, 2, 10);
        let st = fit_gnb(&d).unwrap();
        let base = [st.cov[(0, 0)], st.cov[(0, 1)], st.cov[(1, 1)]];
        let nll = |s: &[f64]| {
            let cov = DMatrix::from_row_slice(2, 2, &[s[0], s[1], s[1], s[2]]);
            let Some(chol) = cov.clone().cholesky() else { return f64::NAN };
            let inv = chol.inverse();
            let logdet = cov.determinant().ln();
            (0..d.m())
                .map(|i| {
                    let w = d.x().row(i).transpose() - &st.means[d.y()[i]];
                    0.5 * logdet + 0.5 * (w.transpose() * &inv * &w)[0]
                })
                .sum::<f64>()
        };
        for axis in 0..3 {
            let a = finite_diff_smoothness_along(nll, &base, axis, 1e-3).unwrap();
            let b = finite_diff_smoothness_along(nll, &base, axis, 1e-3).unwrap();
            assert!(a.is_finite());
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn recommendation_threshold() {
        assert_eq!(recommend_optimizer(2.0, DEFAULT_RECOMMEND_THRESHOLD), Optimizer::Smoothie);
        assert_eq!(recommend_optimizer(9.4, DEFAULT_RECOMMEND_THRESHOLD), Optimizer::Standard);
        assert_eq!(recommend_optimizer(5.6, DEFAULT_RECOMMEND_THRESHOLD), Optimizer::Smoothie);
        const { assert!(SE_REFERENCE_MEAN < DEFAULT_RECOMMEND_THRESHOLD && AI_REFERENCE_MEAN < DEFAULT_RECOMMEND_THRESHOLD) };
    }

    #[test]
    fn profile_labels_by_threshold() {
        // wide within-class spread ⇒ small Σ⁻¹ ⇒ small β
        let wide = synth::blobs(100, 2, 50.0, 20.0, 1);
        let p = dataset_profile(&wide, DEFAULT_RECOMMEND_THRESHOLD).unwrap();
        assert_eq!((p.label, p.recommendation), (DataLabel::SeLike, Optimizer::Smoothie));
        let tight = synth::blobs(100, 2, 1.0, 0.1, 1);
        let p = dataset_profile(&tight, DEFAULT_RECOMMEND_THRESHOLD).unwrap();
        assert_eq!((p.label, p.recommendation), (DataLabel::AiLike, Optimizer::Standard));
        let ff = dataset_profile_with(&wide, 5.6, &ProfileLearner::Ff(FfConfig::default())).unwrap();
        assert_eq!(ff.report.learner, LearnerKind::Ff);
    }

    proptest! {
        #[test]
        fn positive_rescaling_keeps_top_n(betas in prop::collection::vec(0.0f64..100.0, 2..40), c in 0.01f64..100.0, n2 in 1usize..10) {
            let top = |b: &[f64]| {
                let mut idx: Vec<usize> = (0..b.len()).collect();
                idx.sort_by(|&i, &j| b[i].total_cmp(&b[j]).then(i.cmp(&j)));
                idx.truncate(n2);
                idx
            };
            let scaled: Vec<f64> = betas.iter().map(|b| b * c).collect();
            prop_assert_eq!(top(&betas), top(&scaled));
        }

        #[test]
        fn l2_shift_is_exactly_lambda(lambda in 0.0f64..10.0, seed in 0u64..50) {
            let d = synth::blobs(30, 2, 2.0, 1.0, seed);
            let st = train_ff(&d, &FfConfig { seed, ..Default::default() }, Some(1)).unwrap();
            let base = smoothness_ff(&st, &d).unwrap();
            let reg = base.clone().with_regularization(&Regularization::L2(lambda));
            prop_assert_eq!(reg.components.reg_addend, lambda);
            prop_assert_eq!(reg.beta, base.components.raw_beta + lambda);
            prop_assert!(((reg.beta - base.beta) - lambda).abs() <= 1e-12 * (1.0 + lambda));
        }
    }
}
