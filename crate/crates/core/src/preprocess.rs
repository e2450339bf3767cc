//! Data pre-processing options: five column scalers and three resamplers.
//!
//! Scalers are fitted on the training matrix only and replayed on test.
//! Resamplers (SMOTE, fuzzy sampling, label engineering) touch the training
//! set only.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kdtree::KdTree;
use crate::rng::{derive_seed, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalerKind {
    /// `x / ‖x‖` over the column.
    Normalize,
    /// `(x − μ) / σ` with the population σ.
    Standardize,
    /// `(x − min) / (max − min)`.
    MinMax,
    /// `x / max |x|`.
    MaxAbs,
    /// `(x − P50) / (P75 − P25)`.
    Robust,
}

impl ScalerKind {
    pub const ALL: [ScalerKind; 5] = [
        ScalerKind::Normalize,
        ScalerKind::Standardize,
        ScalerKind::MinMax,
        ScalerKind::MaxAbs,
        ScalerKind::Robust,
    ];
}

/// Per-column affine map `x → (x − offset) / scale` learned from train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedScaler {
    pub kind: ScalerKind,
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
    /// Columns whose denominator was zero; they map to all zeros.
    pub zero_spread: Vec<usize>,
    /// Percentile rule, recorded for the robust scaler.
    pub percentile_method: Option<String>,
}

/// Percentile with linear interpolation between closest ranks.
pub fn percentile_linear(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

impl FittedScaler {
    pub fn fit(x: &DMatrix<f64>, kind: ScalerKind) -> Self {
        let n = x.ncols();
        let mut offset = vec![0.0; n];
        let mut scale = vec![1.0; n];
        let mut zero_spread = Vec::new();
        for (j, col) in x.column_iter().enumerate() {
            let m = col.len() as f64;
            let (o, s) = match kind {
                ScalerKind::Normalize => (0.0, col.norm()),
                ScalerKind::Standardize => {
                    let mean = col.sum() / m;
                    let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
                    (mean, var.sqrt())
                }
                ScalerKind::MinMax => {
                    let lo = col.min();
                    (lo, col.max() - lo)
                }
                ScalerKind::MaxAbs => (0.0, col.amax()),
                ScalerKind::Robust => {
                    let mut v: Vec<f64> = col.iter().copied().collect();
                    v.sort_by(f64::total_cmp);
                    let iqr = percentile_linear(&v, 0.75) - percentile_linear(&v, 0.25);
                    (percentile_linear(&v, 0.5), iqr)
                }
            };
            offset[j] = o;
            scale[j] = s;
            if s == 0.0 {
                zero_spread.push(j);
            }
        }
        if !zero_spread.is_empty() {
            warn!("{kind:?} scaler: zero spread in columns {zero_spread:?}, mapped to 0");
        }
        FittedScaler {
            kind,
            offset,
            scale,
            zero_spread,
            percentile_method: (kind == ScalerKind::Robust).then(|| "linear".to_string()),
        }
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            if self.scale[j] == 0.0 {
                col.fill(0.0);
            } else {
                col.apply(|v| *v = (*v - self.offset[j]) / self.scale[j]);
            }
        }
        out
    }
}

/// Fits `kind` on `train_x` and applies it to both matrices.
pub fn fit_apply_scaler(
    train_x: &DMatrix<f64>,
    test_x: &DMatrix<f64>,
    kind: ScalerKind,
) -> (DMatrix<f64>, DMatrix<f64>, FittedScaler) {
    let fitted = FittedScaler::fit(train_x, kind);
    (fitted.transform(train_x), fitted.transform(test_x), fitted)
}

/// Oversamples every non-majority class up to the majority count.
///
/// Synthetic rows are `x + u·(x_nn − x)` with `u ∈ [0, 1)` and `x_nn` one of
/// the `k_neighbors` nearest same-class points. Original rows stay as a prefix.
pub fn smote(train: &Dataset, k_neighbors: usize, seed: u64) -> Result<Dataset> {
    if k_neighbors == 0 {
        return Err(Error::InvalidConfig("SMOTE needs k_neighbors >= 1".into()));
    }
    let counts = train.class_counts();
    let majority = *counts.iter().max().expect("k >= 2");
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut rng = rng_from(seed);
    for (class, &count) in counts.iter().enumerate() {
        if count == 0 || count == majority {
            continue;
        }
        if count < 2 {
            return Err(Error::TooFewMinority { class, count });
        }
        let members: Vec<usize> = (0..train.m()).filter(|&i| train.y()[i] == class).collect();
        let pts: Vec<Vec<f64>> = members.iter().map(|&i| train.row_vec(i)).collect();
        let tree = KdTree::build(&pts);
        // neighbour lists exclude the point itself
        let k = k_neighbors.min(count - 1);
        let neighbors: Vec<Vec<usize>> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                tree.nearest(p, k + 1)
                    .into_iter()
                    .map(|nb| nb.index)
                    .filter(|&j| j != i)
                    .take(k)
                    .collect()
            })
            .collect();
        for _ in 0..(majority - count) {
            let i = rng.random_range(0..count);
            let j = neighbors[i][rng.random_range(0..neighbors[i].len())];
            let u: f64 = rng.random();
            let base = DVector::from_column_slice(&pts[i]);
            let other = DVector::from_column_slice(&pts[j]);
            rows.push(&base + (other - &base) * u);
            labels.push(class);
        }
    }
    train.append_rows(&rows, &labels)
}

/// Bookkeeping from one fuzzy-sampling call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyReport {
    pub minority_class: usize,
    /// `⌊log2(1/n)⌋` for the imbalance ratio `n` seen by the first pass.
    pub layers: usize,
    /// Copies per minority sample at layer `i = 1..=layers`.
    pub copies_per_layer: Vec<usize>,
    /// Extra layer-1 passes needed to make the reversal strict.
    pub extra_passes: usize,
    pub minority_after: usize,
    pub majority_after: usize,
}

/// Per-feature displacement step as a fraction of the column std.
pub const FUZZY_STEP: f64 = 0.1;

/// `round_half_up(majority / (minority · 2^layer))`, in integers.
fn layer_copies(majority: usize, minority: usize, layer: usize) -> usize {
    let denom = minority << layer;
    (2 * majority + denom) / (2 * denom)
}

/// Largest `L` with `minority · 2^L ≤ majority`, i.e. `⌊log2(majority/minority)⌋`.
fn layer_count(majority: usize, minority: usize) -> usize {
    let mut layers = 0;
    while minority << (layers + 1) <= majority {
        layers += 1;
    }
    layers
}

/// Concentric oversampling of the minority class of a binary task.
///
/// For each layer `i = 1..=⌊log2(1/n)⌋` every original minority sample spawns
/// `round((1/n)/2^i)` copies displaced by `±i·δ_j` along each feature `j`,
/// with `δ_j = FUZZY_STEP · std_j` and a random sign per copy and feature.
/// `times = 2` repeats the layer schedule. If the minority still does not
/// exceed the majority, extra layer-1 passes are added until it does.
pub fn fuzzy_sample(train: &Dataset, times: usize, seed: u64) -> Result<(Dataset, FuzzyReport)> {
    if !(1..=2).contains(&times) {
        return Err(Error::InvalidConfig(format!("fuzzy sampling times must be 1 or 2, got {times}")));
    }
    let counts = train.class_counts();
    let observed: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
    if observed.len() < 2 && counts.len() == 2 {
        return Err(Error::NoMinority);
    }
    if observed.len() != 2 {
        return Err(Error::NotBinary(observed.len()));
    }
    let (minority_class, majority_class) = if counts[observed[0]] <= counts[observed[1]] {
        (observed[0], observed[1])
    } else {
        (observed[1], observed[0])
    };
    let minority = counts[minority_class];
    let majority = counts[majority_class];
    let layers = layer_count(majority, minority);
    let copies_per_layer: Vec<usize> = (1..=layers).map(|i| layer_copies(majority, minority, i)).collect();
    if layers == 0 {
        warn!("fuzzy sampling: imbalance ratio {minority}/{majority} > 1/2, nothing to add");
        let report = FuzzyReport {
            minority_class,
            layers,
            copies_per_layer,
            extra_passes: 0,
            minority_after: minority,
            majority_after: majority,
        };
        return Ok((train.clone(), report));
    }

    let m = train.m() as f64;
    let delta: Vec<f64> = train
        .x()
        .column_iter()
        .map(|c| {
            let mean = c.sum() / m;
            FUZZY_STEP * (c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m).sqrt()
        })
        .collect();
    let members: Vec<usize> = (0..train.m()).filter(|&i| train.y()[i] == minority_class).collect();
    let mut rng = rng_from(derive_seed(seed, 0xF022));
    let mut rows = Vec::new();
    let mut spawn = |layer: usize, copies: usize, rows: &mut Vec<DVector<f64>>| {
        for &i in &members {
            let base = train.row(i).transpose();
            for _ in 0..copies {
                let mut p = base.clone();
                for (j, v) in p.iter_mut().enumerate() {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    *v += sign * layer as f64 * delta[j];
                }
                rows.push(p);
            }
        }
    };
    for _ in 0..times {
        for (i, &copies) in copies_per_layer.iter().enumerate() {
            spawn(i + 1, copies, &mut rows);
        }
    }
    let mut extra_passes = 0;
    while minority + rows.len() <= majority {
        spawn(1, copies_per_layer[0], &mut rows);
        extra_passes += 1;
    }
    let labels = vec![minority_class; rows.len()];
    let out = train.append_rows(&rows, &labels)?;
    let report = FuzzyReport {
        minority_class,
        layers,
        copies_per_layer,
        extra_passes,
        minority_after: minority + rows.len(),
        majority_after: majority,
    };
    Ok((out, report))
}

/// `⌊√m⌋` computed exactly in integers.
pub fn isqrt(m: usize) -> usize {
    let mut r = (m as f64).sqrt() as usize;
    while r * r > m {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= m {
        r += 1;
    }
    r
}

/// `⌊m^(1/4)⌋` computed exactly in integers.
pub fn iroot4(m: usize) -> usize {
    isqrt(isqrt(m))
}

/// Result of a label-engineering pass.
#[derive(Debug, Clone)]
pub struct LabelEngineering {
    pub data: Dataset,
    /// Indices whose labels were kept verbatim.
    pub kept: Vec<usize>,
    /// Neighbours consulted per recovered label.
    pub neighbors: usize,
}

/// Keeps `⌊√m⌋` random labels and recovers the rest by the mode of the
/// `⌊m^(1/4)⌋` nearest kept samples (ties go to the lowest class id).
pub fn label_engineer(train: &Dataset, seed: u64) -> Result<LabelEngineering> {
    let m = train.m();
    if m < 4 {
        return Err(Error::TooFewSamples(m));
    }
    let keep = isqrt(m);
    let neighbors = iroot4(m).min(keep);
    let mut kept = sample(&mut rng_from(seed), m, keep).into_vec();
    kept.sort_unstable();
    let pts: Vec<Vec<f64>> = kept.iter().map(|&i| train.row_vec(i)).collect();
    let tree = KdTree::build(&pts);
    let mut is_kept = vec![false; m];
    for &i in &kept {
        is_kept[i] = true;
    }
    let mut y = train.y().to_vec();
    let mut votes = vec![0usize; train.k()];
    for (i, label) in y.iter_mut().enumerate() {
        if is_kept[i] {
            continue;
        }
        votes.iter_mut().for_each(|v| *v = 0);
        for nb in tree.nearest(&train.row_vec(i), neighbors) {
            votes[train.y()[kept[nb.index]]] += 1;
        }
        // max_by_key returns the last maximum; iterate in reverse so the lowest id wins
        *label = (0..votes.len()).rev().max_by_key(|&c| votes[c]).expect("k >= 2");
    }
    Ok(LabelEngineering { data: train.with_labels(y)?, kept, neighbors })
}

/// One step of a pre-processing chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Transform {
    Scale { scaler: ScalerKind },
    Smote { k_neighbors: usize },
    Fuzzy { times: usize },
    LabelEngineer,
}

impl Transform {
    pub fn label(&self) -> String {
        match self {
            Transform::Scale { scaler } => format!("{scaler:?}").to_lowercase(),
            Transform::Smote { k_neighbors } => format!("smote(k={k_neighbors})"),
            Transform::Fuzzy { times } => format!("fuzzy(x{times})"),
            Transform::LabelEngineer => "label_engineer".into(),
        }
    }
}

/// Applies `chain` in order. Each step draws from its own seed stream.
pub fn apply_chain(
    chain: &[Transform],
    train: &Dataset,
    test: &Dataset,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let mut train = train.clone();
    let mut test = test.clone();
    for (step, t) in chain.iter().enumerate() {
        let step_seed = derive_seed(seed, step as u64);
        match *t {
            Transform::Scale { scaler } => {
                let (a, b, _) = fit_apply_scaler(train.x(), test.x(), scaler);
                train = train.with_features(a)?;
                test = test.with_features(b)?;
            }
            Transform::Smote { k_neighbors } => train = smote(&train, k_neighbors, step_seed)?,
            Transform::Fuzzy { times } => train = fuzzy_sample(&train, times, step_seed)?.0,
            Transform::LabelEngineer => train = label_engineer(&train, step_seed)?.data,
        }
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    fn imbalanced(major: usize, minor: usize, seed: u64) -> Dataset {
        let mut rng = rng_from(seed);
        let rows: Vec<Vec<f64>> = (0..major + minor)
            .map(|i| {
                let shift = if i < major { 0.0 } else { 3.0 };
                vec![shift + rng.random::<f64>(), shift + rng.random::<f64>()]
            })
            .collect();
        let y = (0..major + minor).map(|i| usize::from(i >= major)).collect();
        Dataset::from_rows("imb", &rows, y, 2).unwrap()
    }

    #[test]
    fn minmax_column() {
        let (tr, _, _) = fit_apply_scaler(&col(&[0.0, 5.0, 10.0]), &col(&[5.0]), ScalerKind::MinMax);
        assert_eq!(tr.as_slice(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn standardize_column() {
        let (tr, _, _) = fit_apply_scaler(&col(&[1.0, 2.0, 3.0]), &col(&[2.0]), ScalerKind::Standardize);
        assert_abs_diff_eq!(tr[0], -1.224_744_871, epsilon = 1e-9);
        assert_abs_diff_eq!(tr[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tr[2], 1.224_744_871, epsilon = 1e-9);
    }

    #[test]
    fn robust_column_uses_linear_percentiles() {
        let v: Vec<f64> = (1..=9).map(f64::from).collect();
        // reference: P_q sits at fractional rank q·(len−1) of the sorted values
        let oracle = |q: f64| {
            let pos = q * 8.0;
            let lo = pos.floor();
            v[lo as usize] + (pos - lo) * (v[pos.ceil() as usize] - v[lo as usize])
        };
        assert_eq!((oracle(0.25), oracle(0.5), oracle(0.75)), (3.0, 5.0, 7.0));
        let (tr, _, fitted) = fit_apply_scaler(&col(&v), &col(&[0.0]), ScalerKind::Robust);
        assert_eq!(tr[4], 0.0);
        assert_eq!(tr[6], 0.5);
        assert_eq!(fitted.percentile_method.as_deref(), Some("linear"));
    }

    #[test]
    fn normalize_and_maxabs() {
        let (tr, te, _) = fit_apply_scaler(&col(&[3.0, -4.0]), &col(&[5.0]), ScalerKind::Normalize);
        assert_eq!(tr.as_slice(), &[0.6, -0.8]);
        assert_eq!(te[0], 1.0);
        let (tr, _, _) = fit_apply_scaler(&col(&[-8.0, 2.0, 4.0]), &col(&[0.0]), ScalerKind::MaxAbs);
        assert_eq!(tr.as_slice(), &[-1.0, 0.25, 0.5]);
    }

    #[test]
    fn zero_spread_maps_to_zero() {
        for kind in ScalerKind::ALL {
            let (tr, te, fitted) = fit_apply_scaler(&col(&[0.0, 0.0, 0.0]), &col(&[1.0]), kind);
            assert!(tr.iter().all(|&v| v == 0.0), "{kind:?}");
            assert_eq!(te[0], 0.0);
            assert_eq!(fitted.zero_spread, vec![0]);
        }
    }

    #[test]
    fn scaler_never_reads_test() {
        let train = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 5.0, 8.0, 13.0]);
        for kind in ScalerKind::ALL {
            let (_, _, a) = fit_apply_scaler(&train, &DMatrix::zeros(1, 2), kind);
            let (_, _, b) = fit_apply_scaler(&train, &DMatrix::from_element(4, 2, 1e9), kind);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn smote_balanced_input_unchanged() {
        let d = imbalanced(10, 10, 1);
        assert_eq!(smote(&d, 5, 0).unwrap(), d);
    }

    #[test]
    fn smote_equalizes_and_keeps_prefix() {
        let d = imbalanced(10, 5, 2);
        let out = smote(&d, 5, 3).unwrap();
        assert_eq!(out.class_counts(), vec![10, 10]);
        assert_eq!(out.x().rows(0, d.m()), d.x().rows(0, d.m()));
    }

    #[test]
    fn smote_points_lie_on_minority_segments() {
        let d = imbalanced(30, 6, 4);
        let out = smote(&d, 3, 5).unwrap();
        let minority: Vec<Vec<f64>> = (0..d.m()).filter(|&i| d.y()[i] == 1).map(|i| d.row_vec(i)).collect();
        for s in d.m()..out.m() {
            let p = out.row_vec(s);
            // brute force: some pair (a, b) has p = a + u(b − a), u ∈ [0, 1]
            let on_segment = minority.iter().any(|a| {
                minority.iter().any(|b| {
                    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
                    let len2: f64 = ab.iter().map(|v| v * v).sum();
                    if len2 == 0.0 {
                        return false;
                    }
                    let u = p.iter().zip(a).zip(&ab).map(|((pi, ai), d)| (pi - ai) * d).sum::<f64>() / len2;
                    let resid: f64 = p
                        .iter()
                        .zip(a)
                        .zip(&ab)
                        .map(|((pi, ai), d)| (pi - ai - u * d).powi(2))
                        .sum();
                    (-1e-12..=1.0 + 1e-12).contains(&u) && resid < 1e-18
                })
            });
            assert!(on_segment, "synthetic row {s} is off every segment");
        }
    }

    #[test]
    fn smote_rejects_singleton_minority() {
        let d = imbalanced(5, 1, 6);
        assert!(matches!(smote(&d, 3, 0), Err(Error::TooFewMinority { class: 1, count: 1 })));
    }

    #[test]
    fn fuzzy_layer_arithmetic() {
        // n = 0.25: two layers with 2 then 1 copies
        assert_eq!(layer_count(100, 25), 2);
        assert_eq!(layer_copies(100, 25, 1), 2);
        assert_eq!(layer_copies(100, 25, 2), 1);
        // n = 0.6: no layers
        assert_eq!(layer_count(10, 6), 0);
        // round half up: 1/n = 6, layer 2 → 1.5 → 2
        assert_eq!(layer_copies(60, 10, 2), 2);
    }

    #[test]
    fn fuzzy_reverses_100_25() {
        let d = imbalanced(100, 25, 7);
        let (out, rep) = fuzzy_sample(&d, 1, 0).unwrap();
        // 25·(1 + 2 + 1) = 100 ties the majority, so one extra layer-1 pass is needed
        assert_eq!(rep.layers, 2);
        assert_eq!(rep.copies_per_layer, vec![2, 1]);
        assert_eq!(rep.extra_passes, 1);
        assert_eq!(out.class_counts(), vec![100, 150]);
    }

    #[test]
    fn fuzzy_without_layers_is_identity() {
        let d = imbalanced(10, 6, 8);
        let (out, rep) = fuzzy_sample(&d, 1, 0).unwrap();
        assert_eq!(rep.layers, 0);
        assert_eq!(out, d);
    }

    #[test]
    fn fuzzy_twice_adds_more() {
        let d = imbalanced(80, 10, 9);
        let (once, _) = fuzzy_sample(&d, 1, 0).unwrap();
        let (twice, _) = fuzzy_sample(&d, 2, 0).unwrap();
        assert!(twice.class_counts()[1] > once.class_counts()[1]);
    }

    #[test]
    fn fuzzy_needs_both_classes() {
        let d = Dataset::from_rows("d", &[vec![0.0], vec![1.0]], vec![0, 0], 2).unwrap();
        assert!(matches!(fuzzy_sample(&d, 1, 0), Err(Error::NoMinority)));
    }

    #[test]
    fn integer_roots() {
        assert_eq!((isqrt(16), iroot4(16)), (4, 2));
        assert_eq!((isqrt(15), iroot4(15)), (3, 1));
        assert_eq!((isqrt(64), iroot4(64)), (8, 2));
        assert_eq!((isqrt(256), iroot4(256)), (16, 4));
    }

    #[test]
    fn label_engineer_m16() {
        let d = imbalanced(8, 8, 10);
        let le = label_engineer(&d, 1).unwrap();
        assert_eq!(le.kept.len(), 4);
        assert_eq!(le.neighbors, 2);
        assert_eq!(le.data.x(), d.x());
    }

    #[test]
    fn label_engineer_constant_labels() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let d = Dataset::from_rows("c", &rows, vec![1; 20], 2).unwrap();
        assert_eq!(label_engineer(&d, 3).unwrap().data.y(), d.y());
    }

    #[test]
    fn chain_scales_test_with_train_params() {
        let train = imbalanced(10, 5, 11);
        let test = imbalanced(3, 3, 12);
        let chain = [Transform::Scale { scaler: ScalerKind::MinMax }, Transform::Smote { k_neighbors: 3 }];
        let (tr, te) = apply_chain(&chain, &train, &test, 0).unwrap();
        assert_eq!(tr.class_counts(), vec![10, 10]);
        let fitted = FittedScaler::fit(train.x(), ScalerKind::MinMax);
        assert_eq!(te.x(), &fitted.transform(test.x()));
    }

    proptest! {
        #[test]
        fn minmax_and_maxabs_ranges(vals in prop::collection::vec(-1e3f64..1e3, 2..40)) {
            let x = col(&vals);
            let (a, _, _) = fit_apply_scaler(&x, &x, ScalerKind::MinMax);
            prop_assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
            let (b, _, _) = fit_apply_scaler(&x, &x, ScalerKind::MaxAbs);
            prop_assert!(b.iter().all(|v| (-1.0..=1.0).contains(v)));
        }

        #[test]
        fn label_engineer_bounds_changes(m in 4usize..120, seed in 0u64..1000) {
            let mut rng = rng_from(seed);
            let rows: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.random(), rng.random()]).collect();
            let y: Vec<usize> = (0..m).map(|_| rng.random_range(0..3)).collect();
            let d = Dataset::from_rows("r", &rows, y, 3).unwrap();
            let le = label_engineer(&d, seed).unwrap();
            let changed = d.y().iter().zip(le.data.y()).filter(|(a, b)| a != b).count();
            prop_assert_eq!(le.kept.len(), isqrt(m));
            prop_assert!(changed <= m - isqrt(m));
            prop_assert_eq!(le.data.x(), d.x());
        }
    }
}
