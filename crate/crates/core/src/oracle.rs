//! Slow, obviously-correct reference implementations.
//!
//! Each function here recomputes something the library does efficiently,
//! by brute force or from first principles. Tests, the acceptance suite and
//! `selftest` compare the two.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::data::Dataset;
use crate::learners::{Network, Penalty};
use crate::rng::rng_from;

/// Indices of the `k` nearest points by full sort on `(squared distance, index)`.
pub fn brute_force_knn(points: &[Vec<f64>], query: &[f64], k: usize) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum(), i))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Central-difference gradient of [`Network::loss`] for every weight and bias.
pub fn fd_network_gradient(
    net: &Network,
    x: &DMatrix<f64>,
    y: &[usize],
    penalty: Penalty,
    h: f64,
) -> (Vec<DMatrix<f64>>, Vec<DVector<f64>>) {
    let mut probe = net.clone();
    let mut gw = Vec::new();
    let mut gb = Vec::new();
    for l in 0..net.n_layers() {
        let w = &net.weights[l];
        let mut g = DMatrix::zeros(w.nrows(), w.ncols());
        for i in 0..w.nrows() {
            for j in 0..w.ncols() {
                probe.weights[l][(i, j)] = w[(i, j)] + h;
                let up = probe.loss(x, y, penalty);
                probe.weights[l][(i, j)] = w[(i, j)] - h;
                let down = probe.loss(x, y, penalty);
                probe.weights[l][(i, j)] = w[(i, j)];
                g[(i, j)] = (up - down) / (2.0 * h);
            }
        }
        gw.push(g);
        let b = &net.biases[l];
        let mut g = DVector::zeros(b.len());
        for i in 0..b.len() {
            probe.biases[l][i] = b[i] + h;
            let up = probe.loss(x, y, penalty);
            probe.biases[l][i] = b[i] - h;
            let down = probe.loss(x, y, penalty);
            probe.biases[l][i] = b[i];
            g[i] = (up - down) / (2.0 * h);
        }
        gb.push(g);
    }
    (gw, gb)
}

/// Frobenius norm of the central-difference Hessian of the mean loss with
/// respect to the output-layer weights `W[L]`.
pub fn fd_last_layer_hessian_norm(net: &Network, x: &DMatrix<f64>, y: &[usize], h: f64) -> f64 {
    let last = net.n_layers() - 1;
    let (rows, cols) = net.weights[last].shape();
    let params: Vec<(usize, usize)> = (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).collect();
    let mut probe = net.clone();
    let mut eval = |shifts: &[((usize, usize), f64)]| {
        probe.weights[last].copy_from(&net.weights[last]);
        for &(p, d) in shifts {
            probe.weights[last][p] += d;
        }
        probe.loss(x, y, Penalty::None)
    };
    let mut sq = 0.0;
    for &a in &params {
        for &b in &params {
            let v = if a == b {
                (eval(&[(a, h)]) - 2.0 * eval(&[]) + eval(&[(a, -h)])) / (h * h)
            } else {
                (eval(&[(a, h), (b, h)]) - eval(&[(a, h), (b, -h)]) - eval(&[(a, -h), (b, h)])
                    + eval(&[(a, -h), (b, -h)]))
                    / (4.0 * h * h)
            };
            sq += v * v;
        }
    }
    sq.sqrt()
}

/// Pooled within-class covariance (divided by `m`) from explicit two-pass loops.
pub fn two_pass_pooled_covariance(d: &Dataset) -> Vec<Vec<f64>> {
    let (m, n, k) = (d.m(), d.n(), d.k());
    let mut sums = vec![vec![0.0; n]; k];
    let mut counts = vec![0usize; k];
    for i in 0..m {
        counts[d.y()[i]] += 1;
        for j in 0..n {
            sums[d.y()[i]][j] += d.x()[(i, j)];
        }
    }
    let means: Vec<Vec<f64>> =
        sums.iter().zip(&counts).map(|(s, &c)| s.iter().map(|v| v / c as f64).collect()).collect();
    let mut cov = vec![vec![0.0; n]; n];
    for i in 0..m {
        let mu = &means[d.y()[i]];
        for a in 0..n {
            for b in 0..n {
                cov[a][b] += (d.x()[(i, a)] - mu[a]) * (d.x()[(i, b)] - mu[b]) / m as f64;
            }
        }
    }
    cov
}

/// Two-sided Mann-Whitney p-value by enumerating every way to choose which
/// pooled observations belong to `x`, with U counted pairwise (ties = ½).
pub fn exhaustive_mwu_p(x: &[f64], y: &[f64]) -> f64 {
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let (nx, ny) = (x.len(), y.len());
    let u = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .flat_map(|p| b.iter().map(move |q| if p > q { 1.0 } else if p == q { 0.5 } else { 0.0 }))
            .sum()
    };
    let centre = (nx * ny) as f64 / 2.0;
    let observed = (u(x, y) - centre).abs();
    let mut chosen = Vec::new();
    let (mut extreme, mut total) = (0usize, 0usize);
    fn walk(
        start: usize,
        pooled: &[f64],
        nx: usize,
        chosen: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if chosen.len() == nx {
            visit(chosen);
            return;
        }
        for i in start..pooled.len() {
            chosen.push(i);
            walk(i + 1, pooled, nx, chosen, visit);
            chosen.pop();
        }
    }
    walk(0, &pooled, nx, &mut chosen, &mut |idx| {
        let a: Vec<f64> = idx.iter().map(|&i| pooled[i]).collect();
        let b: Vec<f64> = (0..pooled.len()).filter(|i| !idx.contains(i)).map(|i| pooled[i]).collect();
        total += 1;
        if (u(&a, &b) - centre).abs() >= observed - 1e-9 {
            extreme += 1;
        }
    });
    extreme as f64 / total as f64
}

/// Norm of the explicit `n⁴` tensor `P⊗̇G − ½P⊗̇P + G⊗̇P`, built from
/// `Σ = P⁻¹` and `G = P(wwᵀ + ½Σ)P` without any algebraic shortcut.
pub fn dense_gnb_tensor_norm(p: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    let n = p.nrows();
    let sigma = p.clone().try_inverse().expect("invertible precision");
    let g = p * (w * w.transpose() + &sigma * 0.5) * p;
    let mut sq = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let t = p[(i, k)] * g[(j, l)] - 0.5 * p[(i, k)] * p[(j, l)] + g[(i, k)] * p[(j, l)];
                    sq += t * t;
                }
            }
        }
    }
    sq.sqrt()
}

/// Mean fraction of `[0, 1]` covered by the union of `p` intervals
/// `[c − k, c + k]` with uniform centres, for every `p` in `1..=max_p`.
pub fn monte_carlo_coverage(k: f64, max_p: usize, trials: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from(seed);
    let mut totals = vec![0.0; max_p];
    let mut centres = Vec::with_capacity(max_p);
    for _ in 0..trials {
        centres.clear();
        for p in 0..max_p {
            centres.push(rng.random_range(0.0..1.0));
            let mut sorted = centres.clone();
            sorted.sort_by(f64::total_cmp);
            let (mut covered, mut reach) = (0.0, 0.0f64);
            for c in sorted {
                let (lo, hi) = ((c - k).max(reach), (c + k).min(1.0));
                if hi > lo {
                    covered += hi - lo;
                }
                reach = reach.max(hi);
            }
            totals[p] += covered;
        }
    }
    totals.into_iter().map(|t| t / trials as f64).collect()
}

/// Spearman rank correlation via Pearson correlation of average ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        v.iter()
            .map(|x| {
                let below = v.iter().filter(|y| *y < x).count() as f64;
                let equal = v.iter().filter(|y| *y == x).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_extremes() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
    }

    #[test]
    fn mwu_oracle_known_value() {
        assert!((exhaustive_mwu_p(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn single_interval_coverage() {
        let c = monte_carlo_coverage(0.05, 1, 20_000, 1);
        assert!((c[0] - (0.1 - 0.0025)).abs() < 0.002, "{}", c[0]);
    }
}
