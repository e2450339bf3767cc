//! Task metrics and the rank-based comparison protocol: a Kruskal-Wallis gate,
//! pairwise Mann-Whitney U tests against the best treatment, and
//! Benjamini-Hochberg adjustment of their p-values.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    Recall,
    Precision,
    F1,
    /// False alarm rate `c/(a+c)`.
    Pf,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Accuracy, Metric::Recall, Metric::Precision, Metric::F1, Metric::Pf];

    /// Direction registry: false alarms are minimized, everything else maximized.
    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::Pf)
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Recall => "recall",
            Metric::Precision => "precision",
            Metric::F1 => "f1",
            Metric::Pf => "pf",
        }
    }

    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        if self.higher_is_better() {
            a > b
        } else {
            a < b
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric `{s}`")))
    }
}

/// Binary metric values. Zero-denominator metrics are reported as 0 and named in `degenerate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub pf: f64,
    pub degenerate: Vec<String>,
}

impl Metrics {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Accuracy => self.accuracy,
            Metric::Recall => self.recall,
            Metric::Precision => self.precision,
            Metric::F1 => self.f1,
            Metric::Pf => self.pf,
        }
    }
}

/// Metrics from true negatives `a`, false negatives `b`, false positives `c`
/// and true positives `d`.
pub fn metrics(a: usize, b: usize, c: usize, d: usize) -> Metrics {
    let mut degenerate = Vec::new();
    let mut ratio = |num: usize, den: usize, name: &str| {
        if den == 0 {
            degenerate.push(name.to_string());
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = ratio(a + d, a + b + c + d, "accuracy");
    let recall = ratio(d, b + d, "recall");
    let precision = ratio(d, c + d, "precision");
    let pf = ratio(c, a + c, "pf");
    let f1 = if recall + precision == 0.0 {
        degenerate.push("f1".into());
        0.0
    } else {
        2.0 * recall * precision / (recall + precision)
    };
    Metrics { accuracy, recall, precision, f1, pf, degenerate }
}

/// `k × k` confusion matrix, rows are true classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub matrix: Vec<Vec<usize>>,
}

impl Confusion {
    pub fn from_labels(truth: &[usize], pred: &[usize], k: usize) -> Self {
        let mut matrix = vec![vec![0; k]; k];
        for (&t, &p) in truth.iter().zip(pred) {
            matrix[t][p] += 1;
        }
        Confusion { matrix }
    }

    /// `(a, b, c, d)` treating `positive` as the positive class.
    pub fn one_vs_rest(&self, positive: usize) -> (usize, usize, usize, usize) {
        let k = self.matrix.len();
        let (mut a, mut b, mut c, mut d) = (0, 0, 0, 0);
        for t in 0..k {
            for p in 0..k {
                let v = self.matrix[t][p];
                match (t == positive, p == positive) {
                    (false, false) => a += v,
                    (true, false) => b += v,
                    (false, true) => c += v,
                    (true, true) => d += v,
                }
            }
        }
        (a, b, c, d)
    }

    /// Binary tasks use class 1 as positive; wider tasks macro-average
    /// the one-vs-rest values (accuracy is always the exact-match rate).
    pub fn metrics(&self) -> Metrics {
        let k = self.matrix.len();
        if k == 2 {
            let (a, b, c, d) = self.one_vs_rest(1);
            return metrics(a, b, c, d);
        }
        let per: Vec<Metrics> = (0..k)
            .map(|c| {
                let (a, b, cc, d) = self.one_vs_rest(c);
                metrics(a, b, cc, d)
            })
            .collect();
        let mean = |f: fn(&Metrics) -> f64| per.iter().map(f).sum::<f64>() / k as f64;
        let total: usize = self.matrix.iter().flatten().sum();
        let hits: usize = (0..k).map(|c| self.matrix[c][c]).sum();
        let mut degenerate: Vec<String> = per.iter().flat_map(|m| m.degenerate.iter().cloned()).collect();
        degenerate.sort();
        degenerate.dedup();
        Metrics {
            accuracy: if total == 0 { 0.0 } else { hits as f64 / total as f64 },
            recall: mean(|m| m.recall),
            precision: mean(|m| m.precision),
            f1: mean(|m| m.f1),
            pf: mean(|m| m.pf),
            degenerate,
        }
    }

    pub fn metric(&self, metric: Metric) -> f64 {
        self.metrics().get(metric)
    }
}

/// `1 − p_t / p_20`, anchored at the performance with 20 initial samples.
pub fn normalized_regret(p_t: f64, p_20: f64) -> Result<f64> {
    if p_20 == 0.0 {
        return Err(Error::InvalidStatsInput("anchor performance is zero".into()));
    }
    Ok(1.0 - p_t / p_20)
}

/// `100 · (perf − random_mean) / (optimum − random_mean)`.
pub fn normalized_score(perf: f64, random_mean: f64, optimum: f64) -> Result<f64> {
    if optimum == random_mean {
        return Err(Error::InvalidStatsInput("optimum equals the random-search mean".into()));
    }
    Ok(100.0 * (perf - random_mean) / (optimum - random_mean))
}

/// Average (mid) ranks, 1-based.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            ranks[t] = r;
        }
        i = j + 1;
    }
    ranks
}

/// `Σ (t³ − t)` over tie groups.
fn tie_term(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        total += t * t * t - t;
        i = j + 1;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub p: f64,
}

/// Kruskal-Wallis H with tie correction; p from χ² with `groups − 1` df.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<KruskalWallis> {
    if groups.len() < 2 || groups.iter().any(Vec::is_empty) {
        return Err(Error::InvalidStatsInput("need at least two nonempty groups".into()));
    }
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = all.len() as f64;
    let correction = 1.0 - tie_term(&all) / (n * n * n - n);
    if correction <= 0.0 {
        return Ok(KruskalWallis { h: 0.0, p: 1.0 });
    }
    let ranks = midranks(&all);
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let h = ((12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction).max(0.0);
    let chi = ChiSquared::new((groups.len() - 1) as f64).expect("df >= 1");
    Ok(KruskalWallis { h, p: chi.sf(h).clamp(0.0, 1.0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// `U` for the first sample: `R_x − n_x(n_x+1)/2`.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

/// Samples with `|x| + |y|` at or below this use exact enumeration.
pub const MWU_EXACT_MAX: usize = 12;

/// Mann-Whitney U. Small samples enumerate every assignment of the pooled
/// midranks; larger ones use the tie-corrected normal approximation with
/// continuity correction.
pub fn mann_whitney(x: &[f64], y: &[f64]) -> Result<MannWhitney> {
    if x.len() + y.len() <= MWU_EXACT_MAX {
        mann_whitney_exact(x, y)
    } else {
        mann_whitney_normal(x, y)
    }
}

fn u_of(x: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidStatsInput("Mann-Whitney needs two nonempty samples".into()));
    }
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks(&pooled);
    let nx = x.len() as f64;
    let rx: f64 = ranks[..x.len()].iter().sum();
    Ok((rx - nx * (nx + 1.0) / 2.0, ranks))
}

pub fn mann_whitney_exact(x: &[f64], y: &[f64]) -> Result<MannWhitney> {
    let (u, ranks) = u_of(x, y)?;
    let n = ranks.len();
    if n > 24 {
        return Err(Error::InvalidStatsInput("exact enumeration limited to 24 samples".into()));
    }
    let nx = x.len();
    let mean = (nx * y.len()) as f64 / 2.0;
    let observed = (u - mean).abs();
    let base = (nx * (nx + 1)) as f64 / 2.0;
    let (mut extreme, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != nx {
            continue;
        }
        let r: f64 = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        total += 1;
        if ((r - base) - mean).abs() >= observed - 1e-9 {
            extreme += 1;
        }
    }
    Ok(MannWhitney { u, p: extreme as f64 / total as f64, exact: true })
}

pub fn mann_whitney_normal(x: &[f64], y: &[f64]) -> Result<MannWhitney> {
    let (u, ranks) = u_of(x, y)?;
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let n = nx + ny;
    let mean = nx * ny / 2.0;
    let var = nx * ny / 12.0 * ((n + 1.0) - tie_term(&ranks) / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok(MannWhitney { u, p: 1.0, exact: false });
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let p = 2.0 * Normal::standard().sf(z);
    Ok(MannWhitney { u, p: p.clamp(0.0, 1.0), exact: false })
}

/// Benjamini-Hochberg step-up adjustment, returned in input order.
pub fn bh_adjust(pvals: &[f64]) -> Result<Vec<f64>> {
    if let Some(p) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidStatsInput(format!("p-value {p} outside [0, 1]")));
    }
    let m = pvals.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));
    let mut adj = vec![0.0; m];
    let mut running = 1.0f64;
    for (pos, &i) in idx.iter().enumerate().rev() {
        running = running.min(pvals[i] * (m as f64 / (pos + 1) as f64));
        adj[i] = running.min(1.0);
    }
    Ok(adj)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentRank {
    pub median: f64,
    /// 1 for the statistically best group, 2 otherwise.
    pub rank: usize,
    /// BH-adjusted p of the comparison against the best treatment.
    pub adjusted_p: Option<f64>,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub kruskal: KruskalWallis,
    pub best: String,
    pub best_set: Vec<String>,
    pub treatments: BTreeMap<String, TreatmentRank>,
}

/// Ranks treatments: if Kruskal-Wallis cannot reject at `alpha` all tie;
/// otherwise treatments whose BH-adjusted Mann-Whitney p against the
/// best-median treatment is at least `alpha` join the best set.
///
/// `A` wins against `B` when `A` is in a better rank group and has a better
/// median; ties are everything that is neither a win nor a loss.
pub fn rank_treatments(
    results: &BTreeMap<String, Vec<f64>>,
    alpha: f64,
    higher_is_better: bool,
) -> Result<Ranking> {
    if results.len() < 2 {
        return Err(Error::InvalidStatsInput("need at least two treatments".into()));
    }
    let names: Vec<&String> = results.keys().collect();
    let groups: Vec<Vec<f64>> = results.values().cloned().collect();
    let kruskal = kruskal_wallis(&groups)?;
    let medians: Vec<f64> = groups.iter().map(|g| median(g)).collect();
    let better = |a: f64, b: f64| if higher_is_better { a > b } else { a < b };
    let mut best = 0;
    for i in 1..names.len() {
        if better(medians[i], medians[best]) {
            best = i;
        }
    }

    let mut ranks = vec![1usize; names.len()];
    let mut adjusted = vec![None; names.len()];
    if kruskal.p < alpha {
        let others: Vec<usize> = (0..names.len()).filter(|&i| i != best).collect();
        let raw: Vec<f64> = others
            .iter()
            .map(|&i| mann_whitney(&groups[best], &groups[i]).map(|r| r.p))
            .collect::<Result<_>>()?;
        for (&i, p) in others.iter().zip(bh_adjust(&raw)?) {
            adjusted[i] = Some(p);
            if p < alpha {
                ranks[i] = 2;
            }
        }
    }

    let mut treatments = BTreeMap::new();
    for i in 0..names.len() {
        let (mut wins, mut ties, mut losses) = (0, 0, 0);
        for j in 0..names.len() {
            if i == j {
                continue;
            }
            if ranks[i] < ranks[j] && better(medians[i], medians[j]) {
                wins += 1;
            } else if ranks[j] < ranks[i] && better(medians[j], medians[i]) {
                losses += 1;
            } else {
                ties += 1;
            }
        }
        treatments.insert(
            names[i].clone(),
            TreatmentRank { median: medians[i], rank: ranks[i], adjusted_p: adjusted[i], wins, ties, losses },
        );
    }
    let best_set = (0..names.len()).filter(|&i| ranks[i] == 1).map(|i| names[i].clone()).collect();
    Ok(Ranking { kruskal, best: names[best].clone(), best_set, treatments })
}

/// Frequency counts of a focal treatment's outcome across several rankings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinTieLoss {
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

impl WinTieLoss {
    /// Per ranking, compares `focal` against its strongest rival (best median
    /// among the others). Rankings lacking `focal` are skipped.
    pub fn tally<'a>(rankings: impl IntoIterator<Item = &'a Ranking>, focal: &str, higher_is_better: bool) -> Self {
        let mut out = WinTieLoss::default();
        let better = |a: f64, b: f64| if higher_is_better { a > b } else { a < b };
        for r in rankings {
            let Some(me) = r.treatments.get(focal) else { continue };
            let rival = r
                .treatments
                .iter()
                .filter(|(name, _)| name.as_str() != focal)
                .fold(None::<&TreatmentRank>, |acc, (_, t)| match acc {
                    Some(a) if !better(t.median, a.median) => Some(a),
                    _ => Some(t),
                });
            let Some(rival) = rival else { continue };
            if me.rank < rival.rank && better(me.median, rival.median) {
                out.wins += 1;
            } else if rival.rank < me.rank && better(rival.median, me.median) {
                out.losses += 1;
            } else {
                out.ties += 1;
            }
        }
        out
    }
}

impl fmt::Display for WinTieLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} wins, {} ties, {} losses", self.wins, self.ties, self.losses)
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::oracle::exhaustive_mwu_p;

    #[test]
    fn metric_formulas() {
        let m = metrics(50, 10, 5, 35);
        assert_abs_diff_eq!(m.recall, 0.7778, epsilon = 1e-4);
        assert_abs_diff_eq!(m.precision, 0.8750, epsilon = 1e-4);
        assert_abs_diff_eq!(m.f1, 0.8235, epsilon = 1e-4);
        assert_abs_diff_eq!(m.pf, 0.0909, epsilon = 1e-4);
        assert_abs_diff_eq!(m.accuracy, 0.85, epsilon = 1e-12);
        assert!(m.degenerate.is_empty());
    }

    #[test]
    fn perfect_and_degenerate() {
        let m = metrics(40, 0, 0, 10);
        assert_eq!((m.recall, m.precision, m.f1, m.pf), (1.0, 1.0, 1.0, 0.0));
        let m = metrics(40, 10, 0, 0);
        assert_eq!(m.precision, 0.0);
        assert!(m.degenerate.contains(&"precision".to_string()));
    }

    #[test]
    fn confusion_binary_counts() {
        let c = Confusion::from_labels(&[0, 0, 1, 1, 1], &[0, 1, 1, 0, 1], 2);
        assert_eq!(c.one_vs_rest(1), (1, 1, 1, 2));
        assert_eq!(c.metric(Metric::Accuracy), 0.6);
    }

    #[test]
    fn regret_and_score() {
        assert_eq!(normalized_regret(0.7, 0.7).unwrap(), 0.0);
        assert_eq!(normalized_regret(0.0, 0.7).unwrap(), 1.0);
        assert_abs_diff_eq!(normalized_regret(0.9, 0.6).unwrap(), -0.5, epsilon = 1e-12);
        assert!(normalized_regret(0.5, 0.0).is_err());
        assert_eq!(normalized_score(0.9, 0.5, 0.9).unwrap(), 100.0);
        assert_eq!(normalized_score(0.5, 0.5, 0.9).unwrap(), 0.0);
        assert_abs_diff_eq!(normalized_score(0.7, 0.5, 0.9).unwrap(), 50.0, epsilon = 1e-9);
    }

    #[test]
    fn kruskal_examples() {
        let same = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!((same.h, same.p), (0.0, 1.0));
        let sep = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        // rank sums 6 and 15: 12/(6·7)·(36/3 + 225/3) − 3·7
        assert_abs_diff_eq!(sep.h, 12.0 / 42.0 * 87.0 - 21.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sep.h, 3.857, epsilon = 1e-3);
        let flat = kruskal_wallis(&[vec![2.0; 4], vec![2.0; 3]]).unwrap();
        assert_eq!((flat.h, flat.p), (0.0, 1.0));
    }

    #[test]
    fn mwu_examples() {
        let r = mann_whitney(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert!(r.exact);
        assert_abs_diff_eq!(r.p, 0.10, epsilon = 1e-12);
        let r = mann_whitney(&[5.0], &[5.0]).unwrap();
        assert_eq!((r.u, r.p), (0.5, 1.0));
    }

    #[test]
    fn bh_examples() {
        assert_eq!(bh_adjust(&[0.01, 0.04, 0.03]).unwrap(), vec![0.03, 0.04, 0.04]);
        assert_eq!(bh_adjust(&[0.2]).unwrap(), vec![0.2]);
        assert_eq!(bh_adjust(&[0.3; 4]).unwrap(), vec![0.3; 4]);
        assert!(bh_adjust(&[1.5]).is_err());
    }

    #[test]
    fn identical_treatments_all_tie() {
        let results: BTreeMap<String, Vec<f64>> =
            ["a", "b", "c"].iter().map(|n| (n.to_string(), vec![0.5, 0.6, 0.7])).collect();
        let r = rank_treatments(&results, 0.05, true).unwrap();
        assert_eq!(r.best_set.len(), 3);
        assert!(r.treatments.values().all(|t| t.ties == 2));
    }

    #[test]
    fn separated_treatments_win_and_lose() {
        let mut results = BTreeMap::new();
        results.insert("low".to_string(), (1..=20).map(f64::from).collect());
        results.insert("high".to_string(), (21..=40).map(f64::from).collect());
        let r = rank_treatments(&results, 0.05, true).unwrap();
        assert_eq!(r.best, "high");
        assert_eq!((r.treatments["high"].wins, r.treatments["high"].losses), (1, 0));
        assert_eq!((r.treatments["low"].wins, r.treatments["low"].losses), (0, 1));
        // lower-is-better flips the outcome
        let r = rank_treatments(&results, 0.05, false).unwrap();
        assert_eq!(r.best, "low");
    }

    #[test]
    fn tally_counts_outcomes() {
        let mut a = BTreeMap::new();
        a.insert("smoothie".to_string(), (21..=40).map(f64::from).collect::<Vec<_>>());
        a.insert("random".to_string(), (1..=20).map(f64::from).collect());
        let mut b = BTreeMap::new();
        b.insert("smoothie".to_string(), vec![1.0, 2.0, 3.0]);
        b.insert("random".to_string(), vec![1.0, 2.0, 3.0]);
        let rankings = [rank_treatments(&a, 0.05, true).unwrap(), rank_treatments(&b, 0.05, true).unwrap()];
        let wtl = WinTieLoss::tally(&rankings, "smoothie", true);
        assert_eq!(wtl, WinTieLoss { wins: 1, ties: 1, losses: 0 });
        assert_eq!(wtl.to_string(), "1 wins, 1 ties, 0 losses");
    }

    proptest! {
        #[test]
        fn mwu_swap_symmetry(
            x in prop::collection::vec(0u8..6, 1..8),
            y in prop::collection::vec(0u8..6, 1..8),
        ) {
            let x: Vec<f64> = x.into_iter().map(f64::from).collect();
            let y: Vec<f64> = y.into_iter().map(f64::from).collect();
            let a = mann_whitney(&x, &y).unwrap();
            let b = mann_whitney(&y, &x).unwrap();
            prop_assert!((a.u + b.u - (x.len() * y.len()) as f64).abs() < 1e-9);
            prop_assert!((a.p - b.p).abs() < 1e-12);
        }

        #[test]
        fn mwu_exact_matches_permutation_oracle(
            x in prop::collection::vec(0u8..5, 1..6),
            y in prop::collection::vec(0u8..5, 1..6),
        ) {
            let x: Vec<f64> = x.into_iter().map(f64::from).collect();
            let y: Vec<f64> = y.into_iter().map(f64::from).collect();
            let r = mann_whitney_exact(&x, &y).unwrap();
            prop_assert!((r.p - exhaustive_mwu_p(&x, &y)).abs() < 1e-12);
        }

        #[test]
        fn bh_is_monotone_and_dominates(p in prop::collection::vec(0.0f64..=1.0, 1..30)) {
            let adj = bh_adjust(&p).unwrap();
            let mut idx: Vec<usize> = (0..p.len()).collect();
            idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
            for w in idx.windows(2) {
                prop_assert!(adj[w[0]] <= adj[w[1]] + 1e-15);
            }
            for (a, q) in adj.iter().zip(&p) {
                prop_assert!(a >= q && *a <= 1.0);
            }
        }

        #[test]
        fn metrics_stay_in_unit_interval(a in 0usize..50, b in 0usize..50, c in 0usize..50, d in 0usize..50) {
            let m = metrics(a, b, c, d);
            for v in [m.accuracy, m.recall, m.precision, m.f1, m.pf] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn ranking_ignores_treatment_order_and_names(
            groups in prop::collection::vec(prop::collection::vec(0u8..30, 3..8), 2..5),
        ) {
            let groups: Vec<Vec<f64>> = groups.into_iter().map(|g| g.into_iter().map(f64::from).collect()).collect();
            let a: BTreeMap<String, Vec<f64>> = groups.iter().enumerate().map(|(i, g)| (format!("t{i}"), g.clone())).collect();
            // strictly monotone relabeling preserves name order
            let b: BTreeMap<String, Vec<f64>> = groups.iter().enumerate().map(|(i, g)| (format!("z{:03}", i * 7), g.clone())).collect();
            let ra = rank_treatments(&a, 0.05, true).unwrap();
            let rb = rank_treatments(&b, 0.05, true).unwrap();
            let sa: Vec<_> = ra.treatments.values().map(|t| (t.rank, t.wins, t.ties, t.losses)).collect();
            let sb: Vec<_> = rb.treatments.values().map(|t| (t.rank, t.wins, t.ties, t.losses)).collect();
            prop_assert_eq!(sa, sb);
        }
    }

    #[test]
    fn exact_and_normal_agree_at_boundary() {
        // n = 12 boundary: 6 vs 6 over several separations
        for shift in 0..6 {
            let x: Vec<f64> = (0..6).map(|i| i as f64 * 1.7).collect();
            let y: Vec<f64> = (0..6).map(|i| i as f64 * 1.3 + shift as f64 * 0.9 + 0.05).collect();
            let e = mann_whitney_exact(&x, &y).unwrap();
            let n = mann_whitney_normal(&x, &y).unwrap();
            assert_eq!(e.u, n.u);
            assert!((e.p - n.p).abs() <= 0.02, "shift {shift}: exact {} normal {}", e.p, n.p);
        }
    }
}
