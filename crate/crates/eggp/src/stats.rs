//! Rank statistics for comparing run-cost samples: median with interquartile
//! range, the two-tailed Mann-Whitney U test, and the Vargha-Delaney A
//! effect size.

use statrs::distribution::{ContinuousCDF, Normal};

/// Location and spread of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSummary {
    pub median: f64,
    pub iqr: f64,
}

/// Largest sample size for which the U distribution is enumerated exactly.
pub const EXACT_LIMIT: usize = 8;

/// Enumeration budget guarding the exact mode against a small sample paired
/// with a huge one, where C(n1 + n2, min) explodes.
const MAX_EXACT_SPLITS: u128 = 10_000_000;

/// Median and interquartile range using linearly interpolated quartiles
/// (the same convention as R's default quantile type 7).
pub fn median_iqr(xs: &[f64]) -> SampleSummary {
    assert!(!xs.is_empty(), "median of an empty sample");
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
    SampleSummary {
        median: quantile(&sorted, 0.5),
        iqr: quantile(&sorted, 0.75) - quantile(&sorted, 0.25),
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Two-tailed Mann-Whitney U test. Returns `(U, p)` with `U = min(U1, U2)`.
///
/// When the smaller sample has at most [`EXACT_LIMIT`] elements (and the
/// split count stays within budget), the p-value enumerates every group
/// labelling of the pooled values exactly, ties included. Otherwise it uses
/// the normal approximation with tie-corrected variance and a continuity
/// correction. Samples with no variance at all give p = 1.
pub fn mann_whitney_u(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert!(!xs.is_empty() && !ys.is_empty(), "empty sample");
    let n1 = xs.len();
    let n2 = ys.len();
    let ranks = midranks(xs, ys);
    let r1: f64 = ranks[..n1].iter().sum();
    let u1 = r1 - (n1 * (n1 + 1)) as f64 / 2.0;
    let u2 = n1 as f64 * n2 as f64 - u1;
    let u = u1.min(u2);
    let mu = n1 as f64 * n2 as f64 / 2.0;
    let observed_dev = (u1 - mu).abs();

    let k = n1.min(n2);
    let splits = binomial(n1 + n2, k);
    let p = if k <= EXACT_LIMIT && splits <= MAX_EXACT_SPLITS {
        exact_p(&ranks, k, mu, observed_dev, splits)
    } else {
        normal_p(&ranks, n1, n2, observed_dev)
    };
    (u, p)
}

/// Pooled midranks: first `xs.len()` entries belong to `xs`, the rest to
/// `ys`. Tied values share the average of the ranks they span.
fn midranks(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len() + ys.len();
    let mut order: Vec<usize> = (0..n).collect();
    let value = |i: usize| {
        if i < xs.len() {
            xs[i]
        } else {
            ys[i - xs.len()]
        }
    };
    order.sort_by(|&a, &b| value(a).partial_cmp(&value(b)).expect("NaN in sample"));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && value(order[end]) == value(order[start]) {
            end += 1;
        }
        let midrank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = midrank;
        }
        start = end;
    }
    ranks
}

/// Exact two-tailed p: the fraction of equally-sized group labellings whose
/// U deviates from the mean at least as much as observed.
fn exact_p(ranks: &[f64], k: usize, mu: f64, observed_dev: f64, splits: u128) -> f64 {
    let mut sorted = ranks.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let offset = (k * (k + 1)) as f64 / 2.0;
    let mut extreme = 0u64;
    for_each_combination(ranks.len(), k, |chosen| {
        let r: f64 = chosen.iter().map(|&i| sorted[i]).sum();
        if (r - offset - mu).abs() >= observed_dev - 1e-9 {
            extreme += 1;
        }
    });
    extreme as f64 / splits as f64
}

fn normal_p(ranks: &[f64], n1: usize, n2: usize, observed_dev: f64) -> f64 {
    let n = (n1 + n2) as f64;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end] == sorted[start] {
            end += 1;
        }
        let t = (end - start) as f64;
        tie_term += t * t * t - t;
        start = end;
    }
    let variance = (n1 as f64 * n2 as f64 / 12.0) * (n + 1.0 - tie_term / (n * (n - 1.0)));
    if variance <= 0.0 {
        return 1.0;
    }
    let z = (observed_dev - 0.5).max(0.0) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * normal.cdf(-z)).clamp(0.0, 1.0)
}

/// Vargha-Delaney A: the probability that a value drawn from `xs` exceeds
/// one drawn from `ys`, counting ties as half.
pub fn vargha_delaney_a(xs: &[f64], ys: &[f64]) -> f64 {
    assert!(!xs.is_empty() && !ys.is_empty(), "empty sample");
    let mut sorted_ys = ys.to_vec();
    sorted_ys.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
    let mut wins = 0u64;
    let mut ties = 0u64;
    for &x in xs {
        assert!(!x.is_nan(), "NaN in sample");
        let below = sorted_ys.partition_point(|&y| y < x);
        let not_above = sorted_ys.partition_point(|&y| y <= x);
        wins += below as u64;
        ties += (not_above - below) as u64;
    }
    (wins as f64 + 0.5 * ties as f64) / (xs.len() as f64 * ys.len() as f64)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result.saturating_mul((n - i) as u128) / (i + 1) as u128;
        if result > MAX_EXACT_SPLITS {
            return u128::MAX;
        }
    }
    result
}

/// Visits every k-subset of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    debug_assert!(k >= 1 && k <= n);
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
