//! Rank statistics between a feature column `u` and a response `y`.
//!
//! The central quantity is the concordant divergence
//!
//! ```text
//! T0(u, y) = 2 / (n (n - 1)) * sum over ordered pairs (a, b), a != b, of
//!            |y_a - y_b| * [ 1(u_a >= u_b) 1(y_a < y_b) + 1(u_a < u_b) 1(y_a >= y_b) ]
//! ```
//!
//! Per unordered pair this weighs `|y_a - y_b|` by 2 when the pair is
//! strictly discordant, by 1 when `u` is tied and by 0 when concordant. It is
//! zero exactly when `u` orders the sample strictly like `y`.

use serde::{Deserialize, Serialize};

use crate::dataset::check_no_ties;
use crate::error::{Error, Result};
use crate::types::RankPermutation;

/// A concordant divergence value, always `>= 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DivergenceValue(f64);

impl DivergenceValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_lengths(u: &[f64], y: &[f64], min: usize) -> Result<()> {
    if u.len() != y.len() {
        return Err(Error::LengthMismatch { left: u.len(), right: y.len() });
    }
    if u.len() < min {
        return Err(Error::TooFewObservations { needed: min, got: u.len() });
    }
    Ok(())
}

/// Concordant divergence by direct O(n^2) pair enumeration.
pub fn t0_divergence(u: &[f64], y: &[f64]) -> Result<DivergenceValue> {
    check_lengths(u, y, 2)?;
    check_no_ties(y)?;
    let n = u.len();
    let mut total = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            let dy = y[b] - y[a];
            let du = u[b] - u[a];
            // weight 2 for discordant, 1 for a tie in u
            let w = if du == 0.0 {
                1.0
            } else if (du > 0.0) != (dy > 0.0) {
                2.0
            } else {
                0.0
            };
            total += w * dy.abs();
        }
    }
    Ok(DivergenceValue(2.0 * total / (n as f64 * (n as f64 - 1.0))))
}

/// Fenwick tree over rank positions holding counts and sums.
struct Fenwick {
    count: Vec<u64>,
    sum: Vec<f64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self { count: vec![0; n + 1], sum: vec![0.0; n + 1] }
    }

    fn add(&mut self, pos: usize, v: f64) {
        let mut i = pos + 1;
        while i < self.count.len() {
            self.count[i] += 1;
            self.sum[i] += v;
            i += i & i.wrapping_neg();
        }
    }

    /// Count and sum over positions `< pos`.
    fn prefix(&self, pos: usize) -> (u64, f64) {
        let (mut c, mut s) = (0, 0.0);
        let mut i = pos;
        while i > 0 {
            c += self.count[i];
            s += self.sum[i];
            i -= i & i.wrapping_neg();
        }
        (c, s)
    }
}

/// Concordant divergence in O(n log n).
///
/// Sweeps the sample by ascending `y`; for each point the earlier (smaller
/// `y`) points with larger `u` are discordant and those with equal `u` are
/// tied. Agrees with [`t0_divergence`] up to summation order.
pub fn t0_divergence_fast(u: &[f64], y: &[f64]) -> Result<DivergenceValue> {
    check_lengths(u, y, 2)?;
    check_no_ties(y)?;
    let n = u.len();
    // dense ranks of u, ties share a rank
    let mut by_u: Vec<usize> = (0..n).collect();
    by_u.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
    let mut u_rank = vec![0usize; n];
    let mut r = 0;
    for w in 0..n {
        if w > 0 && u[by_u[w]] != u[by_u[w - 1]] {
            r += 1;
        }
        u_rank[by_u[w]] = r;
    }
    let n_ranks = r + 1;

    let mut by_y: Vec<usize> = (0..n).collect();
    by_y.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    let mut tree = Fenwick::new(n_ranks);
    let (mut seen, mut seen_sum) = (0u64, 0.0);
    let mut total = 0.0;
    for &j in &by_y {
        let rank = u_rank[j];
        let (c_lt, s_lt) = tree.prefix(rank);
        let (c_le, s_le) = tree.prefix(rank + 1);
        let (c_eq, s_eq) = (c_le - c_lt, s_le - s_lt);
        let (c_gt, s_gt) = (seen - c_le, seen_sum - s_le);
        // skip empty groups so concordant samples give exactly zero
        if c_gt > 0 {
            total += 2.0 * (c_gt as f64 * y[j] - s_gt);
        }
        if c_eq > 0 {
            total += c_eq as f64 * y[j] - s_eq;
        }
        tree.add(rank, y[j]);
        seen += 1;
        seen_sum += y[j];
    }
    Ok(DivergenceValue((2.0 * total / (n as f64 * (n as f64 - 1.0))).max(0.0)))
}

/// Kendall's tau-a: `(concordant - discordant) / C(n, 2)`; pairs tied in
/// either argument count as neither.
pub fn kendall_tau(u: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(u, y, 2)?;
    let n = u.len();
    let mut score: i64 = 0;
    for a in 0..n {
        for b in (a + 1)..n {
            let s = (u[b] - u[a]).signum() * (y[b] - y[a]).signum();
            if u[a] != u[b] && y[a] != y[b] {
                score += s as i64;
            }
        }
    }
    Ok(score as f64 / (n * (n - 1) / 2) as f64)
}

/// Sample Pearson correlation.
pub fn pearson(u: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(u, y, 2)?;
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut suu, mut syy, mut suy) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(y) {
        let (da, db) = (a - mu, b - my);
        suu += da * da;
        syy += db * db;
        suy += da * db;
    }
    if suu == 0.0 {
        return Err(Error::ZeroVariance("feature"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("response"));
    }
    Ok((suy / (suu.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
pub fn midranks(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of midrank vectors.
pub fn spearman(u: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(u, y, 2)?;
    pearson(&midranks(u), &midranks(y))
}

/// Chatterjee's xi for samples without ties:
/// `1 - 3 * sum |r_{i+1} - r_i| / (n^2 - 1)` with `r` the ranks of `y`
/// listed in ascending order of `u`.
pub fn chatterjee_xi(u: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(u, y, 2)?;
    let has_ties = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s.windows(2).any(|w| w[0] == w[1])
    };
    if has_ties(u) {
        return Err(Error::TiesPresent("feature"));
    }
    if has_ties(y) {
        return Err(Error::TiesPresent("response"));
    }
    let n = u.len();
    let y_rank = midranks(y);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
    let jumps: f64 = order.windows(2).map(|w| (y_rank[w[1]] - y_rank[w[0]]).abs()).sum();
    let nf = n as f64;
    Ok(1.0 - 3.0 * jumps / (nf * nf - 1.0))
}

/// Average pairwise gap in conditional means along a ranking:
/// `2 / (N (N - 1)) * sum_{i < i'} (mu[j_i] - mu[j_i'])`.
///
/// Evaluated in O(N) as `sum_i mu[j_i] * (N - 1 - 2 i)`.
pub fn ranking_metric(perm: &RankPermutation, cond_means: &[f64]) -> Result<f64> {
    let n = perm.len();
    if n != cond_means.len() {
        return Err(Error::LengthMismatch { left: n, right: cond_means.len() });
    }
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    let total: f64 =
        perm.as_slice().iter().enumerate().map(|(i, &j)| cond_means[j] * (n as f64 - 1.0 - 2.0 * i as f64)).sum();
    Ok(2.0 * total / (n as f64 * (n as f64 - 1.0)))
}

/// Ranking by descending conditional mean; equal means keep index order.
pub fn bayes_permutation(cond_means: &[f64]) -> RankPermutation {
    let mut order: Vec<usize> = (0..cond_means.len()).collect();
    order.sort_by(|&a, &b| cond_means[b].total_cmp(&cond_means[a]).then(a.cmp(&b)));
    RankPermutation::from_order_unchecked(order)
}
