//! Oracle two-way partitions of a response vector.
//!
//! The loss of a partition `(P1, P2)` is `SS(P1) + SS(P2)`, the
//! within-group sum of squares. With sizes fixed at `(i, n - i)` the only
//! minimizers are the sorted prefix of length `i` and the sorted suffix of
//! length `i`; with free sizes the optimum is the best contiguous cut of
//! the sorted responses.

use serde::Serialize;

use crate::dataset::sort_by_response;
use crate::error::{Error, Result};
use crate::types::Partition2;

/// Largest `n` accepted by [`brute_force_best_2partition`].
pub const BRUTE_FORCE_LIMIT: usize = 16;

/// Relative tolerance for calling two losses equal.
pub const LOSS_TIE_TOLERANCE: f64 = 1e-12;

pub(crate) fn losses_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= LOSS_TIE_TOLERANCE * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// `SS(P1) + SS(P2)`; `p` must split `0..y.len()`.
pub fn loss(p: &Partition2, y: &[f64]) -> Result<f64> {
    if p.left.is_empty() || p.right.is_empty() {
        return Err(Error::EmptySide);
    }
    if !p.covers(y.len()) {
        return Err(Error::NotAPartition { n: y.len() });
    }
    let fresh = Partition2::new(p.left.clone(), p.right.clone(), y)?;
    Ok(fresh.loss())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    Prefix,
    Suffix,
}

/// The two fixed-size candidates and which one has the smaller loss.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedSizeOracle {
    /// `P1` = the `i` smallest responses.
    pub prefix: Partition2,
    /// `P1` = the `i` largest responses.
    pub suffix: Partition2,
    pub winner: Winner,
    /// Losses agree within [`LOSS_TIE_TOLERANCE`]; the prefix is reported.
    pub tie: bool,
}

impl FixedSizeOracle {
    pub fn best(&self) -> &Partition2 {
        match self.winner {
            Winner::Prefix => &self.prefix,
            Winner::Suffix => &self.suffix,
        }
    }
}

/// Fixed-size oracle; requires `n > 4` and `min(i, n - i) >= 2`.
pub fn oracle_fixed_size(y: &[f64], i: usize) -> Result<FixedSizeOracle> {
    let n = y.len();
    if n <= 4 || i < 2 || i + 2 > n {
        return Err(Error::SizeOutOfRange { size: i, n });
    }
    crate::dataset::check_no_ties(y)?;
    let order = sort_by_response(y);
    let sorted = order.as_slice();
    let prefix = Partition2::new(sorted[..i].to_vec(), sorted[i..].to_vec(), y)?;
    let suffix = Partition2::new(sorted[n - i..].to_vec(), sorted[..n - i].to_vec(), y)?;
    let (lp, ls) = (prefix.loss(), suffix.loss());
    let tie = losses_tie(lp, ls);
    let winner = if tie || lp < ls { Winner::Prefix } else { Winner::Suffix };
    Ok(FixedSizeOracle { prefix, suffix, winner, tie })
}

/// Exhaustive search over all `C(n, i)` choices of `P1`.
///
/// Ties within [`LOSS_TIE_TOLERANCE`] resolve to the lexicographically first
/// `P1`. Limited to `n <= 16`.
pub fn brute_force_best_2partition(y: &[f64], i: usize) -> Result<Partition2> {
    let n = y.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { n, limit: BRUTE_FORCE_LIMIT });
    }
    if i == 0 || i >= n {
        return Err(Error::SizeOutOfRange { size: i, n });
    }
    let mut combo: Vec<usize> = (0..i).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let l = combo_loss(y, &combo);
        match &best {
            Some((b, _)) if !(l < *b && !losses_tie(l, *b)) => {}
            _ => best = Some((l, combo.clone())),
        }
        if !next_combination(&mut combo, n) {
            break;
        }
    }
    let (_, left) = best.expect("at least one combination");
    let right = (0..n).filter(|k| !left.contains(k)).collect();
    Partition2::new(left, right, y)
}

fn combo_loss(y: &[f64], left: &[usize]) -> f64 {
    let mut in_left = vec![false; y.len()];
    left.iter().for_each(|&k| in_left[k] = true);
    let right: Vec<usize> = (0..y.len()).filter(|&k| !in_left[k]).collect();
    crate::types::mean_sse(y, left).1 + crate::types::mean_sse(y, &right).1
}

/// Advances to the next `k`-combination of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for pos in (0..k).rev() {
        if c[pos] < n - k + pos {
            c[pos] += 1;
            for q in pos + 1..k {
                c[q] = c[q - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Best contiguous cut of the sorted responses: returns `i*` (size of the
/// lower group) and the partition with the lower group on the left. The
/// smallest `i` wins ties.
pub fn oracle_varying_size(y: &[f64]) -> Result<(usize, Partition2)> {
    let n = y.len();
    if n <= 4 {
        return Err(Error::TooSmall(n));
    }
    crate::dataset::check_no_ties(y)?;
    let order = sort_by_response(y);
    let sorted: Vec<f64> = order.as_slice().iter().map(|&k| y[k]).collect();
    let losses = contiguous_cut_losses(&sorted);
    let mut best = 0;
    for (k, &l) in losses.iter().enumerate() {
        if l < losses[best] && !losses_tie(l, losses[best]) {
            best = k;
        }
    }
    let i = best + 1;
    let idx = order.as_slice();
    Ok((i, Partition2::new(idx[..i].to_vec(), idx[i..].to_vec(), y)?))
}

/// Losses of every cut `1..n` of an ascending sequence, via centered
/// prefix sums.
pub(crate) fn contiguous_cut_losses(sorted: &[f64]) -> Vec<f64> {
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = sorted.iter().map(|v| v - mean).collect();
    let total_s: f64 = c.iter().sum();
    let total_q: f64 = c.iter().map(|v| v * v).sum();
    let (mut s, mut q) = (0.0, 0.0);
    (1..n)
        .map(|i| {
            s += c[i - 1];
            q += c[i - 1] * c[i - 1];
            let (nl, nr) = (i as f64, (n - i) as f64);
            let left = q - s * s / nl;
            let right = (total_q - q) - (total_s - s).powi(2) / nr;
            left.max(0.0) + right.max(0.0)
        })
        .collect()
}

/// `loss(P) - loss(P with a and b exchanged)`; positive when the swap helps.
/// Requires `a` in `P1` and `b` in `P2`.
pub fn swap_gain(y: &[f64], p: &Partition2, a: usize, b: usize) -> Result<f64> {
    if !p.left.contains(&a) {
        return Err(Error::MembershipViolation { index: a });
    }
    if !p.right.contains(&b) {
        return Err(Error::MembershipViolation { index: b });
    }
    let before = loss(p, y)?;
    let swapped = swap(p, a, b, y)?;
    Ok(before - swapped.loss())
}

/// The partition with `a` (from `P1`) and `b` (from `P2`) exchanged.
pub fn swap(p: &Partition2, a: usize, b: usize, y: &[f64]) -> Result<Partition2> {
    let left = p.left.iter().map(|&k| if k == a { b } else { k }).collect();
    let right = p.right.iter().map(|&k| if k == b { a } else { k }).collect();
    Partition2::new(left, right, y)
}
