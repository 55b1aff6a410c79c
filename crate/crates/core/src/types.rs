use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A permutation `j_1, ..., j_N` of `0..N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RankPermutation(Vec<usize>);

impl RankPermutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &j in &order {
            if j >= n || std::mem::replace(&mut seen[j], true) {
                return Err(Error::InvalidPermutation(n));
            }
        }
        Ok(Self(order))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub(crate) fn from_order_unchecked(order: Vec<usize>) -> Self {
        debug_assert!(Self::new(order.clone()).is_ok());
        Self(order)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

/// A two-way split of a node's indices with cached side statistics.
///
/// Index sets are kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition2 {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub mean_left: f64,
    pub mean_right: f64,
    pub sse_left: f64,
    pub sse_right: f64,
}

impl Partition2 {
    /// Builds a partition of the indices it is given; both sides must be
    /// nonempty, disjoint and in range for `y`.
    pub fn new(mut left: Vec<usize>, mut right: Vec<usize>, y: &[f64]) -> Result<Self> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::EmptySide);
        }
        left.sort_unstable();
        right.sort_unstable();
        let mut seen = vec![false; y.len()];
        for &i in left.iter().chain(&right) {
            if i >= y.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::NotAPartition { n: y.len() });
            }
        }
        let (mean_left, sse_left) = mean_sse(y, &left);
        let (mean_right, sse_right) = mean_sse(y, &right);
        Ok(Self { left, right, mean_left, mean_right, sse_left, sse_right })
    }

    /// Total within-group sum of squares.
    pub fn loss(&self) -> f64 {
        self.sse_left + self.sse_right
    }

    pub fn len(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True if both partitions describe the same unordered pair of sets.
    pub fn same_split(&self, other: &Partition2) -> bool {
        (self.left == other.left && self.right == other.right) || (self.left == other.right && self.right == other.left)
    }

    /// Covers exactly `0..n`.
    pub fn covers(&self, n: usize) -> bool {
        self.len() == n && self.left.iter().chain(&self.right).all(|&i| i < n)
    }
}

/// Two-pass mean and sum of squared deviations over `idx`.
pub(crate) fn mean_sse(y: &[f64], idx: &[usize]) -> (f64, f64) {
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n;
    let sse = idx.iter().map(|&i| (y[i] - mean).powi(2)).sum();
    (mean, sse)
}

/// A real interval with explicit endpoint closure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidInterval(format!("[{lo}, {hi}]")));
        }
        if lo == hi && !(lo_closed && hi_closed) {
            return Err(Error::InvalidInterval(format!("degenerate point {lo} must be closed")));
        }
        Ok(Self { lo, hi, lo_closed, hi_closed })
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, true, true)
    }

    /// `[lo, hi)`
    pub fn half_open(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, true, false)
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Same endpoints within `tol`, ignoring closure.
    pub fn same_span(&self, other: &Interval, tol: f64) -> bool {
        (self.lo - other.lo).abs() <= tol && (self.hi - other.hi).abs() <= tol
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}
