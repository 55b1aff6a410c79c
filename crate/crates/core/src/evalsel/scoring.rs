//! Per-feature scores and top-k selection.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;
use crate::tree::{ensemble_importance, EnsembleConfig};

/// Score assigned to constant or otherwise unscorable columns.
pub const WORST_HIGHER_BETTER: f64 = -1.0;
pub const WORST_LOWER_BETTER: f64 = f64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    T0,
    Pearson,
    Spearman,
    Kendall,
    Chatterjee,
    TreeImportance,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::T0, Method::Pearson, Method::Spearman, Method::Kendall, Method::Chatterjee, Method::TreeImportance];

    pub fn name(self) -> &'static str {
        match self {
            Method::T0 => "t0",
            Method::Pearson => "pearson",
            Method::Spearman => "spearman",
            Method::Kendall => "kendall",
            Method::Chatterjee => "chatterjee",
            Method::TreeImportance => "tree-importance",
        }
    }

    pub fn direction(self) -> ScoreDirection {
        match self {
            Method::T0 => ScoreDirection::LowerBetter,
            _ => ScoreDirection::HigherBetter,
        }
    }

    /// Parses a comma-separated list; `all` expands to every method.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out: Vec<Method> = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(Method::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        let mut seen = std::collections::HashSet::new();
        out.retain(|m| seen.insert(*m));
        if out.is_empty() {
            return Err(Error::UnknownMethod(s.to_owned()));
        }
        Ok(out)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownMethod(s.to_owned()))
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> Self {
        m.name().to_owned()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreDirection {
    LowerBetter,
    HigherBetter,
}

impl ScoreDirection {
    pub fn worst(self) -> f64 {
        match self {
            ScoreDirection::LowerBetter => WORST_LOWER_BETTER,
            ScoreDirection::HigherBetter => WORST_HIGHER_BETTER,
        }
    }
}

/// Scores of every feature column under one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodScore {
    pub method: Method,
    pub direction: ScoreDirection,
    pub scores: Vec<f64>,
    /// `(column, message)` for columns given the worst score.
    pub warnings: Vec<(usize, String)>,
}

/// Extra inputs needed by some methods.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScoreContext {
    pub ensemble: EnsembleConfig,
    pub seed: u64,
}

fn is_constant(c: &[f64]) -> bool {
    c.iter().all(|&v| v == c[0])
}

/// Scores each column against `y`.
///
/// `t0` is lower-better; correlations are scored by absolute value; `chatterjee`
/// and `tree-importance` are used as is. Constant columns, and columns on
/// which the statistic is undefined, get the worst score and a warning.
/// Errors concerning `y` itself are returned.
pub fn score_features(columns: &[Vec<f64>], y: &[f64], method: Method, ctx: &ScoreContext) -> Result<MethodScore> {
    let direction = method.direction();
    let mut warnings = Vec::new();
    if columns.is_empty() {
        return Err(Error::NoFeatures);
    }
    for c in columns {
        if c.len() != y.len() {
            return Err(Error::LengthMismatch { left: c.len(), right: y.len() });
        }
    }
    let scores = match method {
        Method::TreeImportance => {
            let mut s = ensemble_importance(columns, y, &ctx.ensemble, ctx.seed)?;
            for (k, c) in columns.iter().enumerate() {
                if is_constant(c) {
                    s[k] = direction.worst();
                    warnings.push((k, "constant column".to_owned()));
                }
            }
            s
        }
        _ => {
            let one = |u: &[f64]| -> Result<f64> {
                Ok(match method {
                    Method::T0 => stats::t0_divergence_fast(u, y)?.value(),
                    Method::Pearson => stats::pearson(u, y)?.abs(),
                    Method::Spearman => stats::spearman(u, y)?.abs(),
                    Method::Kendall => stats::kendall_tau(u, y)?.abs(),
                    Method::Chatterjee => stats::chatterjee_xi(u, y)?,
                    Method::TreeImportance => unreachable!(),
                })
            };
            let mut out = Vec::with_capacity(columns.len());
            for (k, c) in columns.iter().enumerate() {
                if is_constant(c) {
                    warnings.push((k, "constant column".to_owned()));
                    out.push(direction.worst());
                    continue;
                }
                match one(c) {
                    Ok(v) if v.is_finite() => out.push(v),
                    Ok(v) => {
                        warnings.push((k, format!("non-finite score {v}")));
                        out.push(direction.worst());
                    }
                    Err(e @ (Error::TiesPresent("feature") | Error::ZeroVariance("feature"))) => {
                        warnings.push((k, e.to_string()));
                        out.push(direction.worst());
                    }
                    Err(e) => return Err(e),
                }
            }
            out
        }
    };
    for (k, msg) in &warnings {
        log::warn!("{method}: column {k}: {msg}");
    }
    Ok(MethodScore { method, direction, scores, warnings })
}

/// Column indices ordered best first; equal scores keep index order.
pub fn rank_columns(scores: &MethodScore) -> Vec<usize> {
    let s = &scores.scores;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| {
        let c = match scores.direction {
            ScoreDirection::LowerBetter => s[a].total_cmp(&s[b]),
            ScoreDirection::HigherBetter => s[b].total_cmp(&s[a]),
        };
        c.then(a.cmp(&b))
    });
    order
}

/// The `k` best columns, best first.
pub fn select_top(scores: &MethodScore, k: usize) -> Result<Vec<usize>> {
    let q = scores.scores.len();
    if k > q {
        return Err(Error::KTooLarge { k, q });
    }
    let mut order = rank_columns(scores);
    order.truncate(k);
    Ok(order)
}

/// Groups of two or more columns with equal scores (relative 1e-12), in
/// ascending index order.
pub fn equivalence_classes(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    for k in order {
        let same = current.last().is_some_and(|&p| {
            let (a, b) = (scores[p], scores[k]);
            (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
        });
        if !same {
            if current.len() > 1 {
                groups.push(std::mem::take(&mut current));
            }
            current.clear();
        }
        current.push(k);
    }
    if current.len() > 1 {
        groups.push(current);
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort();
    groups
}
