//! Selection quality: precision-recall AUC and average inclusion probability.
//!
//! The PR curve is built from binarized predictions: the `n_selected` best
//! features score 1 and the rest 0. Thresholding that score at 1 and at 0
//! gives two operating points, `(r1, p1)` and `(1, P/q)`, and the curve is
//! anchored at `(0, 1)`. The trapezoidal area is therefore
//! `r1 (1 + p1) / 2 + (1 - r1) (p1 + P/q) / 2`.

use serde::Serialize;

use crate::error::{Error, Result};

use super::scoring::{select_top, MethodScore};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// PR points for a 0/1 prediction vector, recall ascending.
pub fn pr_curve(truth: &[bool], predicted: &[bool]) -> Result<Vec<PrPoint>> {
    if truth.len() != predicted.len() {
        return Err(Error::SizeMismatch { expected: truth.len(), got: predicted.len() });
    }
    let positives = truth.iter().filter(|&&t| t).count();
    if positives == 0 {
        return Err(Error::NoPositives);
    }
    let q = truth.len() as f64;
    let p = positives as f64;
    let mut points = vec![PrPoint { recall: 0.0, precision: 1.0 }];
    let selected = predicted.iter().filter(|&&s| s).count();
    if selected > 0 && selected < truth.len() {
        let tp = truth.iter().zip(predicted).filter(|(&t, &s)| t && s).count() as f64;
        points.push(PrPoint { recall: tp / p, precision: tp / selected as f64 });
    }
    points.push(PrPoint { recall: 1.0, precision: p / q });
    Ok(points)
}

/// Trapezoidal area under a recall-ascending curve.
pub fn trapezoid(points: &[PrPoint]) -> f64 {
    points.windows(2).map(|w| (w[1].recall - w[0].recall) * (w[0].precision + w[1].precision) / 2.0).sum()
}

/// PR curve and its area for the top `n_selected` features of `scores`.
pub fn pr_auc(truth: &[bool], scores: &MethodScore, n_selected: usize) -> Result<(Vec<PrPoint>, f64)> {
    if truth.len() != scores.scores.len() {
        return Err(Error::SizeMismatch { expected: truth.len(), got: scores.scores.len() });
    }
    let mut predicted = vec![false; truth.len()];
    for k in select_top(scores, n_selected)? {
        predicted[k] = true;
    }
    let curve = pr_curve(truth, &predicted)?;
    let auc = trapezoid(&curve);
    Ok((curve, auc))
}

/// Mean over repeats of `#(selected and correct) / n_selected`.
pub fn average_inclusion_probability(selections: &[Vec<usize>], correct: &[bool], n_selected: usize) -> Result<f64> {
    if selections.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    if n_selected == 0 {
        return Err(Error::SizeMismatch { expected: 1, got: 0 });
    }
    let mut total = 0.0;
    for s in selections {
        if s.len() != n_selected {
            return Err(Error::SizeMismatch { expected: n_selected, got: s.len() });
        }
        let hits = s.iter().filter(|&&k| correct.get(k).copied().unwrap_or(false)).count();
        total += hits as f64 / n_selected as f64;
    }
    Ok(total / selections.len() as f64)
}
