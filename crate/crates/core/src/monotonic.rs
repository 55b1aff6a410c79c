//! Comparing two piecewise strictly monotone transforms of one coordinate.
//!
//! The domain of each transform is cut at its breakpoints into monotone
//! segments. Intersecting both cuttings gives the refined intervals; on each
//! refined interval a threshold `C` has at most one pre-image under either
//! transform, and the pair of pre-image counts decides which transform can
//! realize a split there. Summing the measure of intervals where only one
//! transform can split gives the preference probability `p12`.
//!
//! Refined intervals are `[a, b)` except the last, which is closed. The
//! image of a refined interval inherits that closure, so a threshold equal
//! to the value at an open end has no pre-image there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expression, UnaryOp};
use crate::tree::{log_principal_decision_ratio, SplitRule};
use crate::types::Interval;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
const GRID_POINTS: usize = 101;
const BREAKPOINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(rename = "expr")]
    pub expr: Expression,
    pub direction: Direction,
}

/// A transform of one variable, strictly monotone between breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PiecewiseDoc", into = "PiecewiseDoc")]
pub struct PiecewiseMonotone {
    domain: Interval,
    breakpoints: Vec<f64>,
    segments: Vec<Segment>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PiecewiseDoc {
    /// `null` marks an unbounded end.
    domain: [Option<f64>; 2],
    #[serde(default)]
    breakpoints: Vec<f64>,
    segments: Vec<Segment>,
}

impl TryFrom<PiecewiseDoc> for PiecewiseMonotone {
    type Error = Error;

    fn try_from(doc: PiecewiseDoc) -> Result<Self> {
        let lo = doc.domain[0].unwrap_or(f64::NEG_INFINITY);
        let hi = doc.domain[1].unwrap_or(f64::INFINITY);
        let domain = Interval::new(lo, hi, lo.is_finite(), hi.is_finite())?;
        PiecewiseMonotone::new(domain, doc.breakpoints, doc.segments)
    }
}

impl From<PiecewiseMonotone> for PiecewiseDoc {
    fn from(t: PiecewiseMonotone) -> Self {
        let end = |v: f64| v.is_finite().then_some(v);
        PiecewiseDoc { domain: [end(t.domain.lo), end(t.domain.hi)], breakpoints: t.breakpoints, segments: t.segments }
    }
}

/// Evaluation points spread over `[lo, hi]`; unbounded ends are reached
/// through an arctangent change of variable and never evaluated.
fn grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    if lo.is_finite() && hi.is_finite() {
        return (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
    }
    let (ua, ub) = (lo.atan(), hi.atan());
    (0..m).map(|i| (ua + (ub - ua) * (i as f64 + 0.5) / m as f64).tan()).collect()
}

impl PiecewiseMonotone {
    /// `breakpoints` are the interior cut points, ascending; there is one
    /// more segment than breakpoints.
    pub fn new(domain: Interval, breakpoints: Vec<f64>, segments: Vec<Segment>) -> Result<Self> {
        if domain.lo >= domain.hi {
            return Err(Error::InvalidPiecewise(format!("empty domain {domain}")));
        }
        if segments.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidPiecewise(format!(
                "{} breakpoints need {} segments, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                segments.len()
            )));
        }
        let mut prev = domain.lo;
        for &b in breakpoints.iter().chain(std::iter::once(&domain.hi)) {
            if b.is_nan() || b <= prev {
                return Err(Error::InvalidPiecewise(format!(
                    "breakpoint {b} is not strictly inside the domain in order"
                )));
            }
            prev = b;
        }
        let t = PiecewiseMonotone { domain, breakpoints, segments };
        for (j, seg) in t.segments.iter().enumerate() {
            seg.expr.check_arity(1)?;
            if j > 0 && t.segments[j - 1].direction == seg.direction {
                return Err(Error::InvalidPiecewise(format!(
                    "segments {} and {j} share a direction and should be merged",
                    j - 1
                )));
            }
            let (lo, hi) = t.segment_bounds(j);
            let values: Vec<f64> = grid(lo, hi, GRID_POINTS).iter().map(|&x| seg.expr.eval_scalar(x)).collect();
            let ok = values.iter().all(|v| v.is_finite())
                && values.windows(2).all(|w| match seg.direction {
                    Direction::Increasing => w[1] > w[0],
                    Direction::Decreasing => w[1] < w[0],
                });
            if !ok {
                return Err(Error::NotMonotone {
                    segment: j,
                    direction: match seg.direction {
                        Direction::Increasing => "increasing",
                        Direction::Decreasing => "decreasing",
                    },
                });
            }
        }
        Ok(t)
    }

    /// A single monotone piece over `domain`.
    pub fn single(domain: Interval, expr: Expression, direction: Direction) -> Result<Self> {
        Self::new(domain, Vec::new(), vec![Segment { expr, direction }])
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    fn segment_bounds(&self, j: usize) -> (f64, f64) {
        let lo = if j == 0 { self.domain.lo } else { self.breakpoints[j - 1] };
        let hi = if j == self.breakpoints.len() { self.domain.hi } else { self.breakpoints[j] };
        (lo, hi)
    }

    /// Value at `x`; at a breakpoint the segment to the right is used, and
    /// infinite `x` gives the limit along its segment.
    pub fn eval(&self, x: f64) -> f64 {
        let j = self.breakpoints.partition_point(|&b| b <= x);
        self.segments[j].expr.eval_scalar(x)
    }

    /// Index of the segment containing `I`, if any.
    fn segment_of(&self, i: &Interval) -> Option<usize> {
        (0..self.segments.len()).find(|&j| {
            let (lo, hi) = self.segment_bounds(j);
            i.lo >= lo - BREAKPOINT_TOL && i.hi <= hi + BREAKPOINT_TOL
        })
    }

    /// Infimum and supremum over the domain. Unbounded ends are taken as
    /// limits.
    pub fn bounds(&self) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..self.segments.len() {
            let (a, b) = self.segment_bounds(j);
            for x in [a, b] {
                let v = self.segments[j].expr.eval_scalar(x);
                if !v.is_finite() {
                    return Err(Error::UnboundedTransform);
                }
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Ok((lo, hi))
    }

    /// `theta + c` on every segment.
    pub fn shifted(&self, c: f64) -> PiecewiseMonotone {
        let segments = self
            .segments
            .iter()
            .map(|s| Segment {
                expr: Expression::unary(UnaryOp::Affine { a: 1.0, b: c }, s.expr.clone()),
                direction: s.direction,
            })
            .collect();
        PiecewiseMonotone { domain: self.domain, breakpoints: self.breakpoints.clone(), segments }
    }
}

/// Intersection of the two monotone cuttings, ascending.
pub fn refine(t1: &PiecewiseMonotone, t2: &PiecewiseMonotone) -> Result<Vec<Interval>> {
    if t1.domain != t2.domain {
        return Err(Error::DomainMismatch);
    }
    let mut cuts: Vec<f64> = t1.breakpoints.iter().chain(&t2.breakpoints).copied().collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= BREAKPOINT_TOL);
    let d = t1.domain;
    let mut points = vec![d.lo];
    points.extend(cuts);
    points.push(d.hi);
    let last = points.len() - 2;
    (0..=last)
        .map(|k| {
            let lo_closed = if k == 0 { d.lo_closed } else { true };
            let hi_closed = k == last && d.hi_closed;
            Interval::new(points[k], points[k + 1], lo_closed, hi_closed)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "count", content = "x")]
pub enum Preimage {
    Zero,
    One(f64),
}

impl Preimage {
    pub fn count(self) -> usize {
        match self {
            Preimage::Zero => 0,
            Preimage::One(_) => 1,
        }
    }
}

/// Pre-image of `c` under `t` inside `i`, located by bisection to `tol`.
/// `i` must sit inside one monotone segment; `c` counts as in the range at
/// an endpoint exactly when that end of `i` is closed.
pub fn preimage_count(t: &PiecewiseMonotone, c: f64, i: &Interval, tol: f64) -> Result<Preimage> {
    let j = t.segment_of(i).ok_or(Error::IntervalSpansBreakpoint { lo: i.lo, hi: i.hi })?;
    let seg = &t.segments[j];
    let f = |x: f64| seg.expr.eval_scalar(x);
    let (fa, fb) = (f(i.lo), f(i.hi));
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::UnboundedTransform);
    }
    let sign = match seg.direction {
        Direction::Increasing => 1.0,
        Direction::Decreasing => -1.0,
    };
    // work with g = sign * (f - c), increasing on i
    let (ga, gb) = (sign * (fa - c), sign * (fb - c));
    if ga == 0.0 {
        return Ok(if i.lo_closed { Preimage::One(i.lo) } else { Preimage::Zero });
    }
    if gb == 0.0 {
        return Ok(if i.hi_closed { Preimage::One(i.hi) } else { Preimage::Zero });
    }
    if ga > 0.0 || gb < 0.0 {
        return Ok(Preimage::Zero);
    }
    let (mut xa, mut xb) = (i.lo, i.hi);
    for _ in 0..2000 {
        if xb - xa <= tol {
            break;
        }
        // halve wide or unbounded brackets on the arctangent scale
        let xm = if xb - xa < 1e6 { 0.5 * (xa + xb) } else { (0.5 * (xa.atan() + xb.atan())).tan() };
        if xm <= xa || xm >= xb {
            break;
        }
        if sign * (f(xm) - c) < 0.0 {
            xa = xm;
        } else {
            xb = xm;
        }
    }
    Ok(Preimage::One(0.5 * (xa + xb)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    BothZero,
    FirstOnly,
    SecondOnly,
    BothOne,
}

/// Pre-image case of `(c1 under t1, c2 under t2)` on a refined interval.
pub fn classify_interval(
    t1: &PiecewiseMonotone,
    t2: &PiecewiseMonotone,
    c1: f64,
    c2: f64,
    i: &Interval,
) -> Result<Case> {
    let refined = refine(t1, t2)?;
    if !refined.iter().any(|r| r.same_span(i, BREAKPOINT_TOL)) {
        return Err(Error::NotRefinedInterval { lo: i.lo, hi: i.hi });
    }
    let a = preimage_count(t1, c1, i, DEFAULT_TOLERANCE)?.count();
    let b = preimage_count(t2, c2, i, DEFAULT_TOLERANCE)?.count();
    Ok(match (a, b) {
        (0, 0) => Case::BothZero,
        (1, 0) => Case::FirstOnly,
        (0, 1) => Case::SecondOnly,
        _ => Case::BothOne,
    })
}

/// Data-dependent comparison on `i`: the log principal decision ratio of
/// the split `t1(x) <= c1` against `t2(x) <= c2`, over the samples with `x`
/// in `i`. Positive values favour `t1`.
pub fn interval_log_ratio(
    t1: &PiecewiseMonotone,
    t2: &PiecewiseMonotone,
    c1: f64,
    c2: f64,
    i: &Interval,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    let idx: Vec<usize> = (0..x.len()).filter(|&k| i.contains(x[k])).collect();
    let z1: Vec<f64> = x.iter().map(|&v| t1.eval(v)).collect();
    let z2: Vec<f64> = x.iter().map(|&v| t2.eval(v)).collect();
    log_principal_decision_ratio(&[z1, z2], y, &idx, SplitRule::new(0, c1), SplitRule::new(1, c2))
}

/// A probability measure on the real line, given by its CDF.
pub trait Measure: Sync {
    fn cdf(&self, x: f64) -> f64;

    fn prob(&self, i: &Interval) -> f64 {
        self.cdf(i.hi) - self.cdf(i.lo)
    }
}

/// Uniform on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    lo: f64,
    hi: f64,
}

impl Uniform {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInterval(format!("uniform on [{lo}, {hi}]")));
        }
        Ok(Uniform { lo, hi })
    }
}

impl Measure for Uniform {
    fn cdf(&self, x: f64) -> f64 {
        ((x - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }
}

/// A CDF tabulated at ascending points, linear in between; 0 before the
/// first point and 1 after the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    xs: Vec<f64>,
    ps: Vec<f64>,
}

impl Tabulated {
    pub fn new(xs: Vec<f64>, ps: Vec<f64>) -> Result<Self> {
        if xs.len() != ps.len() || xs.len() < 2 {
            return Err(Error::Config("tabulated CDF needs at least two (x, p) pairs of equal length".into()));
        }
        let ordered = xs.windows(2).all(|w| w[0] < w[1]) && ps.windows(2).all(|w| w[0] <= w[1]);
        if !ordered || ps[0] != 0.0 || *ps.last().unwrap() != 1.0 || xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("tabulated CDF must rise from 0 to 1 over increasing finite x".into()));
        }
        Ok(Tabulated { xs, ps })
    }
}

impl Measure for Tabulated {
    fn cdf(&self, x: f64) -> f64 {
        let k = self.xs.partition_point(|&v| v <= x);
        if k == 0 {
            return 0.0;
        }
        if k == self.xs.len() {
            return 1.0;
        }
        let (x0, x1, p0, p1) = (self.xs[k - 1], self.xs[k], self.ps[k - 1], self.ps[k]);
        p0 + (p1 - p0) * (x - x0) / (x1 - x0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreferenceReport {
    pub c: f64,
    pub intervals_pref_1: Vec<Interval>,
    pub intervals_pref_2: Vec<Interval>,
    pub p_value: f64,
}

impl PreferenceReport {
    /// 1 or 2 for the transform favoured, `None` when `p_value` is zero.
    pub fn preferred(&self) -> Option<u8> {
        if self.p_value > 0.0 {
            Some(1)
        } else if self.p_value < 0.0 {
            Some(2)
        } else {
            None
        }
    }
}

/// `p12 = P(union of first-only intervals) - P(union of second-only
/// intervals)` with both thresholds equal to `c`.
pub fn preference_probability(
    t1: &PiecewiseMonotone,
    t2: &PiecewiseMonotone,
    c: f64,
    measure: &dyn Measure,
) -> Result<PreferenceReport> {
    let mut report = PreferenceReport { c, intervals_pref_1: Vec::new(), intervals_pref_2: Vec::new(), p_value: 0.0 };
    let (mut p1, mut p2) = (0.0, 0.0);
    for i in refine(t1, t2)? {
        match classify_interval(t1, t2, c, c, &i)? {
            Case::BothZero => {}
            Case::FirstOnly => {
                p1 += measure.prob(&i);
                report.intervals_pref_1.push(i);
            }
            Case::SecondOnly => {
                p2 += measure.prob(&i);
                report.intervals_pref_2.push(i);
            }
            Case::BothOne => return Err(Error::CaseThreePresent { c, lo: i.lo, hi: i.hi }),
        }
    }
    report.p_value = p1 - p2;
    Ok(report)
}

/// `C0 = sup t2 - inf t1 + 1`; using `t1 + C0` in place of `t1` rules out
/// a shared threshold with pre-images under both.
pub fn offset_shift(t1: &PiecewiseMonotone, t2: &PiecewiseMonotone) -> Result<f64> {
    let (inf1, _) = t1.bounds()?;
    let (_, sup2) = t2.bounds()?;
    Ok(sup2 - inf1 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Interval {
        Interval::closed(0.0, 1.0).unwrap()
    }

    fn theta1() -> PiecewiseMonotone {
        PiecewiseMonotone::single(unit(), "x+1.2".parse().unwrap(), Direction::Increasing).unwrap()
    }

    fn theta2() -> PiecewiseMonotone {
        let e: Expression = "-4*x^2+4*x".parse().unwrap();
        let segs = vec![
            Segment { expr: e.clone(), direction: Direction::Increasing },
            Segment { expr: e, direction: Direction::Decreasing },
        ];
        PiecewiseMonotone::new(unit(), vec![0.5], segs).unwrap()
    }

    fn half(lo: f64, hi: f64) -> Interval {
        Interval::half_open(lo, hi).unwrap()
    }

    #[test]
    fn construction_checks() {
        let e: Expression = "-4*x^2+4*x".parse().unwrap();
        let inc = Segment { expr: e.clone(), direction: Direction::Increasing };
        assert!(matches!(
            PiecewiseMonotone::new(unit(), vec![], vec![inc.clone()]),
            Err(Error::NotMonotone { segment: 0, .. })
        ));
        assert!(matches!(
            PiecewiseMonotone::new(unit(), vec![0.5], vec![inc.clone(), inc.clone()]),
            Err(Error::InvalidPiecewise(_))
        ));
        assert!(matches!(
            PiecewiseMonotone::new(unit(), vec![1.5], vec![inc.clone(), inc]),
            Err(Error::InvalidPiecewise(_))
        ));
        let two_var: Expression = "x1+x2".parse().unwrap();
        assert!(PiecewiseMonotone::single(unit(), two_var, Direction::Increasing).is_err());
    }

    #[test]
    fn json_schema() {
        let src = r#"{"domain":[0,1],"breakpoints":[0.5],"segments":[
            {"expr":"-4*x^2+4*x","direction":"increasing"},
            {"expr":"-4*x^2+4*x","direction":"decreasing"}]}"#;
        let t: PiecewiseMonotone = serde_json::from_str(src).unwrap();
        assert_eq!(t, theta2());
        let back: PiecewiseMonotone = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
        let open: PiecewiseMonotone =
            serde_json::from_str(r#"{"domain":[0,null],"segments":[{"expr":"x","direction":"increasing"}]}"#).unwrap();
        assert_eq!(open.domain().hi, f64::INFINITY);
        assert_eq!(offset_shift(&open, &open), Err(Error::UnboundedTransform));
    }

    #[test]
    fn refine_examples() {
        let r = refine(&theta1(), &theta2()).unwrap();
        assert_eq!(r, vec![half(0.0, 0.5), Interval::closed(0.5, 1.0).unwrap()]);
        assert_eq!(refine(&theta1(), &theta1()).unwrap(), vec![unit()]);

        let x: Expression = "x".parse().unwrap();
        let neg: Expression = "-1*x".parse().unwrap();
        let seg = |e: &Expression, d| Segment { expr: e.clone(), direction: d };
        let a = PiecewiseMonotone::new(
            unit(),
            vec![1.0 / 3.0],
            vec![seg(&x, Direction::Increasing), seg(&neg, Direction::Decreasing)],
        )
        .unwrap();
        let b = PiecewiseMonotone::new(
            unit(),
            vec![2.0 / 3.0],
            vec![seg(&x, Direction::Increasing), seg(&neg, Direction::Decreasing)],
        )
        .unwrap();
        let r = refine(&a, &b).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!((r[0].lo, r[0].hi, r[1].hi, r[2].hi), (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0));

        let other = PiecewiseMonotone::single(Interval::closed(0.0, 2.0).unwrap(), x, Direction::Increasing).unwrap();
        assert_eq!(refine(&a, &other), Err(Error::DomainMismatch));
    }

    #[test]
    fn preimage_examples() {
        let i = Interval::closed(0.0, 0.5).unwrap();
        let Preimage::One(x) = preimage_count(&theta2(), 0.5, &i, 1e-10).unwrap() else { panic!("no pre-image") };
        assert!((x - (1.0 - 0.5f64.sqrt()) / 2.0).abs() < 1e-9);
        assert_eq!(preimage_count(&theta1(), 0.5, &i, 1e-10).unwrap(), Preimage::Zero);
        assert_eq!(preimage_count(&theta1(), 1.2, &i, 1e-10).unwrap(), Preimage::One(0.0));
        assert_eq!(preimage_count(&theta1(), 1.7, &i, 1e-10).unwrap(), Preimage::One(0.5));
        assert_eq!(preimage_count(&theta1(), 1.7, &half(0.0, 0.5), 1e-10).unwrap(), Preimage::Zero);
        assert_eq!(
            preimage_count(&theta2(), 0.5, &unit(), 1e-10),
            Err(Error::IntervalSpansBreakpoint { lo: 0.0, hi: 1.0 })
        );
    }

    #[test]
    fn preimage_on_unbounded_segment() {
        let t: PiecewiseMonotone =
            serde_json::from_str(r#"{"domain":[null,null],"segments":[{"expr":"x^3","direction":"increasing"}]}"#)
                .unwrap();
        let all = t.domain();
        let Preimage::One(x) = preimage_count(&t, 27.0, &all, 1e-10).unwrap() else { panic!("no pre-image") };
        assert!((x - 3.0).abs() < 1e-9, "{x}");
    }

    #[test]
    fn classification_examples() {
        let (t1, t2) = (theta1(), theta2());
        let i = half(0.0, 0.5);
        assert_eq!(classify_interval(&t1, &t2, 1.0, -0.5, &i).unwrap(), Case::BothZero);
        assert_eq!(classify_interval(&t1, &t2, 1.5, -0.5, &i).unwrap(), Case::FirstOnly);
        assert_eq!(classify_interval(&t1, &t2, 1.0, 0.5, &i).unwrap(), Case::SecondOnly);
        assert_eq!(classify_interval(&t1, &t2, 1.5, 0.5, &i).unwrap(), Case::BothOne);
        assert!(matches!(
            classify_interval(&t1, &t2, 1.5, 0.5, &half(0.0, 0.25)),
            Err(Error::NotRefinedInterval { .. })
        ));
    }

    #[test]
    fn preference_table() {
        let (t1, t2) = (theta1(), theta2());
        let u = Uniform::new(0.0, 1.0).unwrap();
        let table = [(-1.0, 0.0), (0.5, -1.0), (1.1, 0.0), (1.5, 0.5), (1.9, 0.5), (3.0, 0.0)];
        for (c, p) in table {
            let r = preference_probability(&t1, &t2, c, &u).unwrap();
            assert!((r.p_value - p).abs() < 1e-12, "C={c}: {}", r.p_value);
        }
        let r = preference_probability(&t1, &t2, 1.5, &u).unwrap();
        assert_eq!(r.intervals_pref_1, vec![half(0.0, 0.5)]);
        assert_eq!(r.preferred(), Some(1));
        let r = preference_probability(&t1, &t2, 1.9, &u).unwrap();
        assert_eq!(r.intervals_pref_1, vec![Interval::closed(0.5, 1.0).unwrap()]);
        // left end of the half-open table column
        assert_eq!(preference_probability(&t1, &t2, 1.7, &u).unwrap().p_value, 0.5);
    }

    #[test]
    fn case_three_is_reported() {
        let x = PiecewiseMonotone::single(unit(), "x".parse().unwrap(), Direction::Increasing).unwrap();
        let u = Uniform::new(0.0, 1.0).unwrap();
        assert!(matches!(preference_probability(&x, &theta2(), 0.5, &u), Err(Error::CaseThreePresent { .. })));
    }

    #[test]
    fn offset_examples() {
        let x = PiecewiseMonotone::single(unit(), "x".parse().unwrap(), Direction::Increasing).unwrap();
        assert!((offset_shift(&x, &theta2()).unwrap() - 2.0).abs() < 1e-12);
        assert!((offset_shift(&theta1(), &theta2()).unwrap() - 0.8).abs() < 1e-12);
        assert!(offset_shift(&theta2(), &theta2()).unwrap() > 0.0);

        let c0 = offset_shift(&x, &theta2()).unwrap();
        let shifted = x.shifted(c0);
        let u = Uniform::new(0.0, 1.0).unwrap();
        for k in 0..=40 {
            let c = -1.0 + 0.1 * k as f64;
            assert!(preference_probability(&shifted, &theta2(), c, &u).is_ok(), "C={c}");
        }
    }

    #[test]
    fn tabulated_measure() {
        let t = Tabulated::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.8, 1.0]).unwrap();
        assert_eq!(t.cdf(-1.0), 0.0);
        assert!((t.cdf(0.25) - 0.4).abs() < 1e-15);
        assert_eq!(t.cdf(2.0), 1.0);
        let r = preference_probability(&theta1(), &theta2(), 1.5, &t).unwrap();
        assert!((r.p_value - 0.8).abs() < 1e-12);
        assert!(Tabulated::new(vec![0.0, 1.0], vec![0.2, 1.0]).is_err());
    }

    #[test]
    fn both_zero_means_no_decision() {
        let (t1, t2) = (theta1(), theta2());
        let i = half(0.0, 0.5);
        let x: Vec<f64> = (0..40).map(|k| k as f64 / 40.0).collect();
        let y: Vec<f64> = x.iter().map(|v| (7.0 * v).sin() + v).collect();
        for (c1, c2) in [(1.0, -0.5), (0.9, 1.5), (3.0, 2.0)] {
            assert_eq!(classify_interval(&t1, &t2, c1, c2, &i).unwrap(), Case::BothZero);
            assert_eq!(interval_log_ratio(&t1, &t2, c1, c2, &i, &x, &y).unwrap(), 0.0);
        }
        // both-one: the comparison is decided by the data
        let v = interval_log_ratio(&t1, &t2, 1.45, 0.5, &i, &x, &y).unwrap();
        assert!(v.is_finite() && v != 0.0);
    }

    fn random_map() -> impl Strategy<Value = PiecewiseMonotone> {
        // x -> a * (x - m)^2 + b: one turning point at m
        (0.1f64..0.9, 0.5f64..3.0, -1.0f64..1.0).prop_map(|(m, a, b)| {
            let e: Expression = format!("affine[{a},{b}]((x+{})^2)", -m).parse().unwrap();
            let segs = vec![
                Segment { expr: e.clone(), direction: Direction::Decreasing },
                Segment { expr: e, direction: Direction::Increasing },
            ];
            PiecewiseMonotone::new(Interval::closed(0.0, 1.0).unwrap(), vec![m], segs).unwrap()
        })
    }

    proptest! {
        #[test]
        fn refine_covers_domain(t1 in random_map(), t2 in random_map()) {
            let r = refine(&t1, &t2).unwrap();
            prop_assert_eq!(r[0].lo, 0.0);
            prop_assert_eq!(r.last().unwrap().hi, 1.0);
            for w in r.windows(2) {
                prop_assert_eq!(w[0].hi, w[1].lo);
                prop_assert!(!w[0].hi_closed && w[1].lo_closed);
            }
        }

        #[test]
        fn preimage_matches_grid_search(t in random_map(), c in -1.5f64..3.0) {
            for i in refine(&t, &t).unwrap() {
                let pts = grid(i.lo, i.hi, 2001);
                let vals: Vec<f64> = pts.iter().map(|&x| t.segments[t.segment_of(&i).unwrap()].expr.eval_scalar(x)).collect();
                let crossing = vals.windows(2).position(|w| (w[0] - c) * (w[1] - c) <= 0.0);
                match preimage_count(&t, c, &i, 1e-10).unwrap() {
                    Preimage::One(x) => {
                        let k = crossing.expect("grid misses a pre-image");
                        prop_assert!(x >= pts[k] - 1e-9 && x <= pts[k + 1] + 1e-9);
                    }
                    Preimage::Zero => {
                        // only an excluded open end may touch c
                        if let Some(k) = crossing {
                            prop_assert!(k + 2 == pts.len() && !i.hi_closed);
                        }
                    }
                }
            }
        }

        #[test]
        fn swapping_transforms_negates_p(t1 in random_map(), t2 in random_map(), c in -1.5f64..3.0) {
            let u = Uniform::new(0.0, 1.0).unwrap();
            if let (Ok(a), Ok(b)) = (preference_probability(&t1, &t2, c, &u), preference_probability(&t2, &t1, c, &u)) {
                prop_assert!((a.p_value + b.p_value).abs() < 1e-12);
            }
        }
    }
}
