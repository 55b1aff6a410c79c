//! Layered symbolic feature generation.
//!
//! Starting from the input variables, an [`Architecture`] applies unary
//! layers (`u`) and binary layers (`b`) left to right. A binary layer forms
//! `op(e_i, e_j)` for `i <= j` under commutative operators and for every
//! ordered pair under `-` and `/`. Every layer keeps one expression per
//! canonical form.
//!
//! ```
//! use symrank::symgen::{expand_binary, OperatorSet};
//! use symrank::Expression;
//!
//! let vars: Vec<Expression> = (0..3).map(Expression::var).collect();
//! let layer = expand_binary(&vars, &OperatorSet::standard());
//! assert_eq!(layer.exprs.len(), 12);
//! ```

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::expr::{BinaryOp, Expression, UnaryOp};

/// Tolerance for value-level duplicate and constant detection.
pub const VALUE_TOLERANCE: f64 = 1e-12;

/// A unary operator as written in a config: a bare name or a name with
/// parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum UnarySpec {
    Name(String),
    Param {
        name: String,
        #[serde(default)]
        a: Option<f64>,
        #[serde(default)]
        b: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorDoc {
    unary: Vec<UnarySpec>,
    binary: Vec<String>,
}

/// The unary and binary operators available to the layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorDoc", into = "OperatorDoc")]
pub struct OperatorSet {
    unary: Vec<UnaryOp>,
    binary: Vec<BinaryOp>,
}

impl OperatorSet {
    pub fn new(unary: Vec<UnaryOp>, binary: Vec<BinaryOp>) -> Result<Self> {
        let names: Vec<String> = unary.iter().map(|&op| unary_label(op)).collect();
        if let Some(d) = first_duplicate(&names) {
            return Err(Error::Config(format!("unary operator {d} listed twice")));
        }
        let names: Vec<String> = binary.iter().map(|op| op.symbol().to_string()).collect();
        if let Some(d) = first_duplicate(&names) {
            return Err(Error::Config(format!("binary operator {d} listed twice")));
        }
        Ok(OperatorSet { unary, binary })
    }

    /// `{id, x^3}` and `{+, *}`.
    pub fn standard() -> Self {
        OperatorSet { unary: vec![UnaryOp::Id, UnaryOp::Cube], binary: vec![BinaryOp::Add, BinaryOp::Mul] }
    }

    pub fn unary(&self) -> &[UnaryOp] {
        &self.unary
    }

    pub fn binary(&self) -> &[BinaryOp] {
        &self.binary
    }
}

fn first_duplicate(names: &[String]) -> Option<&str> {
    let mut seen = HashSet::new();
    names.iter().find(|n| !seen.insert(n.as_str())).map(String::as_str)
}

fn unary_label(op: UnaryOp) -> String {
    match op {
        UnaryOp::Sin { a, b } | UnaryOp::Cos { a, b } | UnaryOp::Affine { a, b } => format!("{}[{a},{b}]", op.name()),
        _ => op.name().to_owned(),
    }
}

impl TryFrom<OperatorDoc> for OperatorSet {
    type Error = Error;

    fn try_from(doc: OperatorDoc) -> Result<Self> {
        let unary = doc
            .unary
            .iter()
            .map(|s| match s {
                UnarySpec::Name(n) => UnaryOp::from_name(n, None, None),
                UnarySpec::Param { name, a, b } => UnaryOp::from_name(name, *a, *b),
            })
            .collect::<Result<_>>()?;
        let binary = doc.binary.iter().map(|n| BinaryOp::from_name(n)).collect::<Result<_>>()?;
        OperatorSet::new(unary, binary)
    }
}

impl From<OperatorSet> for OperatorDoc {
    fn from(ops: OperatorSet) -> Self {
        let unary = ops
            .unary
            .iter()
            .map(|&op| match op {
                UnaryOp::Sin { a, b } | UnaryOp::Cos { a, b } | UnaryOp::Affine { a, b } => {
                    UnarySpec::Param { name: op.name().to_owned(), a: Some(a), b: Some(b) }
                }
                _ => UnarySpec::Name(op.name().to_owned()),
            })
            .collect();
        let binary = ops.binary.iter().map(|op| op.symbol().to_string()).collect();
        OperatorDoc { unary, binary }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Unary,
    Binary,
}

/// Layer order, e.g. `"bu"` (binary then unary) or `"ub"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Architecture(Vec<Layer>);

impl Architecture {
    pub fn layers(&self) -> &[Layer] {
        &self.0
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let layers = s
            .chars()
            .map(|c| match c {
                'u' | 'U' => Ok(Layer::Unary),
                'b' | 'B' => Ok(Layer::Binary),
                _ => Err(Error::InvalidArchitecture(s.to_owned())),
            })
            .collect::<Result<Vec<_>>>()?;
        if layers.is_empty() {
            return Err(Error::InvalidArchitecture(s.to_owned()));
        }
        Ok(Architecture(layers))
    }
}

impl TryFrom<String> for Architecture {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Architecture> for String {
    fn from(a: Architecture) -> Self {
        a.to_string()
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            f.write_str(match l {
                Layer::Unary => "u",
                Layer::Binary => "b",
            })?;
        }
        Ok(())
    }
}

/// Output of one layer: distinct canonical expressions in generation order,
/// plus the number produced before deduplication.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub exprs: Vec<Expression>,
    /// For a binary layer, `|ops| * m^2` (every ordered pair); for a unary
    /// layer, `|ops| * m`.
    pub raw_count: usize,
}

fn dedup_canonical(raw: impl IntoIterator<Item = Expression>) -> Vec<Expression> {
    let mut seen = HashSet::new();
    raw.into_iter().map(|e| e.canonical()).filter(|e| seen.insert(e.key())).collect()
}

pub fn expand_binary(exprs: &[Expression], ops: &OperatorSet) -> Expansion {
    let m = exprs.len();
    let mut raw = Vec::new();
    for &op in &ops.binary {
        for i in 0..m {
            let start = if op.is_commutative() { i } else { 0 };
            for j in start..m {
                raw.push(Expression::binary(op, exprs[i].clone(), exprs[j].clone()));
            }
        }
    }
    Expansion { exprs: dedup_canonical(raw), raw_count: ops.binary.len() * m * m }
}

pub fn expand_unary(exprs: &[Expression], ops: &OperatorSet) -> Expansion {
    let raw = ops.unary.iter().flat_map(|&op| exprs.iter().map(move |e| Expression::unary(op, e.clone())));
    Expansion { exprs: dedup_canonical(raw), raw_count: ops.unary.len() * exprs.len() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayerCount {
    pub layer: Layer,
    pub raw: usize,
    pub distinct: usize,
}

/// A feature left out of the matrix, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedFeature {
    pub expr: String,
    pub reason: String,
}

/// Generated features and bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub features: FeatureMatrix,
    pub layer_counts: Vec<LayerCount>,
    /// Non-finite values on the data.
    pub dropped: Vec<DroppedFeature>,
    /// Removed by value deduplication, each paired with the kept column it
    /// matches.
    pub value_duplicates: Vec<DroppedFeature>,
    /// Per kept column: constant on the data.
    pub constant: Vec<bool>,
}

/// Symbolic expressions produced by `arch` from `d` input variables.
pub fn generate_exprs(d: usize, arch: &Architecture, ops: &OperatorSet) -> (Vec<Expression>, Vec<LayerCount>) {
    let mut exprs: Vec<Expression> = (0..d).map(Expression::var).collect();
    let mut counts = Vec::new();
    for &layer in arch.layers() {
        let e = match layer {
            Layer::Unary => expand_unary(&exprs, ops),
            Layer::Binary => expand_binary(&exprs, ops),
        };
        counts.push(LayerCount { layer, raw: e.raw_count, distinct: e.exprs.len() });
        exprs = e.exprs;
    }
    (exprs, counts)
}

fn is_constant(col: &[f64]) -> bool {
    let (lo, hi) = col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    hi - lo <= VALUE_TOLERANCE * (1.0 + lo.abs().max(hi.abs()))
}

fn same_values(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= VALUE_TOLERANCE)
}

/// Applies `arch` to the inputs of `ds` and evaluates the result.
pub fn generate(ds: &Dataset, arch: &Architecture, ops: &OperatorSet, value_dedup: bool) -> Result<Generated> {
    let (exprs, layer_counts) = generate_exprs(ds.n_cols(), arch, ops);
    let evaluated: Vec<(Expression, std::result::Result<Vec<f64>, usize>)> = exprs
        .into_par_iter()
        .map(|e| {
            let col = e.eval_columns(ds.columns());
            let bad = col.iter().position(|v| !v.is_finite());
            (e, bad.map_or(Ok(col), Err))
        })
        .collect();
    let mut dropped = Vec::new();
    let mut value_duplicates = Vec::new();
    let mut kept_exprs = Vec::new();
    let mut kept_cols: Vec<Vec<f64>> = Vec::new();
    for (e, col) in evaluated {
        let col = match col {
            Ok(c) => c,
            Err(row) => {
                let reason = Error::PartialOperatorDomain { expr: e.to_string(), row }.to_string();
                log::warn!("dropping feature: {reason}");
                dropped.push(DroppedFeature { expr: e.to_string(), reason });
                continue;
            }
        };
        if value_dedup {
            if let Some(k) = kept_cols.iter().position(|c| same_values(c, &col)) {
                value_duplicates
                    .push(DroppedFeature { expr: e.to_string(), reason: format!("values match {}", kept_exprs[k]) });
                continue;
            }
        }
        kept_exprs.push(e);
        kept_cols.push(col);
    }
    if kept_exprs.is_empty() {
        return Err(Error::NoFeatures);
    }
    let constant = kept_cols.iter().map(|c| is_constant(c)).collect();
    let features = FeatureMatrix::from_parts(kept_cols, kept_exprs)?;
    Ok(Generated { features, layer_counts, dropped, value_duplicates, constant })
}

/// True for expressions whose variables (0-based) all lie in `active`.
pub fn label_correct(exprs: &[Expression], active: &BTreeSet<usize>) -> Vec<bool> {
    exprs.iter().map(|e| e.variables().is_subset(active)).collect()
}
