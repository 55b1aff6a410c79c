//! Repeated feature-selection experiments.
//!
//! Every `(noise level, repeat)` pair draws its data from its own stream,
//! derived from the master seed, so repeats run in parallel and the report
//! does not depend on scheduling. Wall-clock timings are returned separately
//! from the report, which is a pure function of the config.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{read_csv, Dataset};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::rng::{self, StreamRng};
use crate::symgen::{generate, generate_exprs, label_correct, Architecture, OperatorSet};
use crate::tree::EnsembleConfig;

use super::metrics::{average_inclusion_probability, pr_auc, PrPoint};
use super::scoring::{equivalence_classes, score_features, select_top, Method, ScoreContext};
use super::synth::{synth_3var_with, synth_candidates_with};

/// Where the data come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Signal {
    /// `x ~ U[0,1]^3`, `y = 2 x1^3 + 5 x3 + 10 + eps`.
    ThreeVar,
    /// `x ~ N(0,1)`, `y = truth(x) + eps`, scored over the candidates only.
    Candidates { truth: Expression, candidates: Vec<Expression> },
    /// Rows subsampled from a CSV (all rows if `n` is at least the row
    /// count), with noise added to the response.
    Csv { path: PathBuf, response: String },
}

fn default_architectures() -> Vec<Architecture> {
    vec!["bu".parse().expect("valid architecture")]
}
fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_n() -> usize {
    100
}
fn default_noise() -> Vec<f64> {
    vec![0.1]
}
fn default_repeats() -> usize {
    50
}
fn default_selected() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub signal: Signal,
    #[serde(default = "default_architectures")]
    pub architectures: Vec<Architecture>,
    #[serde(default = "OperatorSet::standard")]
    pub operators: OperatorSet,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_noise")]
    pub noise_vars: Vec<f64>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_selected")]
    pub n_selected: usize,
    #[serde(default)]
    pub seed: u64,
    /// 1-based indices of the variables in the true signal. Defaults to
    /// `[1, 3]` for the three-variable signal; required for CSV input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_variables: Option<Vec<usize>>,
    #[serde(default)]
    pub tree: EnsembleConfig,
    #[serde(default)]
    pub value_dedup: bool,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        if self.repeats == 0 {
            return bad("repeats must be at least 1");
        }
        if self.n < 2 {
            return bad("n must be at least 2");
        }
        if self.n_selected == 0 {
            return bad("n_selected must be at least 1");
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty");
        }
        if self.noise_vars.is_empty() || self.noise_vars.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("noise_vars must be a nonempty list of finite values >= 0");
        }
        if self.tree.n_trees == 0 {
            return bad("tree.n_trees must be at least 1");
        }
        match &self.signal {
            Signal::Candidates { candidates, truth } => {
                if candidates.is_empty() {
                    return bad("candidates must not be empty");
                }
                for e in candidates.iter().chain(std::iter::once(truth)) {
                    e.check_arity(1).map_err(|_| Error::Config(format!("{e} uses more than one variable")))?;
                }
                if !candidates.iter().any(|c| c.key() == truth.key()) {
                    return bad("the truth must be one of the candidates");
                }
            }
            _ => {
                if self.architectures.is_empty() {
                    return bad("architectures must not be empty");
                }
                if matches!(self.signal, Signal::Csv { .. }) && self.active_variables.is_none() {
                    return bad("active_variables is required for CSV input");
                }
                if self.active_variables.as_ref().is_some_and(|a| a.is_empty() || a.contains(&0)) {
                    return bad("active_variables are 1-based and nonempty");
                }
            }
        }
        Ok(())
    }

    fn active(&self) -> BTreeSet<usize> {
        self.active_variables.clone().unwrap_or_else(|| vec![1, 3]).iter().map(|k| k - 1).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodReport {
    pub method: Method,
    pub aip: f64,
    pub pr_auc_median: f64,
    pub pr_auc_mean: f64,
    pub pr_auc: Vec<f64>,
    /// Per feature: fraction of repeats selecting it.
    pub inclusion: Vec<f64>,
    /// Per repeat: selected feature indices, best first.
    pub selections: Vec<Vec<usize>>,
    pub pr_curves: Vec<Vec<PrPoint>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    /// Architecture string, or `candidates`.
    pub feature_set: String,
    pub noise_var: f64,
    pub features: Vec<String>,
    pub correct: Vec<bool>,
    /// Per feature: number of repeats in which it was dropped (non-finite
    /// values, or a value duplicate when deduplication is on).
    pub unavailable: Vec<usize>,
    pub methods: Vec<MethodReport>,
    /// Per repeat: groups of features sharing one T0 value.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub t0_equivalence: Vec<Vec<Vec<usize>>>,
}

impl CellReport {
    pub fn method(&self, m: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|r| r.method == m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    pub fn cell(&self, feature_set: &str, noise_var: f64) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.feature_set == feature_set && c.noise_var == noise_var)
    }
}

/// Wall-clock seconds spent scoring, per method, summed over repeats.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub per_method_seconds: BTreeMap<String, f64>,
    pub total_seconds: f64,
}

struct FeatureSet {
    label: String,
    arch: Option<Architecture>,
    exprs: Vec<Expression>,
    correct: Vec<bool>,
}

/// One repeat's outcome for one feature set and method.
struct Outcome {
    selection: Vec<usize>,
    auc: f64,
    curve: Vec<PrPoint>,
}

struct RepeatResult {
    /// `[feature set][method]`
    outcomes: Vec<Vec<Outcome>>,
    unavailable: Vec<Vec<usize>>,
    t0_classes: Vec<Vec<Vec<usize>>>,
    elapsed: Vec<Duration>,
}

fn feature_sets(cfg: &ExperimentConfig, d: usize) -> Vec<FeatureSet> {
    match &cfg.signal {
        Signal::Candidates { truth, candidates } => {
            let exprs: Vec<Expression> = candidates.iter().map(Expression::canonical).collect();
            let correct = exprs.iter().map(|e| e.key() == truth.key()).collect();
            vec![FeatureSet { label: "candidates".into(), arch: None, exprs, correct }]
        }
        _ => cfg
            .architectures
            .iter()
            .map(|arch| {
                let (exprs, _) = generate_exprs(d, arch, &cfg.operators);
                let correct = label_correct(&exprs, &cfg.active());
                FeatureSet { label: arch.to_string(), arch: Some(arch.clone()), exprs, correct }
            })
            .collect(),
    }
}

fn draw_csv(table: &Dataset, n: usize, noise_var: f64, r: &mut StreamRng) -> Result<Dataset> {
    let rows: Vec<usize> = if n >= table.n_rows() {
        (0..table.n_rows()).collect()
    } else {
        let mut v = sample(r, table.n_rows(), n).into_vec();
        v.sort_unstable();
        v
    };
    let sub = table.select_rows(&rows)?;
    if noise_var == 0.0 {
        return Ok(sub);
    }
    let d = Normal::new(0.0, noise_var.sqrt()).map_err(|e| Error::Config(e.to_string()))?;
    let y: Vec<f64> = sub.y().iter().map(|v| v + d.sample(r)).collect();
    Dataset::from_columns(sub.columns().to_vec(), y, sub.column_names())
}

/// Runs every `(feature set, noise level, method)` cell over all repeats.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(ExperimentReport, Timings)> {
    cfg.validate()?;
    let table = match &cfg.signal {
        Signal::Csv { path, response } => Some(read_csv(path, response)?),
        _ => None,
    };
    let d = match (&cfg.signal, &table) {
        (Signal::Csv { .. }, Some(t)) => t.n_cols(),
        (Signal::Candidates { .. }, _) => 1,
        _ => 3,
    };
    if let Some(a) = &cfg.active_variables {
        if let Some(&k) = a.iter().find(|&&k| k > d) {
            return Err(Error::Config(format!("active variable {k} exceeds the {d} input columns")));
        }
    }
    let sets = feature_sets(cfg, d);
    for s in &sets {
        if s.exprs.len() < cfg.n_selected {
            return Err(Error::Config(format!(
                "n_selected = {} exceeds the {} features of {}",
                cfg.n_selected,
                s.exprs.len(),
                s.label
            )));
        }
        if !s.correct.contains(&true) {
            return Err(Error::Config(format!("no correct feature in {}", s.label)));
        }
    }
    let index: Vec<HashMap<String, usize>> =
        sets.iter().map(|s| s.exprs.iter().enumerate().map(|(k, e)| (e.key(), k)).collect()).collect();

    let mut cells = Vec::new();
    let mut elapsed = vec![Duration::ZERO; cfg.methods.len()];
    for (ni, &noise_var) in cfg.noise_vars.iter().enumerate() {
        let master = rng::derive_seed(cfg.seed, ni as u64);
        let runs: Vec<RepeatResult> = (0..cfg.repeats)
            .into_par_iter()
            .map(|rep| run_repeat(cfg, &sets, &index, table.as_ref(), noise_var, master, rep as u64))
            .collect::<Result<_>>()?;
        for r in &runs {
            for (t, e) in elapsed.iter_mut().zip(&r.elapsed) {
                *t += *e;
            }
        }
        for (si, set) in sets.iter().enumerate() {
            cells.push(assemble_cell(cfg, set, si, noise_var, &runs)?);
        }
    }
    let timings = Timings {
        per_method_seconds: cfg.methods.iter().zip(&elapsed).map(|(m, e)| (m.to_string(), e.as_secs_f64())).collect(),
        total_seconds: elapsed.iter().map(Duration::as_secs_f64).sum(),
    };
    Ok((ExperimentReport { config: cfg.clone(), cells }, timings))
}

fn run_repeat(
    cfg: &ExperimentConfig,
    sets: &[FeatureSet],
    index: &[HashMap<String, usize>],
    table: Option<&Dataset>,
    noise_var: f64,
    master: u64,
    rep: u64,
) -> Result<RepeatResult> {
    let mut r = rng::stream(master, rep);
    let tree_seed = rng::derive_seed(master, rep ^ 0x5EED_0000_0000_0000);
    let mut out = RepeatResult {
        outcomes: Vec::new(),
        unavailable: Vec::new(),
        t0_classes: Vec::new(),
        elapsed: vec![Duration::ZERO; cfg.methods.len()],
    };
    let (ds, candidate_fm) = match (&cfg.signal, table) {
        (Signal::Candidates { truth, candidates }, _) => {
            let (ds, fm) = synth_candidates_with(cfg.n, truth, candidates, noise_var, &mut r)?;
            (ds, Some(fm))
        }
        (Signal::Csv { .. }, Some(t)) => (draw_csv(t, cfg.n, noise_var, &mut r)?, None),
        _ => (synth_3var_with(cfg.n, noise_var, &mut r)?, None),
    };
    for (si, set) in sets.iter().enumerate() {
        let (columns, global): (Vec<Vec<f64>>, Vec<usize>) = match (&set.arch, &candidate_fm) {
            (Some(arch), _) => {
                let g = generate(&ds, arch, &cfg.operators, cfg.value_dedup)?;
                let global = g.features.exprs().iter().map(|e| index[si][&e.key()]).collect();
                (g.features.columns().to_vec(), global)
            }
            (None, Some(fm)) => (fm.columns().to_vec(), (0..fm.n_cols()).collect()),
            (None, None) => unreachable!("candidate sets always come with evaluated candidates"),
        };
        let mut present = vec![false; set.exprs.len()];
        global.iter().for_each(|&g| present[g] = true);
        out.unavailable.push((0..set.exprs.len()).filter(|&g| !present[g]).collect());
        if columns.len() < cfg.n_selected {
            return Err(Error::KTooLarge { k: cfg.n_selected, q: columns.len() });
        }
        let truth: Vec<bool> = global.iter().map(|&g| set.correct[g]).collect();
        let ctx = ScoreContext { ensemble: cfg.tree, seed: tree_seed };
        let mut per_method = Vec::new();
        let mut classes = Vec::new();
        for (mi, &m) in cfg.methods.iter().enumerate() {
            let start = Instant::now();
            let ms = score_features(&columns, ds.y(), m, &ctx)?;
            out.elapsed[mi] += start.elapsed();
            let selection = select_top(&ms, cfg.n_selected)?.into_iter().map(|k| global[k]).collect();
            let (curve, auc) = pr_auc(&truth, &ms, cfg.n_selected)?;
            if m == Method::T0 {
                classes = equivalence_classes(&ms.scores)
                    .into_iter()
                    .map(|g| g.into_iter().map(|k| global[k]).collect())
                    .collect();
            }
            per_method.push(Outcome { selection, auc, curve });
        }
        out.outcomes.push(per_method);
        out.t0_classes.push(classes);
    }
    Ok(out)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn assemble_cell(
    cfg: &ExperimentConfig,
    set: &FeatureSet,
    si: usize,
    noise_var: f64,
    runs: &[RepeatResult],
) -> Result<CellReport> {
    let q = set.exprs.len();
    let mut unavailable = vec![0usize; q];
    for r in runs {
        r.unavailable[si].iter().for_each(|&g| unavailable[g] += 1);
    }
    let methods = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(mi, &method)| {
            let selections: Vec<Vec<usize>> = runs.iter().map(|r| r.outcomes[si][mi].selection.clone()).collect();
            let pr_auc: Vec<f64> = runs.iter().map(|r| r.outcomes[si][mi].auc).collect();
            let pr_curves = runs.iter().map(|r| r.outcomes[si][mi].curve.clone()).collect();
            let mut inclusion = vec![0.0; q];
            for s in &selections {
                s.iter().for_each(|&g| inclusion[g] += 1.0);
            }
            inclusion.iter_mut().for_each(|v| *v /= runs.len() as f64);
            Ok(MethodReport {
                method,
                aip: average_inclusion_probability(&selections, &set.correct, cfg.n_selected)?,
                pr_auc_median: median(&pr_auc),
                pr_auc_mean: pr_auc.iter().sum::<f64>() / pr_auc.len() as f64,
                pr_auc,
                inclusion,
                selections,
                pr_curves,
            })
        })
        .collect::<Result<_>>()?;
    let t0_equivalence = if cfg.methods.contains(&Method::T0) {
        runs.iter().map(|r| r.t0_classes[si].clone()).collect()
    } else {
        Vec::new()
    };
    Ok(CellReport {
        feature_set: set.label.clone(),
        noise_var,
        features: set.exprs.iter().map(ToString::to_string).collect(),
        correct: set.correct.clone(),
        unavailable,
        methods,
        t0_equivalence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(signal: &str, extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"signal":{signal},"n":40,"repeats":4,"seed":7,"noise_vars":[0.0,0.1],
                "tree":{{"n_trees":5,"depth":2}}{extra}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = ExperimentConfig::from_json(r#"{"signal":{"kind":"three-var"}}"#).unwrap();
        assert_eq!((c.n, c.repeats, c.n_selected, c.noise_vars.clone()), (100, 50, 3, vec![0.1]));
        assert_eq!(c.methods.len(), 6);
        assert_eq!(c.tree, EnsembleConfig::default());
        for bad in [
            r#"{"signal":{"kind":"three-var"},"repeats":0}"#,
            r#"{"signal":{"kind":"three-var"},"noise_vars":[-1]}"#,
            r#"{"signal":{"kind":"three-var"},"methods":["bart"]}"#,
            r#"{"signal":{"kind":"three-var"},"architectures":["bq"]}"#,
            r#"{"signal":{"kind":"csv","path":"x.csv","response":"y"}}"#,
            r#"{"signal":{"kind":"candidates","truth":"sin(5*x)","candidates":["x"]}}"#,
            r#"{"signal":{"kind":"three-var"},"typo":1}"#,
        ] {
            assert!(ExperimentConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn three_var_report_shape() {
        let cfg = small(r#"{"kind":"three-var"}"#, r#","architectures":["bu","ub"]"#);
        let (rep, timings) = run_experiment(&cfg).unwrap();
        assert_eq!(rep.cells.len(), 4);
        let bu = rep.cell("bu", 0.0).unwrap();
        assert_eq!(bu.features.len(), 24);
        assert_eq!(bu.correct.iter().filter(|&&c| c).count(), 12);
        assert_eq!(rep.cell("ub", 0.1).unwrap().features.len(), 42);
        for cell in &rep.cells {
            for m in &cell.methods {
                assert_eq!(m.selections.len(), 4);
                assert!((0.0..=1.0).contains(&m.aip));
                assert!(m.pr_auc.iter().all(|a| (0.0..=1.0).contains(a)));
                assert!((m.inclusion.iter().sum::<f64>() - 3.0).abs() < 1e-12);
            }
        }
        assert_eq!(timings.per_method_seconds.len(), 6);
    }

    #[test]
    fn reports_are_reproducible() {
        let cfg = small(r#"{"kind":"three-var"}"#, "");
        let a = serde_json::to_string(&run_experiment(&cfg).unwrap().0).unwrap();
        let b = serde_json::to_string(&run_experiment(&cfg).unwrap().0).unwrap();
        assert_eq!(a, b);
        let mut other = cfg.clone();
        other.seed = 8;
        assert_ne!(a, serde_json::to_string(&run_experiment(&other).unwrap().0).unwrap());
    }

    #[test]
    fn candidate_inclusion() {
        let cfg = small(
            r#"{"kind":"candidates","truth":"sin(4*x)","candidates":["x","sin(4*x+0.2)","sin(4*x+0.1)","sin(4*x)"]}"#,
            r#","n_selected":1,"methods":["t0","pearson"]"#,
        );
        let (rep, _) = run_experiment(&cfg).unwrap();
        let cell = rep.cell("candidates", 0.0).unwrap();
        assert_eq!(cell.correct, vec![false, false, false, true]);
        // noiseless: the truth is concordant with y
        assert_eq!(cell.method(Method::T0).unwrap().inclusion[3], 1.0);
        assert_eq!(cell.method(Method::Pearson).unwrap().inclusion[3], 1.0);
    }

    #[test]
    fn csv_signal_subsamples() {
        let dir = std::env::temp_dir().join(format!("symrank-exp-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("data.csv");
        let ds = super::super::synth::synth_3var(80, 0.0, 3).unwrap();
        let mut text = String::from("a,b,c,y\n");
        for i in 0..80 {
            let r = ds.row(i);
            text += &format!("{},{},{},{}\n", r[0], r[1], r[2], ds.y()[i]);
        }
        std::fs::write(&path, text).unwrap();
        let signal = format!(r#"{{"kind":"csv","path":{},"response":"y"}}"#, serde_json::to_string(&path).unwrap());
        let cfg = small(&signal, r#","active_variables":[1,3],"methods":["t0"]"#);
        let (rep, _) = run_experiment(&cfg).unwrap();
        assert_eq!(rep.cell("bu", 0.0).unwrap().features.len(), 24);
        let mut bad = cfg.clone();
        bad.active_variables = Some(vec![5]);
        assert!(matches!(run_experiment(&bad), Err(Error::Config(_))));
        std::fs::remove_dir_all(&dir).ok();
    }
}
