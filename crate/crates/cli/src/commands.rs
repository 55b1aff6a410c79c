use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};
use symrank::dataset::{read_table, Table};
use symrank::evalsel::{
    run_experiment, score_features, select_top, ExperimentConfig, Method, MethodScore, ScoreContext, ScoreDirection,
};
use symrank::monotonic::{offset_shift, preference_probability, Measure, PiecewiseMonotone, Tabulated, Uniform};
use symrank::partition::{brute_force_best_2partition, loss, oracle_fixed_size, oracle_varying_size, Winner};
use symrank::symgen::{generate, Architecture, DroppedFeature, LayerCount, OperatorSet};
use symrank::tree::{grow_tree, EnsembleConfig, Tree, TreeNode};
use symrank::{read_csv, Dataset, Error, Interval, Partition2};

use crate::output::{emit_json, ensure_dir, num, parse_json, read_text, to_json, write_csv, write_file, CliError};
use crate::{ExperimentArgs, GenFeaturesArgs, OracleArgs, P12Args, ScoreArgs, ScoringArgs, SelectArgs, TreeCommand};

fn load_table(path: &Path) -> Result<Table, CliError> {
    let f = File::open(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    Ok(read_table(f)?)
}

// ---------------------------------------------------------------- gen-features

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenConfig {
    architecture: Option<Architecture>,
    operators: Option<OperatorSet>,
    #[serde(default)]
    value_dedup: bool,
}

#[derive(Serialize)]
struct InputName {
    variable: String,
    column: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    architecture: String,
    operators: &'a OperatorSet,
    inputs: Vec<InputName>,
    layer_counts: &'a [LayerCount],
    n_features: usize,
    features: Vec<String>,
    constant: Vec<String>,
    dropped: &'a [DroppedFeature],
    value_duplicates: &'a [DroppedFeature],
}

pub fn gen_features(a: GenFeaturesArgs) -> Result<(), CliError> {
    let cfg: GenConfig = match &a.config {
        Some(p) => parse_json(p)?,
        None => GenConfig::default(),
    };
    let arch: Architecture = match (&a.arch, cfg.architecture) {
        (Some(s), _) => s.parse()?,
        (None, Some(arch)) => arch,
        (None, None) => "bu".parse()?,
    };
    let ops = cfg.operators.unwrap_or_else(OperatorSet::standard);
    let ds = read_csv(&a.data.input, &a.data.response)?;
    let g = generate(&ds, &arch, &ops, cfg.value_dedup)?;
    let fm = &g.features;
    let names = fm.names();

    ensure_dir(&a.out_dir)?;
    let mut header = names.clone();
    header.push(a.data.response.clone());
    let rows = (0..fm.n_rows()).map(|i| {
        let mut r: Vec<String> = fm.columns().iter().map(|c| num(c[i])).collect();
        r.push(num(ds.y()[i]));
        r
    });
    write_csv(&a.out_dir.join("features.csv"), &header, rows)?;

    let manifest = Manifest {
        architecture: arch.to_string(),
        operators: &ops,
        inputs: ds
            .column_names()
            .iter()
            .enumerate()
            .map(|(k, c)| InputName { variable: format!("x{}", k + 1), column: c.clone() })
            .collect(),
        layer_counts: &g.layer_counts,
        n_features: fm.n_cols(),
        constant: names.iter().zip(&g.constant).filter(|(_, &c)| c).map(|(n, _)| n.clone()).collect(),
        features: names,
        dropped: &g.dropped,
        value_duplicates: &g.value_duplicates,
    };
    write_file(&a.out_dir.join("manifest.json"), &to_json(&manifest)?)?;
    for lc in &g.layer_counts {
        eprintln!("{:?}: {} raw, {} distinct", lc.layer, lc.raw, lc.distinct);
    }
    Ok(())
}

// ---------------------------------------------------------------- score / select

#[derive(Serialize)]
struct ColumnWarning {
    column: usize,
    feature: String,
    message: String,
}

#[derive(Serialize)]
struct MethodOut {
    method: Method,
    direction: ScoreDirection,
    scores: Option<Vec<f64>>,
    warnings: Vec<ColumnWarning>,
    error: Option<String>,
}

#[derive(Serialize)]
struct ScoreOut {
    response: String,
    features: Vec<String>,
    methods: Vec<MethodOut>,
}

fn context(s: &ScoringArgs) -> ScoreContext {
    ScoreContext { ensemble: EnsembleConfig { depth: s.depth, ..EnsembleConfig::default() }, seed: s.seed }
}

type Scored = Vec<(Method, Result<MethodScore, Error>)>;

fn score_all(ds: &Dataset, s: &ScoringArgs) -> Result<Scored, CliError> {
    let methods = Method::parse_list(&s.methods)?;
    let ctx = context(s);
    Ok(methods.into_iter().map(|m| (m, score_features(ds.columns(), ds.y(), m, &ctx))).collect())
}

pub fn score(a: ScoreArgs) -> Result<(), CliError> {
    let ds = read_csv(&a.data.input, &a.data.response)?;
    let names = ds.column_names().to_vec();
    let results = score_all(&ds, &a.scoring)?;
    let mut failed = Vec::new();
    let methods: Vec<MethodOut> = results
        .into_iter()
        .map(|(m, r)| match r {
            Ok(s) => MethodOut {
                method: m,
                direction: s.direction,
                warnings: s
                    .warnings
                    .into_iter()
                    .map(|(k, message)| ColumnWarning { column: k, feature: names[k].clone(), message })
                    .collect(),
                scores: Some(s.scores),
                error: None,
            },
            Err(e) => {
                eprintln!("warning: {m} failed: {e}");
                failed.push(m);
                MethodOut {
                    method: m,
                    direction: m.direction(),
                    scores: None,
                    warnings: vec![],
                    error: Some(e.to_string()),
                }
            }
        })
        .collect();

    ensure_dir(&a.out_dir)?;
    let mut header = vec!["feature".to_owned()];
    header.extend(methods.iter().map(|m| m.method.to_string()));
    let rows = names.iter().enumerate().map(|(k, n)| {
        let mut r = vec![n.clone()];
        r.extend(methods.iter().map(|m| m.scores.as_ref().map_or(String::new(), |s| num(s[k]))));
        r
    });
    write_csv(&a.out_dir.join("scores.csv"), &header, rows)?;
    let out = ScoreOut { response: a.data.response, features: names, methods };
    write_file(&a.out_dir.join("scores.json"), &to_json(&out)?)?;
    if failed.is_empty() {
        Ok(())
    } else {
        let list: Vec<String> = failed.iter().map(ToString::to_string).collect();
        Err(CliError::runtime(format!("methods failed: {}", list.join(", "))))
    }
}

#[derive(Serialize)]
struct Selection {
    method: Method,
    columns: Vec<usize>,
    features: Vec<String>,
    scores: Vec<f64>,
}

#[derive(Serialize)]
struct SelectOut {
    n_selected: usize,
    selections: Vec<Selection>,
}

pub fn select(a: SelectArgs) -> Result<(), CliError> {
    let ds = read_csv(&a.data.input, &a.data.response)?;
    let names = ds.column_names();
    let mut selections = Vec::new();
    for (m, r) in score_all(&ds, &a.scoring)? {
        let s = r?;
        let columns = select_top(&s, a.n_selected)?;
        selections.push(Selection {
            method: m,
            features: columns.iter().map(|&k| names[k].clone()).collect(),
            scores: columns.iter().map(|&k| s.scores[k]).collect(),
            columns,
        });
    }
    emit_json(&SelectOut { n_selected: a.n_selected, selections }, a.out_dir.as_deref(), "selection.json")
}

// ---------------------------------------------------------------- experiment

pub fn experiment(a: ExperimentArgs) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::from_json(&read_text(&a.config)?)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let (report, timings) = run_experiment(&cfg)?;
    ensure_dir(&a.out_dir)?;
    write_file(&a.out_dir.join("report.json"), &to_json(&report)?)?;
    write_file(&a.out_dir.join("timings.json"), &to_json(&timings)?)?;

    let header = ["feature_set", "noise_var", "method", "aip", "pr_auc_median", "pr_auc_mean"].map(String::from);
    let mut summary = Vec::new();
    let mut curves = Vec::new();
    for cell in &report.cells {
        for m in &cell.methods {
            summary.push(vec![
                cell.feature_set.clone(),
                num(cell.noise_var),
                m.method.to_string(),
                num(m.aip),
                num(m.pr_auc_median),
                num(m.pr_auc_mean),
            ]);
            for (rep, curve) in m.pr_curves.iter().enumerate() {
                for p in curve {
                    curves.push(vec![
                        cell.feature_set.clone(),
                        num(cell.noise_var),
                        m.method.to_string(),
                        rep.to_string(),
                        num(p.recall),
                        num(p.precision),
                    ]);
                }
            }
        }
    }
    write_csv(&a.out_dir.join("summary.csv"), &header, summary)?;
    let header = ["feature_set", "noise_var", "method", "repeat", "recall", "precision"].map(String::from);
    write_csv(&a.out_dir.join("pr_curves.csv"), &header, curves)?;
    eprintln!("{} cells written to {} in {:.2}s", report.cells.len(), a.out_dir.display(), timings.total_seconds);
    Ok(())
}

// ---------------------------------------------------------------- p12

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum MeasureSpec {
    Uniform { lo: f64, hi: f64 },
    Tabulated { xs: Vec<f64>, ps: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct P12Config {
    theta1: PiecewiseMonotone,
    theta2: PiecewiseMonotone,
    #[serde(default)]
    c_grid: Vec<f64>,
    measure: Option<MeasureSpec>,
}

#[derive(Serialize)]
struct P12Row {
    c: f64,
    p: Option<f64>,
    abs_p: Option<f64>,
    preferred: Option<u8>,
    intervals_pref_1: Vec<Interval>,
    intervals_pref_2: Vec<Interval>,
    error: Option<String>,
}

#[derive(Serialize)]
struct P12Out {
    rows: Vec<P12Row>,
    offset_shift: Option<f64>,
    note: &'static str,
}

const P12_NOTE: &str = "p is signed: positive favours theta1, negative favours theta2. \
Tables that print only |p| show the magnitude, so a printed 1 may correspond to p = -1 here.";

fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| CliError::usage(format!("grid value {t:?} is not a number"))))
        .collect()
}

pub fn p12(a: P12Args) -> Result<(), CliError> {
    let cfg: P12Config = parse_json(&a.config)?;
    let grid = match &a.grid {
        Some(g) => parse_grid(g)?,
        None => cfg.c_grid.clone(),
    };
    if grid.is_empty() {
        return Err(CliError::usage("no thresholds: give --grid or c_grid"));
    }
    let measure: Box<dyn Measure> = match cfg.measure {
        Some(MeasureSpec::Uniform { lo, hi }) => Box::new(Uniform::new(lo, hi)?),
        Some(MeasureSpec::Tabulated { xs, ps }) => Box::new(Tabulated::new(xs, ps)?),
        None => {
            let d = cfg.theta1.domain();
            if !d.is_bounded() {
                return Err(CliError::usage("unbounded domain: give a measure"));
            }
            Box::new(Uniform::new(d.lo, d.hi)?)
        }
    };
    let mut rows = Vec::new();
    for &c in &grid {
        rows.push(match preference_probability(&cfg.theta1, &cfg.theta2, c, measure.as_ref()) {
            Ok(r) => P12Row {
                c,
                p: Some(r.p_value),
                abs_p: Some(r.p_value.abs()),
                preferred: r.preferred(),
                intervals_pref_1: r.intervals_pref_1,
                intervals_pref_2: r.intervals_pref_2,
                error: None,
            },
            Err(e @ Error::CaseThreePresent { .. }) => P12Row {
                c,
                p: None,
                abs_p: None,
                preferred: None,
                intervals_pref_1: vec![],
                intervals_pref_2: vec![],
                error: Some(e.to_string()),
            },
            Err(e) => return Err(e.into()),
        });
    }
    eprintln!("{:>12} {:>12} {:>10} {:>8}", "C", "p", "preferred", "|p|");
    for r in &rows {
        match r.p {
            Some(p) => {
                let who = r.preferred.map_or("none".to_owned(), |k| format!("theta{k}"));
                eprintln!("{:>12} {:>12.6} {:>10} {:>8.6}", r.c, p, who, p.abs());
            }
            None => eprintln!("{:>12} {:>12} {:>10} {:>8}", r.c, "n/a", "-", "-"),
        }
    }
    eprintln!("note: {P12_NOTE}");
    let out = P12Out { rows, offset_shift: offset_shift(&cfg.theta1, &cfg.theta2).ok(), note: P12_NOTE };
    emit_json(&out, a.out_dir.as_deref(), "p12.json")
}

// ---------------------------------------------------------------- oracle-partition

#[derive(Serialize)]
struct PartitionOut {
    left: Vec<usize>,
    right: Vec<usize>,
    mean_left: f64,
    mean_right: f64,
    loss: f64,
}

impl From<&Partition2> for PartitionOut {
    fn from(p: &Partition2) -> Self {
        PartitionOut {
            left: p.left.clone(),
            right: p.right.clone(),
            mean_left: p.mean_left,
            mean_right: p.mean_right,
            loss: p.loss(),
        }
    }
}

#[derive(Serialize)]
struct BruteForceOut {
    best: PartitionOut,
    agrees: bool,
}

#[derive(Serialize)]
struct OracleOut {
    n: usize,
    size: usize,
    /// Present when a size was requested.
    prefix: Option<PartitionOut>,
    suffix: Option<PartitionOut>,
    winner: Option<&'static str>,
    tie: Option<bool>,
    best: PartitionOut,
    brute_force: Option<BruteForceOut>,
}

pub fn oracle_partition(a: OracleArgs) -> Result<(), CliError> {
    let table = load_table(&a.data.input)?;
    let y = &table.columns[table.column_index(&a.data.response)?];
    let n = y.len();
    let mut out = match a.size {
        Some(i) => {
            let o = oracle_fixed_size(y, i)?;
            OracleOut {
                n,
                size: i,
                prefix: Some((&o.prefix).into()),
                suffix: Some((&o.suffix).into()),
                winner: Some(match o.winner {
                    Winner::Prefix => "prefix",
                    Winner::Suffix => "suffix",
                }),
                tie: Some(o.tie),
                best: o.best().into(),
                brute_force: None,
            }
        }
        None => {
            let (i, p) = oracle_varying_size(y)?;
            OracleOut {
                n,
                size: i,
                prefix: None,
                suffix: None,
                winner: None,
                tie: None,
                best: (&p).into(),
                brute_force: None,
            }
        }
    };
    if a.brute_force {
        let sizes: Vec<usize> = match a.size {
            Some(i) => vec![i],
            None => (1..n).collect(),
        };
        let mut best: Option<Partition2> = None;
        for i in sizes {
            let p = match brute_force_best_2partition(y, i) {
                Ok(p) => p,
                Err(Error::SizeOutOfRange { .. }) if a.size.is_none() => continue,
                Err(e) => return Err(e.into()),
            };
            if best.as_ref().is_none_or(|b| p.loss() < b.loss()) {
                best = Some(p);
            }
        }
        let best = best.ok_or_else(|| CliError::usage("no admissible size for brute force"))?;
        let agrees = (loss(&best, y)? - out.best.loss).abs() <= 1e-12 * out.best.loss.abs().max(1.0);
        out.brute_force = Some(BruteForceOut { best: (&best).into(), agrees });
    }
    emit_json(&out, a.out_dir.as_deref(), "partition.json")
}

// ---------------------------------------------------------------- tree

#[derive(Serialize)]
struct Predictions {
    predictions: Vec<f64>,
}

fn render(node: &TreeNode, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match node {
        TreeNode::Leaf { mean, .. } => out.push_str(&format!("{pad}leaf {}\n", num(*mean))),
        TreeNode::Split { rule, left, right, .. } => {
            out.push_str(&format!("{pad}x{} <= {}\n", rule.coordinate + 1, num(rule.threshold)));
            render(left, depth + 1, out);
            out.push_str(&format!("{pad}else\n"));
            render(right, depth + 1, out);
        }
    }
}

pub fn tree(c: TreeCommand) -> Result<(), CliError> {
    match c {
        TreeCommand::Grow { data, depth, min_leaf, out_dir } => {
            let ds = read_csv(&data.input, &data.response)?;
            let t = grow_tree(ds.columns(), ds.y(), depth, min_leaf)?;
            eprintln!("depth {}, {} leaves", t.depth(), t.leaves().len());
            emit_json(&t, out_dir.as_deref(), "tree.json")
        }
        TreeCommand::Predict { model, input, response, out_dir } => {
            let t: Tree = parse_json(&model)?;
            let table = load_table(&input)?;
            let skip = match &response {
                Some(r) => table.headers.iter().position(|h| h == r),
                None => None,
            };
            let columns: Vec<Vec<f64>> =
                table.columns.into_iter().enumerate().filter(|(k, _)| Some(*k) != skip).map(|(_, c)| c).collect();
            let predictions = t.predict_columns(&columns)?;
            emit_json(&Predictions { predictions }, out_dir.as_deref(), "predictions.json")
        }
        TreeCommand::Serialize { model, format } => {
            let t: Tree = parse_json(&model)?;
            let text = if format == "json" {
                to_json(&t)?
            } else {
                let mut s = format!("{} input columns\n", t.n_features);
                render(&t.root, 0, &mut s);
                s
            };
            print!("{text}");
            Ok(())
        }
    }
}
