//! Synthetic signals.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dataset::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::rng::{self, StreamRng};

fn noise(r: &mut StreamRng, var: f64) -> Result<f64> {
    if var == 0.0 {
        return Ok(0.0);
    }
    let d = Normal::new(0.0, var.sqrt()).map_err(|e| Error::Config(format!("noise variance {var}: {e}")))?;
    Ok(d.sample(r))
}

fn check_var(var: f64) -> Result<()> {
    if !(var >= 0.0 && var.is_finite()) {
        return Err(Error::Config(format!("noise variance must be finite and >= 0, got {var}")));
    }
    Ok(())
}

/// `x ~ U[0,1]^3`, `y = 2 x1^3 + 5 x3 + 10 + eps`, `eps ~ N(0, noise_var)`.
pub fn synth_3var(n: usize, noise_var: f64, seed: u64) -> Result<Dataset> {
    synth_3var_with(n, noise_var, &mut rng::stream(seed, 0))
}

/// [`synth_3var`] drawing from a caller-supplied stream.
pub fn synth_3var_with(n: usize, noise_var: f64, r: &mut StreamRng) -> Result<Dataset> {
    check_var(noise_var)?;
    let mut cols: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(n)).collect();
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let x: [f64; 3] = [r.random(), r.random(), r.random()];
        for (c, v) in cols.iter_mut().zip(x) {
            c.push(v);
        }
        y.push(2.0 * x[0].powi(3) + 5.0 * x[2] + 10.0 + noise(r, noise_var)?);
    }
    Dataset::from_columns(cols, y, &[])
}

/// `x ~ N(0, 1)`, `y = truth(x) + eps`, and the candidates evaluated on `x`.
pub fn synth_candidates(
    n: usize,
    truth: &Expression,
    candidates: &[Expression],
    noise_var: f64,
    seed: u64,
) -> Result<(Dataset, FeatureMatrix)> {
    synth_candidates_with(n, truth, candidates, noise_var, &mut rng::stream(seed, 0))
}

/// [`synth_candidates`] drawing from a caller-supplied stream.
pub fn synth_candidates_with(
    n: usize,
    truth: &Expression,
    candidates: &[Expression],
    noise_var: f64,
    r: &mut StreamRng,
) -> Result<(Dataset, FeatureMatrix)> {
    check_var(noise_var)?;
    truth.check_arity(1)?;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let v: f64 = StandardNormal.sample(r);
        x.push(v);
        y.push(truth.eval_scalar(v) + noise(r, noise_var)?);
    }
    let ds = Dataset::from_columns(vec![x], y, &["x".to_owned()])?;
    let fm = FeatureMatrix::evaluate(&ds, candidates.to_vec())?;
    Ok((ds, fm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_var_signal() {
        let ds = synth_3var(50, 0.0, 1).unwrap();
        for i in 0..50 {
            let r = ds.row(i);
            assert!(r.iter().all(|v| (0.0..1.0).contains(v)));
            assert_eq!(ds.y()[i], 2.0 * r[0].powi(3) + 5.0 * r[2] + 10.0);
        }
        assert_eq!(synth_3var(1, 0.1, 1).unwrap().n_rows(), 1);
        let a = synth_3var(20, 0.1, 9).unwrap();
        let b = synth_3var(20, 0.1, 9).unwrap();
        assert_eq!(a, b);
        assert!(synth_3var(5, -1.0, 1).is_err());
    }

    #[test]
    fn noise_has_requested_variance() {
        let a = synth_3var(20_000, 0.0, 4).unwrap();
        let b = synth_3var(20_000, 0.25, 4).unwrap();
        let resid: Vec<f64> = (0..b.n_rows())
            .map(|i| {
                let r = b.row(i);
                b.y()[i] - (2.0 * r[0].powi(3) + 5.0 * r[2] + 10.0)
            })
            .collect();
        let m = resid.iter().sum::<f64>() / resid.len() as f64;
        let v = resid.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (resid.len() - 1) as f64;
        assert!(m.abs() < 0.02 && (v - 0.25).abs() < 0.02, "{m} {v}");
        assert_eq!(a.n_rows(), 20_000);
    }

    #[test]
    fn candidate_signal() {
        let e = |s: &str| s.parse::<Expression>().unwrap();
        let (ds, fm) = synth_candidates(30, &e("x"), &[e("x")], 0.0, 2).unwrap();
        assert_eq!(ds.y(), fm.column(0));
        let cands = [e("x"), e("sin(4*x+0.2)"), e("sin(4*x+0.1)"), e("sin(4*x)")];
        let (ds, fm) = synth_candidates(40, &e("sin(4*x)"), &cands, 0.0, 3).unwrap();
        assert_eq!(fm.n_cols(), 4);
        assert_eq!(ds.y(), fm.column(3));
    }
}
