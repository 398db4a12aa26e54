//! Small statistics: OLS with t-test p-values, Spearman correlation,
//! chi-square goodness of fit, entropy.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Result of an ordinary least squares fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: Option<f64>,
    pub std_errors: Vec<f64>,
    /// Two-sided p-values for each coefficient; NaN when there are no
    /// residual degrees of freedom.
    pub p_values: Vec<f64>,
    pub intercept_p_value: Option<f64>,
    pub r_squared: f64,
    pub n: usize,
}

/// Cholesky factor of a symmetric positive definite matrix (row-major).
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let p = a.len();
    let mut l = vec![vec![0.0; p]; p];
    let scale = (0..p).map(|i| a[i][i].abs()).fold(0.0, f64::max).max(1.0);
    for i in 0..p {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 1e-10 * scale {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let p = l.len();
    let mut y = vec![0.0; p];
    for i in 0..p {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        x[i] = (y[i] - (i + 1..p).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    x
}

/// Least squares fit of `y` on the columns of `x` (one row per observation),
/// with an intercept column prepended when `intercept` is set.
pub fn ols_fit(x: &[Vec<f64>], y: &[f64], names: &[&str], intercept: bool) -> Result<RegressionFit> {
    let n = y.len();
    if x.len() != n {
        return Err(Error::SizeMismatch(format!("{} rows vs {} responses", x.len(), n)));
    }
    let k = names.len();
    if x.iter().any(|r| r.len() != k) {
        return Err(Error::SizeMismatch(format!("design rows must have {k} columns")));
    }
    let design: Vec<Vec<f64>> = x
        .iter()
        .map(|r| {
            let mut row = Vec::with_capacity(k + 1);
            if intercept {
                row.push(1.0);
            }
            row.extend_from_slice(r);
            row
        })
        .collect();
    let p = k + usize::from(intercept);
    if n < p {
        return Err(Error::Validation(format!("{n} observations for {p} parameters")));
    }
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, &yi) in design.iter().zip(y) {
        for i in 0..p {
            xty[i] += row[i] * yi;
            for j in 0..p {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    let l = cholesky(&xtx)
        .ok_or_else(|| Error::Validation("design matrix is rank deficient".into()))?;
    let beta = cholesky_solve(&l, &xty);

    let rss: f64 = design
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let fit: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            (yi - fit).powi(2)
        })
        .sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = if intercept {
        y.iter().map(|v| (v - mean).powi(2)).sum()
    } else {
        y.iter().map(|v| v * v).sum()
    };
    let r_squared = if tss <= 0.0 {
        0.0
    } else {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    };

    let df = n - p;
    let sigma2 = if df > 0 { rss / df as f64 } else { f64::NAN };
    let mut std_errors = Vec::with_capacity(p);
    let mut p_values = Vec::with_capacity(p);
    let t_dist = (df > 0).then(|| StudentsT::new(0.0, 1.0, df as f64).expect("df > 0"));
    for j in 0..p {
        let mut e = vec![0.0; p];
        e[j] = 1.0;
        let var = cholesky_solve(&l, &e)[j] * sigma2;
        let se = var.sqrt();
        std_errors.push(se);
        let pv = match &t_dist {
            Some(t) if se > 0.0 => 2.0 * (1.0 - t.cdf((beta[j] / se).abs())),
            Some(_) => 0.0,
            None => f64::NAN,
        };
        p_values.push(pv);
    }
    let (intercept_value, intercept_p, coefficients, std_errors, p_values) = if intercept {
        (
            Some(beta[0]),
            Some(p_values[0]),
            beta[1..].to_vec(),
            std_errors[1..].to_vec(),
            p_values[1..].to_vec(),
        )
    } else {
        (None, None, beta, std_errors, p_values)
    };
    Ok(RegressionFit {
        names: names.iter().map(|s| s.to_string()).collect(),
        coefficients,
        intercept: intercept_value,
        std_errors,
        p_values,
        intercept_p_value: intercept_p,
        r_squared,
        n,
    })
}

/// `(bleu - baseline) / baseline`, or `None` when the baseline is zero.
pub fn relative_distance(bleu: f64, baseline: f64) -> Option<f64> {
    (baseline != 0.0).then(|| (bleu - baseline) / baseline)
}

pub fn round_to(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (x * f).round() / f
}

/// Shannon entropy in bits of a count distribution.
pub fn entropy_bits(counts: impl IntoIterator<Item = u64>) -> f64 {
    let counts: Vec<u64> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Ranks with ties sharing their average rank (1-based).
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    (va > 0.0 && vb > 0.0).then(|| cov / (va * vb).sqrt())
}

/// Spearman rank correlation; `None` for fewer than two points or a
/// constant series.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Pearson chi-square goodness-of-fit test. Returns (statistic, p-value).
/// Categories with tiny expected counts are pooled into a tail bin so every
/// bin expects at least `min_expected` observations.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> Result<(f64, f64)> {
    if observed.len() != probs.len() {
        return Err(Error::SizeMismatch("observed vs expected categories".into()));
    }
    let n: u64 = observed.iter().sum();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        acc.0 += o as f64;
        acc.1 += p * n as f64;
        if acc.1 >= min_expected {
            bins.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => bins.push(acc),
        }
    }
    if bins.len() < 2 {
        return Err(Error::Validation("fewer than two bins for chi-square".into()));
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dist = ChiSquared::new((bins.len() - 1) as f64).expect("positive df");
    Ok((stat, 1.0 - dist.cdf(stat)))
}
