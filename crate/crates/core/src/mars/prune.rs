//! Backward elimination with generalized cross-validation.

use serde::{Deserialize, Serialize};

use super::forward::assemble;
use super::{count_knots, MarsModel};
use crate::encoding::{DesignMatrix, COLLINEAR_TOL};
use crate::error::Result;

/// GCV = (RSS/n) / (1 - C/n)^2 with C = coefficients + penalty * knots.
/// Infinite when C >= n.
pub fn gcv(rss: f64, n: usize, n_coefficients: usize, n_knots: usize, penalty: f64) -> f64 {
    let nf = n as f64;
    let c = n_coefficients as f64 + penalty * n_knots as f64;
    if c >= nf {
        return f64::INFINITY;
    }
    let d = 1.0 - c / nf;
    (rss / nf) / (d * d)
}

/// One subset visited during backward elimination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneStep {
    /// Indices into the unpruned model's term list.
    pub terms: Vec<usize>,
    pub rss: f64,
    pub gcv: f64,
    pub rsq: f64,
    pub grsq: f64,
}

pub(crate) struct QrFit {
    pub coef: Vec<f64>,
    pub rss: f64,
    /// Columns (by position) linearly dependent on earlier ones.
    pub dependent: Vec<usize>,
    /// Diagonal of (B'B)^{-1}; NaN for dependent columns.
    pub inv_diag: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least squares through two-pass Gram-Schmidt; dependent columns get a
/// zero coefficient.
pub(crate) fn qr_fit(cols: &[Vec<f64>], y: &[f64]) -> QrFit {
    let p = cols.len();
    let mut q: Vec<Vec<f64>> = Vec::new();
    // r[k][j]: coefficient of basis vector k in column j
    let mut r: Vec<Vec<f64>> = Vec::new();
    let mut owner: Vec<usize> = Vec::new();
    let mut dependent = Vec::new();
    for (j, col) in cols.iter().enumerate() {
        let norm = dot(col, col).sqrt();
        let mut v = col.clone();
        let mut coeffs = vec![0.0; q.len()];
        for _ in 0..2 {
            for (k, qk) in q.iter().enumerate() {
                let c = dot(qk, &v);
                coeffs[k] += c;
                v.iter_mut().zip(qk).for_each(|(vi, qi)| *vi -= c * qi);
            }
        }
        let vn = dot(&v, &v).sqrt();
        if norm == 0.0 || vn < COLLINEAR_TOL * norm {
            dependent.push(j);
            continue;
        }
        for (k, c) in coeffs.into_iter().enumerate() {
            r[k].push(c);
        }
        let mut row = vec![0.0; owner.len()];
        row.push(vn);
        r.push(row);
        v.iter_mut().for_each(|e| *e /= vn);
        q.push(v);
        owner.push(j);
    }
    // r is now rank x rank upper triangular (row k, column position among owners)
    let rank = owner.len();
    let z: Vec<f64> = q.iter().map(|qk| dot(qk, y)).collect();
    let mut beta = vec![0.0; rank];
    for i in (0..rank).rev() {
        let s: f64 = (i + 1..rank).map(|k| r[i][k] * beta[k]).sum();
        beta[i] = (z[i] - s) / r[i][i];
    }
    // R^{-1}, column by column
    let mut rinv = vec![vec![0.0; rank]; rank];
    for c in 0..rank {
        for i in (0..=c).rev() {
            let s: f64 = (i + 1..=c).map(|k| r[i][k] * rinv[k][c]).sum();
            let e = if i == c { 1.0 } else { 0.0 };
            rinv[i][c] = (e - s) / r[i][i];
        }
    }
    let mut coef = vec![0.0; p];
    let mut inv_diag = vec![f64::NAN; p];
    for (pos, &j) in owner.iter().enumerate() {
        coef[j] = beta[pos];
        inv_diag[j] = rinv[pos].iter().map(|v| v * v).sum();
    }
    let n = y.len();
    let mut resid = y.to_vec();
    for (c, b) in cols.iter().zip(&coef) {
        if *b != 0.0 {
            for i in 0..n {
                resid[i] -= b * c[i];
            }
        }
    }
    QrFit {
        coef,
        rss: dot(&resid, &resid),
        dependent,
        inv_diag,
    }
}

pub(crate) fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let fit = qr_fit(cols, y);
    Ok((fit.coef, fit.rss))
}

/// Relative slack under which two GCV values count as tied (smaller wins).
const GCV_TIE: f64 = 1e-12;

/// Drop terms one at a time, always the one whose removal raises RSS least,
/// and return the visited subset with the lowest GCV.
pub fn backward_prune(model: &MarsModel, matrix: &DesignMatrix) -> Result<MarsModel> {
    let m = matrix.without_intercept();
    let n = m.nrows();
    let mean = m.y.iter().sum::<f64>() / n as f64;
    let tss: f64 = m.y.iter().map(|v| (v - mean).powi(2)).sum();
    let penalty = model.config.penalty();
    let g_null = gcv(tss, n, 1, 0, penalty);

    let term_cols: Vec<Vec<f64>> = model
        .terms
        .iter()
        .map(|t| {
            let idx = t.bind(&m.column_names)?;
            Ok(t.column(&idx, &m.columns, n))
        })
        .collect::<Result<_>>()?;

    let mut active: Vec<usize> = (0..model.terms.len()).collect();
    let mut path = Vec::new();
    loop {
        let mut cols = vec![vec![1.0; n]];
        cols.extend(active.iter().map(|&j| term_cols[j].clone()));
        let fit = qr_fit(&cols, &m.y);
        let knots = count_knots(active.iter().map(|&j| &model.terms[j]));
        let g = gcv(fit.rss, n, active.len() + 1, knots, penalty);
        path.push(PruneStep {
            terms: active.clone(),
            rss: fit.rss,
            gcv: g,
            rsq: if tss > 0.0 { 1.0 - fit.rss / tss } else { 0.0 },
            grsq: if g_null > 0.0 { 1.0 - g / g_null } else { 0.0 },
        });
        if active.is_empty() {
            break;
        }
        let remove = match fit.dependent.iter().find(|&&c| c > 0) {
            Some(&c) => c - 1,
            None => {
                let mut best = 0;
                let mut best_delta = f64::INFINITY;
                for pos in 0..active.len() {
                    let delta = fit.coef[pos + 1].powi(2) / fit.inv_diag[pos + 1];
                    if delta <= best_delta {
                        best_delta = delta;
                        best = pos;
                    }
                }
                best
            }
        };
        active.remove(remove);
    }

    let min_gcv = path.iter().map(|s| s.gcv).fold(f64::INFINITY, f64::min);
    let slack = GCV_TIE * g_null.max(f64::MIN_POSITIVE);
    let chosen = path
        .iter()
        .filter(|s| s.gcv <= min_gcv + slack)
        .min_by_key(|s| s.terms.len())
        .expect("path is never empty");

    let terms = chosen
        .terms
        .iter()
        .map(|&j| model.terms[j].clone())
        .collect();
    let mut out = assemble(&m, &model.config, terms, tss)?;
    out.forward_rss = model.forward_rss.clone();
    out.prune_path = path;
    Ok(out)
}
