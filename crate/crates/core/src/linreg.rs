//! Ordinary least squares with classical (homoskedastic) inference.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::encoding::{build_design_matrix, drop_degenerate_columns, DesignMatrix, DroppedColumn, INTERCEPT};
use crate::error::{Error, Result};
use crate::meta_db::{partition_by_horizon, Dataset, HorizonClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub column_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub n: usize,
    pub df_resid: usize,
    pub rss: f64,
    pub residuals: Vec<f64>,
    pub has_intercept: bool,
    pub dropped_columns: Vec<DroppedColumn>,
}

impl OlsFit {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index(name).map(|j| self.coefficients[j])
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Predict rows laid out by `names`. An intercept coefficient absent from
    /// `names` contributes its value unscaled.
    pub fn predict(&self, names: &[String], rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        let mut slots = Vec::with_capacity(self.column_names.len());
        for c in &self.column_names {
            match names.iter().position(|n| n == c) {
                Some(j) => slots.push(Some(j)),
                None if c == INTERCEPT => slots.push(None),
                None => return Err(Error::UnknownColumn(c.clone())),
            }
        }
        Ok(rows
            .iter()
            .map(|row| {
                slots
                    .iter()
                    .zip(&self.coefficients)
                    .map(|(s, b)| b * s.map_or(1.0, |j| row[j]))
                    .sum()
            })
            .collect())
    }
}

/// Fit y on the matrix columns after dropping degenerate columns.
pub fn ols_fit(matrix: &DesignMatrix) -> Result<OlsFit> {
    let m = drop_degenerate_columns(matrix)?;
    let n = m.nrows();
    let p = m.ncols();
    if n <= p {
        return Err(Error::Underdetermined { n, p });
    }

    let x = DMatrix::from_fn(n, p, |i, j| m.columns[j][i]);
    let y = DVector::from_column_slice(&m.y);
    let qr = x.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let qty = q.transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::AllColumnsDegenerate)?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(Error::AllColumnsDegenerate)?;
    // (X'X)^{-1} = R^{-1} R^{-T}
    let xtx_inv_diag: Vec<f64> = (0..p)
        .map(|j| r_inv.row(j).iter().map(|v| v * v).sum())
        .collect();

    let fitted = &x * &beta;
    let residuals: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let df = n - p;
    let sigma2 = rss / df as f64;

    let has_intercept = m.has_intercept();
    let tss = if has_intercept {
        let mean = m.y.iter().sum::<f64>() / n as f64;
        m.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    } else {
        m.y.iter().map(|v| v * v).sum::<f64>()
    };
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let dof_total = if has_intercept { n - 1 } else { n } as f64;
    let adj_r_squared = 1.0 - (1.0 - r_squared) * dof_total / df as f64;

    let t_dist = StudentsT::new(0.0, 1.0, df as f64).expect("df > 0");
    let mut standard_errors = Vec::with_capacity(p);
    let mut t_stats = Vec::with_capacity(p);
    let mut p_values = Vec::with_capacity(p);
    for j in 0..p {
        let se = (sigma2 * xtx_inv_diag[j]).sqrt();
        let b = beta[j];
        let (t, pv) = if se > 0.0 {
            let t = b / se;
            (t, (2.0 * t_dist.sf(t.abs())).clamp(0.0, 1.0))
        } else if b != 0.0 {
            (f64::INFINITY.copysign(b), 0.0)
        } else {
            (0.0, 1.0)
        };
        standard_errors.push(se);
        t_stats.push(t);
        p_values.push(pv);
    }

    Ok(OlsFit {
        column_names: m.column_names.clone(),
        coefficients: beta.iter().copied().collect(),
        standard_errors,
        t_stats,
        p_values,
        r_squared,
        adj_r_squared,
        n,
        df_resid: df,
        rss,
        residuals,
        has_intercept,
        dropped_columns: m.dropped_columns,
    })
}

/// Encode each horizon partition independently (with intercept) and fit it.
pub fn run_horizon_regressions(dataset: &Dataset) -> Vec<(HorizonClass, Result<OlsFit>)> {
    let parts = partition_by_horizon(dataset);
    HorizonClass::ALL
        .par_iter()
        .map(|&class| {
            let part = parts.get(class);
            let fit = if part.is_empty() {
                Err(Error::EmptyPartition(class.label().to_string()))
            } else {
                build_design_matrix(part, true).and_then(|m| ols_fit(&m))
            };
            (class, fit)
        })
        .collect()
}
