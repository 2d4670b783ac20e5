//! Multivariate adaptive regression splines.
//!
//! A model is an intercept plus a weighted sum of basis terms, each term a
//! product of at most `max_degree` factors. Numeric variables enter through
//! reflected hinge pairs `max(x - t, 0)`, `max(t - x, 0)`; binary variables
//! enter as plain indicators. Fitting is a greedy forward pass
//! ([`forward_pass`]) followed by GCV-guided backward elimination
//! ([`backward_prune`]); [`cross_validate`] tunes degree and term budget.

mod basis;
mod cv;
mod forward;
mod prune;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::encoding::DesignMatrix;
use crate::error::{Error, Result};

pub use basis::{eval_term, BasisFactor, BasisTerm, FactorKind};
pub use cv::{cross_validate, default_grid, CvResult, CvScore};
pub use forward::forward_pass;
pub use prune::{backward_prune, gcv, PruneStep};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarsConfig {
    pub max_degree: usize,
    /// Cap on basis terms, intercept excluded.
    pub max_terms: usize,
    /// Minimum R² improvement for the forward pass to add a knot.
    pub min_rsq_gain: f64,
    /// GCV cost per knot; `None` uses 3 for interaction models and 2 otherwise.
    pub gcv_penalty_per_knot: Option<f64>,
    pub cv_folds: usize,
    pub rng_seed: u64,
    /// Optional cap on candidate knots per variable (evenly spaced quantiles).
    pub max_knots: Option<usize>,
}

impl Default for MarsConfig {
    fn default() -> Self {
        MarsConfig {
            max_degree: 2,
            max_terms: 34,
            min_rsq_gain: 0.001,
            gcv_penalty_per_knot: None,
            cv_folds: 10,
            rng_seed: 20220101,
            max_knots: None,
        }
    }
}

impl MarsConfig {
    pub fn penalty(&self) -> f64 {
        self.gcv_penalty_per_knot
            .unwrap_or(if self.max_degree > 1 { 3.0 } else { 2.0 })
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.max_degree) {
            return Err(Error::InvalidConfig(format!(
                "max_degree must be 1 or 2, got {}",
                self.max_degree
            )));
        }
        if self.max_terms < 1 {
            return Err(Error::InvalidConfig("max_terms must be at least 1".into()));
        }
        if !(self.min_rsq_gain >= 0.0) {
            return Err(Error::InvalidConfig("min_rsq_gain must be non-negative".into()));
        }
        if let Some(p) = self.gcv_penalty_per_knot {
            if !(p >= 0.0) {
                return Err(Error::InvalidConfig("GCV penalty must be non-negative".into()));
            }
        }
        if self.max_knots == Some(0) {
            return Err(Error::InvalidConfig("max_knots must be positive".into()));
        }
        Ok(())
    }
}

/// A fitted model. Immutable once returned by the fitting routines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarsModel {
    pub intercept: f64,
    pub terms: Vec<BasisTerm>,
    pub rss: f64,
    pub rsq: f64,
    pub grsq: f64,
    pub gcv: f64,
    pub n: usize,
    pub config: MarsConfig,
    /// Design-matrix columns available at fit time.
    pub variables: Vec<String>,
    /// Training RSS after each forward-pass addition (index 0 = intercept only).
    pub forward_rss: Vec<f64>,
    /// Backward-elimination path; empty for unpruned models.
    pub prune_path: Vec<PruneStep>,
}

impl MarsModel {
    /// Predictions for rows laid out by `names`.
    pub fn predict(&self, names: &[String], rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        let bound: Vec<Vec<usize>> = self
            .terms
            .iter()
            .map(|t| t.bind(names))
            .collect::<Result<_>>()?;
        Ok(rows
            .iter()
            .map(|row| {
                self.intercept
                    + self
                        .terms
                        .iter()
                        .zip(&bound)
                        .map(|(t, idx)| t.coefficient * t.eval_bound(idx, row))
                        .sum::<f64>()
            })
            .collect())
    }

    /// Predictions over the rows of a design matrix.
    pub fn predict_matrix(&self, matrix: &DesignMatrix) -> Result<Vec<f64>> {
        let bound: Vec<Vec<usize>> = self
            .terms
            .iter()
            .map(|t| t.bind(&matrix.column_names))
            .collect::<Result<_>>()?;
        let n = matrix.nrows();
        let mut out = vec![self.intercept; n];
        for (t, idx) in self.terms.iter().zip(&bound) {
            let col = t.column(idx, &matrix.columns, n);
            out.iter_mut()
                .zip(col)
                .for_each(|(o, v)| *o += t.coefficient * v);
        }
        Ok(out)
    }

    /// Variables referenced by at least one term, in first-use order.
    pub fn used_variables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for f in self.terms.iter().flat_map(|t| &t.factors) {
            if !out.contains(&f.variable) {
                out.push(f.variable.clone());
            }
        }
        out
    }

    /// Knots placed on `variable`, sorted and deduplicated.
    pub fn knots(&self, variable: &str) -> Vec<f64> {
        let mut ks: Vec<f64> = self
            .terms
            .iter()
            .flat_map(|t| &t.factors)
            .filter(|f| f.variable == variable)
            .filter_map(|f| f.knot)
            .collect();
        ks.sort_by(f64::total_cmp);
        ks.dedup();
        ks
    }

    /// Number of distinct (variable, knot) pairs among hinge factors.
    pub fn knot_count(&self) -> usize {
        count_knots(self.terms.iter())
    }

    /// Term listing with coefficients in `d.ddde±XX` notation.
    pub fn to_text(&self) -> String {
        self.to_text_digits(4)
    }

    /// Term listing with `digits` significant digits.
    pub fn to_text_digits(&self, digits: usize) -> String {
        let sci = |v: f64| sci_digits(v, digits);
        let mut s = String::new();
        let width = self
            .terms
            .iter()
            .map(|t| t.to_string().len())
            .max()
            .unwrap_or(0)
            .max("(Intercept)".len());
        let _ = writeln!(s, "{:<width$}  Weight", "Term");
        let _ = writeln!(s, "{:<width$}  {}", "(Intercept)", sci(self.intercept));
        for t in &self.terms {
            let _ = writeln!(s, "{:<width$}  {}", t.to_string(), sci(t.coefficient));
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "terms {}  n {}  RSq {:.4}  GRSq {:.4}  GCV {:.4}  RSS {:.4}",
            self.terms.len(),
            self.n,
            self.rsq,
            self.grsq,
            self.gcv,
            self.rss
        );
        let _ = writeln!(
            s,
            "max_degree {}  max_terms {}  min_rsq_gain {}  penalty {}",
            self.config.max_degree,
            self.config.max_terms,
            self.config.min_rsq_gain,
            self.config.penalty()
        );
        s
    }
}

pub(crate) fn count_knots<'a>(terms: impl Iterator<Item = &'a BasisTerm>) -> usize {
    let mut seen: Vec<(&str, u64)> = Vec::new();
    for f in terms.flat_map(|t| &t.factors) {
        if let Some(k) = f.knot {
            let key = (f.variable.as_str(), k.to_bits());
            if !seen.contains(&key) {
                seen.push(key);
            }
        }
    }
    seen.len()
}

/// Scientific notation with a signed two-digit exponent, e.g. `5.826e-01`.
pub fn sci(v: f64) -> String {
    sci_digits(v, 4)
}

pub fn sci_digits(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let prec = digits.max(1) - 1;
    let s = format!("{v:.prec$e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Forward pass followed by backward pruning.
pub fn fit_mars(matrix: &DesignMatrix, config: &MarsConfig) -> Result<MarsModel> {
    let unpruned = forward_pass(matrix, config)?;
    backward_prune(&unpruned, matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci_format() {
        assert_eq!(sci(0.5826), "5.826e-01");
        assert_eq!(sci(213.0), "2.130e+02");
        assert_eq!(sci(-0.003592), "-3.592e-03");
        assert_eq!(sci(0.0), "0.000e+00");
    }

    #[test]
    fn config_validation() {
        assert!(MarsConfig::default().validate().is_ok());
        let bad = MarsConfig {
            max_degree: 3,
            ..MarsConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(MarsConfig::default().penalty(), 3.0);
        let additive = MarsConfig {
            max_degree: 1,
            ..MarsConfig::default()
        };
        assert_eq!(additive.penalty(), 2.0);
    }

    #[test]
    fn intercept_only_prediction_is_constant() {
        let m = MarsModel {
            intercept: 4.5,
            terms: vec![],
            rss: 0.0,
            rsq: 0.0,
            grsq: 0.0,
            gcv: 0.0,
            n: 3,
            config: MarsConfig::default(),
            variables: vec!["x".into()],
            forward_rss: vec![],
            prune_path: vec![],
        };
        let p = m
            .predict(&["x".into()], &[vec![1.0], vec![-3.0], vec![9.0]])
            .unwrap();
        assert_eq!(p, vec![4.5, 4.5, 4.5]);
    }
}
