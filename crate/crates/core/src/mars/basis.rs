use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    /// max(x - t, 0)
    HingePlus,
    /// max(t - x, 0)
    HingeMinus,
    /// raw 0/1 value of a binary column
    Indicator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisFactor {
    pub kind: FactorKind,
    pub variable: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knot: Option<f64>,
}

impl BasisFactor {
    pub fn hinge_plus(variable: impl Into<String>, knot: f64) -> Self {
        BasisFactor {
            kind: FactorKind::HingePlus,
            variable: variable.into(),
            knot: Some(knot),
        }
    }

    pub fn hinge_minus(variable: impl Into<String>, knot: f64) -> Self {
        BasisFactor {
            kind: FactorKind::HingeMinus,
            variable: variable.into(),
            knot: Some(knot),
        }
    }

    pub fn indicator(variable: impl Into<String>) -> Self {
        BasisFactor {
            kind: FactorKind::Indicator,
            variable: variable.into(),
            knot: None,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let t = self.knot.unwrap_or(0.0);
        match self.kind {
            FactorKind::HingePlus => (x - t).max(0.0),
            FactorKind::HingeMinus => (t - x).max(0.0),
            FactorKind::Indicator => x,
        }
    }
}

impl fmt::Display for BasisFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.knot.unwrap_or(0.0);
        match self.kind {
            FactorKind::HingePlus => write!(f, "h({}-{})", self.variable, t),
            FactorKind::HingeMinus => write!(f, "h({}-{})", t, self.variable),
            FactorKind::Indicator => write!(f, "{}", self.variable),
        }
    }
}

/// Product of one or more factors with its fitted coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisTerm {
    pub factors: Vec<BasisFactor>,
    pub coefficient: f64,
}

impl BasisTerm {
    pub fn new(factors: Vec<BasisFactor>) -> Self {
        BasisTerm {
            factors,
            coefficient: 0.0,
        }
    }

    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    pub fn uses(&self, variable: &str) -> bool {
        self.factors.iter().any(|f| f.variable == variable)
    }

    /// Resolve factor variables to positions in `names`.
    pub fn bind(&self, names: &[String]) -> Result<Vec<usize>> {
        self.factors
            .iter()
            .map(|f| {
                names
                    .iter()
                    .position(|n| *n == f.variable)
                    .ok_or_else(|| Error::UnknownColumn(f.variable.clone()))
            })
            .collect()
    }

    /// Basis value for a row laid out by `names`.
    pub fn eval(&self, names: &[String], row: &[f64]) -> Result<f64> {
        let idx = self.bind(names)?;
        Ok(self.eval_bound(&idx, row))
    }

    #[inline]
    pub(crate) fn eval_bound(&self, idx: &[usize], row: &[f64]) -> f64 {
        self.factors
            .iter()
            .zip(idx)
            .map(|(f, &j)| f.eval(row[j]))
            .product()
    }

    /// Basis values over column-major data.
    pub(crate) fn column(&self, idx: &[usize], columns: &[Vec<f64>], n: usize) -> Vec<f64> {
        let mut out = vec![1.0; n];
        for (f, &j) in self.factors.iter().zip(idx) {
            for (o, &x) in out.iter_mut().zip(&columns[j]) {
                *o *= f.eval(x);
            }
        }
        out
    }
}

impl fmt::Display for BasisTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "{factor}")?;
        }
        Ok(())
    }
}

/// `eval_term` over a named row.
pub fn eval_term(term: &BasisTerm, names: &[String], row: &[f64]) -> Result<f64> {
    term.eval(names, row)
}
