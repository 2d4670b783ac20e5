//! Partial dependence: model predictions averaged over background rows with
//! one or two features pinned to grid values.

use rayon::prelude::*;
use serde::Serialize;

use crate::encoding::{ColumnKind, DesignMatrix};
use crate::error::{Error, Result};
use crate::linreg::OlsFit;
use crate::mars::MarsModel;

/// Anything that can predict from rows laid out by column name.
pub trait Predictor: Sync {
    /// Resolve column positions once and return a row predictor.
    fn bind<'a>(&'a self, names: &[String]) -> Result<Box<dyn Fn(&[f64]) -> f64 + Send + Sync + 'a>>;

    /// Breakpoints the model places on `variable`, if any.
    fn knots(&self, _variable: &str) -> Vec<f64> {
        Vec::new()
    }
}

impl Predictor for MarsModel {
    fn bind<'a>(&'a self, names: &[String]) -> Result<Box<dyn Fn(&[f64]) -> f64 + Send + Sync + 'a>> {
        let bound: Vec<Vec<usize>> = self
            .terms
            .iter()
            .map(|t| t.bind(names))
            .collect::<Result<_>>()?;
        Ok(Box::new(move |row: &[f64]| {
            self.intercept
                + self
                    .terms
                    .iter()
                    .zip(&bound)
                    .map(|(t, idx)| t.coefficient * t.eval_bound(idx, row))
                    .sum::<f64>()
        }))
    }

    fn knots(&self, variable: &str) -> Vec<f64> {
        MarsModel::knots(self, variable)
    }
}

impl Predictor for OlsFit {
    fn bind<'a>(&'a self, names: &[String]) -> Result<Box<dyn Fn(&[f64]) -> f64 + Send + Sync + 'a>> {
        let mut slots = Vec::with_capacity(self.column_names.len());
        for c in &self.column_names {
            match names.iter().position(|n| n == c) {
                Some(j) => slots.push(Some(j)),
                None if c == crate::encoding::INTERCEPT => slots.push(None),
                None => return Err(Error::UnknownColumn(c.clone())),
            }
        }
        Ok(Box::new(move |row: &[f64]| {
            slots
                .iter()
                .zip(&self.coefficients)
                .map(|(s, b)| b * s.map_or(1.0, |j| row[j]))
                .sum()
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdpGrid {
    pub features: Vec<String>,
    /// One tuple per grid point, ordered like `features`.
    pub grid_values: Vec<Vec<f64>>,
    pub averaged_predictions: Vec<f64>,
    pub n_background: usize,
}

#[derive(Debug, Clone)]
pub struct PdpOptions {
    /// Evenly spaced points per numeric feature, before knots are added.
    pub n_points: usize,
}

impl Default for PdpOptions {
    fn default() -> Self {
        PdpOptions { n_points: 50 }
    }
}

/// Default grid for one feature: `{0, 1}` for binary columns, otherwise
/// evenly spaced points from min to max merged with the model's knots.
pub fn default_feature_grid(
    model: &dyn Predictor,
    background: &DesignMatrix,
    feature: &str,
    options: &PdpOptions,
) -> Result<Vec<f64>> {
    let j = background
        .column_index(feature)
        .ok_or_else(|| Error::UnknownColumn(feature.to_string()))?;
    if background.kinds[j] == ColumnKind::Binary {
        return Ok(vec![0.0, 1.0]);
    }
    let col = &background.columns[j];
    let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let k = options.n_points.max(1);
    let mut grid: Vec<f64> = if k == 1 || lo == hi {
        vec![lo]
    } else {
        (0..k)
            .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
            .collect()
    };
    grid.extend(model.knots(feature));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

/// Average prediction over all background rows for each grid tuple.
///
/// `grid`, when given, holds explicit values per feature; tuples are their
/// cartesian product with the first feature varying slowest.
pub fn partial_dependence(
    model: &dyn Predictor,
    background: &DesignMatrix,
    features: &[&str],
    grid: Option<Vec<Vec<f64>>>,
    options: &PdpOptions,
) -> Result<PdpGrid> {
    if features.is_empty() || features.len() > 2 {
        return Err(Error::InvalidInput(format!(
            "partial dependence takes one or two features, got {}",
            features.len()
        )));
    }
    if features.len() == 2 && features[0] == features[1] {
        return Err(Error::InvalidInput("features must be distinct".into()));
    }
    if background.nrows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let positions: Vec<usize> = features
        .iter()
        .map(|f| {
            background
                .column_index(f)
                .ok_or_else(|| Error::UnknownColumn(f.to_string()))
        })
        .collect::<Result<_>>()?;

    let axes: Vec<Vec<f64>> = match grid {
        Some(g) => {
            if g.len() != features.len() || g.iter().any(Vec::is_empty) {
                return Err(Error::InvalidInput(
                    "explicit grid needs a non-empty value list per feature".into(),
                ));
            }
            g
        }
        None => features
            .iter()
            .map(|f| default_feature_grid(model, background, f, options))
            .collect::<Result<_>>()?,
    };
    let tuples: Vec<Vec<f64>> = match axes.as_slice() {
        [a] => a.iter().map(|&v| vec![v]).collect(),
        [a, b] => a
            .iter()
            .flat_map(|&u| b.iter().map(move |&v| vec![u, v]))
            .collect(),
        _ => unreachable!(),
    };

    let f = model.bind(&background.column_names)?;
    let rows = background.rows();
    let n = rows.len();
    let averaged_predictions = tuples
        .par_iter()
        .map(|tuple| {
            let mut buf = vec![0.0; background.ncols()];
            let mut sum = 0.0;
            for row in &rows {
                buf.copy_from_slice(row);
                for (&j, &v) in positions.iter().zip(tuple) {
                    buf[j] = v;
                }
                sum += f(&buf);
            }
            sum / n as f64
        })
        .collect();

    Ok(PdpGrid {
        features: features.iter().map(|s| s.to_string()).collect(),
        grid_values: tuples,
        averaged_predictions,
        n_background: n,
    })
}
