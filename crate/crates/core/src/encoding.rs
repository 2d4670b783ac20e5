//! Numeric design matrices with baseline-referenced dummy coding.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meta_db::{ClimateZone, Dataset, ForecastType, ModelClass, ReferenceModel};

pub const INTERCEPT: &str = "Constant";

/// Slope columns produced by [`build_design_matrix`], in order.
pub const ENCODED_COLUMNS: [&str; 24] = [
    "CZA",
    "CZB",
    "CZD",
    "CZE",
    "CZN",
    "Horizon",
    "InputHist",
    "InputMete",
    "InputNWP",
    "InputST",
    "ModClassEns",
    "ModClassEns_Hyb",
    "ModClassHybrid",
    "ModClassImageBased",
    "ModClassML",
    "ModClassNWP",
    "ModClassReg",
    "ReferencePersistence",
    "ReferenceSP",
    "ResMin",
    "TestLength",
    "TrainLength",
    "TypeSources",
    "Year",
];

/// Relative residual norm below which a column counts as collinear.
pub const COLLINEAR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Intercept,
    Numeric,
    /// 0/1 column, either a dummy variable or a categorical indicator.
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedColumn {
    pub name: String,
    pub reason: String,
}

/// Column-major regressor matrix plus response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub column_names: Vec<String>,
    pub kinds: Vec<ColumnKind>,
    pub columns: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub baselines: BTreeMap<String, String>,
    pub dropped_columns: Vec<DroppedColumn>,
}

impl DesignMatrix {
    /// Build from explicit columns. Kinds are inferred: all-ones named
    /// [`INTERCEPT`] is the intercept, 0/1 columns are binary.
    pub fn from_columns(
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        y: Vec<f64>,
    ) -> Result<DesignMatrix> {
        if names.len() != columns.len() {
            return Err(Error::LengthMismatch {
                left: names.len(),
                right: columns.len(),
            });
        }
        for c in &columns {
            if c.len() != y.len() {
                return Err(Error::LengthMismatch {
                    left: c.len(),
                    right: y.len(),
                });
            }
        }
        let kinds = names
            .iter()
            .zip(&columns)
            .map(|(n, c)| infer_kind(n, c))
            .collect();
        Ok(DesignMatrix {
            column_names: names,
            kinds,
            columns,
            y,
            baselines: BTreeMap::new(),
            dropped_columns: Vec::new(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.y.len()
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn has_intercept(&self) -> bool {
        self.kinds.contains(&ColumnKind::Intercept)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Row-major copy of the regressors.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.nrows()).map(|i| self.row(i)).collect()
    }

    /// The same matrix without its intercept column.
    pub fn without_intercept(&self) -> DesignMatrix {
        let keep: Vec<usize> = (0..self.ncols())
            .filter(|&j| self.kinds[j] != ColumnKind::Intercept)
            .collect();
        self.select_columns(&keep)
    }

    pub fn select_columns(&self, keep: &[usize]) -> DesignMatrix {
        DesignMatrix {
            column_names: keep.iter().map(|&j| self.column_names[j].clone()).collect(),
            kinds: keep.iter().map(|&j| self.kinds[j]).collect(),
            columns: keep.iter().map(|&j| self.columns[j].clone()).collect(),
            y: self.y.clone(),
            baselines: self.baselines.clone(),
            dropped_columns: self.dropped_columns.clone(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> DesignMatrix {
        DesignMatrix {
            column_names: self.column_names.clone(),
            kinds: self.kinds.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&i| c[i]).collect())
                .collect(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            baselines: self.baselines.clone(),
            dropped_columns: self.dropped_columns.clone(),
        }
    }

    /// Delimited-text export: `y` followed by every column.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["y".to_string()];
        header.extend(self.column_names.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.nrows() {
            let mut rec = vec![self.y[i].to_string()];
            rec.extend(self.columns.iter().map(|c| c[i].to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<writer>", e))?;
        Ok(())
    }
}

fn infer_kind(name: &str, col: &[f64]) -> ColumnKind {
    if name == INTERCEPT && col.iter().all(|&v| v == 1.0) {
        ColumnKind::Intercept
    } else if col.iter().all(|&v| v == 0.0 || v == 1.0) {
        ColumnKind::Binary
    } else {
        ColumnKind::Numeric
    }
}

fn indicator(name: String, values: Vec<f64>) -> (String, ColumnKind, Vec<f64>) {
    (name, ColumnKind::Binary, values)
}

/// Encode a dataset. Categorical baselines: climate zone C, model class TS,
/// reference CP, forecast type PV.
pub fn build_design_matrix(dataset: &Dataset, include_intercept: bool) -> Result<DesignMatrix> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let recs = &dataset.records;
    let num = |f: fn(&crate::meta_db::ObservationRecord) -> f64| -> Vec<f64> {
        recs.iter().map(f).collect()
    };
    let flag = |f: fn(&crate::meta_db::ObservationRecord) -> bool| -> Vec<f64> {
        recs.iter().map(|r| if f(r) { 1.0 } else { 0.0 }).collect()
    };

    let mut cols: Vec<(String, ColumnKind, Vec<f64>)> = Vec::new();
    if include_intercept {
        cols.push((INTERCEPT.into(), ColumnKind::Intercept, vec![1.0; recs.len()]));
    }
    for cz in ClimateZone::ALL.into_iter().filter(|&c| c != ClimateZone::C) {
        cols.push(indicator(
            format!("CZ{}", cz.label()),
            recs.iter()
                .map(|r| f64::from(u8::from(r.climate_zone == cz)))
                .collect(),
        ));
    }
    cols.push(("Horizon".into(), ColumnKind::Numeric, num(|r| r.horizon_min)));
    cols.push(("InputHist".into(), ColumnKind::Binary, flag(|r| r.input_hist)));
    cols.push(("InputMete".into(), ColumnKind::Binary, flag(|r| r.input_mete)));
    cols.push(("InputNWP".into(), ColumnKind::Binary, flag(|r| r.input_nwp)));
    cols.push(("InputST".into(), ColumnKind::Binary, flag(|r| r.input_st)));

    let mut classes: Vec<ModelClass> = ModelClass::ALL
        .into_iter()
        .filter(|&m| m != ModelClass::TimeSeries)
        .collect();
    classes.sort_by_key(|m| m.label());
    for mc in classes {
        cols.push(indicator(
            format!("ModClass{}", mc.label()),
            recs.iter()
                .map(|r| f64::from(u8::from(r.model_class == mc)))
                .collect(),
        ));
    }
    for rm in [ReferenceModel::Persistence, ReferenceModel::SmartPersistence] {
        cols.push(indicator(
            format!("Reference{}", rm.label()),
            recs.iter()
                .map(|r| f64::from(u8::from(r.reference_model == rm)))
                .collect(),
        ));
    }
    cols.push(("ResMin".into(), ColumnKind::Numeric, num(|r| r.res_min)));
    cols.push(("TestLength".into(), ColumnKind::Numeric, num(|r| r.test_length_days)));
    cols.push(("TrainLength".into(), ColumnKind::Numeric, num(|r| r.train_length_days)));
    cols.push(indicator(
        format!("Type{}", ForecastType::Sources.label()),
        recs.iter()
            .map(|r| f64::from(u8::from(r.forecast_type == ForecastType::Sources)))
            .collect(),
    ));
    cols.push(("Year".into(), ColumnKind::Numeric, num(|r| f64::from(r.year))));

    let mut baselines = BTreeMap::new();
    baselines.insert("CZ".to_string(), ClimateZone::C.label().to_string());
    baselines.insert("ModClass".to_string(), ModelClass::TimeSeries.label().to_string());
    baselines.insert(
        "Reference".to_string(),
        ReferenceModel::ConvexCombination.label().to_string(),
    );
    baselines.insert("Type".to_string(), ForecastType::Pv.label().to_string());

    let mut m = DesignMatrix {
        column_names: Vec::with_capacity(cols.len()),
        kinds: Vec::with_capacity(cols.len()),
        columns: Vec::with_capacity(cols.len()),
        y: recs.iter().map(|r| r.skill_score_pct).collect(),
        baselines,
        dropped_columns: Vec::new(),
    };
    for (name, kind, values) in cols {
        m.column_names.push(name);
        m.kinds.push(kind);
        m.columns.push(values);
    }
    Ok(m)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Remove zero-variance columns (the intercept excepted) and columns whose
/// residual after projection on the retained columns to their left is below
/// [`COLLINEAR_TOL`] times their own norm.
pub fn drop_degenerate_columns(matrix: &DesignMatrix) -> Result<DesignMatrix> {
    let mut keep = Vec::new();
    let mut dropped = matrix.dropped_columns.clone();
    // orthonormal basis of retained columns, two-pass Gram-Schmidt
    let mut basis: Vec<Vec<f64>> = Vec::new();

    for (j, col) in matrix.columns.iter().enumerate() {
        let name = &matrix.column_names[j];
        let is_intercept = matrix.kinds[j] == ColumnKind::Intercept;
        if !is_intercept && col.iter().all(|&v| v == col[0]) {
            dropped.push(DroppedColumn {
                name: name.clone(),
                reason: "zero variance".into(),
            });
            continue;
        }
        let norm = dot(col, col).sqrt();
        let mut r = col.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &r);
                r.iter_mut().zip(q).for_each(|(ri, qi)| *ri -= c * qi);
            }
        }
        let rnorm = dot(&r, &r).sqrt();
        if norm == 0.0 || rnorm < COLLINEAR_TOL * norm {
            dropped.push(DroppedColumn {
                name: name.clone(),
                reason: "collinear".into(),
            });
            continue;
        }
        r.iter_mut().for_each(|v| *v /= rnorm);
        basis.push(r);
        keep.push(j);
    }

    if !keep
        .iter()
        .any(|&j| matrix.kinds[j] != ColumnKind::Intercept)
    {
        return Err(Error::AllColumnsDegenerate);
    }
    let mut out = matrix.select_columns(&keep);
    out.dropped_columns = dropped;
    Ok(out)
}
