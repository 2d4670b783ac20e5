//! RMSE-based skill scores against persistence, smart persistence and the
//! convex combination of smart persistence and climatology.
//!
//! Reference forecasts are returned together with the series indices they
//! cover. Indices without a lagged value (no warmup) are left out rather than
//! filled, and smart persistence also leaves out indices where either clear-sky
//! value is zero (night), counting them in `excluded_night`.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::meta_db::ReferenceModel;

/// Values preceding the series, oldest first; used to seed lagged references.
#[derive(Debug, Clone, PartialEq)]
pub struct Warmup {
    pub values: Vec<f64>,
    pub clear_sky: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolarSeries {
    pub values: Vec<f64>,
    pub step_minutes: f64,
    pub clear_sky: Option<Vec<f64>>,
    pub warmup: Option<Warmup>,
}

fn check_values(what: &str, v: &[f64]) -> Result<()> {
    if let Some(bad) = v.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidInput(format!(
            "{what} must be finite and non-negative, found {bad}"
        )));
    }
    Ok(())
}

impl SolarSeries {
    pub fn new(values: Vec<f64>, step_minutes: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("series is empty".into()));
        }
        if !(step_minutes > 0.0) || !step_minutes.is_finite() {
            return Err(Error::InvalidInput(format!(
                "step must be positive, got {step_minutes}"
            )));
        }
        check_values("series values", &values)?;
        Ok(SolarSeries {
            values,
            step_minutes,
            clear_sky: None,
            warmup: None,
        })
    }

    /// Attach an aligned clear-sky series. Zeros are accepted and mark night.
    pub fn with_clear_sky(mut self, clear_sky: Vec<f64>) -> Result<Self> {
        if clear_sky.len() != self.values.len() {
            return Err(Error::LengthMismatch {
                left: self.values.len(),
                right: clear_sky.len(),
            });
        }
        check_values("clear-sky values", &clear_sky)?;
        self.clear_sky = Some(clear_sky);
        Ok(self)
    }

    pub fn with_warmup(mut self, values: Vec<f64>, clear_sky: Option<Vec<f64>>) -> Result<Self> {
        check_values("warmup values", &values)?;
        if let Some(cs) = &clear_sky {
            if cs.len() != values.len() {
                return Err(Error::LengthMismatch {
                    left: values.len(),
                    right: cs.len(),
                });
            }
            check_values("warmup clear-sky values", cs)?;
        }
        self.warmup = Some(Warmup { values, clear_sky });
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Value `h` steps before index `i`, reaching into the warmup if needed.
    fn lagged(&self, i: usize, h: usize) -> Option<f64> {
        if i >= h {
            return Some(self.values[i - h]);
        }
        let w = &self.warmup.as_ref()?.values;
        let back = h - i;
        (back <= w.len()).then(|| w[w.len() - back])
    }

    fn lagged_clear_sky(&self, i: usize, h: usize) -> Option<f64> {
        if i >= h {
            return self.clear_sky.as_ref().map(|c| c[i - h]);
        }
        let w = self.warmup.as_ref()?.clear_sky.as_ref()?;
        let back = h - i;
        (back <= w.len()).then(|| w[w.len() - back])
    }
}

/// Reference forecast aligned to a subset of series indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceForecast {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub excluded_night: usize,
}

impl ReferenceForecast {
    fn empty() -> Self {
        ReferenceForecast {
            indices: Vec::new(),
            values: Vec::new(),
            excluded_night: 0,
        }
    }

    fn push(&mut self, i: usize, v: f64) {
        self.indices.push(i);
        self.values.push(v);
    }
}

/// Root mean squared difference.
pub fn rmse(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    if actual.len() != forecast.len() {
        return Err(Error::LengthMismatch {
            left: actual.len(),
            right: forecast.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::InvalidInput("cannot take RMSE of empty vectors".into()));
    }
    let sse: f64 = actual
        .iter()
        .zip(forecast)
        .map(|(a, f)| (a - f) * (a - f))
        .sum();
    Ok((sse / actual.len() as f64).sqrt())
}

fn check_h(h: usize) -> Result<()> {
    if h == 0 {
        return Err(Error::InvalidInput("horizon must be at least one step".into()));
    }
    Ok(())
}

/// `y_i = x_{i-h}`.
pub fn persistence_forecast(series: &SolarSeries, h: usize) -> Result<ReferenceForecast> {
    check_h(h)?;
    let mut out = ReferenceForecast::empty();
    for i in 0..series.len() {
        if let Some(v) = series.lagged(i, h) {
            out.push(i, v);
        }
    }
    if out.indices.is_empty() {
        return Err(Error::InvalidInput(format!(
            "series of length {} has no value {h} steps back and no warmup",
            series.len()
        )));
    }
    Ok(out)
}

/// `y_i = x_{i-h} * ICS_i / ICS_{i-h}`.
pub fn smart_persistence_forecast(series: &SolarSeries, h: usize) -> Result<ReferenceForecast> {
    check_h(h)?;
    let cs = series.clear_sky.as_ref().ok_or(Error::MissingClearSky)?;
    let mut out = ReferenceForecast::empty();
    for (i, &cs_now) in cs.iter().enumerate() {
        let (Some(x_lag), Some(cs_lag)) = (series.lagged(i, h), series.lagged_clear_sky(i, h))
        else {
            continue;
        };
        if cs_now == 0.0 || cs_lag == 0.0 {
            out.excluded_night += 1;
            continue;
        }
        out.push(i, x_lag * (cs_now / cs_lag));
    }
    if out.indices.is_empty() {
        return Err(Error::InvalidInput(
            "no index has a usable lagged value and daytime clear-sky pair".into(),
        ));
    }
    Ok(out)
}

/// Constant forecast at the series mean.
pub fn climatology_forecast(series: &SolarSeries) -> Result<ReferenceForecast> {
    if series.is_empty() {
        return Err(Error::InvalidInput("series is empty".into()));
    }
    let mean = series.mean();
    Ok(ReferenceForecast {
        indices: (0..series.len()).collect(),
        values: vec![mean; series.len()],
        excluded_night: 0,
    })
}

/// `alpha * SP + (1 - alpha) * mean`. Accepts the closed interval so the
/// endpoint identities can be exercised; scoring uses the open interval.
pub fn cp_forecast(series: &SolarSeries, h: usize, alpha: f64) -> Result<ReferenceForecast> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("alpha {alpha} outside [0, 1]")));
    }
    let mut sp = smart_persistence_forecast(series, h)?;
    let mean = series.mean();
    for v in &mut sp.values {
        *v = alpha * *v + (1.0 - alpha) * mean;
    }
    Ok(sp)
}

fn actual_at(series: &SolarSeries, idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| series.values[i]).collect()
}

const ALPHA_TOL: f64 = 1e-6;
const ALPHA_EDGE: f64 = 1e-6;

/// Alpha minimizing the in-sample CP RMSE, by golden-section search, kept
/// inside `[1e-6, 1 - 1e-6]`.
pub fn optimize_alpha(train: &SolarSeries, h: usize) -> Result<f64> {
    let sp = smart_persistence_forecast(train, h)?;
    let actual = actual_at(train, &sp.indices);
    let mean = train.mean();
    let objective = |a: f64| -> f64 {
        actual
            .iter()
            .zip(&sp.values)
            .map(|(x, s)| {
                let e = x - (a * s + (1.0 - a) * mean);
                e * e
            })
            .sum()
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while hi - lo > ALPHA_TOL {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = objective(d);
        }
    }
    Ok((0.5 * (lo + hi)).clamp(ALPHA_EDGE, 1.0 - ALPHA_EDGE))
}

/// `100 * (1 - a_f / a_r)`.
pub fn skill_score(a_f: f64, a_r: f64) -> Result<f64> {
    if !(a_f >= 0.0) || !a_f.is_finite() {
        return Err(Error::InvalidInput(format!("forecast error {a_f} must be >= 0")));
    }
    if a_r == 0.0 {
        return Err(Error::UndefinedSkill);
    }
    if !(a_r > 0.0) || !a_r.is_finite() {
        return Err(Error::InvalidInput(format!("reference error {a_r} must be > 0")));
    }
    Ok(100.0 * (1.0 - a_f / a_r))
}

/// How the CP weight is chosen when scoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaPolicy<'a> {
    Fixed(f64),
    /// Optimize on the given training series, or on the scored series itself.
    Optimized(Option<&'a SolarSeries>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkillScoreResult {
    pub rmse_forecast: f64,
    pub rmse_reference: f64,
    pub ss_pct: f64,
    pub reference_kind: ReferenceModel,
    pub horizon_steps: usize,
    pub alpha: Option<f64>,
    pub n_scored: usize,
    pub excluded_night: usize,
}

/// Score `forecast` (aligned with `series.values`) against a reference.
pub fn score_forecast(
    series: &SolarSeries,
    forecast: &[f64],
    reference: ReferenceModel,
    h: usize,
    alpha: AlphaPolicy<'_>,
) -> Result<SkillScoreResult> {
    if forecast.len() != series.len() {
        return Err(Error::LengthMismatch {
            left: series.len(),
            right: forecast.len(),
        });
    }
    let (reference_fc, alpha_used) = match reference {
        ReferenceModel::Persistence => (persistence_forecast(series, h)?, None),
        ReferenceModel::SmartPersistence => (smart_persistence_forecast(series, h)?, None),
        ReferenceModel::ConvexCombination => {
            let a = match alpha {
                AlphaPolicy::Fixed(a) => {
                    if !(a > 0.0 && a < 1.0) {
                        return Err(Error::InvalidInput(format!(
                            "alpha {a} must lie strictly between 0 and 1"
                        )));
                    }
                    a
                }
                AlphaPolicy::Optimized(train) => optimize_alpha(train.unwrap_or(series), h)?,
            };
            (cp_forecast(series, h, a)?, Some(a))
        }
    };
    let actual = actual_at(series, &reference_fc.indices);
    let fc: Vec<f64> = reference_fc.indices.iter().map(|&i| forecast[i]).collect();
    let a_f = rmse(&actual, &fc)?;
    let a_r = rmse(&actual, &reference_fc.values)?;
    Ok(SkillScoreResult {
        rmse_forecast: a_f,
        rmse_reference: a_r,
        ss_pct: skill_score(a_f, a_r)?,
        reference_kind: reference,
        horizon_steps: h,
        alpha: alpha_used,
        n_scored: actual.len(),
        excluded_night: reference_fc.excluded_night,
    })
}

/// A time series read from delimited text.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFile {
    pub timestamps: Vec<String>,
    pub values: Vec<f64>,
    pub clear_sky: Option<Vec<f64>>,
    pub step_minutes: f64,
}

impl SeriesFile {
    pub fn into_series(self) -> Result<SolarSeries> {
        let s = SolarSeries::new(self.values, self.step_minutes)?;
        match self.clear_sky {
            Some(cs) => s.with_clear_sky(cs),
            None => Ok(s),
        }
    }
}

fn parse_minutes(ts: &str) -> Option<f64> {
    if let Ok(v) = ts.parse::<f64>() {
        return Some(v);
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(ts) {
        return Some(dt.timestamp() as f64 / 60.0);
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = chrono::NaiveDateTime::parse_from_str(ts, fmt) {
            return Some(dt.and_utc().timestamp() as f64 / 60.0);
        }
    }
    None
}

/// Read `timestamp,value[,clear_sky]` rows. A header row is detected by a
/// non-numeric value field. Timestamps are minutes or ISO-8601 date-times and
/// must be uniformly spaced.
pub fn read_series(path: impl AsRef<Path>, delimiter: u8) -> Result<SeriesFile> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)?;
    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    let mut clear_sky: Vec<f64> = Vec::new();
    let mut width = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 1;
        if rec.len() < 2 || rec.len() > 3 {
            return Err(Error::InvalidInput(format!(
                "{}: line {line}: expected 2 or 3 fields, found {}",
                path.display(),
                rec.len()
            )));
        }
        let v = rec[1].parse::<f64>();
        if i == 0 && v.is_err() {
            continue;
        }
        let v = v.map_err(|_| {
            Error::InvalidInput(format!("{}: line {line}: bad value `{}`", path.display(), &rec[1]))
        })?;
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(Error::InvalidInput(format!(
                    "{}: line {line}: inconsistent column count",
                    path.display()
                )))
            }
            _ => {}
        }
        timestamps.push(rec[0].to_string());
        values.push(v);
        if rec.len() == 3 {
            clear_sky.push(rec[2].parse::<f64>().map_err(|_| {
                Error::InvalidInput(format!(
                    "{}: line {line}: bad clear-sky value `{}`",
                    path.display(),
                    &rec[2]
                ))
            })?);
        }
    }
    if values.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no data rows", path.display())));
    }

    let minutes: Vec<f64> = timestamps
        .iter()
        .map(|t| {
            parse_minutes(t).ok_or_else(|| {
                Error::InvalidInput(format!("{}: cannot parse timestamp `{t}`", path.display()))
            })
        })
        .collect::<Result<_>>()?;
    let step_minutes = if minutes.len() > 1 {
        let step = minutes[1] - minutes[0];
        if !(step > 0.0) {
            return Err(Error::InvalidInput(format!(
                "{}: timestamps must increase",
                path.display()
            )));
        }
        for w in minutes.windows(2) {
            if ((w[1] - w[0]) - step).abs() > 1e-6 * step {
                return Err(Error::InvalidInput(format!(
                    "{}: timestamps are not uniformly spaced",
                    path.display()
                )));
            }
        }
        step
    } else {
        1.0
    };
    Ok(SeriesFile {
        timestamps,
        values,
        clear_sky: (!clear_sky.is_empty()).then_some(clear_sky),
        step_minutes,
    })
}
