//! The skill-score observation database: loading, validation, descriptive
//! statistics and horizon partitioning.
//!
//! Each row is one skill score extracted from a published study together with
//! the ten explanatory factors recorded for it. Files are delimited text with a
//! header row; header names default to the canonical variable names
//! (`SS`, `Horizon`, `ResMin`, ...) and may be remapped through
//! [`LoadOptions::column_map`].

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical header names in the order they are written back out.
pub const CANONICAL_COLUMNS: [&str; 14] = [
    "SS",
    "CZ",
    "Horizon",
    "InputHist",
    "InputMete",
    "InputNWP",
    "InputST",
    "ModClass",
    "Reference",
    "ResMin",
    "TestLength",
    "TrainLength",
    "Type",
    "Year",
];

/// Variables that [`summarize`] accepts (numeric and dummy columns).
pub const SUMMARY_VARIABLES: [&str; 10] = [
    "Horizon",
    "InputHist",
    "InputMete",
    "InputNWP",
    "InputST",
    "ResMin",
    "SS",
    "TestLength",
    "TrainLength",
    "Year",
];

const CATEGORICAL_COLUMNS: [&str; 4] = ["CZ", "ModClass", "Reference", "Type"];

/// Observed ranges of the published database; values outside only warn.
const SOFT_RANGES: [(&str, f64, f64); 6] = [
    ("SS", -94.61, 96.10),
    ("Horizon", 0.17, 4320.0),
    ("ResMin", 0.02, 360.0),
    ("TestLength", 1.0, 1460.0),
    ("TrainLength", 0.0, 7305.0),
    ("Year", 2006.0, 2022.0),
];

fn normalize_label(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// First-level Köppen-Geiger climate zone; `N` marks an unknown location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClimateZone {
    A,
    B,
    C,
    D,
    E,
    N,
}

impl ClimateZone {
    pub const ALL: [ClimateZone; 6] = [
        ClimateZone::A,
        ClimateZone::B,
        ClimateZone::C,
        ClimateZone::D,
        ClimateZone::E,
        ClimateZone::N,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ClimateZone::A => "A",
            ClimateZone::B => "B",
            ClimateZone::C => "C",
            ClimateZone::D => "D",
            ClimateZone::E => "E",
            ClimateZone::N => "N",
        }
    }
}

impl FromStr for ClimateZone {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let key = normalize_label(s);
        let key = key.strip_prefix("cz").unwrap_or(&key);
        Ok(match key {
            "a" => ClimateZone::A,
            "b" => ClimateZone::B,
            "c" => ClimateZone::C,
            "d" => ClimateZone::D,
            "e" => ClimateZone::E,
            "n" | "na" => ClimateZone::N,
            _ => return Err(format!("unknown climate zone `{s}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelClass {
    TimeSeries,
    Regression,
    Nwp,
    MachineLearning,
    ImageBased,
    Ensemble,
    Hybrid,
    EnsembleHybrid,
}

impl ModelClass {
    pub const ALL: [ModelClass; 8] = [
        ModelClass::TimeSeries,
        ModelClass::Regression,
        ModelClass::Nwp,
        ModelClass::MachineLearning,
        ModelClass::ImageBased,
        ModelClass::Ensemble,
        ModelClass::Hybrid,
        ModelClass::EnsembleHybrid,
    ];

    /// Short label used in file output and in encoded column names.
    pub fn label(self) -> &'static str {
        match self {
            ModelClass::TimeSeries => "TS",
            ModelClass::Regression => "Reg",
            ModelClass::Nwp => "NWP",
            ModelClass::MachineLearning => "ML",
            ModelClass::ImageBased => "ImageBased",
            ModelClass::Ensemble => "Ens",
            ModelClass::Hybrid => "Hybrid",
            ModelClass::EnsembleHybrid => "Ens_Hyb",
        }
    }
}

impl FromStr for ModelClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let key = normalize_label(s);
        let key = key.strip_prefix("modclass").unwrap_or(&key);
        Ok(match key {
            "ts" | "timeseries" => ModelClass::TimeSeries,
            "reg" | "regression" => ModelClass::Regression,
            "nwp" => ModelClass::Nwp,
            "ml" | "machinelearning" => ModelClass::MachineLearning,
            "imagebased" | "image" => ModelClass::ImageBased,
            "ens" | "ensemble" => ModelClass::Ensemble,
            "hybrid" | "hyb" => ModelClass::Hybrid,
            "enshyb" | "enshybrid" | "ensemblehybrid" => ModelClass::EnsembleHybrid,
            _ => return Err(format!("unknown model class `{s}`")),
        })
    }
}

/// Reference model the skill score was computed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReferenceModel {
    Persistence,
    SmartPersistence,
    ConvexCombination,
}

impl ReferenceModel {
    pub const ALL: [ReferenceModel; 3] = [
        ReferenceModel::Persistence,
        ReferenceModel::SmartPersistence,
        ReferenceModel::ConvexCombination,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ReferenceModel::Persistence => "Persistence",
            ReferenceModel::SmartPersistence => "SP",
            ReferenceModel::ConvexCombination => "CP",
        }
    }
}

impl FromStr for ReferenceModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let key = normalize_label(s);
        let key = key.strip_prefix("reference").unwrap_or(&key);
        Ok(match key {
            "persistence" | "p" => ReferenceModel::Persistence,
            "sp" | "smartpersistence" => ReferenceModel::SmartPersistence,
            "cp" | "pc" | "convexcombination" => ReferenceModel::ConvexCombination,
            _ => return Err(format!("unknown reference model `{s}`")),
        })
    }
}

/// Forecast target: PV output or the solar resource itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ForecastType {
    Pv,
    Sources,
}

impl ForecastType {
    pub const ALL: [ForecastType; 2] = [ForecastType::Pv, ForecastType::Sources];

    pub fn label(self) -> &'static str {
        match self {
            ForecastType::Pv => "PV",
            ForecastType::Sources => "Sources",
        }
    }
}

impl FromStr for ForecastType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let key = normalize_label(s);
        let key = key.strip_prefix("type").unwrap_or(&key);
        Ok(match key {
            "pv" | "pvoutput" | "power" => ForecastType::Pv,
            "sources" | "source" | "resource" | "solarresource" | "irradiance" => {
                ForecastType::Sources
            }
            _ => return Err(format!("unknown forecast type `{s}`")),
        })
    }
}

/// One skill score and its explanatory factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub skill_score_pct: f64,
    pub horizon_min: f64,
    pub res_min: f64,
    pub test_length_days: f64,
    pub train_length_days: f64,
    pub year: i32,
    pub climate_zone: ClimateZone,
    pub model_class: ModelClass,
    pub reference_model: ReferenceModel,
    pub forecast_type: ForecastType,
    pub input_hist: bool,
    pub input_mete: bool,
    pub input_nwp: bool,
    pub input_st: bool,
}

impl ObservationRecord {
    /// Value of a numeric or dummy variable by canonical name.
    pub fn numeric(&self, variable: &str) -> Option<f64> {
        let b = |v: bool| if v { 1.0 } else { 0.0 };
        Some(match variable {
            "SS" => self.skill_score_pct,
            "Horizon" => self.horizon_min,
            "ResMin" => self.res_min,
            "TestLength" => self.test_length_days,
            "TrainLength" => self.train_length_days,
            "Year" => f64::from(self.year),
            "InputHist" => b(self.input_hist),
            "InputMete" => b(self.input_mete),
            "InputNWP" => b(self.input_nwp),
            "InputST" => b(self.input_st),
            _ => return None,
        })
    }
}

/// An ordered, validated collection of observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<ObservationRecord>,
    pub source_path: String,
}

impl Dataset {
    pub fn new(records: Vec<ObservationRecord>, source_path: impl Into<String>) -> Self {
        Dataset {
            records,
            source_path: source_path.into(),
        }
    }

    pub fn row_count(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Extract a numeric or dummy column by name (case-insensitive).
    pub fn numeric_column(&self, variable: &str) -> Result<Vec<f64>> {
        let canonical = canonical_name(variable)
            .ok_or_else(|| Error::UnknownColumn(variable.to_string()))?;
        if CATEGORICAL_COLUMNS.contains(&canonical) {
            return Err(Error::CategoricalColumn(canonical.to_string()));
        }
        Ok(self
            .records
            .iter()
            .map(|r| r.numeric(canonical).expect("canonical numeric column"))
            .collect())
    }

    fn filtered(&self, keep: impl Fn(&ObservationRecord) -> bool) -> Dataset {
        Dataset {
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
            source_path: self.source_path.clone(),
        }
    }
}

/// Resolve a user-supplied variable name to its canonical spelling.
pub fn canonical_name(name: &str) -> Option<&'static str> {
    let key = normalize_label(name);
    CANONICAL_COLUMNS
        .iter()
        .copied()
        .find(|c| normalize_label(c) == key)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Severity {
    Warning,
    Rejected,
}

/// A line-numbered message produced while loading. Line 1 is the header.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub line: u64,
    pub column: Option<String>,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Rejected => "rejected",
        };
        match &self.column {
            Some(c) => write!(f, "line {}: {tag}: column {c}: {}", self.line, self.message),
            None => write!(f, "line {}: {tag}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub delimiter: u8,
    /// Canonical name -> header name used in the file.
    pub column_map: HashMap<String, String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            delimiter: b',',
            column_map: HashMap::new(),
        }
    }
}

impl LoadOptions {
    /// Parse `SS=skill,CZ=climate` style mappings.
    pub fn parse_column_map(spec: &str) -> Result<HashMap<String, String>> {
        let mut map = HashMap::new();
        for pair in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (canon, header) = pair.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("column mapping `{pair}` is not NAME=HEADER"))
            })?;
            let canon = canonical_name(canon.trim())
                .ok_or_else(|| Error::UnknownColumn(canon.trim().to_string()))?;
            map.insert(canon.to_string(), header.trim().to_string());
        }
        Ok(map)
    }
}

#[derive(Debug, Clone)]
pub struct LoadReport {
    pub dataset: Dataset,
    pub diagnostics: Vec<Diagnostic>,
}

impl LoadReport {
    pub fn rejected(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Rejected)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Warning)
    }
}

/// Load and validate a database file.
pub fn load_database(path: impl AsRef<Path>, options: &LoadOptions) -> Result<LoadReport> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_from_reader(file, &path.display().to_string(), options)
}

/// Load from any reader; `source` labels the dataset and error messages.
pub fn load_from_reader<R: std::io::Read>(
    reader: R,
    source: &str,
    options: &LoadOptions,
) -> Result<LoadReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();

    let mut index = HashMap::new();
    for canon in CANONICAL_COLUMNS {
        let wanted = options
            .column_map
            .get(canon)
            .map(String::as_str)
            .unwrap_or(canon);
        let pos = headers
            .iter()
            .position(|h| h == wanted)
            .or_else(|| {
                let key = normalize_label(wanted);
                headers.iter().position(|h| normalize_label(h) == key)
            })
            .ok_or_else(|| Error::MissingColumn {
                column: wanted.to_string(),
                path: source.to_string(),
            })?;
        index.insert(canon, pos);
    }

    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(i as u64 + 2);
        let field = |canon: &str| row.get(index[canon]).unwrap_or("");
        match parse_record(&field) {
            Ok(rec) => {
                for (name, lo, hi) in SOFT_RANGES {
                    let v = rec.numeric(name).expect("soft-range column is numeric");
                    if v < lo || v > hi {
                        diagnostics.push(Diagnostic {
                            line,
                            column: Some(name.to_string()),
                            severity: Severity::Warning,
                            message: format!("value {v} outside observed range [{lo}, {hi}]"),
                        });
                    }
                }
                records.push(rec);
            }
            Err((column, message)) => diagnostics.push(Diagnostic {
                line,
                column: Some(column.to_string()),
                severity: Severity::Rejected,
                message,
            }),
        }
    }

    for d in &diagnostics {
        log::debug!("{source}: {d}");
    }
    if records.is_empty() {
        return Err(Error::NoValidRows {
            path: source.to_string(),
            rejected: diagnostics
                .iter()
                .filter(|d| d.severity == Severity::Rejected)
                .count(),
        });
    }
    Ok(LoadReport {
        dataset: Dataset::new(records, source),
        diagnostics,
    })
}

type FieldError = (&'static str, String);

fn parse_number(name: &'static str, raw: &str) -> std::result::Result<f64, FieldError> {
    let v: f64 = raw
        .parse()
        .map_err(|_| (name, format!("cannot parse `{raw}` as a number")))?;
    if !v.is_finite() {
        return Err((name, format!("non-finite value `{raw}`")));
    }
    Ok(v)
}

fn parse_dummy(name: &'static str, raw: &str) -> std::result::Result<bool, FieldError> {
    match raw.parse::<f64>() {
        Ok(v) if v == 0.0 => Ok(false),
        Ok(v) if v == 1.0 => Ok(true),
        _ => Err((name, format!("dummy value `{raw}` is not 0 or 1"))),
    }
}

fn parse_level<T: FromStr<Err = String>>(
    name: &'static str,
    raw: &str,
) -> std::result::Result<T, FieldError> {
    raw.parse().map_err(|e| (name, e))
}

fn parse_record<'a>(
    field: &impl Fn(&str) -> &'a str,
) -> std::result::Result<ObservationRecord, FieldError> {
    let ss = parse_number("SS", field("SS"))?;
    if ss > 100.0 {
        return Err(("SS", format!("skill score {ss} exceeds 100")));
    }
    let horizon = parse_number("Horizon", field("Horizon"))?;
    if horizon <= 0.0 {
        return Err(("Horizon", format!("horizon {horizon} must be positive")));
    }
    let res = parse_number("ResMin", field("ResMin"))?;
    if res <= 0.0 {
        return Err(("ResMin", format!("resolution {res} must be positive")));
    }
    let test = parse_number("TestLength", field("TestLength"))?;
    if test < 1.0 {
        return Err(("TestLength", format!("test length {test} is below 1 day")));
    }
    let train = parse_number("TrainLength", field("TrainLength"))?;
    if train < 0.0 {
        return Err(("TrainLength", format!("train length {train} is negative")));
    }
    let year = parse_number("Year", field("Year"))?;
    if year.fract() != 0.0 || year.abs() > f64::from(i32::MAX) {
        return Err(("Year", format!("year `{}` is not an integer", field("Year"))));
    }

    Ok(ObservationRecord {
        skill_score_pct: ss,
        horizon_min: horizon,
        res_min: res,
        test_length_days: test,
        train_length_days: train,
        year: year as i32,
        climate_zone: parse_level("CZ", field("CZ"))?,
        model_class: parse_level("ModClass", field("ModClass"))?,
        reference_model: parse_level("Reference", field("Reference"))?,
        forecast_type: parse_level("Type", field("Type"))?,
        input_hist: parse_dummy("InputHist", field("InputHist"))?,
        input_mete: parse_dummy("InputMete", field("InputMete"))?,
        input_nwp: parse_dummy("InputNWP", field("InputNWP"))?,
        input_st: parse_dummy("InputST", field("InputST"))?,
    })
}

/// Write a dataset with canonical headers; reloading yields identical records.
pub fn write_database<W: std::io::Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CANONICAL_COLUMNS)?;
    let d = |b: bool| if b { "1" } else { "0" };
    for r in &dataset.records {
        w.write_record([
            r.skill_score_pct.to_string().as_str(),
            r.climate_zone.label(),
            r.horizon_min.to_string().as_str(),
            d(r.input_hist),
            d(r.input_mete),
            d(r.input_nwp),
            d(r.input_st),
            r.model_class.label(),
            r.reference_model.label(),
            r.res_min.to_string().as_str(),
            r.test_length_days.to_string().as_str(),
            r.train_length_days.to_string().as_str(),
            r.forecast_type.label(),
            r.year.to_string().as_str(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

/// Descriptive statistics for one variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub variable: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub trimmed_mean: f64,
    pub mad: f64,
    pub min: f64,
    pub max: f64,
    pub range: f64,
    pub skew: f64,
    pub kurtosis: f64,
    pub se: f64,
}

const TRIM_FRACTION: f64 = 0.1;
const MAD_SCALE: f64 = 1.4826;

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Summary statistics of a raw sample.
pub fn summarize_values(variable: &str, values: &[f64]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = values.len();
    let nf = n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let sd = if n > 1 { (m2 / (nf - 1.0)).sqrt() } else { 0.0 };
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let (skew, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (f64::NAN, f64::NAN)
    };

    let median = median_sorted(&sorted);
    let cut = (nf * TRIM_FRACTION).floor() as usize;
    let kept = &sorted[cut..n - cut];
    let trimmed_mean = kept.iter().sum::<f64>() / kept.len() as f64;

    let mut dev: Vec<f64> = values.iter().map(|v| (v - median).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let mad = MAD_SCALE * median_sorted(&dev);

    let (min, max) = (sorted[0], sorted[n - 1]);
    Ok(SummaryStats {
        variable: variable.to_string(),
        n,
        mean,
        sd,
        median,
        trimmed_mean,
        mad,
        min,
        max,
        range: max - min,
        skew,
        kurtosis,
        se: sd / nf.sqrt(),
    })
}

/// Summarize one numeric or dummy column of a dataset.
pub fn summarize(dataset: &Dataset, variable: &str) -> Result<SummaryStats> {
    let values = dataset.numeric_column(variable)?;
    let canonical = canonical_name(variable).expect("validated by numeric_column");
    summarize_values(canonical, &values)
}

/// Forecast-horizon class used to partition the database.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HorizonClass {
    IntraHour,
    IntraDay,
    DayAhead,
}

impl HorizonClass {
    pub const ALL: [HorizonClass; 3] = [
        HorizonClass::IntraHour,
        HorizonClass::IntraDay,
        HorizonClass::DayAhead,
    ];

    pub fn of(horizon_min: f64) -> HorizonClass {
        if horizon_min <= 60.0 {
            HorizonClass::IntraHour
        } else if horizon_min <= 360.0 {
            HorizonClass::IntraDay
        } else {
            HorizonClass::DayAhead
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            HorizonClass::IntraHour => "intra-hour",
            HorizonClass::IntraDay => "intra-day",
            HorizonClass::DayAhead => "day-ahead",
        }
    }
}

impl FromStr for HorizonClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match normalize_label(s).as_str() {
            "intrahour" => Ok(HorizonClass::IntraHour),
            "intraday" => Ok(HorizonClass::IntraDay),
            "dayahead" => Ok(HorizonClass::DayAhead),
            _ => Err(Error::InvalidConfig(format!("unknown horizon class `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HorizonPartitions {
    pub intra_hour: Dataset,
    pub intra_day: Dataset,
    pub day_ahead: Dataset,
}

impl HorizonPartitions {
    pub fn get(&self, class: HorizonClass) -> &Dataset {
        match class {
            HorizonClass::IntraHour => &self.intra_hour,
            HorizonClass::IntraDay => &self.intra_day,
            HorizonClass::DayAhead => &self.day_ahead,
        }
    }
}

/// Split into intra-hour (<= 60 min), intra-day (60, 360] and day-ahead (> 360).
pub fn partition_by_horizon(dataset: &Dataset) -> HorizonPartitions {
    let part = |c: HorizonClass| dataset.filtered(|r| HorizonClass::of(r.horizon_min) == c);
    HorizonPartitions {
        intra_hour: part(HorizonClass::IntraHour),
        intra_day: part(HorizonClass::IntraDay),
        day_ahead: part(HorizonClass::DayAhead),
    }
}
