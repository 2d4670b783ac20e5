//! The `skillmeta` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::encoding::{build_design_matrix, DesignMatrix};
use crate::error::{Error, Result};
use crate::linreg::{ols_fit, OlsFit};
use crate::mars::{cross_validate, default_grid, fit_mars, MarsConfig, MarsModel};
use crate::meta_db::{
    load_database, partition_by_horizon, summarize, write_database, Dataset, HorizonClass,
    LoadOptions, ReferenceModel, SUMMARY_VARIABLES,
};
use crate::pdp::{partial_dependence, PdpOptions};
use crate::report::{
    emit_pdp_artifacts, fmt_sig, format_regression_columns, format_summary_table, stars,
    write_atomic, RunManifest,
};
use crate::skill::{read_series, score_forecast, AlphaPolicy};

pub const DEFAULT_SEED: u64 = 20220101;

#[derive(Debug, Parser)]
#[command(name = "skillmeta", version, about = "Solar forecast skill scores and meta-regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a database file and optionally write a cleaned copy.
    Ingest(IngestArgs),
    /// Descriptive statistics of numeric and dummy columns.
    Summary(SummaryArgs),
    /// Per-horizon OLS regressions of SS on the encoded factors.
    Ols(OlsArgs),
    /// Fit a MARS model of SS.
    Mars(MarsArgs),
    /// Partial dependence of a MARS model on one or two variables.
    Pdp(PdpArgs),
    /// Cross-validated search over MARS degree and term budget.
    Cv(CvArgs),
    /// Skill score of a forecast against a reference model.
    Ss(SsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Partition {
    IntraHour,
    IntraDay,
    DayAhead,
    All,
}

impl Partition {
    fn class(self) -> Option<HorizonClass> {
        match self {
            Partition::IntraHour => Some(HorizonClass::IntraHour),
            Partition::IntraDay => Some(HorizonClass::IntraDay),
            Partition::DayAhead => Some(HorizonClass::DayAhead),
            Partition::All => None,
        }
    }

    fn label(self) -> &'static str {
        self.class().map_or("all", HorizonClass::label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Reference {
    Persistence,
    Sp,
    Cp,
}

impl From<Reference> for ReferenceModel {
    fn from(r: Reference) -> Self {
        match r {
            Reference::Persistence => ReferenceModel::Persistence,
            Reference::Sp => ReferenceModel::SmartPersistence,
            Reference::Cp => ReferenceModel::ConvexCombination,
        }
    }
}

#[derive(Debug, Args)]
struct DbArgs {
    /// Database file (CSV).
    #[arg(long)]
    input: PathBuf,
    /// Field delimiter.
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Header overrides, e.g. `SS=skill,CZ=climate`.
    #[arg(long)]
    column_map: Option<String>,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Artifact path; a manifest is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Digits in printed numbers (decimal places for `ols`, significant digits otherwise).
    #[arg(long)]
    precision: Option<usize>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    db: DbArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct SummaryArgs {
    #[command(flatten)]
    db: DbArgs,
    /// Variable to summarize, or `all`.
    #[arg(long, default_value = "all")]
    var: String,
    #[arg(long, value_enum, default_value_t = Partition::All)]
    partition: Partition,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct OlsArgs {
    #[command(flatten)]
    db: DbArgs,
    /// `all` fits the three horizon classes side by side.
    #[arg(long, value_enum, default_value_t = Partition::All)]
    partition: Partition,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct MarsOpts {
    #[arg(long, default_value_t = 2)]
    max_degree: usize,
    /// Basis-term budget for the forward pass, intercept excluded.
    #[arg(long, default_value_t = 34)]
    max_terms: usize,
    #[arg(long, default_value_t = 0.001)]
    min_rsq_gain: f64,
    /// GCV cost per knot (default 3 with interactions, 2 without).
    #[arg(long)]
    penalty: Option<f64>,
    /// Restrict the rows used, `all` for the whole database.
    #[arg(long, value_enum, default_value_t = Partition::All)]
    partition: Partition,
}

impl MarsOpts {
    fn config(&self) -> MarsConfig {
        MarsConfig {
            max_degree: self.max_degree,
            max_terms: self.max_terms,
            min_rsq_gain: self.min_rsq_gain,
            gcv_penalty_per_knot: self.penalty,
            ..MarsConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct MarsArgs {
    #[command(flatten)]
    db: DbArgs,
    #[command(flatten)]
    mars: MarsOpts,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct PdpArgs {
    #[command(flatten)]
    db: DbArgs,
    /// One variable, or two separated by a comma.
    #[arg(long)]
    var: String,
    /// Saved model (JSON from `mars --out`); fitted from the options otherwise.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Evenly spaced grid points for numeric variables.
    #[arg(long, default_value_t = 50)]
    points: usize,
    #[command(flatten)]
    mars: MarsOpts,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    db: DbArgs,
    #[arg(long, default_value_t = 10)]
    cv_folds: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0.001)]
    min_rsq_gain: f64,
    #[arg(long, value_enum, default_value_t = Partition::All)]
    partition: Partition,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct SsArgs {
    /// Observations: `timestamp,value[,clear_sky]`.
    #[arg(long)]
    series: PathBuf,
    /// Forecast aligned with the series, same layout.
    #[arg(long)]
    forecast: PathBuf,
    #[arg(long, value_enum)]
    reference: Reference,
    /// Forecast horizon in time steps.
    #[arg(long)]
    h: usize,
    /// Fixed CP weight; optimized when omitted.
    #[arg(long)]
    alpha: Option<f64>,
    /// Series used to optimize the CP weight (the scored series if omitted).
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    #[command(flatten)]
    out: OutArgs,
}

/// Parse `args` (program name first), run, and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

struct Run {
    subcommand: &'static str,
    started: Instant,
    started_at: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    seed: Option<u64>,
    config: serde_json::Value,
}

impl Run {
    fn new(subcommand: &'static str) -> Self {
        Run {
            subcommand,
            started: Instant::now(),
            started_at: chrono::Utc::now().to_rfc3339(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            config: serde_json::Value::Null,
        }
    }

    fn input(&mut self, p: &Path) {
        self.inputs.push(p.display().to_string());
    }

    fn write(&mut self, p: &Path, bytes: &[u8]) -> Result<()> {
        write_atomic(p, bytes)?;
        self.outputs.push(p.display().to_string());
        Ok(())
    }

    /// Manifest next to the artifact, or on stderr when nothing was written.
    fn finish(self, artifact: Option<&Path>) -> Result<()> {
        let manifest = RunManifest {
            subcommand: self.subcommand.to_string(),
            inputs: self.inputs,
            config: self.config,
            seed: self.seed,
            outputs: self.outputs,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: self.started_at,
            duration_secs: self.started.elapsed().as_secs_f64(),
        };
        match artifact {
            Some(p) => {
                let body = serde_json::to_string_pretty(&manifest)?;
                write_atomic(&RunManifest::manifest_path(p), body.as_bytes())
            }
            None => {
                eprintln!("{}", serde_json::to_string(&manifest)?);
                Ok(())
            }
        }
    }
}

fn delimiter_byte(c: char) -> Result<u8> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| Error::InvalidConfig(format!("delimiter `{c}` must be a single ASCII character")))
}

fn load(db: &DbArgs, run: &mut Run) -> Result<crate::meta_db::LoadReport> {
    let options = LoadOptions {
        delimiter: delimiter_byte(db.delimiter)?,
        column_map: match &db.column_map {
            Some(spec) => LoadOptions::parse_column_map(spec)?,
            None => Default::default(),
        },
    };
    run.input(&db.input);
    let report = load_database(&db.input, &options)?;
    for d in &report.diagnostics {
        log::warn!("{d}");
    }
    Ok(report)
}

fn load_partition(db: &DbArgs, partition: Partition, run: &mut Run) -> Result<Dataset> {
    let ds = load(db, run)?.dataset;
    let ds = match partition.class() {
        None => ds,
        Some(c) => partition_by_horizon(&ds).get(c).clone(),
    };
    if ds.is_empty() {
        return Err(Error::EmptyPartition(partition.label().to_string()));
    }
    Ok(ds)
}

fn execute(command: Command) -> Result<String> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Summary(a) => summary(a),
        Command::Ols(a) => ols(a),
        Command::Mars(a) => mars(a),
        Command::Pdp(a) => pdp(a),
        Command::Cv(a) => cv(a),
        Command::Ss(a) => ss(a),
    }
}

fn ingest(a: IngestArgs) -> Result<String> {
    let mut run = Run::new("ingest");
    let report = load(&a.db, &mut run)?;
    let rejected = report.rejected().count();
    let warnings = report.warnings().count();
    let mut text = format!(
        "{}: {} rows loaded, {rejected} rejected, {warnings} warnings\n",
        a.db.input.display(),
        report.dataset.row_count()
    );
    for d in &report.diagnostics {
        let _ = writeln!(text, "  {d}");
    }
    if let Some(p) = &a.out.out {
        let mut buf = Vec::new();
        write_database(&report.dataset, &mut buf)?;
        run.write(p, &buf)?;
    }
    run.config = json!({ "rejected": rejected, "warnings": warnings });
    run.finish(a.out.out.as_deref())?;
    Ok(text)
}

fn summary(a: SummaryArgs) -> Result<String> {
    let mut run = Run::new("summary");
    let ds = load_partition(&a.db, a.partition, &mut run)?;
    let vars: Vec<&str> = if a.var.eq_ignore_ascii_case("all") {
        SUMMARY_VARIABLES.to_vec()
    } else {
        a.var.split(',').map(str::trim).collect()
    };
    let stats = vars
        .iter()
        .map(|v| summarize(&ds, v))
        .collect::<Result<Vec<_>>>()?;
    let digits = a.out.precision.unwrap_or(4);
    let table = format_summary_table(&stats, digits, '\t');
    if let Some(p) = &a.out.out {
        run.write(p, format_summary_table(&stats, digits, ',').as_bytes())?;
    }
    run.config = json!({ "variables": vars, "partition": a.partition.label(), "precision": digits });
    run.finish(a.out.out.as_deref())?;
    Ok(table)
}

fn coefficients_csv(fits: &[(&str, &OlsFit)]) -> String {
    let mut s = String::from("partition,term,coefficient,std_error,t_stat,p_value,stars\n");
    for (label, f) in fits {
        for j in 0..f.column_names.len() {
            let _ = writeln!(
                s,
                "{label},{},{},{},{},{},{}",
                f.column_names[j],
                f.coefficients[j],
                f.standard_errors[j],
                f.t_stats[j],
                f.p_values[j],
                stars(f.p_values[j])
            );
        }
        for d in &f.dropped_columns {
            let _ = writeln!(s, "{label},{},,,,,", d.name);
        }
    }
    s
}

fn ols(a: OlsArgs) -> Result<String> {
    let mut run = Run::new("ols");
    let ds = load(&a.db, &mut run)?.dataset;
    let parts = partition_by_horizon(&ds);
    let classes: Vec<HorizonClass> = match a.partition.class() {
        Some(c) => vec![c],
        None => HorizonClass::ALL.to_vec(),
    };
    let mut fits = Vec::new();
    for c in &classes {
        let part = parts.get(*c);
        if part.is_empty() {
            return Err(Error::EmptyPartition(c.label().to_string()));
        }
        fits.push((c.label(), ols_fit(&build_design_matrix(part, true)?)?));
    }
    let refs: Vec<(&str, &OlsFit)> = fits.iter().map(|(l, f)| (*l, f)).collect();
    let decimals = a.out.precision.unwrap_or(3);
    let table = format_regression_columns(&refs, decimals);
    if let Some(p) = &a.out.out {
        run.write(p, coefficients_csv(&refs).as_bytes())?;
    }
    run.config = json!({ "partition": a.partition.label(), "precision": decimals });
    run.finish(a.out.out.as_deref())?;
    Ok(table)
}

fn design(ds: &Dataset) -> Result<DesignMatrix> {
    build_design_matrix(ds, false)
}

fn mars(a: MarsArgs) -> Result<String> {
    let mut run = Run::new("mars");
    let ds = load_partition(&a.db, a.mars.partition, &mut run)?;
    let config = a.mars.config();
    let model = fit_mars(&design(&ds)?, &config)?;
    let digits = a.out.precision.unwrap_or(4);
    if let Some(p) = &a.out.out {
        run.write(p, serde_json::to_string_pretty(&model)?.as_bytes())?;
    }
    run.seed = Some(config.rng_seed);
    run.config = serde_json::to_value(&config)?;
    run.finish(a.out.out.as_deref())?;
    Ok(model.to_text_digits(digits))
}

fn pdp(a: PdpArgs) -> Result<String> {
    let mut run = Run::new("pdp");
    let ds = load_partition(&a.db, a.mars.partition, &mut run)?;
    let background = design(&ds)?;
    let model: MarsModel = match &a.model {
        Some(p) => {
            run.input(p);
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text)?
        }
        None => fit_mars(&background, &a.mars.config())?,
    };
    let features: Vec<&str> = a.var.split(',').map(str::trim).collect();
    let grid = partial_dependence(
        &model,
        &background,
        &features,
        None,
        &PdpOptions { n_points: a.points },
    )?;
    let digits = a.out.precision.unwrap_or(4);
    let mut text = format!("{},pdp\n", grid.features.join(","));
    for (t, v) in grid.grid_values.iter().zip(&grid.averaged_predictions) {
        let cells: Vec<String> = t.iter().map(|x| fmt_sig(*x, digits)).collect();
        let _ = writeln!(text, "{},{}", cells.join(","), fmt_sig(*v, digits));
    }
    if let Some(p) = &a.out.out {
        for written in emit_pdp_artifacts(&grid, p)? {
            run.outputs.push(written.display().to_string());
        }
    }
    run.config = json!({
        "features": features,
        "points": a.points,
        "partition": a.mars.partition.label(),
        "model": serde_json::to_value(&model.config)?,
    });
    run.finish(a.out.out.as_deref())?;
    Ok(text)
}

fn cv(a: CvArgs) -> Result<String> {
    let mut run = Run::new("cv");
    let ds = load_partition(&a.db, a.partition, &mut run)?;
    let base = MarsConfig {
        cv_folds: a.cv_folds,
        rng_seed: a.seed,
        min_rsq_gain: a.min_rsq_gain,
        ..MarsConfig::default()
    };
    let grid = default_grid(&base);
    let result = cross_validate(&design(&ds)?, &grid)?;
    let digits = a.out.precision.unwrap_or(4);
    let mut text = String::from("max_degree\tmax_terms\tmean_rmse\n");
    let mut csv = String::from("max_degree,max_terms,mean_rmse");
    for k in 0..a.cv_folds {
        let _ = write!(csv, ",fold{}", k + 1);
    }
    csv.push('\n');
    for s in &result.scores {
        let _ = writeln!(
            text,
            "{}\t{}\t{}",
            s.config.max_degree,
            s.config.max_terms,
            fmt_sig(s.mean_rmse, digits)
        );
        let _ = write!(csv, "{},{},{}", s.config.max_degree, s.config.max_terms, s.mean_rmse);
        for r in &s.fold_rmse {
            let _ = write!(csv, ",{r}");
        }
        csv.push('\n');
    }
    let _ = writeln!(
        text,
        "best: max_degree {} max_terms {}",
        result.best.max_degree, result.best.max_terms
    );
    if let Some(p) = &a.out.out {
        run.write(p, csv.as_bytes())?;
    }
    run.seed = Some(a.seed);
    run.config = json!({
        "cv_folds": a.cv_folds,
        "min_rsq_gain": a.min_rsq_gain,
        "partition": a.partition.label(),
        "grid": grid.iter().map(|c| (c.max_degree, c.max_terms)).collect::<Vec<_>>(),
    });
    run.finish(a.out.out.as_deref())?;
    Ok(text)
}

fn ss(a: SsArgs) -> Result<String> {
    let mut run = Run::new("ss");
    let delim = delimiter_byte(a.delimiter)?;
    run.input(&a.series);
    run.input(&a.forecast);
    let series = read_series(&a.series, delim)?.into_series()?;
    let forecast = read_series(&a.forecast, delim)?.values;
    let train = match &a.train {
        Some(p) => {
            run.input(p);
            Some(read_series(p, delim)?.into_series()?)
        }
        None => None,
    };
    let reference = ReferenceModel::from(a.reference);
    let policy = match a.alpha {
        Some(v) => AlphaPolicy::Fixed(v),
        None => AlphaPolicy::Optimized(train.as_ref()),
    };
    if a.alpha.is_some() && reference != ReferenceModel::ConvexCombination {
        log::warn!("--alpha only applies to the cp reference");
    }
    let result = score_forecast(&series, &forecast, reference, a.h, policy)?;
    let digits = a.out.precision.unwrap_or(4);
    let mut text = String::new();
    let _ = writeln!(text, "reference\t{}", reference.label());
    let _ = writeln!(text, "h\t{}", result.horizon_steps);
    if let Some(alpha) = result.alpha {
        let _ = writeln!(text, "alpha\t{}", fmt_sig(alpha, digits));
    }
    let _ = writeln!(text, "rmse_forecast\t{}", fmt_sig(result.rmse_forecast, digits));
    let _ = writeln!(text, "rmse_reference\t{}", fmt_sig(result.rmse_reference, digits));
    let _ = writeln!(text, "ss_pct\t{}", fmt_sig(result.ss_pct, digits));
    let _ = writeln!(text, "n_scored\t{}", result.n_scored);
    if result.excluded_night > 0 {
        let _ = writeln!(text, "excluded_night\t{}", result.excluded_night);
    }
    if let Some(p) = &a.out.out {
        run.write(p, serde_json::to_string_pretty(&result)?.as_bytes())?;
    }
    run.config = json!({
        "reference": reference.label(),
        "h": a.h,
        "alpha": a.alpha,
        "precision": digits,
    });
    run.finish(a.out.out.as_deref())?;
    Ok(text)
}
