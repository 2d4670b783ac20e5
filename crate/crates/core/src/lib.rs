//! Skill scores for solar forecasts and meta-regression over a database of
//! published skill-score results.
//!
//! - [`meta_db`]: loading, validating and summarizing the database
//! - [`encoding`]: design matrices with dummy coding
//! - [`linreg`]: ordinary least squares with inference
//! - [`mars`]: multivariate adaptive regression splines
//! - [`pdp`]: partial dependence
//! - [`skill`]: reference forecasts, RMSE and skill scores
//! - [`report`]: tables, plot files and run manifests
//! - [`cli`]: the `skillmeta` command line

pub mod cli;
pub mod encoding;
pub mod error;
pub mod linreg;
pub mod mars;
pub mod meta_db;
pub mod pdp;
pub mod report;
pub mod skill;

pub use encoding::{build_design_matrix, drop_degenerate_columns, DesignMatrix};
pub use error::{Error, Result};
pub use linreg::{ols_fit, run_horizon_regressions, OlsFit};
pub use mars::{cross_validate, fit_mars, MarsConfig, MarsModel};
pub use meta_db::{
    load_database, partition_by_horizon, summarize, Dataset, HorizonClass, LoadOptions,
    ObservationRecord,
};
pub use pdp::{partial_dependence, PdpGrid, Predictor};
pub use skill::{rmse, score_forecast, skill_score, SolarSeries};
