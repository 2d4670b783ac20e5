#![allow(dead_code)]

pub mod mars_cases;
pub mod skill_cases;

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skillmeta::encoding::DesignMatrix;
use skillmeta::linreg::OlsFit;
use skillmeta::pdp::{partial_dependence, PdpOptions};
use skillmeta::meta_db::{
    write_database, ClimateZone, Dataset, ForecastType, ModelClass, ObservationRecord,
    ReferenceModel,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Published database location: `SKILLMETA_DB`, else `data/skill_scores.csv`
/// at the workspace root.
pub fn published_database() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("SKILLMETA_DB") {
        let p = PathBuf::from(p);
        return p.is_file().then_some(p);
    }
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/skill_scores.csv");
    p.is_file().then_some(p)
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[T]) -> T {
    items[rng.gen_range(0..items.len())]
}

/// Plausible synthetic database: skill rises with horizon up to a few hours
/// and falls after, shifted by reference model and inputs.
pub fn synthetic_dataset(n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let horizons = [1.0, 5.0, 10.0, 15.0, 30.0, 60.0, 120.0, 180.0, 240.0, 360.0, 720.0, 1440.0, 2880.0];
    let records = (0..n)
        .map(|_| {
            let horizon_min = pick(&mut r, &horizons);
            let reference_model = pick(&mut r, &ReferenceModel::ALL);
            let input_nwp = r.gen_bool(0.3);
            let base = if horizon_min <= 300.0 {
                5.0 + 0.1 * horizon_min
            } else {
                35.0 - 0.01 * (horizon_min - 300.0)
            };
            let shift = match reference_model {
                ReferenceModel::Persistence => 12.0,
                ReferenceModel::SmartPersistence => 0.0,
                ReferenceModel::ConvexCombination => -8.0,
            };
            let ss: f64 = base + shift + if input_nwp { 4.0 } else { 0.0 } + r.gen_range(-10.0..10.0);
            ObservationRecord {
                skill_score_pct: (ss * 100.0).round() / 100.0,
                horizon_min,
                res_min: pick(&mut r, &[1.0, 5.0, 15.0, 60.0]),
                test_length_days: f64::from(r.gen_range(7..730)),
                train_length_days: f64::from(r.gen_range(0..1500)),
                year: r.gen_range(2010..=2022),
                climate_zone: pick(&mut r, &ClimateZone::ALL),
                model_class: pick(&mut r, &ModelClass::ALL),
                reference_model,
                forecast_type: pick(&mut r, &ForecastType::ALL),
                input_hist: r.gen_bool(0.8),
                input_mete: r.gen_bool(0.3),
                input_nwp,
                input_st: r.gen_bool(0.1),
            }
        })
        .collect();
    Dataset::new(records, "synthetic")
}

pub fn write_dataset(ds: &Dataset, path: &Path) {
    let f = std::fs::File::create(path).unwrap();
    write_database(ds, f).unwrap();
}

pub fn hinge(v: f64) -> f64 {
    v.max(0.0)
}

/// Two numeric inputs on a regular grid of spacing `spacing` with a shuffled
/// pairing, plus a noise variable and a binary one.
pub fn grid_inputs(n: usize, spacing: f64, seed: u64) -> Vec<Vec<f64>> {
    use rand::seq::SliceRandom;
    let mut r = rng(seed);
    let x1: Vec<f64> = (0..n).map(|i| i as f64 * spacing).collect();
    let mut x2 = x1.clone();
    x2.shuffle(&mut r);
    let x3: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..10.0)).collect();
    let d: Vec<f64> = (0..n).map(|_| f64::from(u8::from(r.gen_bool(0.5)))).collect();
    vec![x1, x2, x3, d]
}

pub fn matrix(columns: Vec<Vec<f64>>, y: Vec<f64>) -> DesignMatrix {
    let names = ["x1", "x2", "x3", "d", "x5", "x6"][..columns.len()]
        .iter()
        .map(|s| s.to_string())
        .collect();
    DesignMatrix::from_columns(names, columns, y).unwrap()
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for i in c + 1..n {
            let f = a[i][c] / a[c][c];
            for k in c..n {
                a[i][k] -= f * a[c][k];
            }
            b[i] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Least squares through the normal equations; returns (coef, rss).
pub fn normal_equations(cols: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let p = cols.len();
    let xtx: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum()).collect())
        .collect();
    let xty: Vec<f64> = cols.iter().map(|c| c.iter().zip(y).map(|(a, b)| a * b).sum()).collect();
    let beta = solve(xtx, xty);
    let rss = (0..y.len())
        .map(|i| {
            let fit: f64 = (0..p).map(|j| beta[j] * cols[j][i]).sum();
            (y[i] - fit).powi(2)
        })
        .sum();
    (beta, rss)
}

/// Largest deviation of finite-difference PDP slopes from the coefficient.
pub fn ols_pdp_slope_error(fit: &OlsFit, background: &DesignMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for name in &fit.column_names {
        if name == "Constant" {
            continue;
        }
        let g = partial_dependence(fit, background, &[name], None, &PdpOptions::default()).unwrap();
        let b = fit.coefficient(name).unwrap();
        for (x, y) in g.grid_values.windows(2).zip(g.averaged_predictions.windows(2)) {
            let slope = (y[1] - y[0]) / (x[1][0] - x[0][0]);
            worst = worst.max((slope - b).abs());
        }
    }
    worst
}
