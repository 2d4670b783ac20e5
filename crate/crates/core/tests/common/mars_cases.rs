use rand::Rng;
use skillmeta::encoding::DesignMatrix;
use skillmeta::mars::{gcv, MarsConfig, MarsModel};

use super::{grid_inputs, hinge, matrix, normal_equations, rng};

pub const SPACING: f64 = 0.5;

/// Noise-free targets: keep adding terms until the fit is essentially exact.
pub fn exact_config(max_degree: usize) -> MarsConfig {
    MarsConfig {
        max_degree,
        min_rsq_gain: 1e-9,
        ..MarsConfig::default()
    }
}

pub fn additive_case() -> DesignMatrix {
    let x = grid_inputs(200, SPACING, 1);
    let y = (0..200)
        .map(|i| 3.0 * hinge(x[0][i] - 40.0) - 2.0 * hinge(60.0 - x[1][i]) + 1.5 * hinge(x[0][i] - 75.0))
        .collect();
    matrix(x, y)
}

pub fn interaction_case() -> DesignMatrix {
    let x = grid_inputs(200, SPACING, 2);
    let y = (0..200)
        .map(|i| 2.0 * hinge(x[0][i] - 30.0) + 0.05 * hinge(x[0][i] - 50.0) * hinge(x[1][i] - 40.0))
        .collect();
    matrix(x, y)
}

/// Minimum GCV over every subset of the forward-pass terms.
pub fn exhaustive_best(fwd: &MarsModel, m: &DesignMatrix) -> (Vec<usize>, f64) {
    let n = m.nrows();
    let cols: Vec<Vec<f64>> = fwd.terms.iter().map(|t| {
        m.rows().iter().map(|row| skillmeta::mars::eval_term(t, &m.column_names, row).unwrap()).collect()
    }).collect();
    let penalty = fwd.config.penalty();
    let mut best = (Vec::new(), f64::INFINITY);
    for mask in 0u32..(1 << cols.len()) {
        let subset: Vec<usize> = (0..cols.len()).filter(|j| mask >> j & 1 == 1).collect();
        let mut design = vec![vec![1.0; n]];
        design.extend(subset.iter().map(|&j| cols[j].clone()));
        let (_, rss) = normal_equations(&design, &m.y);
        let mut knots: Vec<(String, u64)> = subset
            .iter()
            .flat_map(|&j| &fwd.terms[j].factors)
            .filter_map(|f| f.knot.map(|k| (f.variable.clone(), k.to_bits())))
            .collect();
        knots.sort();
        knots.dedup();
        let g = gcv(rss.max(0.0), n, subset.len() + 1, knots.len(), penalty);
        if g < best.1 * (1.0 - 1e-9) || (g <= best.1 * (1.0 + 1e-9) && subset.len() < best.0.len()) {
            best = (subset, g);
        }
    }
    best
}

/// Noise-free instance with two hinges and a binary shift.
pub fn prune_case(seed: u64) -> DesignMatrix {
    let x = grid_inputs(120, 1.0, 100 + seed);
    let y = (0..120)
        .map(|i| 2.0 * hinge(x[0][i] - 50.0) - hinge(70.0 - x[1][i]) + 3.0 * x[3][i])
        .collect();
    matrix(x, y)
}

pub fn tss(y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - mean).powi(2)).sum()
}

pub fn additive_data(seed: u64) -> DesignMatrix {
    let x = grid_inputs(300, 1.0, seed);
    let mut r = rng(seed + 1000);
    let y = (0..300)
        .map(|i| 0.2 * hinge(x[0][i] - 100.0) - 0.15 * hinge(150.0 - x[1][i]) + 5.0 * x[3][i] + r.gen_range(-3.0..3.0))
        .collect();
    matrix(x, y)
}

pub fn interaction_data(seed: u64) -> DesignMatrix {
    let x = grid_inputs(300, 1.0, seed);
    let mut r = rng(seed + 2000);
    let y = (0..300)
        .map(|i| 0.002 * hinge(x[0][i] - 100.0) * hinge(x[1][i] - 100.0) + 0.05 * x[0][i] + r.gen_range(-3.0..3.0))
        .collect();
    matrix(x, y)
}
