//! K-fold grid search over MARS hyperparameters.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::forward::truncate;
use super::{backward_prune, forward_pass, MarsConfig};
use crate::encoding::DesignMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct CvScore {
    pub config: MarsConfig,
    pub mean_rmse: f64,
    pub fold_rmse: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CvResult {
    pub best: MarsConfig,
    pub scores: Vec<CvScore>,
}

/// Term budgets 2, 12, ..., 92 crossed with degree 1 and 2.
pub fn default_grid(base: &MarsConfig) -> Vec<MarsConfig> {
    let mut grid = Vec::new();
    for max_degree in [1, 2] {
        for max_terms in (2..=100).step_by(10) {
            grid.push(MarsConfig {
                max_degree,
                max_terms,
                ..base.clone()
            });
        }
    }
    grid
}

/// Seeded assignment of rows to folds: shuffle, then deal round-robin.
pub fn assign_folds(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in idx.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

/// Settings that determine the forward pass apart from the term budget.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct ForwardKey {
    max_degree: usize,
    min_rsq_gain: u64,
    max_knots: Option<usize>,
}

impl ForwardKey {
    fn of(c: &MarsConfig) -> Self {
        ForwardKey {
            max_degree: c.max_degree,
            min_rsq_gain: c.min_rsq_gain.to_bits(),
            max_knots: c.max_knots,
        }
    }
}

/// Mean held-out RMSE of every grid configuration; the best is the lowest,
/// ties going to fewer terms and then to lower degree.
///
/// Fold count and seed come from the first grid entry. Within a fold one
/// forward pass per distinct forward setting is run at the largest term
/// budget and truncated for the smaller ones.
pub fn cross_validate(matrix: &DesignMatrix, grid: &[MarsConfig]) -> Result<CvResult> {
    let first = grid
        .first()
        .ok_or_else(|| Error::InvalidConfig("empty hyperparameter grid".into()))?;
    for c in grid {
        c.validate()?;
    }
    let folds = first.cv_folds;
    let n = matrix.nrows();
    if folds < 2 {
        return Err(Error::InvalidConfig(format!("cv_folds must be >= 2, got {folds}")));
    }
    if n < folds {
        return Err(Error::InvalidConfig(format!(
            "{n} observations cannot fill {folds} folds"
        )));
    }
    let assignment = assign_folds(n, folds, first.rng_seed);

    let mut budgets: BTreeMap<ForwardKey, usize> = BTreeMap::new();
    for c in grid {
        let e = budgets.entry(ForwardKey::of(c)).or_insert(0);
        *e = (*e).max(c.max_terms);
    }

    let per_fold: Vec<Vec<f64>> = (0..folds)
        .into_par_iter()
        .map(|k| -> Result<Vec<f64>> {
            let train: Vec<usize> = (0..n).filter(|&i| assignment[i] != k).collect();
            let test: Vec<usize> = (0..n).filter(|&i| assignment[i] == k).collect();
            if test.is_empty() || train.is_empty() {
                return Err(Error::EmptyFold(k));
            }
            let train_m = matrix.select_rows(&train);
            let test_m = matrix.select_rows(&test);

            let mut full = BTreeMap::new();
            for (key, &budget) in &budgets {
                let cfg = grid
                    .iter()
                    .find(|c| ForwardKey::of(c) == *key)
                    .expect("key built from grid");
                let cfg = MarsConfig {
                    max_terms: budget,
                    ..cfg.clone()
                };
                full.insert(key.clone(), forward_pass(&train_m, &cfg)?);
            }

            grid.iter()
                .map(|c| {
                    let fwd = &full[&ForwardKey::of(c)];
                    let mut unpruned = truncate(fwd, &train_m, c.max_terms)?;
                    unpruned.config = c.clone();
                    let model = backward_prune(&unpruned, &train_m)?;
                    let pred = model.predict_matrix(&test_m)?;
                    let mse = pred
                        .iter()
                        .zip(&test_m.y)
                        .map(|(p, y)| (p - y).powi(2))
                        .sum::<f64>()
                        / test.len() as f64;
                    Ok(mse.sqrt())
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let scores: Vec<CvScore> = grid
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let fold_rmse: Vec<f64> = per_fold.iter().map(|f| f[ci]).collect();
            CvScore {
                config: c.clone(),
                mean_rmse: fold_rmse.iter().sum::<f64>() / folds as f64,
                fold_rmse,
            }
        })
        .collect();

    let best = scores
        .iter()
        .min_by(|a, b| {
            a.mean_rmse
                .total_cmp(&b.mean_rmse)
                .then(a.config.max_terms.cmp(&b.config.max_terms))
                .then(a.config.max_degree.cmp(&b.config.max_degree))
        })
        .expect("grid is non-empty")
        .config
        .clone();
    Ok(CvResult { best, scores })
}
