//! Greedy forward pass.
//!
//! The current basis is kept as an orthonormal set `Q` with the residual `r`
//! orthogonal to it. For a parent term `p` and numeric variable `x`, adding
//! the reflected pair at knot `t` spans the same space as adding `p*x` and
//! `a_t = p*max(x - t, 0)` because `p` is already in the basis. The gain of
//! `p*x` is computed once; the gain of `a_t` for every knot comes from a
//! single descending sweep over the rows, carrying sums of `p*w*(x - t)` for
//! every basis vector `w` and updating them as `t` moves down.

use rayon::prelude::*;

use super::basis::{BasisFactor, BasisTerm};
use super::prune::{gcv, least_squares};
use super::{MarsConfig, MarsModel};
use crate::encoding::{ColumnKind, DesignMatrix, COLLINEAR_TOL};
use crate::error::{Error, Result};

/// Relative floor on the orthogonal remainder of a hinge during knot scoring.
const SWEEP_TOL: f64 = 1e-8;

struct TermState {
    factors: Vec<BasisFactor>,
    vars: Vec<usize>,
    column: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    parent: usize,
    var: usize,
    knot: Option<f64>,
    reduction: f64,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        if self.reduction != other.reduction {
            return self.reduction > other.reduction;
        }
        match (self.knot, other.knot) {
            (Some(a), Some(b)) if a != b => return a < b,
            _ => {}
        }
        if self.var != other.var {
            return self.var < other.var;
        }
        self.parent < other.parent
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Remainder of `v` after two passes of Gram-Schmidt against `basis`.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= c * qi);
        }
    }
}

struct Workspace<'a> {
    columns: &'a [Vec<f64>],
    kinds: Vec<ColumnKind>,
    /// row indices sorted by descending value, per numeric variable
    order: Vec<Vec<usize>>,
    max_knots: Option<usize>,
}

impl Workspace<'_> {
    fn evaluate(
        &self,
        parent_idx: usize,
        parent: &TermState,
        var: usize,
        q: &[Vec<f64>],
        r: &[f64],
    ) -> Option<Candidate> {
        let p = &parent.column;
        let x = &self.columns[var];
        let mut c: Vec<f64> = p.iter().zip(x).map(|(a, b)| a * b).collect();
        let c_norm2 = dot(&c, &c);
        if c_norm2 == 0.0 && self.kinds[var] == ColumnKind::Binary {
            return None;
        }
        let c_dot_r = dot(&c, r);
        orthogonalize(&mut c, q);
        let c_perp2 = dot(&c, &c);
        let c_valid = c_norm2 > 0.0 && c_perp2 > COLLINEAR_TOL * COLLINEAR_TOL * c_norm2;
        let red_c = if c_valid { c_dot_r * c_dot_r / c_perp2 } else { 0.0 };

        if self.kinds[var] == ColumnKind::Binary {
            return c_valid.then_some(Candidate {
                parent: parent_idx,
                var,
                knot: None,
                reduction: red_c,
            });
        }

        // basis W = Q (+ c_hat) and residual r' orthogonal to W
        let mut extra: Option<Vec<f64>> = None;
        let mut r_prime = r.to_vec();
        if c_valid {
            let inv = 1.0 / c_perp2.sqrt();
            c.iter_mut().for_each(|v| *v *= inv);
            let proj = dot(&c, &r_prime);
            r_prime.iter_mut().zip(&c).for_each(|(ri, ci)| *ri -= proj * ci);
            extra = Some(c);
        }
        let w: Vec<&[f64]> = q
            .iter()
            .map(Vec::as_slice)
            .chain(extra.as_deref())
            .collect();
        let k = w.len();

        let rows: Vec<usize> = self.order[var]
            .iter()
            .copied()
            .filter(|&i| p[i] != 0.0)
            .collect();
        if rows.is_empty() {
            return None;
        }
        // group boundaries of distinct values, descending
        let mut groups: Vec<(f64, usize, usize)> = Vec::new();
        let mut start = 0;
        for idx in 1..=rows.len() {
            if idx == rows.len() || x[rows[idx]] != x[rows[start]] {
                groups.push((x[rows[start]], start, idx));
                start = idx;
            }
        }
        if groups.len() < 2 {
            return None;
        }
        // the smallest value makes a_t linear in (p, p*x) and is never a knot
        let n_knots = groups.len() - 1;
        let allowed: Option<Vec<bool>> = self.max_knots.filter(|&m| m < n_knots).map(|m| {
            let mut mask = vec![false; n_knots];
            if m == 1 {
                mask[n_knots / 2] = true;
            } else {
                for i in 0..m {
                    let pos = (i as f64 * (n_knots - 1) as f64 / (m - 1) as f64).round();
                    mask[pos as usize] = true;
                }
            }
            mask
        });

        let mut a_w = vec![0.0; k];
        let mut b_w = vec![0.0; k];
        let (mut a_r, mut b_r) = (0.0, 0.0);
        let (mut saa, mut sa1, mut sp2) = (0.0f64, 0.0f64, 0.0f64);

        let mut best_knot = groups[0].0;
        let mut best_red = red_c;
        for g in 0..n_knots {
            let (t, lo, hi) = groups[g];
            if g > 0 && allowed.as_ref().map_or(true, |m| m[g]) {
                let proj: f64 = a_w.iter().map(|v| v * v).sum();
                let denom = saa - proj;
                let red_a = if saa > 0.0 && denom > SWEEP_TOL * saa {
                    a_r * a_r / denom
                } else {
                    0.0
                };
                let total = red_c + red_a;
                if total >= best_red {
                    best_red = total;
                    best_knot = t;
                }
            } else if g == 0 && allowed.as_ref().is_some_and(|m| !m[0]) {
                best_red = f64::NEG_INFINITY;
            }
            // rows at value t join the active set with offset zero
            for &i in &rows[lo..hi] {
                let pi = p[i];
                for (bk, wk) in b_w.iter_mut().zip(&w) {
                    *bk += pi * wk[i];
                }
                b_r += pi * r_prime[i];
                sp2 += pi * pi;
            }
            let delta = t - groups[g + 1].0;
            saa += 2.0 * delta * sa1 + delta * delta * sp2;
            sa1 += delta * sp2;
            for (ak, bk) in a_w.iter_mut().zip(&b_w) {
                *ak += delta * bk;
            }
            a_r += delta * b_r;
        }
        if !best_red.is_finite() {
            return None;
        }
        Some(Candidate {
            parent: parent_idx,
            var,
            knot: Some(best_knot),
            reduction: best_red,
        })
    }
}

/// Gain of `col` alone against the current basis.
fn single_reduction(col: &[f64], q: &[Vec<f64>], r: &[f64]) -> f64 {
    let norm2 = dot(col, col);
    let num = dot(col, r);
    let mut v = col.to_vec();
    orthogonalize(&mut v, q);
    let perp2 = dot(&v, &v);
    if norm2 > 0.0 && perp2 > COLLINEAR_TOL * COLLINEAR_TOL * norm2 {
        num * num / perp2
    } else {
        0.0
    }
}

/// Unpruned model from the greedy forward pass.
///
/// An intercept column in `matrix` is ignored. When a knot pair would exceed
/// `max_terms` only the reflection with the larger individual gain is kept;
/// pairs are stored in that order, so truncating a forward model to its first
/// `k` terms equals a forward pass run with `max_terms = k`.
pub fn forward_pass(matrix: &DesignMatrix, config: &MarsConfig) -> Result<MarsModel> {
    config.validate()?;
    let m = matrix.without_intercept();
    let n = m.nrows();
    if n < 10 {
        return Err(Error::InvalidInput(format!(
            "MARS needs at least 10 observations, got {n}"
        )));
    }
    if m.y.iter().any(|v| !v.is_finite()) || m.columns.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite values in design matrix".into()));
    }

    let y = &m.y;
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();

    let order = m
        .columns
        .iter()
        .zip(&m.kinds)
        .map(|(col, kind)| {
            if *kind == ColumnKind::Binary {
                return Vec::new();
            }
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| col[b].total_cmp(&col[a]).then(a.cmp(&b)));
            idx
        })
        .collect();
    let ws = Workspace {
        columns: &m.columns,
        kinds: m.kinds.clone(),
        order,
        max_knots: config.max_knots,
    };

    let mut terms = vec![TermState {
        factors: Vec::new(),
        vars: Vec::new(),
        column: vec![1.0; n],
    }];
    let mut q = vec![vec![1.0 / (n as f64).sqrt(); n]];
    let mut r: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let mut forward_rss = vec![tss];

    let degenerate = tss <= 1e-24 * y.iter().map(|v| v * v).sum::<f64>().max(1.0);
    while !degenerate && terms.len() - 1 < config.max_terms {
        let tasks: Vec<(usize, usize)> = terms
            .iter()
            .enumerate()
            .filter(|(_, t)| t.vars.len() < config.max_degree)
            .flat_map(|(pi, t)| {
                (0..m.ncols())
                    .filter(|v| !t.vars.contains(v))
                    .map(move |v| (pi, v))
            })
            .collect();
        let results: Vec<Option<Candidate>> = tasks
            .par_iter()
            .map(|&(pi, v)| ws.evaluate(pi, &terms[pi], v, &q, &r))
            .collect();
        let mut best: Option<Candidate> = None;
        for c in results.into_iter().flatten() {
            if best.as_ref().map_or(true, |b| c.beats(b)) {
                best = Some(c);
            }
        }
        let Some(best) = best else { break };
        if !(best.reduction / tss >= config.min_rsq_gain) || best.reduction <= 0.0 {
            break;
        }

        let parent = &terms[best.parent];
        let x = &m.columns[best.var];
        let name = &m.column_names[best.var];
        let mut new_terms: Vec<(BasisFactor, Vec<f64>)> = match best.knot {
            None => vec![(
                BasisFactor::indicator(name.clone()),
                parent.column.iter().zip(x).map(|(p, v)| p * v).collect(),
            )],
            Some(t) => {
                let plus = BasisFactor::hinge_plus(name.clone(), t);
                let minus = BasisFactor::hinge_minus(name.clone(), t);
                let pc: Vec<f64> = parent
                    .column
                    .iter()
                    .zip(x)
                    .map(|(p, v)| p * plus.eval(*v))
                    .collect();
                let mc: Vec<f64> = parent
                    .column
                    .iter()
                    .zip(x)
                    .map(|(p, v)| p * minus.eval(*v))
                    .collect();
                let (gp, gm) = (single_reduction(&pc, &q, &r), single_reduction(&mc, &q, &r));
                if gm > gp {
                    vec![(minus, mc), (plus, pc)]
                } else {
                    vec![(plus, pc), (minus, mc)]
                }
            }
        };

        let parent_factors = parent.factors.clone();
        let parent_vars = parent.vars.clone();
        let mut added = 0;
        for (factor, col) in new_terms.drain(..) {
            if terms.len() - 1 >= config.max_terms {
                break;
            }
            let norm = dot(&col, &col).sqrt();
            let mut v = col.clone();
            orthogonalize(&mut v, &q);
            let vn = dot(&v, &v).sqrt();
            if norm == 0.0 || vn < COLLINEAR_TOL * norm {
                continue;
            }
            v.iter_mut().for_each(|e| *e /= vn);
            let proj = dot(&v, &r);
            r.iter_mut().zip(&v).for_each(|(ri, vi)| *ri -= proj * vi);
            q.push(v);
            let mut factors = parent_factors.clone();
            factors.push(factor);
            let mut vars = parent_vars.clone();
            vars.push(best.var);
            terms.push(TermState {
                factors,
                vars,
                column: col,
            });
            forward_rss.push(dot(&r, &r));
            added += 1;
        }
        if added == 0 {
            break;
        }
    }

    let basis: Vec<BasisTerm> = terms
        .into_iter()
        .skip(1)
        .map(|t| BasisTerm::new(t.factors))
        .collect();
    let mut model = assemble(&m, config, basis, tss)?;
    model.forward_rss = forward_rss;
    Ok(model)
}

/// Refit `terms` by least squares and fill in the fit statistics.
pub(crate) fn assemble(
    matrix: &DesignMatrix,
    config: &MarsConfig,
    mut terms: Vec<BasisTerm>,
    tss: f64,
) -> Result<MarsModel> {
    let n = matrix.nrows();
    let mut cols = vec![vec![1.0; n]];
    for t in &terms {
        let idx = t.bind(&matrix.column_names)?;
        cols.push(t.column(&idx, &matrix.columns, n));
    }
    let (coef, rss) = least_squares(&cols, &matrix.y)?;
    for (t, b) in terms.iter_mut().zip(&coef[1..]) {
        t.coefficient = *b;
    }
    let penalty = config.penalty();
    let n_knots = super::count_knots(terms.iter());
    let g = gcv(rss, n, terms.len() + 1, n_knots, penalty);
    let g_null = gcv(tss, n, 1, 0, penalty);
    Ok(MarsModel {
        intercept: coef[0],
        rsq: if tss > 0.0 { 1.0 - rss / tss } else { 0.0 },
        grsq: if g_null > 0.0 && g.is_finite() {
            1.0 - g / g_null
        } else if g_null > 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        },
        gcv: g,
        rss,
        n,
        terms,
        config: config.clone(),
        variables: matrix.column_names.clone(),
        forward_rss: Vec::new(),
        prune_path: Vec::new(),
    })
}

/// First `k` terms of an unpruned forward model, refit.
pub(crate) fn truncate(model: &MarsModel, matrix: &DesignMatrix, k: usize) -> Result<MarsModel> {
    let m = matrix.without_intercept();
    let mean = m.y.iter().sum::<f64>() / m.nrows() as f64;
    let tss: f64 = m.y.iter().map(|v| (v - mean).powi(2)).sum();
    let config = MarsConfig {
        max_terms: k,
        ..model.config.clone()
    };
    let terms = model.terms.iter().take(k).cloned().collect();
    let mut out = assemble(&m, &config, terms, tss)?;
    out.forward_rss = model.forward_rss.iter().take(k + 1).copied().collect();
    Ok(out)
}
