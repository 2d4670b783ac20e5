mod common;

use common::mars_cases::{
    additive_case, exact_config, exhaustive_best, interaction_case, prune_case, tss, SPACING,
};
use common::{grid_inputs, hinge, matrix, rng};
use rand::Rng;
use skillmeta::linreg::ols_fit;
use skillmeta::mars::{backward_prune, fit_mars, forward_pass, gcv, MarsConfig, MarsModel};

fn assert_knot(model: &MarsModel, var: &str, knot: f64) {
    let ks = model.knots(var);
    assert!(
        ks.iter().any(|k| (k - knot).abs() <= SPACING),
        "knot {knot} on {var} not recovered: {ks:?}\n{}",
        model.to_text()
    );
}

#[test]
fn recovers_additive_hinges() {
    let m = additive_case();
    let model = fit_mars(&m, &exact_config(1)).unwrap();
    assert!(model.rsq >= 0.999, "{}", model.to_text());
    assert_knot(&model, "x1", 40.0);
    assert_knot(&model, "x1", 75.0);
    assert_knot(&model, "x2", 60.0);
    assert!(!model.used_variables().contains(&"x3".to_string()));
}

#[test]
fn recovers_interaction_hinges() {
    let m = interaction_case();
    let model = fit_mars(&m, &exact_config(2)).unwrap();
    assert!(model.rsq >= 0.999, "{}", model.to_text());
    assert_knot(&model, "x1", 30.0);
    assert_knot(&model, "x1", 50.0);
    assert_knot(&model, "x2", 40.0);
    assert!(model.terms.iter().any(|t| t.degree() == 2));
}

#[test]
fn pure_noise_has_low_grsq() {
    let x = grid_inputs(300, 1.0, 3);
    let mut r = rng(33);
    let y = (0..300).map(|_| r.gen_range(-1.0..1.0)).collect();
    let model = fit_mars(&matrix(x, y), &MarsConfig::default()).unwrap();
    assert!(model.grsq <= 0.05, "{}", model.to_text());
    assert!(model.terms.len() <= 4);
}

#[test]
fn forward_rss_is_non_increasing() {
    for m in [additive_case(), interaction_case()] {
        let fwd = forward_pass(&m, &MarsConfig::default()).unwrap();
        for w in fwd.forward_rss.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-9, "{:?}", fwd.forward_rss);
        }
    }
}

#[test]
fn truncated_budget_is_a_prefix() {
    let x = grid_inputs(150, 1.0, 4);
    let mut r = rng(44);
    let y: Vec<f64> = (0..150)
        .map(|i| (x[0][i] / 20.0).sin() * 5.0 + x[3][i] * 2.0 + r.gen_range(-0.5..0.5))
        .collect();
    let m = matrix(x, y);
    let big = forward_pass(&m, &MarsConfig { max_terms: 21, min_rsq_gain: 0.0, ..MarsConfig::default() }).unwrap();
    for k in [1, 2, 5, 8, 13] {
        let small = forward_pass(&m, &MarsConfig { max_terms: k, min_rsq_gain: 0.0, ..MarsConfig::default() }).unwrap();
        let n = small.terms.len();
        assert!(n <= k);
        for (a, b) in small.terms.iter().zip(&big.terms[..n]) {
            assert_eq!(a.factors, b.factors);
        }
    }
}

#[test]
fn pruning_never_worsens_gcv_and_beats_ols() {
    for m in [additive_case(), interaction_case()] {
        let fwd = forward_pass(&m, &MarsConfig::default()).unwrap();
        let pruned = backward_prune(&fwd, &m).unwrap();
        assert!(pruned.gcv <= fwd.gcv * (1.0 + 1e-12));
        let ols = ols_fit(&m).unwrap();
        assert!(pruned.rss <= ols.rss + 1e-9 * ols.rss.max(1.0));
    }
}

#[test]
fn predictions_reproduce_training_rss() {
    let m = additive_case();
    let model = fit_mars(&m, &MarsConfig::default()).unwrap();
    let pred = model.predict_matrix(&m).unwrap();
    let rss: f64 = pred.iter().zip(&m.y).map(|(p, y)| (p - y).powi(2)).sum();
    assert!((rss - model.rss).abs() <= 1e-9 * m.y.iter().map(|v| v * v).sum::<f64>().max(1.0));
}

#[test]
fn pruning_matches_exhaustive_search() {
    for seed in 0..20u64 {
        let m = prune_case(seed);
        let fwd = forward_pass(&m, &MarsConfig { max_terms: 10, min_rsq_gain: 0.0, ..MarsConfig::default() }).unwrap();
        assert!(fwd.terms.len() <= 10);
        let pruned = backward_prune(&fwd, &m).unwrap();
        let (_, best_gcv) = exhaustive_best(&fwd, &m);
        let g_null = gcv(tss(&m.y), m.nrows(), 1, 0, fwd.config.penalty());
        assert!(
            (pruned.gcv - best_gcv).abs() <= 1e-9 * g_null,
            "seed {seed}: pruned {} vs exhaustive {best_gcv}",
            pruned.gcv
        );
    }
}

#[test]
fn spurious_terms_are_pruned_away() {
    use skillmeta::mars::{BasisFactor as F, BasisTerm as T};
    let x = grid_inputs(160, 1.0, 7);
    let mut r = rng(8);
    let y: Vec<f64> = (0..160)
        .map(|i| 2.0 * hinge(x[0][i] - 60.0) - 1.5 * hinge(40.0 - x[0][i]) + hinge(x[1][i] - 90.0) + r.gen_range(-0.5..0.5))
        .collect();
    let m = matrix(x, y);
    let mut unpruned = forward_pass(&m, &MarsConfig { max_terms: 1, max_degree: 2, ..MarsConfig::default() }).unwrap();
    unpruned.terms = vec![
        T::new(vec![F::hinge_plus("x1", 60.0)]),
        T::new(vec![F::hinge_minus("x1", 40.0)]),
        T::new(vec![F::hinge_plus("x2", 90.0)]),
        T::new(vec![F::hinge_plus("x3", 5.0)]),
        T::new(vec![F::hinge_minus("x2", 20.0)]),
        T::new(vec![F::indicator("d")]),
        T::new(vec![F::hinge_plus("x1", 60.0), F::hinge_minus("x3", 3.0)]),
        T::new(vec![F::hinge_minus("x2", 110.0), F::indicator("d")]),
    ];
    let pruned = backward_prune(&unpruned, &m).unwrap();
    let (best, _) = exhaustive_best(&unpruned, &m);
    let kept: Vec<_> = pruned.terms.iter().map(ToString::to_string).collect();
    assert_eq!(kept, ["h(x1-60)", "h(40-x1)", "h(x2-90)"], "{}", pruned.to_text());
    assert_eq!(best, vec![0, 1, 2]);
}
