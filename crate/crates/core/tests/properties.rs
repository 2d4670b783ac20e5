mod common;

use proptest::prelude::*;
use skillmeta::encoding::DesignMatrix;
use skillmeta::error::Result;
use skillmeta::mars::BasisFactor;
use skillmeta::meta_db::{
    load_from_reader, partition_by_horizon, summarize, write_database, HorizonClass, LoadOptions,
};
use skillmeta::pdp::{partial_dependence, PdpOptions, Predictor};
use skillmeta::skill::skill_score;

struct Shifted {
    weights: Vec<f64>,
    shift: f64,
}

impl Predictor for Shifted {
    fn bind<'a>(&'a self, _: &[String]) -> Result<Box<dyn Fn(&[f64]) -> f64 + Send + Sync + 'a>> {
        Ok(Box::new(move |row: &[f64]| {
            self.shift + row.iter().zip(&self.weights).map(|(x, w)| (x * w).tanh()).sum::<f64>()
        }))
    }
}

fn background(cols: Vec<Vec<f64>>) -> DesignMatrix {
    let n = cols[0].len();
    let names = (0..cols.len()).map(|j| format!("v{j}")).collect();
    DesignMatrix::from_columns(names, cols, vec![0.0; n]).unwrap()
}

proptest! {
    #[test]
    fn hinge_pair_identities(x in -1e4..1e4f64, t in -1e4..1e4f64) {
        let p = BasisFactor::hinge_plus("x", t).eval(x);
        let m = BasisFactor::hinge_minus("x", t).eval(x);
        prop_assert!(p >= 0.0 && m >= 0.0);
        prop_assert_eq!(p * m, 0.0);
        prop_assert!((p - m - (x - t)).abs() <= 1e-12 * (x - t).abs().max(1.0));
        prop_assert!((p + m - (x - t).abs()).abs() <= 1e-12 * (x - t).abs().max(1.0));
    }

    #[test]
    fn skill_score_is_scale_invariant(a_f in 0.0..1e3f64, a_r in 1e-3..1e3f64, k in 1e-3..1e3f64) {
        let s = skill_score(a_f, a_r).unwrap();
        prop_assert!(s <= 100.0);
        prop_assert!((skill_score(k * a_f, k * a_r).unwrap() - s).abs() <= 1e-9 * s.abs().max(1.0));
    }

    #[test]
    fn partitions_are_disjoint_and_complete(n in 1usize..300, seed in 0u64..1000) {
        let ds = common::synthetic_dataset(n, seed);
        let parts = partition_by_horizon(&ds);
        let sizes: usize = HorizonClass::ALL.iter().map(|&c| parts.get(c).row_count()).sum();
        prop_assert_eq!(sizes, n);
        prop_assert!(parts.intra_hour.records.iter().all(|r| r.horizon_min <= 60.0));
        prop_assert!(parts.intra_day.records.iter().all(|r| r.horizon_min > 60.0 && r.horizon_min <= 360.0));
        prop_assert!(parts.day_ahead.records.iter().all(|r| r.horizon_min > 360.0));
    }

    #[test]
    fn dummy_means_lie_in_unit_interval(n in 2usize..200, seed in 0u64..1000) {
        let ds = common::synthetic_dataset(n, seed);
        for v in ["InputHist", "InputMete", "InputNWP", "InputST"] {
            let s = summarize(&ds, v).unwrap();
            prop_assert!((0.0..=1.0).contains(&s.mean));
            prop_assert!(s.min >= 0.0 && s.max <= 1.0);
        }
    }

    #[test]
    fn database_round_trips(n in 1usize..100, seed in 0u64..1000) {
        let ds = common::synthetic_dataset(n, seed);
        let mut buf = Vec::new();
        write_database(&ds, &mut buf).unwrap();
        let back = load_from_reader(buf.as_slice(), "mem", &LoadOptions::default()).unwrap();
        prop_assert!(back.rejected().next().is_none());
        prop_assert_eq!(back.dataset.records, ds.records);
    }

    #[test]
    fn pdp_shift_and_unused_feature(
        rows in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, 0u8..2), 1..40),
        shift in -10.0..10.0f64,
        w in -2.0..2.0f64,
    ) {
        let cols = vec![
            rows.iter().map(|r| r.0).collect::<Vec<_>>(),
            rows.iter().map(|r| r.1).collect(),
            rows.iter().map(|r| f64::from(r.2)).collect(),
        ];
        let bg = background(cols);
        let base = Shifted { weights: vec![w, 0.0, 0.5], shift: 0.0 };
        let moved = Shifted { weights: vec![w, 0.0, 0.5], shift };
        let o = PdpOptions { n_points: 7 };
        let a = partial_dependence(&base, &bg, &["v0"], None, &o).unwrap();
        let b = partial_dependence(&moved, &bg, &["v0"], None, &o).unwrap();
        for (x, y) in a.averaged_predictions.iter().zip(&b.averaged_predictions) {
            prop_assert!((y - x - shift).abs() < 1e-9);
        }
        // v1 has zero weight: flat partial dependence
        let flat = partial_dependence(&base, &bg, &["v1"], None, &o).unwrap();
        let first = flat.averaged_predictions[0];
        prop_assert!(flat.averaged_predictions.iter().all(|v| (v - first).abs() < 1e-12));
        // binary column: grid is {0, 1} at most
        let d = partial_dependence(&base, &bg, &["v2"], None, &o).unwrap();
        prop_assert!(d.grid_values.len() <= 2);
    }
}
