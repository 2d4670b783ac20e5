use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use skillmeta::meta_db::{
    write_database, ClimateZone, Dataset, ForecastType, ModelClass, ObservationRecord, ReferenceModel,
};
use skillmeta_ffi::*;

fn dataset(n: usize) -> Dataset {
    let horizons = [5.0, 30.0, 60.0, 120.0, 240.0, 720.0, 1440.0];
    let records = (0..n)
        .map(|i| {
            let horizon_min = horizons[i % horizons.len()];
            let wobble = ((i * 37 % 101) as f64 - 50.0) / 5.0;
            ObservationRecord {
                skill_score_pct: 10.0 + 0.01 * horizon_min + wobble,
                horizon_min,
                res_min: [1.0, 15.0, 60.0][i % 3],
                test_length_days: (30 + i % 300) as f64,
                train_length_days: (i * 13 % 900) as f64,
                year: 2010 + (i % 12) as i32,
                climate_zone: ClimateZone::ALL[i % ClimateZone::ALL.len()],
                model_class: ModelClass::ALL[i / 3 % ModelClass::ALL.len()],
                reference_model: ReferenceModel::ALL[i / 5 % 3],
                forecast_type: ForecastType::ALL[i / 2 % ForecastType::ALL.len()],
                input_hist: i % 4 != 0,
                input_mete: i % 3 == 0,
                input_nwp: i % 5 < 2,
                input_st: i % 7 == 0,
            }
        })
        .collect();
    Dataset::new(records, "ffi")
}

fn write(dir: &Path, n: usize) -> CString {
    let path = dir.join("db.csv");
    write_database(&dataset(n), std::fs::File::create(&path).unwrap()).unwrap();
    CString::new(path.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = sm_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn dataset_ols_and_mars_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), 420);
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(sm_dataset_load(path.as_ptr(), b',', &mut ds), SmStatus::Ok);
        let mut n = 0;
        assert_eq!(sm_dataset_row_count(ds, SmPartition::All, &mut n), SmStatus::Ok);
        assert_eq!(n, 420);
        let mut parts = 0;
        for p in [SmPartition::IntraHour, SmPartition::IntraDay, SmPartition::DayAhead] {
            let mut k = 0;
            assert_eq!(sm_dataset_row_count(ds, p, &mut k), SmStatus::Ok);
            parts += k;
        }
        assert_eq!(parts, 420);

        let mut s = SmSummary::default();
        let var = CString::new("Horizon").unwrap();
        assert_eq!(sm_dataset_summarize(ds, var.as_ptr(), &mut s), SmStatus::Ok);
        assert_eq!(s.n, 420);
        assert_eq!((s.min, s.max), (5.0, 1440.0));

        let mut fit = ptr::null_mut();
        assert_eq!(sm_ols_fit(ds, SmPartition::All, &mut fit), SmStatus::Ok);
        let (mut b, mut se, mut p) = (0.0, 0.0, 0.0);
        assert_eq!(sm_ols_coefficient(fit, var.as_ptr(), &mut b, &mut se, &mut p), SmStatus::Ok);
        assert!(b > 0.0 && se > 0.0 && (0.0..=1.0).contains(&p));
        let (mut r2, mut adj, mut obs) = (0.0, 0.0, 0);
        assert_eq!(sm_ols_stats(fit, &mut r2, &mut adj, &mut obs), SmStatus::Ok);
        assert!(adj <= r2 && r2 <= 1.0 && obs == 420);
        let missing = CString::new("NoSuchTerm").unwrap();
        assert_eq!(
            sm_ols_coefficient(fit, missing.as_ptr(), &mut b, ptr::null_mut(), ptr::null_mut()),
            SmStatus::NotFound
        );
        assert!(last_error().contains("NoSuchTerm"));
        sm_ols_free(fit);

        let mut model = ptr::null_mut();
        assert_eq!(sm_mars_fit(ds, SmPartition::All, 1, 10, &mut model), SmStatus::Ok);
        let (mut rsq, mut grsq, mut terms) = (0.0, 0.0, 0);
        assert_eq!(sm_mars_stats(model, &mut rsq, &mut grsq, &mut terms), SmStatus::Ok);
        assert!(rsq > 0.0 && grsq <= rsq && terms <= 10);
        let mut pred = vec![0.0; 420];
        assert_eq!(sm_mars_predict(model, ds, SmPartition::All, pred.as_mut_ptr(), 420), SmStatus::Ok);
        assert!(pred.iter().all(|v| v.is_finite()));
        assert_eq!(sm_mars_predict(model, ds, SmPartition::All, pred.as_mut_ptr(), 3), SmStatus::InvalidInput);
        sm_mars_free(model);
        sm_dataset_free(ds);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut ds = ptr::null_mut();
        let missing = CString::new("/nonexistent/db.csv").unwrap();
        assert_eq!(sm_dataset_load(missing.as_ptr(), b',', &mut ds), SmStatus::MissingFile);
        assert!(ds.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(sm_dataset_load(ptr::null(), b',', &mut ds), SmStatus::NullPointer);

        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "a,b\n1,2\n").unwrap();
        let bad = CString::new(bad.to_str().unwrap()).unwrap();
        assert_eq!(sm_dataset_load(bad.as_ptr(), b',', &mut ds), SmStatus::ParseError);

        let mut out = 0.0;
        assert_eq!(sm_skill_score(1.0, 0.0, &mut out), SmStatus::Numerical);
        assert_eq!(sm_skill_score(1.0, 2.0, ptr::null_mut()), SmStatus::NullPointer);
        sm_dataset_free(ptr::null_mut());
        sm_ols_free(ptr::null_mut());
        sm_mars_free(ptr::null_mut());
    }
}

#[test]
fn scalar_metrics() {
    let a = [1.0, 2.0, 3.0, 4.0];
    let f = [2.0, 2.0, 3.0, 2.0];
    let mut out = 0.0;
    unsafe {
        assert_eq!(sm_rmse(a.as_ptr(), f.as_ptr(), 4, &mut out), SmStatus::Ok);
        assert!((out - (5.0f64 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(sm_skill_score(2.0, 4.0, &mut out), SmStatus::Ok);
        assert!((out - 50.0).abs() < 1e-12);
    }
}

#[test]
fn series_scoring() {
    let n = 200;
    let cs: Vec<f64> = (0..n).map(|i| (700.0 * (i as f64 * 0.07).sin()).max(0.0)).collect();
    let obs: Vec<f64> = cs.iter().enumerate().map(|(i, c)| c * (0.6 + 0.2 * ((i * 3 % 7) as f64 / 7.0))).collect();
    let fc: Vec<f64> = cs.iter().map(|c| 0.7 * c).collect();
    let mut r = SmSkillResult::default();
    unsafe {
        let st = sm_score_series(obs.as_ptr(), fc.as_ptr(), cs.as_ptr(), n, 15.0,
            SmReference::SmartPersistence, 1, f64::NAN, &mut r);
        assert_eq!(st, SmStatus::Ok);
        assert!(r.alpha.is_nan());
        assert!(r.excluded_night > 0 && r.n_scored + r.excluded_night == n - 1);
        assert!((r.ss_pct - 100.0 * (1.0 - r.rmse_forecast / r.rmse_reference)).abs() < 1e-9);

        let st = sm_score_series(obs.as_ptr(), fc.as_ptr(), cs.as_ptr(), n, 15.0,
            SmReference::ConvexCombination, 1, f64::NAN, &mut r);
        assert_eq!(st, SmStatus::Ok);
        assert!(r.alpha > 0.0 && r.alpha < 1.0);

        let st = sm_score_series(obs.as_ptr(), fc.as_ptr(), ptr::null(), n, 15.0,
            SmReference::Persistence, 2, f64::NAN, &mut r);
        assert_eq!(st, SmStatus::Ok);
        assert_eq!(r.n_scored, n - 2);

        let st = sm_score_series(obs.as_ptr(), fc.as_ptr(), cs.as_ptr(), n, 15.0,
            SmReference::ConvexCombination, 1, 1.5, &mut r);
        assert_eq!(st, SmStatus::InvalidInput);
    }
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(sm_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
