use rand::Rng;
use rand_chacha::ChaCha8Rng;
use skillmeta::meta_db::ReferenceModel;
use skillmeta::skill::{
    climatology_forecast, cp_forecast, optimize_alpha, persistence_forecast, rmse,
    score_forecast, smart_persistence_forecast, AlphaPolicy, ReferenceForecast, SolarSeries,
};

pub struct Case {
    pub obs: Vec<f64>,
    pub clear_sky: Vec<f64>,
    pub forecast: Vec<f64>,
    pub h: usize,
}

/// Clear-sky bell with nights, clearness as a bounded AR(1).
pub fn random_case(r: &mut ChaCha8Rng) -> Case {
    let n = r.gen_range(50..=500);
    let h = [1, 2, 4][r.gen_range(0..3)];
    let day = r.gen_range(24..96);
    let peak = r.gen_range(600.0..1000.0);
    let clear_sky: Vec<f64> = (0..n)
        .map(|i| {
            let phase = (i % day) as f64 / day as f64;
            let s = (std::f64::consts::PI * (phase * 1.6 - 0.3)).sin();
            if s > 0.0 { peak * s } else { 0.0 }
        })
        .collect();
    let phi: f64 = r.gen_range(0.5..0.95);
    let mut k: f64 = 0.7;
    let obs: Vec<f64> = clear_sky
        .iter()
        .map(|cs| {
            k = (0.7 + phi * (k - 0.7) + r.gen_range(-0.15..0.15)).clamp(0.05, 1.1);
            cs * k
        })
        .collect();
    let forecast = obs
        .iter()
        .map(|v| (v + r.gen_range(-40.0..40.0)).max(0.0))
        .collect();
    Case { obs, clear_sky, forecast, h }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

fn oracle_rmse(pairs: &[(f64, f64)]) -> f64 {
    (pairs.iter().map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / pairs.len() as f64).sqrt()
}

/// Direct formulas: (index, value) for persistence, SP, CP and the mean.
pub fn oracle(c: &Case, alpha: f64) -> (Vec<(usize, f64)>, Vec<(usize, f64)>, Vec<(usize, f64)>, f64) {
    let n = c.obs.len();
    let mean = c.obs.iter().sum::<f64>() / n as f64;
    let mut p = Vec::new();
    let mut sp = Vec::new();
    let mut cp = Vec::new();
    for i in c.h..n {
        p.push((i, c.obs[i - c.h]));
        if c.clear_sky[i] > 0.0 && c.clear_sky[i - c.h] > 0.0 {
            let v = c.obs[i - c.h] * c.clear_sky[i] / c.clear_sky[i - c.h];
            sp.push((i, v));
            cp.push((i, alpha * v + (1.0 - alpha) * mean));
        }
    }
    (p, sp, cp, mean)
}

pub fn series(c: &Case) -> SolarSeries {
    SolarSeries::new(c.obs.clone(), 15.0)
        .unwrap()
        .with_clear_sky(c.clear_sky.clone())
        .unwrap()
}

fn matches(got: &ReferenceForecast, want: &[(usize, f64)]) -> bool {
    got.indices.len() == want.len()
        && got
            .indices
            .iter()
            .zip(&got.values)
            .zip(want)
            .all(|((&i, &v), &(wi, wv))| i == wi && close(v, wv))
}

/// Runs the oracle comparison on one case; returns a description of the
/// first mismatch.
pub fn check_case(c: &Case) -> Result<(), String> {
    let s = series(c);
    let alpha = 0.37;
    let (p, sp, cp, mean) = oracle(c, alpha);

    if !matches(&persistence_forecast(&s, c.h).unwrap(), &p) {
        return Err("persistence".into());
    }
    if !matches(&smart_persistence_forecast(&s, c.h).unwrap(), &sp) {
        return Err("smart persistence".into());
    }
    if !matches(&cp_forecast(&s, c.h, alpha).unwrap(), &cp) {
        return Err("cp".into());
    }
    let clim = climatology_forecast(&s).unwrap();
    if !clim.values.iter().all(|&v| close(v, mean)) || clim.indices.len() != c.obs.len() {
        return Err("climatology".into());
    }

    for (reference, want) in [
        (ReferenceModel::Persistence, &p),
        (ReferenceModel::SmartPersistence, &sp),
        (ReferenceModel::ConvexCombination, &cp),
    ] {
        let got = score_forecast(&s, &c.forecast, reference, c.h, AlphaPolicy::Fixed(alpha)).unwrap();
        let a_f = oracle_rmse(&want.iter().map(|&(i, _)| (c.obs[i], c.forecast[i])).collect::<Vec<_>>());
        let a_r = oracle_rmse(&want.iter().map(|&(i, v)| (c.obs[i], v)).collect::<Vec<_>>());
        let ss = 100.0 * (1.0 - a_f / a_r);
        if !(close(got.rmse_forecast, a_f) && close(got.rmse_reference, a_r) && close(got.ss_pct, ss)) {
            return Err(format!("{reference:?} score: {got:?} vs {a_f} {a_r} {ss}"));
        }
    }
    Ok(())
}

/// Optimized CP against SP and climatology on the SP-covered indices.
pub fn cp_dominates(c: &Case) -> Result<(), String> {
    let s = series(c);
    let a = optimize_alpha(&s, c.h).unwrap();
    let cp = cp_forecast(&s, c.h, a).unwrap();
    let actual: Vec<f64> = cp.indices.iter().map(|&i| c.obs[i]).collect();
    let r_cp = rmse(&actual, &cp.values).unwrap();
    let sp = smart_persistence_forecast(&s, c.h).unwrap();
    let r_sp = rmse(&actual, &sp.values).unwrap();
    let r_clim = rmse(&actual, &vec![s.mean(); actual.len()]).unwrap();
    if r_cp <= r_sp.min(r_clim) + 1e-9 {
        Ok(())
    } else {
        Err(format!("alpha {a}: cp {r_cp} sp {r_sp} clim {r_clim}"))
    }
}

/// Unconstrained minimizer of the CP squared error.
pub fn free_alpha(c: &Case) -> f64 {
    let (_, sp, _, mean) = oracle(c, 0.0);
    let (mut num, mut den) = (0.0, 0.0);
    for &(i, v) in &sp {
        num += (c.obs[i] - mean) * (v - mean);
        den += (v - mean) * (v - mean);
    }
    num / den
}
