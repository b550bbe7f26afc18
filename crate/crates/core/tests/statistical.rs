use artfima::diagnostics::{
    chi2_upper, ljung_box, normalized_sample_acvf, q_statistic, residuals, residuals_with_len,
    sample_acf,
};
use artfima::estimation::{
    identifiability_margin, mcculloch_alpha, quantile_ratio, whittle_objective,
};
use artfima::kernel::{ar_filter_length, ma_coefficients};
use artfima::montecarlo::{run_replicates, McConfig};
use artfima::simulator::{cumulative_variance, simulate_artfima, simulate_with_innovations};
use artfima::spectral::self_normalized_periodogram;
use artfima::stable_rng::{sample_sas, sample_sas_stream};
use artfima::{ArtfimaParams, StableSpec};
use rayon::prelude::*;

fn spec(alpha: f64) -> StableSpec {
    StableSpec::standard(alpha).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn autocov(x: &[f64], h: usize) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter()
        .zip(&x[h..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum::<f64>()
        / n
}

#[test]
fn gaussian_autocovariance_matches_filter() {
    let p = ArtfimaParams::pure(0.3, 0.05).unwrap();
    let a = ma_coefficients(&p, 4000).unwrap();
    let a = a.as_slice();
    let lags = 0..6;
    let target: Vec<f64> = lags
        .clone()
        .map(|h| 2.0 * a.iter().zip(&a[h..]).map(|(u, v)| u * v).sum::<f64>())
        .collect();
    let reps: Vec<Vec<f64>> = (0..50u64)
        .into_par_iter()
        .map(|s| {
            let x = simulate_artfima(&p, spec(2.0), 8192, s, 1e-10).unwrap();
            lags.clone().map(|h| autocov(&x.values, h)).collect()
        })
        .collect();
    for h in lags {
        let vals: Vec<f64> = reps.iter().map(|r| r[h]).collect();
        let mean = vals.iter().sum::<f64>() / 50.0;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 49.0).sqrt();
        let se = sd / 50f64.sqrt();
        assert!(
            (mean - target[h]).abs() < 3.0 * se,
            "lag {h}: {mean} vs {} (se {se})",
            target[h]
        );
    }
}

#[test]
fn gaussian_cumulative_variance_settles() {
    let p = ArtfimaParams::pure(0.1, 0.045).unwrap();
    let passes = (0..20u64)
        .filter(|&s| {
            let x = simulate_artfima(&p, spec(2.0), 10_000, 300 + s, 1e-10).unwrap();
            let v = cumulative_variance(&x).unwrap().values;
            let last = *v.last().unwrap();
            v[4999..]
                .iter()
                .map(|vk| (vk - last).abs() / last)
                .fold(0.0, f64::max)
                < 0.2
        })
        .count();
    assert!(passes >= 18, "{passes}/20");
}

#[test]
fn exact_round_trip_for_short_memory() {
    let p = ArtfimaParams::pure(0.05, 0.8).unwrap();
    let sim = simulate_with_innovations(&p, spec(2.0), 2000, 3, 0, 1e-15).unwrap();
    let m = ar_filter_length(&p, 1e-15).unwrap().max(sim.filter_len - 1);
    let r = residuals_with_len(&sim.path, &p, m + 1).unwrap();
    let z = &sim.innovations[m..];
    for (a, b) in r.values.iter().zip(z) {
        assert!((a - b).abs() < 1e-12 * b.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn truth_beats_distant_point() {
    let truth = ArtfimaParams::pure(0.1, 0.045).unwrap();
    let far = ArtfimaParams::pure(0.5, 0.5).unwrap();
    let wins = (0..100u64)
        .into_par_iter()
        .filter(|&s| {
            let x = simulate_with_innovations(&truth, spec(1.3), 10_000, 1, s, 1e-10).unwrap();
            let pg = self_normalized_periodogram(&x.path).unwrap();
            whittle_objective(&pg, &truth).unwrap() < whittle_objective(&pg, &far).unwrap()
        })
        .count();
    assert!(wins >= 95, "{wins}/100");
}

#[test]
fn wrong_memory_leaves_lag_one_correlation() {
    let truth = ArtfimaParams::pure(0.1, 0.045).unwrap();
    let wrong = ArtfimaParams::pure(0.4, 0.045).unwrap();
    let hits = (0..100u64)
        .into_par_iter()
        .filter(|&s| {
            let x = simulate_with_innovations(&truth, spec(1.3), 4096, 2, s, 1e-10).unwrap();
            let r = residuals(&x.path, &wrong, 1e-10).unwrap();
            let acf = sample_acf(&r, 1).unwrap();
            acf.values[1].abs() > acf.band
        })
        .count();
    assert!(hits >= 90, "{hits}/100");
}

#[test]
fn normalized_acvf_tracks_model() {
    let p = ArtfimaParams::pure(0.1, 0.045).unwrap();
    let a = ma_coefficients(&p, 20_000).unwrap();
    let a = a.as_slice();
    let target = a.iter().zip(&a[1..]).map(|(u, v)| u * v).sum::<f64>()
        / a.iter().map(|u| u * u).sum::<f64>();
    let dev: Vec<f64> = (0..50u64)
        .into_par_iter()
        .map(|s| {
            let x = simulate_with_innovations(&p, spec(1.3), 10_000, 3, s, 1e-10).unwrap();
            (normalized_sample_acvf(&x.path, 1.3, 1).unwrap().values[1] - target).abs()
        })
        .collect();
    let mad = median(dev);
    assert!(mad < 0.05, "{mad}");
}

#[test]
fn white_noise_acf_stays_in_band() {
    let x = sample_sas(spec(2.0), 10_000, 17).unwrap();
    let acf = sample_acf(&x, 100).unwrap();
    assert!(acf.exceedances() <= 8, "{}", acf.exceedances());
}

#[test]
fn ljung_box_size() {
    let rejections = (0..200u64)
        .filter(|&s| {
            let x = sample_sas_stream(spec(2.0), 1000, 4, s).unwrap();
            ljung_box(&x, 20).unwrap().p_value < 0.05
        })
        .count();
    let rate = rejections as f64 / 200.0;
    assert!((0.02..=0.10).contains(&rate), "{rate}");
}

#[test]
fn zero_autocorrelation_gives_unit_p() {
    let q = q_statistic(&[0.0; 10], 100);
    assert_eq!(q, 0.0);
    assert_eq!(chi2_upper(q, 10), 1.0);
}

#[test]
fn mcculloch_reference_distributions() {
    let g = sample_sas(spec(2.0), 200_000, 5).unwrap();
    let nu = quantile_ratio(&g).unwrap();
    assert!((nu - 2.439).abs() < 0.03, "{nu}");
    assert!(mcculloch_alpha(&g).unwrap() > 1.95);

    let c = sample_sas(spec(1.0), 200_000, 6).unwrap();
    let nu = quantile_ratio(&c).unwrap();
    assert!((nu - 6.314).abs() < 0.15, "{nu}");
    assert!((mcculloch_alpha(&c).unwrap() - 1.0).abs() < 0.03);
}

#[test]
fn identifiability_on_grid() {
    let mut grid = Vec::new();
    for d in [-0.4, -0.1, 0.1, 0.3, 0.6, 1.1] {
        for l in [0.01, 0.05, 0.2, 1.0] {
            grid.push(ArtfimaParams::pure(d, l).unwrap());
        }
    }
    for (i, b1) in grid.iter().enumerate() {
        for b2 in &grid[i + 1..] {
            let m12 = identifiability_margin(b1, b2, 4096);
            let m21 = identifiability_margin(b2, b1, 4096);
            assert!(m12 > 1e-4 && m21 > 1e-4, "{b1} {b2}: {m12} {m21}");
        }
    }
}

#[test]
fn estimates_tighten_with_length() {
    for alpha in [2.0, 1.3] {
        let p = ArtfimaParams::pure(0.1, 0.045).unwrap();
        let err = |n: usize| {
            let cfg = McConfig::new(p.clone(), spec(alpha), n, 50, 41);
            let idx: Vec<usize> = (0..50).collect();
            median(
                run_replicates(&cfg, &idx)
                    .into_iter()
                    .map(|r| (r.estimate.unwrap()[0] - 0.1).abs())
                    .collect(),
            )
        };
        let (short, long) = (err(1024), err(8192));
        assert!(long < short, "alpha={alpha}: {long} vs {short}");
    }
}
