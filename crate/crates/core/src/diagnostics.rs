//! Residual extraction and goodness-of-fit instruments.
//!
//! [`sample_acf`] subtracts the sample mean; [`normalized_sample_acvf`] does
//! not, so for heavy-tailed data it stays a ratio of raw sums.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::error::{ArtfimaError, Result};
use crate::kernel::{ar_coefficients, ar_filter_length, ArtfimaParams};
use crate::series::SeriesData;
use crate::simulator::{filter, ConvolutionMethod};

pub const DEFAULT_LB_LAGS: usize = 20;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcfResult {
    /// `0..=max_lag`
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    /// Half-width `1.96/√n` of the white-noise band.
    pub band: f64,
    pub n: usize,
}

impl AcfResult {
    fn new(values: Vec<f64>, n: usize) -> Self {
        Self {
            lags: (0..values.len()).collect(),
            values,
            band: 1.96 / (n as f64).sqrt(),
            n,
        }
    }

    /// Number of lags `h ≥ 1` outside the band.
    pub fn exceedances(&self) -> usize {
        self.values[1..]
            .iter()
            .filter(|v| v.abs() > self.band)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LjungBox {
    pub statistic: f64,
    pub p_value: f64,
    pub lags: usize,
    pub df: usize,
}

/// `Ẑ(t) = Σ_{j=0}^{M} c(j) x_{t-j}` for `t ≥ M`, where `c` are the
/// coefficients of `Φ(B)Θ(B)^{-1}(1 - e^{-λ}B)^d` truncated at `tol`.
/// The first `M` values are discarded.
pub fn residuals(series: &SeriesData, params: &ArtfimaParams, tol: f64) -> Result<SeriesData> {
    params.validate()?;
    let m = ar_filter_length(params, tol)?;
    residuals_with_len(series, params, m + 1)
}

/// [`residuals`] with an explicit filter length `M + 1`.
pub fn residuals_with_len(
    series: &SeriesData,
    params: &ArtfimaParams,
    len: usize,
) -> Result<SeriesData> {
    if series.len() <= len {
        return Err(ArtfimaError::SeriesTooShort {
            needed: len + 1,
            got: series.len(),
        });
    }
    let c = ar_coefficients(params, len)?;
    let values = filter(&c.values, &series.values, ConvolutionMethod::Auto);
    let mut meta = series.meta.clone();
    meta.history
        .push(format!("residuals(len={len}, params={params})"));
    SeriesData::new(values, meta)
}

/// Mean-corrected sample autocorrelations `ρ̂(0..=max_lag)`.
pub fn sample_acf(series: &SeriesData, max_lag: usize) -> Result<AcfResult> {
    let n = series.len();
    if n < 2 || 2 * max_lag >= n {
        return Err(ArtfimaError::InvalidArgument(format!(
            "max_lag={max_lag} must be below half the length {n}"
        )));
    }
    let mean = series.values.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = series.values.iter().map(|v| v - mean).collect();
    let c0: f64 = x.iter().map(|v| v * v).sum();
    if !(c0 > 0.0) {
        return Err(ArtfimaError::DegenerateSeries("series is constant".into()));
    }
    let values = (0..=max_lag)
        .map(|h| if h == 0 { 1.0 } else { lag_product(&x, h) / c0 })
        .collect();
    Ok(AcfResult::new(values, n))
}

fn lag_product(x: &[f64], h: usize) -> f64 {
    x.iter().zip(&x[h..]).map(|(a, b)| a * b).sum()
}

/// `γ̃(h) = Σ_{t ≤ n-h} x_t x_{t+h} / Σ_t x_t²` for `h = 0..=max_lag`.
///
/// The `n^{-2/α}` normalisations of numerator and denominator cancel, so `α`
/// only enters through validation.
pub fn normalized_sample_acvf(
    series: &SeriesData,
    alpha: f64,
    max_lag: usize,
) -> Result<AcfResult> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(ArtfimaError::InvalidStable(format!(
            "alpha={alpha} must lie in (0, 2]"
        )));
    }
    let n = series.len();
    if max_lag >= n {
        return Err(ArtfimaError::InvalidArgument(format!(
            "max_lag={max_lag} must be below the length {n}"
        )));
    }
    let energy = series.sum_squares();
    if !(energy > 0.0) {
        return Err(ArtfimaError::DegenerateSeries(
            "series has zero energy".into(),
        ));
    }
    let values = (0..=max_lag)
        .map(|h| {
            if h == 0 {
                1.0
            } else {
                lag_product(&series.values, h) / energy
            }
        })
        .collect();
    Ok(AcfResult::new(values, n))
}

/// `Q = n(n+2) Σ_{k=1}^{H} ρ̂(k)²/(n-k)` with a `χ²_H` p-value.
pub fn ljung_box(series: &SeriesData, lags: usize) -> Result<LjungBox> {
    ljung_box_df(series, lags, 0)
}

/// [`ljung_box`] with the degrees of freedom reduced by `fitted`.
pub fn ljung_box_df(series: &SeriesData, lags: usize, fitted: usize) -> Result<LjungBox> {
    let n = series.len();
    if lags == 0 || 4 * lags >= n {
        return Err(ArtfimaError::InvalidArgument(format!(
            "lags={lags} must be positive and below a quarter of the length {n}"
        )));
    }
    if fitted >= lags {
        return Err(ArtfimaError::InvalidArgument(format!(
            "fitted={fitted} leaves no degrees of freedom for lags={lags}"
        )));
    }
    let acf = sample_acf(series, lags)?;
    let statistic = q_statistic(&acf.values[1..], n);
    let df = lags - fitted;
    Ok(LjungBox {
        statistic,
        p_value: chi2_upper(statistic, df),
        lags,
        df,
    })
}

/// `n(n+2) Σ_k ρ_k²/(n-k)` for `ρ_1..ρ_H`.
pub fn q_statistic(rho: &[f64], n: usize) -> f64 {
    let nf = n as f64;
    nf * (nf + 2.0)
        * rho
            .iter()
            .enumerate()
            .map(|(k, r)| r * r / (nf - (k + 1) as f64))
            .sum::<f64>()
}

/// `P(χ²_df > x)`
pub fn chi2_upper(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(df as f64 / 2.0, x / 2.0).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::simulate_with_innovations;
    use crate::stable_rng::{sample_sas, StableSpec};

    fn s(v: Vec<f64>) -> SeriesData {
        SeriesData::from_values(v).unwrap()
    }

    #[test]
    fn identity_filter_passes_through() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let p = ArtfimaParams::pure(0.0, 0.3).unwrap();
        let r = residuals(&s(x.clone()), &p, 1e-12).unwrap();
        assert!(r.len() >= 48);
        assert_eq!(r.values, x[x.len() - r.len()..]);
    }

    #[test]
    fn recovers_innovations() {
        let p = ArtfimaParams::pure(0.1, 0.045).unwrap();
        let sim =
            simulate_with_innovations(&p, StableSpec::standard(2.0).unwrap(), 4096, 9, 0, 1e-10)
                .unwrap();
        let r = residuals(&sim.path, &p, 1e-10).unwrap();
        let m = sim.path.len() - r.len();
        let z = &sim.innovations[m..];
        let err: f64 = r.values.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum();
        let norm: f64 = z.iter().map(|b| b * b).sum();
        assert!((err / norm).sqrt() < 0.05);
    }

    #[test]
    fn residuals_need_enough_data() {
        let p = ArtfimaParams::pure(0.4, 0.01).unwrap();
        assert!(matches!(
            residuals(&s(vec![1.0; 30]), &p, 1e-10),
            Err(ArtfimaError::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn acf_basics() {
        let x: Vec<f64> = (0..400)
            .map(|i| if (i / 50) % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let a = sample_acf(&s(x), 5).unwrap();
        assert_eq!(a.values[0], 1.0);
        assert!(a.values[1] > 0.9);
        assert!(sample_acf(&s(vec![2.0; 100]), 5).is_err());
        assert!(sample_acf(&s(vec![1.0, 2.0, 3.0, 4.0]), 2).is_err());
    }

    #[test]
    fn normalized_acvf_bounds() {
        let x = sample_sas(StableSpec::standard(1.2).unwrap(), 500, 3).unwrap();
        let a = normalized_sample_acvf(&x, 1.2, 50).unwrap();
        assert_eq!(a.values[0], 1.0);
        assert!(a.values.iter().all(|v| v.abs() <= 1.0));
        assert!(normalized_sample_acvf(&s(vec![0.0; 10]), 1.2, 3).is_err());
        assert!(normalized_sample_acvf(&x, 2.5, 3).is_err());
    }

    #[test]
    fn chi2_tail_values() {
        assert_eq!(chi2_upper(0.0, 20), 1.0);
        // P(χ²_2 > x) = e^{-x/2}
        assert!((chi2_upper(3.0, 2) - (-1.5f64).exp()).abs() < 1e-14);
        // 95th percentile of χ²_20
        assert!((chi2_upper(31.410_432_844_230_93, 20) - 0.05).abs() < 1e-10);
    }

    #[test]
    fn ljung_box_white_noise_vs_persistent() {
        let x = sample_sas(StableSpec::standard(2.0).unwrap(), 2000, 4).unwrap();
        let lb = ljung_box(&x, 20).unwrap();
        assert!(lb.statistic >= 0.0 && lb.p_value > 0.001);
        let p = ArtfimaParams::pure(0.4, 0.01).unwrap();
        let y = crate::simulator::simulate_artfima(
            &p,
            StableSpec::standard(2.0).unwrap(),
            2000,
            4,
            1e-8,
        )
        .unwrap();
        assert!(ljung_box(&y, 20).unwrap().p_value < 1e-6);
        let reduced = ljung_box_df(&x, 20, 4).unwrap();
        assert_eq!(reduced.df, 16);
        assert!(reduced.p_value <= lb.p_value);
        assert!(ljung_box(&x, 600).is_err());
    }
}
