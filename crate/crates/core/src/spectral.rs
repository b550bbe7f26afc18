//! Periodograms and the tempered power transfer function.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{ArtfimaError, Result};
use crate::kernel::ArtfimaParams;
use crate::series::SeriesData;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Normalization {
    /// `|DFT|² / Σ x²`
    SelfNormalized,
    /// `n^{-2/α} |DFT|²`
    AlphaScaled(f64),
}

/// Ordinates at the Fourier frequencies `2πj/n`, `j = 1..=⌊n/2⌋`.
///
/// Zero is excluded; `π` is present when `n` is even.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Periodogram {
    pub n: usize,
    pub freqs: Vec<f64>,
    pub ordinates: Vec<f64>,
    pub normalization: Normalization,
}

impl Periodogram {
    /// Multiplicity of each ordinate on the symmetric grid `(-π, π]`:
    /// 2 for interior frequencies, 1 for `π`.
    pub fn grid_weights(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n;
        (1..=self.freqs.len()).map(move |j| if 2 * j == n { 1.0 } else { 2.0 })
    }
}

const MIN_LEN: usize = 4;

/// `|Σ_t x_t e^{-itω}|²` for every DFT frequency `2πk/n`, `k = 0..n`.
pub fn dft_power(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::<f64>::new()
        .plan_fft_forward(n)
        .process(&mut buf);
    buf.iter().map(|c| c.norm_sqr()).collect()
}

fn check_len(series: &SeriesData) -> Result<()> {
    if series.len() < MIN_LEN {
        return Err(ArtfimaError::SeriesTooShort {
            needed: MIN_LEN,
            got: series.len(),
        });
    }
    Ok(())
}

fn positive_half(n: usize, power: &[f64], scale: f64, normalization: Normalization) -> Periodogram {
    let m = n / 2;
    Periodogram {
        n,
        freqs: (1..=m).map(|j| 2.0 * PI * j as f64 / n as f64).collect(),
        ordinates: power[1..=m].iter().map(|p| p * scale).collect(),
        normalization,
    }
}

/// `Ĩ(ω_j) = |Σ_t x_t e^{-itω_j}|² / Σ_t x_t²`. Invariant under rescaling
/// of the series.
pub fn self_normalized_periodogram(series: &SeriesData) -> Result<Periodogram> {
    check_len(series)?;
    let energy = series.sum_squares();
    if !(energy > 0.0) {
        return Err(ArtfimaError::DegenerateSeries(
            "series has zero energy".into(),
        ));
    }
    let power = dft_power(&series.values);
    Ok(positive_half(
        series.len(),
        &power,
        1.0 / energy,
        Normalization::SelfNormalized,
    ))
}

/// Self-normalised ordinates on the full grid `2πk/n`, `k = 0..n`. Their mean
/// is exactly one by Parseval.
pub fn full_grid_self_normalized(series: &SeriesData) -> Result<Vec<f64>> {
    check_len(series)?;
    let energy = series.sum_squares();
    if !(energy > 0.0) {
        return Err(ArtfimaError::DegenerateSeries(
            "series has zero energy".into(),
        ));
    }
    Ok(dft_power(&series.values)
        .into_iter()
        .map(|p| p / energy)
        .collect())
}

/// `I(ω_j) = n^{-2/α} |Σ_t x_t e^{-itω_j}|²`.
pub fn alpha_scaled_periodogram(series: &SeriesData, alpha: f64) -> Result<Periodogram> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(ArtfimaError::InvalidStable(format!(
            "alpha={alpha} must lie in (0, 2]"
        )));
    }
    check_len(series)?;
    let n = series.len();
    let scale = (n as f64).powf(-2.0 / alpha);
    let power = dft_power(&series.values);
    Ok(positive_half(
        n,
        &power,
        scale,
        Normalization::AlphaScaled(alpha),
    ))
}

/// `ln g(ω, β)` where
/// `g = |Θ(e^{-iω})|² / |Φ(e^{-iω})|² · (1 - 2e^{-λ}cos ω + e^{-2λ})^{-d}`.
pub fn log_transfer(params: &ArtfimaParams, omega: f64) -> f64 {
    let el = (-params.lambda()).exp();
    let base = 1.0 - 2.0 * el * omega.cos() + el * el;
    let (ar, ma) = arma_moduli(params.phi(), params.theta(), omega);
    ma.ln() - ar.ln() - params.d() * base.ln()
}

/// `(|Φ(e^{-iω})|², |Θ(e^{-iω})|²)`
pub(crate) fn arma_moduli(phi: &[f64], theta: &[f64], omega: f64) -> (f64, f64) {
    let poly = |coeffs: &[f64], sign: f64| {
        let (mut re, mut im) = (1.0, 0.0);
        for (k, c) in coeffs.iter().enumerate() {
            let kw = (k + 1) as f64 * omega;
            re += sign * c * kw.cos();
            im -= sign * c * kw.sin();
        }
        re * re + im * im
    };
    (poly(phi, -1.0), poly(theta, 1.0))
}

/// Tempered power transfer function at each `ω`.
///
/// Fails only in the untempered limit `λ = 0` at `ω = 0` with `d > 0`, where
/// the spectrum has a pole.
pub fn transfer_function(params: &ArtfimaParams, omegas: &[f64]) -> Result<Vec<f64>> {
    omegas
        .iter()
        .map(|&w| {
            if params.lambda() == 0.0 && params.d() > 0.0 && (w / (2.0 * PI)).fract() == 0.0 {
                return Err(ArtfimaError::SingularSpectrum(format!(
                    "untempered pole at omega={w} with d={}",
                    params.d()
                )));
            }
            Ok(log_transfer(params, w).exp())
        })
        .collect()
}

/// Trapezoid nodes on `(-π, π]`: `-π + 2πk/N`, `k = 1..=N`. For periodic
/// integrands the rule reduces to `(2π/N) Σ f(ω_k)`.
pub fn periodic_grid(points: usize) -> Vec<f64> {
    (1..=points)
        .map(|k| -PI + 2.0 * PI * k as f64 / points as f64)
        .collect()
}

/// `(1/2π) ∫ g(ω,β₁)/g(ω,β₂) dω` by the periodic trapezoid rule.
pub fn spectral_ratio_mean(b1: &ArtfimaParams, b2: &ArtfimaParams, points: usize) -> f64 {
    let grid = periodic_grid(points);
    grid.iter()
        .map(|&w| (log_transfer(b1, w) - log_transfer(b2, w)).exp())
        .sum::<f64>()
        / points as f64
}

/// Subtracts the sample mean.
pub fn demean(series: &SeriesData) -> SeriesData {
    let n = series.len().max(1) as f64;
    let mean = series.values.iter().sum::<f64>() / n;
    let values = series.values.iter().map(|v| v - mean).collect();
    let mut meta = series.meta.clone();
    meta.history.push("demean".into());
    SeriesData { values, meta }
}
