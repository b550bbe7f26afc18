//! Quantile-based tail index estimate for symmetric stable samples.

use crate::error::{ArtfimaError, Result};
use crate::series::SeriesData;

pub const MIN_ALPHA_LEN: usize = 100;

/// Symmetric column of McCulloch's `ν_α → α` table.
const NU: [f64; 15] = [
    2.439, 2.5, 2.6, 2.7, 2.8, 3.0, 3.2, 3.5, 4.0, 5.0, 6.0, 8.0, 10.0, 15.0, 25.0,
];
const ALPHA: [f64; 15] = [
    2.000, 1.916, 1.808, 1.729, 1.664, 1.563, 1.484, 1.391, 1.279, 1.128, 1.029, 0.896, 0.818,
    0.698, 0.593,
];

/// Sample quantile with Hazen plotting positions `(i - 0.5)/n` and linear
/// interpolation between order statistics. `sorted` must be ascending.
pub fn hazen_quantile(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    let pos = prob * n as f64 + 0.5;
    if pos <= 1.0 {
        return sorted[0];
    }
    if pos >= n as f64 {
        return sorted[n - 1];
    }
    let lo = pos.floor();
    let frac = pos - lo;
    let i = lo as usize - 1;
    sorted[i] + frac * (sorted[i + 1] - sorted[i])
}

/// `(q₀.₉₅ - q₀.₀₅) / (q₀.₇₅ - q₀.₂₅)`
pub fn quantile_ratio(series: &SeriesData) -> Result<f64> {
    if series.len() < MIN_ALPHA_LEN {
        return Err(ArtfimaError::SeriesTooShort {
            needed: MIN_ALPHA_LEN,
            got: series.len(),
        });
    }
    let mut v = series.values.clone();
    v.sort_by(f64::total_cmp);
    let iqr = hazen_quantile(&v, 0.75) - hazen_quantile(&v, 0.25);
    if !(iqr > 0.0) {
        return Err(ArtfimaError::DegenerateSeries(
            "interquartile range is zero".into(),
        ));
    }
    Ok((hazen_quantile(&v, 0.95) - hazen_quantile(&v, 0.05)) / iqr)
}

/// Table inversion of `ν_α`, clamped to `[0.5, 2]`.
pub fn alpha_from_ratio(nu: f64) -> f64 {
    if nu <= NU[0] {
        return 2.0;
    }
    let k = NU.partition_point(|&x| x < nu).clamp(1, NU.len() - 1);
    let t = (nu - NU[k - 1]) / (NU[k] - NU[k - 1]);
    let a = ALPHA[k - 1] + t * (ALPHA[k] - ALPHA[k - 1]);
    a.clamp(0.5, 2.0)
}

pub fn mcculloch_alpha(series: &SeriesData) -> Result<f64> {
    Ok(alpha_from_ratio(quantile_ratio(series)?))
}
