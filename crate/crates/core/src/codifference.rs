//! Theoretical co-difference of a stable ARTFIMA process and its tail
//! asymptotics.
//!
//! For `X(t) = Σ a(j) Z(t-j)` with SαS innovations,
//! `τ(n) = Σ_j [|a(j)|^α + |a(j+n)|^α - |a(j) - a(j+n)|^α]`.
//! At large lags `a(j+n)` is many orders of magnitude below `a(j)`, so the
//! bracket is evaluated as `|a(j+n)|^α + D(a(j), a(j+n))` where
//! `D(u, v) = |u|^α - |u - v|^α` is computed through `expm1`/`ln_1p`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ArtfimaError, Result};
use crate::kernel::{ln_abs_gamma, ma_coefficients, ma_filter_length, ArtfimaParams};
use crate::series::{SeriesData, SeriesMeta};

const ZERO_GUARD: f64 = 1e-300;

/// `τ(0..=max_lag)` for one parameter set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodiffCurve {
    pub tau: Vec<f64>,
    pub alpha: f64,
    pub params: ArtfimaParams,
    /// Number of inner-sum terms used per lag.
    pub inner_truncation: usize,
}

impl CodiffCurve {
    pub fn max_lag(&self) -> usize {
        self.tau.len() - 1
    }
}

#[inline]
fn abs_pow(x: f64, alpha: f64) -> f64 {
    let a = x.abs();
    if a < ZERO_GUARD {
        0.0
    } else {
        (alpha * a.ln()).exp()
    }
}

/// `|u|^α - |u - v|^α` without cancellation when `|v| ≪ |u|`.
#[inline]
fn power_gap(u: f64, v: f64, alpha: f64) -> f64 {
    if u.abs() >= ZERO_GUARD && v.abs() <= 0.5 * u.abs() {
        let r = v / u;
        -abs_pow(u, alpha) * (alpha * (-r).ln_1p()).exp_m1()
    } else {
        abs_pow(u, alpha) - abs_pow(u - v, alpha)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(ArtfimaError::InvalidStable(format!(
            "alpha={alpha} must lie in (0, 2]"
        )))
    }
}

/// Evaluates `τ(n)` for `n = 0..=max_lag`, truncating each inner sum at the
/// moving-average filter length for `tol`.
pub fn theoretical_codifference(
    params: &ArtfimaParams,
    alpha: f64,
    max_lag: usize,
    tol: f64,
) -> Result<CodiffCurve> {
    check_alpha(alpha)?;
    params.validate()?;
    let inner = ma_filter_length(params, tol)? + 1;
    let a = ma_coefficients(params, inner + max_lag)?.values;
    let tau = (0..=max_lag)
        .into_par_iter()
        .map(|n| codiff_at(&a, inner, n, alpha))
        .collect();
    Ok(CodiffCurve {
        tau,
        alpha,
        params: params.clone(),
        inner_truncation: inner,
    })
}

fn codiff_at(a: &[f64], inner: usize, n: usize, alpha: f64) -> f64 {
    // sum small terms first
    (0..inner)
        .rev()
        .map(|j| {
            let (u, v) = (a[j], a[j + n]);
            abs_pow(v, alpha) + power_gap(u, v, alpha)
        })
        .sum()
}

/// Normalising sequence for the co-difference tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayRate {
    /// `e^{-λαn} n^{α(d-1)}`, the regime `α < 1`
    TemperedAlphaPower,
    /// `e^{-λn} n^{d-1}`, the regime `α > 1`
    TemperedPower,
}

impl DecayRate {
    /// Natural log of the normalising sequence at lag `n`.
    pub fn ln_rate(&self, d: f64, lambda: f64, alpha: f64, n: f64) -> f64 {
        match self {
            DecayRate::TemperedAlphaPower => -lambda * alpha * n + alpha * (d - 1.0) * n.ln(),
            DecayRate::TemperedPower => -lambda * n + (d - 1.0) * n.ln(),
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            DecayRate::TemperedAlphaPower => "exp(-lambda*alpha*n) * n^(alpha*(d-1))",
            DecayRate::TemperedPower => "exp(-lambda*n) * n^(d-1)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticLimit {
    pub rate: DecayRate,
    pub constant: f64,
}

fn check_pure(params: &ArtfimaParams) -> Result<()> {
    if params.p() != 0 || params.q() != 0 {
        return Err(ArtfimaError::Unsupported(
            "tail constants are only available for ARTFIMA(0,d,lambda,0)".into(),
        ));
    }
    params.validate()
}

/// Limit of `τ(n) / rate(n)` for ARTFIMA(0,d,λ,0).
///
/// * `α < 1`: `Γ(d)^{-α} (1 - e^{-λα})^{-1}` against `e^{-λαn} n^{α(d-1)}`.
/// * `α > 1`: `(α/Γ(d)) Σ_j e^{-λj} ω_{-d,λ}(j)^{α-1}` against `e^{-λn} n^{d-1}`.
///
/// `α = 1` sits between the two regimes and is rejected.
pub fn asymptotic_constant(params: &ArtfimaParams, alpha: f64) -> Result<AsymptoticLimit> {
    check_alpha(alpha)?;
    check_pure(params)?;
    if alpha == 1.0 {
        return Err(ArtfimaError::Unsupported(
            "no tail limit is available at alpha = 1".into(),
        ));
    }
    let (d, lambda) = (params.d(), params.lambda());
    if alpha < 1.0 {
        let inv_gamma_pow = (-alpha * ln_abs_gamma(d)).exp();
        return Ok(AsymptoticLimit {
            rate: DecayRate::TemperedAlphaPower,
            constant: inv_gamma_pow / (1.0 - (-lambda * alpha).exp()),
        });
    }
    Ok(AsymptoticLimit {
        rate: DecayRate::TemperedPower,
        constant: alpha * signed_inv_gamma(d) * tempered_power_series(d, lambda, lambda, alpha),
    })
}

fn signed_inv_gamma(d: f64) -> f64 {
    if d > 0.0 {
        (-ln_abs_gamma(d)).exp()
    } else {
        1.0 / statrs::function::gamma::gamma(d)
    }
}

/// `Σ_j e^{-κj} sgn(ω) |ω_{-d,λ}(j)|^{α-1}` to relative accuracy 1e-10.
fn tempered_power_series(d: f64, lambda: f64, kappa: f64, alpha: f64) -> f64 {
    let decay_w = (-lambda).exp();
    let decay_k = (-kappa).exp();
    let geometric_tail = 1.0 / (1.0 - (-(kappa + lambda * (alpha - 1.0))).exp());
    let mut w = 1.0f64;
    let mut k = 1.0f64;
    let mut sum = 0.0;
    for j in 0..crate::kernel::MAX_COEFFICIENTS {
        if j > 0 {
            let jf = j as f64;
            w *= decay_w * (jf - 1.0 + d) / jf;
            k *= decay_k;
        }
        let term = k * w.signum() * abs_pow(w, alpha - 1.0);
        sum += term;
        if j > 10 && (term.abs() * geometric_tail * 10.0) < 1e-10 * sum.abs() {
            break;
        }
    }
    sum
}

/// The two closed forms that have been proposed for the `α > 1` tail limit.
///
/// They share the series `Σ_j e^{-λj} ω_{-d,λ}(j)^{α-1}` (equivalently
/// `Σ_j e^{-λαj} ω_{-d}(j)^{α-1}`) but differ in the gamma prefactor:
/// `α/Γ(d)` versus `α Γ(d)^{-α}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCandidates {
    pub inverse_gamma: f64,
    pub gamma_power_alpha: f64,
}

pub fn tail_candidates(params: &ArtfimaParams, alpha: f64) -> Result<TailCandidates> {
    check_pure(params)?;
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(ArtfimaError::Unsupported(format!(
            "tail candidates are defined for alpha in (1, 2], got {alpha}"
        )));
    }
    let (d, lambda) = (params.d(), params.lambda());
    // untempered weights with the e^{-λαj} factor: same series, second route
    let untempered = tempered_power_series(d, 0.0, lambda * alpha, alpha);
    let tempered = tempered_power_series(d, lambda, lambda, alpha);
    debug_assert!((untempered - tempered).abs() <= 1e-8 * tempered.abs());
    let sign = signed_inv_gamma(d).signum();
    Ok(TailCandidates {
        inverse_gamma: alpha * signed_inv_gamma(d) * tempered,
        gamma_power_alpha: alpha * sign * (-alpha * ln_abs_gamma(d)).exp() * untempered,
    })
}

/// Which candidate the direct series supports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailMatch {
    pub lags: Vec<usize>,
    pub ratios: Vec<f64>,
    pub candidates: TailCandidates,
    pub matched: String,
    pub relative_error: f64,
}

/// Compares `τ(n)/(e^{-λn} n^{d-1})` at the largest of `lags` against both
/// closed forms and reports the closer one.
pub fn match_tail_constant(
    params: &ArtfimaParams,
    alpha: f64,
    lags: &[usize],
    tol: f64,
) -> Result<TailMatch> {
    let candidates = tail_candidates(params, alpha)?;
    let max_lag = *lags
        .iter()
        .max()
        .ok_or_else(|| ArtfimaError::InvalidArgument("no lags given".into()))?;
    let curve = theoretical_codifference(params, alpha, max_lag, tol)?;
    let ratios = normalized_ratio(&curve, DecayRate::TemperedPower, lags);
    let last = *ratios.last().unwrap();
    let e1 = (last / candidates.inverse_gamma - 1.0).abs();
    let e2 = (last / candidates.gamma_power_alpha - 1.0).abs();
    let (matched, relative_error) = if e1 <= e2 {
        ("alpha/Gamma(d)", e1)
    } else {
        ("alpha*Gamma(d)^(-alpha)", e2)
    };
    Ok(TailMatch {
        lags: lags.to_vec(),
        ratios,
        candidates,
        matched: matched.into(),
        relative_error,
    })
}

/// `τ(n) / rate(n)` at the requested lags (all must be ≥ 1 and ≤ max lag).
pub fn normalized_ratio(curve: &CodiffCurve, rate: DecayRate, lags: &[usize]) -> Vec<f64> {
    let (d, lambda) = (curve.params.d(), curve.params.lambda());
    lags.iter()
        .map(|&n| {
            let ln_r = rate.ln_rate(d, lambda, curve.alpha, n as f64);
            curve.tau[n] * (-ln_r).exp()
        })
        .collect()
}

/// Running sums `S_N = Σ_{n≤N} |τ(n)|`.
pub fn codiff_abs_partial_sums(curve: &CodiffCurve) -> SeriesData {
    let mut acc = 0.0;
    let values = curve
        .tau
        .iter()
        .map(|t| {
            acc += t.abs();
            acc
        })
        .collect();
    SeriesData {
        values,
        meta: SeriesMeta {
            source: "codifference".into(),
            params: Some(curve.params.clone()),
            history: vec![format!("abs_partial_sums(alpha={})", curve.alpha)],
            ..SeriesMeta::default()
        },
    }
}

/// Cauchy increment `S_{2N} - S_N` of a partial-sum series.
pub fn cauchy_increment(partial: &SeriesData, n: usize) -> Option<f64> {
    let s = &partial.values;
    (2 * n < s.len()).then(|| s[2 * n] - s[n])
}

/// `2 Σ_j a(j) a(j+n)`, the autocovariance of the Gaussian (`α = 2`) model.
pub fn gaussian_autocovariance(
    params: &ArtfimaParams,
    max_lag: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let inner = ma_filter_length(params, tol)? + 1;
    let a = ma_coefficients(params, inner + max_lag)?.values;
    Ok((0..=max_lag)
        .map(|n| 2.0 * (0..inner).map(|j| a[j] * a[j + n]).sum::<f64>())
        .collect())
}
