//! Sample paths by truncated moving-average filtering of SαS innovations.

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{ArtfimaError, Result};
use crate::kernel::{ma_coefficients, ma_filter_length, ArtfimaParams};
use crate::series::{SeriesData, SeriesMeta};
use crate::stable_rng::{substream, StableSpec};

/// Direct convolution is used while `n × M` stays at or below this many
/// multiply-adds; FFT above.
pub const FFT_THRESHOLD: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolutionMethod {
    Auto,
    Direct,
    Fft,
}

/// A simulated path together with the innovations that drove it.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub path: SeriesData,
    /// `innovations[t]` is `Z(t)` for the same `t` as `path.values[t]`.
    pub innovations: Vec<f64>,
    /// Number of filter coefficients used (`M + 1`).
    pub filter_len: usize,
}

/// `X(t) = Σ_{j=0}^{M} a_{-d,λ}(j) Z(t-j)` for `t = 0..n`, with `M` pre-sample
/// innovations so every output value sees the full filter.
pub fn simulate_artfima(
    params: &ArtfimaParams,
    spec: StableSpec,
    n: usize,
    seed: u64,
    tol: f64,
) -> Result<SeriesData> {
    Ok(simulate_with_innovations(params, spec, n, seed, 0, tol)?.path)
}

/// Like [`simulate_artfima`], drawing from stream `stream` of `seed` and
/// returning the innovations as well.
pub fn simulate_with_innovations(
    params: &ArtfimaParams,
    spec: StableSpec,
    n: usize,
    seed: u64,
    stream: u64,
    tol: f64,
) -> Result<Simulation> {
    let mut rng = substream(seed, stream);
    let mut sim = simulate_with_rng(params, spec, n, tol, ConvolutionMethod::Auto, &mut rng)?;
    sim.path.meta.seed = Some(seed);
    sim.path.meta.stream = Some(stream);
    Ok(sim)
}

pub fn simulate_with_rng<R: Rng + ?Sized>(
    params: &ArtfimaParams,
    spec: StableSpec,
    n: usize,
    tol: f64,
    method: ConvolutionMethod,
    rng: &mut R,
) -> Result<Simulation> {
    params.validate()?;
    if n == 0 {
        return Err(ArtfimaError::EmptyRequest("n must be at least 1".into()));
    }
    let len = ma_filter_length(params, tol)? + 1;
    let coeffs = ma_coefficients(params, len)?;
    let warm = len - 1;
    let z = spec.sample(n + warm, rng);
    let values = filter(&coeffs.values, &z, method);
    let meta = SeriesMeta {
        source: "simulate".into(),
        params: Some(params.clone()),
        stable: Some(spec),
        history: vec![format!("ma_filter(len={len}, tol={tol:e})")],
        ..SeriesMeta::default()
    };
    Ok(Simulation {
        path: SeriesData::new(values, meta)?,
        innovations: z[warm..].to_vec(),
        filter_len: len,
    })
}

/// Valid part of the linear convolution: `y(t) = Σ_j h(j) z(t + M - j)` for
/// `t = 0..z.len() - M`, where `M = h.len() - 1`.
pub fn filter(h: &[f64], z: &[f64], method: ConvolutionMethod) -> Vec<f64> {
    assert!(!h.is_empty() && z.len() >= h.len());
    let n = z.len() + 1 - h.len();
    let use_fft = match method {
        ConvolutionMethod::Direct => false,
        ConvolutionMethod::Fft => true,
        ConvolutionMethod::Auto => n.saturating_mul(h.len()) > FFT_THRESHOLD,
    };
    if use_fft {
        filter_fft(h, z)
    } else {
        filter_direct(h, z)
    }
}

fn filter_direct(h: &[f64], z: &[f64]) -> Vec<f64> {
    let m = h.len() - 1;
    let n = z.len() - m;
    (0..n)
        .map(|t| {
            let window = &z[t..=t + m];
            h.iter().zip(window.iter().rev()).map(|(a, b)| a * b).sum()
        })
        .collect()
}

fn filter_fft(h: &[f64], z: &[f64]) -> Vec<f64> {
    let m = h.len() - 1;
    let n = z.len() - m;
    let size = (z.len() + h.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut hb: Vec<Complex<f64>> = h.iter().map(|&v| Complex::new(v, 0.0)).collect();
    hb.resize(size, Complex::new(0.0, 0.0));
    let mut zb: Vec<Complex<f64>> = z.iter().map(|&v| Complex::new(v, 0.0)).collect();
    zb.resize(size, Complex::new(0.0, 0.0));
    fwd.process(&mut hb);
    fwd.process(&mut zb);
    for (a, b) in zb.iter_mut().zip(&hb) {
        *a *= b;
    }
    inv.process(&mut zb);
    let scale = 1.0 / size as f64;
    zb[m..m + n].iter().map(|c| c.re * scale).collect()
}

/// Running sample variance `V_k` (divisor `k - 1`) of `x_1..x_k`, `k = 2..n`.
pub fn cumulative_variance(series: &SeriesData) -> Result<SeriesData> {
    if series.len() < 2 {
        return Err(ArtfimaError::SeriesTooShort {
            needed: 2,
            got: series.len(),
        });
    }
    let mut out = Vec::with_capacity(series.len() - 1);
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, &x) in series.values.iter().enumerate() {
        let k = (i + 1) as f64;
        let delta = x - mean;
        mean += delta / k;
        m2 += delta * (x - mean);
        if i >= 1 {
            out.push(m2 / (k - 1.0));
        }
    }
    let mut meta = series.meta.clone();
    meta.history.push("cumulative_variance".into());
    SeriesData::new(out, meta)
}
