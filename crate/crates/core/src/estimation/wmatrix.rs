//! The asymptotic matrix `W(β) = ∫ ∇ ln g ∇ ln gᵀ dω` and spectral-ratio
//! identifiability checks.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{ArtfimaError, Result};
use crate::kernel::ArtfimaParams;
use crate::spectral::{arma_moduli, periodic_grid, spectral_ratio_mean};

pub const DEFAULT_W_POINTS: usize = 1024;

const REL_STEP: f64 = 1e-6;
const STEP_FLOOR: f64 = 1e-2;

fn log_g(p: usize, beta: &[f64], omega: f64) -> f64 {
    let (phi, rest) = beta.split_at(p);
    let (d, lambda, theta) = (rest[0], rest[1], &rest[2..]);
    if !(lambda > 0.0) {
        return f64::NAN;
    }
    let el = (-lambda).exp();
    let base = 1.0 - 2.0 * el * omega.cos() + el * el;
    let (ar, ma) = arma_moduli(phi, theta, omega);
    ma.ln() - ar.ln() - d * base.ln()
}

/// `∂ ln g(ω, β)/∂β` by central differences.
pub fn log_transfer_gradient(params: &ArtfimaParams, omega: f64) -> Result<Vec<f64>> {
    let p = params.p();
    let beta = params.beta();
    let mut grad = Vec::with_capacity(beta.len());
    let mut work = beta.clone();
    for i in 0..beta.len() {
        let h = REL_STEP * beta[i].abs().max(STEP_FLOOR);
        work[i] = beta[i] + h;
        let up = log_g(p, &work, omega);
        work[i] = beta[i] - h;
        let down = log_g(p, &work, omega);
        work[i] = beta[i];
        let g = (up - down) / (2.0 * h);
        if !g.is_finite() {
            return Err(ArtfimaError::GradientFailure(format!(
                "non-finite derivative in coordinate {i} at omega={omega}"
            )));
        }
        grad.push(g);
    }
    Ok(grad)
}

/// `W(β)` by the periodic trapezoid rule on `quad_points` nodes of `(-π, π]`.
pub fn compute_w(params: &ArtfimaParams, quad_points: usize) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    if quad_points < 2 {
        return Err(ArtfimaError::InvalidArgument(
            "need at least two quadrature points".into(),
        ));
    }
    let k = params.p() + params.q() + 2;
    let mut w = vec![vec![0.0; k]; k];
    let weight = 2.0 * std::f64::consts::PI / quad_points as f64;
    for omega in periodic_grid(quad_points) {
        let g = log_transfer_gradient(params, omega)?;
        for i in 0..k {
            for j in i..k {
                w[i][j] += weight * g[i] * g[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            w[i][j] = w[j][i];
        }
    }
    Ok(w)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let k = m.len();
    let mat = DMatrix::from_fn(k, k, |i, j| m[i][j]);
    let mut ev: Vec<f64> = SymmetricEigen::new(mat)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest entrywise relative change between `W` at `coarse` and at
/// `2 × coarse` quadrature points.
pub fn w_quadrature_change(params: &ArtfimaParams, coarse: usize) -> Result<f64> {
    let a = compute_w(params, coarse)?;
    let b = compute_w(params, 2 * coarse)?;
    let scale = b.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs() / y.abs().max(1e-12 * scale))
        .fold(0.0, f64::max))
}

/// `(1/2π) ∫ g(β₁)/g(β₂) dω - 1`; positive when `β₁ ≠ β₂` are both admissible.
pub fn identifiability_margin(b1: &ArtfimaParams, b2: &ArtfimaParams, points: usize) -> f64 {
    spectral_ratio_mean(b1, b2, points) - 1.0
}
