//! Whittle contrast and its multistart minimisation.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nelder_mead::{minimize, polish, NelderMeadOptions};
use super::wmatrix::compute_w;
use crate::error::{ArtfimaError, Result};
use crate::kernel::{ArmaPoly, ArtfimaParams};
use crate::series::SeriesData;
use crate::spectral::{self_normalized_periodogram, Normalization, Periodogram};
use crate::stable_rng::substream;

pub const MIN_FIT_LEN: usize = 128;

const POLISH_ITERS: usize = 4;

/// Periodogram-dependent parts of `σ²_n(β)` cached for repeated evaluation.
#[derive(Debug, Clone)]
pub struct WhittleObjective {
    /// `(2π/n) · multiplicity · Ĩ(ω_j)`
    weights: Vec<f64>,
    cos1: Vec<f64>,
    /// `cos(kω_j)`, `sin(kω_j)` for `k = 1..=order`, laid out `[k-1][j]`.
    cos_k: Vec<Vec<f64>>,
    sin_k: Vec<Vec<f64>>,
}

impl WhittleObjective {
    /// Prepares evaluation for ARMA orders up to `max_order`.
    pub fn new(pgram: &Periodogram, max_order: usize) -> Result<Self> {
        if pgram.normalization != Normalization::SelfNormalized {
            return Err(ArtfimaError::InvalidArgument(
                "the Whittle contrast needs a self-normalised periodogram".into(),
            ));
        }
        let scale = 2.0 * PI / pgram.n as f64;
        let weights = pgram
            .grid_weights()
            .zip(&pgram.ordinates)
            .map(|(w, i)| scale * w * i)
            .collect();
        let cos_k = (1..=max_order)
            .map(|k| pgram.freqs.iter().map(|w| (k as f64 * w).cos()).collect())
            .collect();
        let sin_k = (1..=max_order)
            .map(|k| pgram.freqs.iter().map(|w| (k as f64 * w).sin()).collect())
            .collect();
        Ok(Self {
            weights,
            cos1: pgram.freqs.iter().map(|w| w.cos()).collect(),
            cos_k,
            sin_k,
        })
    }

    /// Evaluates without checking membership in the parameter space.
    pub fn eval_raw(&self, d: f64, lambda: f64, phi: &[f64], theta: &[f64]) -> f64 {
        let el = (-lambda).exp();
        let (c0, c1) = (1.0 + el * el, 2.0 * el);
        let mut total = 0.0;
        for (j, (&w, &c)) in self.weights.iter().zip(&self.cos1).enumerate() {
            let base = c0 - c1 * c;
            let mut inv_g = base.powf(d);
            if !phi.is_empty() {
                inv_g *= self.modulus(phi, -1.0, j);
            }
            if !theta.is_empty() {
                inv_g /= self.modulus(theta, 1.0, j);
            }
            total += w * inv_g;
        }
        total
    }

    fn modulus(&self, coeffs: &[f64], sign: f64, j: usize) -> f64 {
        let (mut re, mut im) = (1.0, 0.0);
        for (k, c) in coeffs.iter().enumerate() {
            re += sign * c * self.cos_k[k][j];
            im -= sign * c * self.sin_k[k][j];
        }
        re * re + im * im
    }

    pub fn value(&self, params: &ArtfimaParams) -> Result<f64> {
        params.validate()?;
        if params.p().max(params.q()) > self.cos_k.len() {
            return Err(ArtfimaError::InvalidArgument(format!(
                "objective prepared for ARMA order {}, got p={} q={}",
                self.cos_k.len(),
                params.p(),
                params.q()
            )));
        }
        Ok(self.eval_raw(params.d(), params.lambda(), params.phi(), params.theta()))
    }
}

/// `(2π/n) Σ_j Ĩ(ω_j)/g(ω_j, β)` over the symmetric Fourier grid.
pub fn whittle_objective(pgram: &Periodogram, params: &ArtfimaParams) -> Result<f64> {
    WhittleObjective::new(pgram, params.p().max(params.q()))?.value(params)
}

/// Search box, start lattice and optimiser tolerances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    pub p: usize,
    pub q: usize,
    pub d_bounds: (f64, f64),
    pub lambda_bounds: (f64, f64),
    /// Bound on `|φ_i|` and `|θ_j|`.
    pub arma_bound: f64,
    pub d_starts: Vec<f64>,
    pub lambda_starts: Vec<f64>,
    /// Random ARMA starts per lattice node (ignored when `p = q = 0`).
    pub arma_starts: usize,
    pub seed: u64,
    pub max_evals: usize,
    pub ftol: f64,
    pub xtol: f64,
    pub restarts: usize,
    /// Quadrature points for `W` at the estimate; `None` skips it.
    pub w_points: Option<usize>,
}

impl SearchConfig {
    pub fn new(p: usize, q: usize) -> Self {
        Self {
            p,
            q,
            d_bounds: (-0.95, 1.5),
            lambda_bounds: (1e-4, 3.0),
            arma_bound: 0.98,
            d_starts: vec![-0.25, 0.1, 0.45, 0.9],
            lambda_starts: vec![0.01, 0.1, 0.5],
            arma_starts: 2,
            seed: crate::DEFAULT_SEED,
            max_evals: 4000,
            ftol: 1e-12,
            xtol: 1e-9,
            restarts: 1,
            w_points: None,
        }
    }

    pub fn start_count(&self) -> usize {
        let arma = if self.p + self.q == 0 {
            1
        } else {
            self.arma_starts.max(1)
        };
        self.d_starts.len() * self.lambda_starts.len() * arma
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ArtfimaError::InvalidArgument(m));
        let (dl, dh) = self.d_bounds;
        if !(dl.is_finite() && dh.is_finite() && dl <= dh) {
            return bad(format!("empty d box [{dl}, {dh}]"));
        }
        let k = dh.floor().min(-1.0);
        if k >= dl {
            return bad(format!(
                "d box [{dl}, {dh}] contains the negative integer {k}"
            ));
        }
        let (ll, lh) = self.lambda_bounds;
        if !(ll > 0.0 && lh.is_finite() && ll <= lh) {
            return bad(format!("lambda box [{ll}, {lh}] must lie in (0, inf)"));
        }
        if !(self.arma_bound > 0.0 && self.arma_bound < 1.0) {
            return bad(format!("arma bound {} must lie in (0, 1)", self.arma_bound));
        }
        if self.d_starts.is_empty() || self.lambda_starts.is_empty() {
            return bad("start lattice is empty".into());
        }
        if self.max_evals == 0 || !(self.ftol > 0.0) || !(self.xtol > 0.0) {
            return bad("tolerances and evaluation budget must be positive".into());
        }
        Ok(())
    }

    fn lower(&self) -> Vec<f64> {
        let mut v = vec![-self.arma_bound; self.p];
        v.push(self.d_bounds.0);
        v.push(self.lambda_bounds.0.ln());
        v.extend(std::iter::repeat_n(-self.arma_bound, self.q));
        v
    }

    fn upper(&self) -> Vec<f64> {
        let mut v = vec![self.arma_bound; self.p];
        v.push(self.d_bounds.1);
        v.push(self.lambda_bounds.1.ln());
        v.extend(std::iter::repeat_n(self.arma_bound, self.q));
        v
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartRecord {
    pub index: usize,
    /// Starting point in `β` coordinates.
    pub start: Vec<f64>,
    pub estimate: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitTrace {
    pub starts: Vec<StartRecord>,
    pub best_start: usize,
    /// Best objective value after each simplex iteration of the winning run.
    pub best_history: Vec<f64>,
    pub total_evals: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub beta_hat: ArtfimaParams,
    pub sigma2_hat: f64,
    pub trace: FitTrace,
    pub converged: bool,
    pub w: Option<Vec<Vec<f64>>>,
}

fn to_beta(p: usize, x: &[f64]) -> Vec<f64> {
    let mut b = x.to_vec();
    b[p + 1] = b[p + 1].exp();
    b
}

fn random_arma<R: Rng>(rng: &mut R, p: usize, q: usize) -> (Vec<f64>, Vec<f64>) {
    for _ in 0..1000 {
        let phi: Vec<f64> = (0..p).map(|_| rng.random_range(-0.5..0.5)).collect();
        let theta: Vec<f64> = (0..q).map(|_| rng.random_range(-0.5..0.5)).collect();
        if ArmaPoly::new(phi.clone(), theta.clone()).is_ok() {
            return (phi, theta);
        }
    }
    (vec![0.1; p], vec![0.05; q])
}

/// Start points in optimiser coordinates `(φ, d, ln λ, θ)`, in index order.
fn start_points(config: &SearchConfig) -> Vec<Vec<f64>> {
    let (p, q) = (config.p, config.q);
    let per_node = if p + q == 0 {
        1
    } else {
        config.arma_starts.max(1)
    };
    let (lo, hi) = (config.lower(), config.upper());
    let mut out = Vec::new();
    for &d in &config.d_starts {
        for &l in &config.lambda_starts {
            for _ in 0..per_node {
                let index = out.len() as u64;
                let mut rng = substream(config.seed, index);
                let (phi, theta) = random_arma(&mut rng, p, q);
                let mut x = phi;
                x.push(d);
                x.push(l.ln());
                x.extend(theta);
                for ((v, a), b) in x.iter_mut().zip(&lo).zip(&hi) {
                    *v = v.clamp(*a, *b);
                }
                out.push(x);
            }
        }
    }
    out
}

/// Minimises the Whittle contrast over the search box from every start of the
/// lattice, keeps the lowest value (ties go to the lowest start index) and
/// refines it with a few Newton steps.
pub fn fit_whittle(series: &SeriesData, config: &SearchConfig) -> Result<FitResult> {
    config.validate()?;
    if series.len() < MIN_FIT_LEN {
        return Err(ArtfimaError::SeriesTooShort {
            needed: MIN_FIT_LEN,
            got: series.len(),
        });
    }
    let pgram = self_normalized_periodogram(series)?;
    let (p, q) = (config.p, config.q);
    let objective = WhittleObjective::new(&pgram, p.max(q))?;
    let penalized = |x: &[f64]| -> f64 {
        let (phi, rest) = x.split_at(p);
        let (d, lambda, theta) = (rest[0], rest[1].exp(), &rest[2..]);
        if p + q > 0 && ArmaPoly::new(phi.to_vec(), theta.to_vec()).is_err() {
            return f64::INFINITY;
        }
        let v = objective.eval_raw(d, lambda, phi, theta);
        if v.is_finite() && v > 0.0 {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut step = vec![0.1; p];
    step.push(0.1);
    step.push(0.5);
    step.extend(std::iter::repeat_n(0.1, q));
    let opts = NelderMeadOptions {
        lower: config.lower(),
        upper: config.upper(),
        initial_step: step,
        max_evals: config.max_evals,
        ftol: config.ftol,
        xtol: config.xtol,
        restarts: config.restarts,
    };
    let starts = start_points(config);
    let runs: Vec<_> = starts
        .par_iter()
        .map(|x0| minimize(penalized, x0, &opts))
        .collect();

    let mut best: Option<usize> = None;
    for (i, r) in runs.iter().enumerate() {
        if r.f.is_finite() && best.is_none_or(|b| r.f < runs[b].f) {
            best = Some(i);
        }
    }
    let Some(best) = best else {
        return Err(ArtfimaError::NoFeasiblePoint(format!(
            "all {} starts left the parameter space",
            runs.len()
        )));
    };
    let (x_hat, f_hat, polish_evals) = polish(
        penalized,
        &runs[best].x,
        runs[best].f,
        &opts.lower,
        &opts.upper,
        POLISH_ITERS,
    );
    let beta_hat = ArtfimaParams::from_beta(p, q, &to_beta(p, &x_hat))?;
    beta_hat.validate()?;
    let w = config.w_points.and_then(|n| compute_w(&beta_hat, n).ok());
    let records = starts
        .iter()
        .zip(&runs)
        .enumerate()
        .map(|(index, (x0, r))| StartRecord {
            index,
            start: to_beta(p, x0),
            estimate: to_beta(p, &r.x),
            value: r.f,
            evals: r.evals,
            iterations: r.iterations,
            converged: r.converged,
        })
        .collect();
    Ok(FitResult {
        sigma2_hat: f_hat,
        converged: runs[best].converged,
        trace: FitTrace {
            starts: records,
            best_start: best,
            best_history: runs[best].history.clone(),
            total_evals: runs.iter().map(|r| r.evals).sum::<usize>() + polish_evals,
        },
        beta_hat,
        w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::simulate_artfima;
    use crate::spectral::log_transfer;
    use crate::stable_rng::StableSpec;

    fn white(n: usize, seed: u64) -> SeriesData {
        crate::stable_rng::sample_sas(StableSpec::standard(2.0).unwrap(), n, seed).unwrap()
    }

    #[test]
    fn flat_spectrum_gives_two_pi() {
        let s = white(8192, 1);
        let pg = self_normalized_periodogram(&s).unwrap();
        let p = ArtfimaParams::pure(0.0, 0.3).unwrap();
        let v = whittle_objective(&pg, &p).unwrap();
        assert!((v - 2.0 * PI).abs() < 0.05, "{v}");
    }

    #[test]
    fn fast_path_matches_direct_sum() {
        let s = white(300, 2);
        let pg = self_normalized_periodogram(&s).unwrap();
        let p = ArtfimaParams::new(0.3, 0.07, vec![0.4, -0.2], vec![0.3]).unwrap();
        let fast = whittle_objective(&pg, &p).unwrap();
        let direct: f64 = pg
            .freqs
            .iter()
            .zip(&pg.ordinates)
            .zip(pg.grid_weights())
            .map(|((w, i), m)| m * i / log_transfer(&p, *w).exp())
            .sum::<f64>()
            * 2.0
            * PI
            / 300.0;
        assert!((fast - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn rejects_alpha_scaled_input() {
        let s = white(256, 3);
        let pg = crate::spectral::alpha_scaled_periodogram(&s, 1.5).unwrap();
        let p = ArtfimaParams::pure(0.1, 0.1).unwrap();
        assert!(whittle_objective(&pg, &p).is_err());
    }

    #[test]
    fn config_checks() {
        let mut c = SearchConfig::new(0, 0);
        assert!(c.validate().is_ok());
        assert_eq!(c.start_count(), 12);
        c.d_bounds = (-1.5, 0.5);
        assert!(c.validate().is_err());
        c.d_bounds = (-0.9, 0.5);
        c.lambda_bounds = (0.0, 1.0);
        assert!(c.validate().is_err());
        assert_eq!(SearchConfig::new(1, 1).start_count(), 24);
    }

    #[test]
    fn recovers_pure_model() {
        let truth = ArtfimaParams::pure(0.3, 0.1).unwrap();
        let s =
            simulate_artfima(&truth, StableSpec::standard(2.0).unwrap(), 8192, 4, 1e-10).unwrap();
        let fit = fit_whittle(&s, &SearchConfig::new(0, 0)).unwrap();
        assert!(fit.converged);
        assert!(fit.beta_hat.validate().is_ok());
        assert!(fit.sigma2_hat > 0.0);
        assert!((fit.beta_hat.d() - 0.3).abs() < 0.08, "{}", fit.beta_hat);
    }

    #[test]
    fn short_series_rejected() {
        assert!(matches!(
            fit_whittle(&white(100, 1), &SearchConfig::new(0, 0)),
            Err(ArtfimaError::SeriesTooShort { .. })
        ));
    }
}
