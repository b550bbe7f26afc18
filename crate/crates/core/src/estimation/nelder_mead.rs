//! Box-constrained Nelder–Mead simplex search.
//!
//! Trial points are projected onto the box. The objective may return
//! `f64::INFINITY` to reject a point; such vertices are never accepted over
//! finite ones.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub initial_step: Vec<f64>,
    pub max_evals: usize,
    /// Relative spread of the simplex values at convergence.
    pub ftol: f64,
    /// Infinity-norm diameter of the simplex at convergence.
    pub xtol: f64,
    /// Fresh simplices built around the incumbent after convergence.
    pub restarts: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NelderMeadOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Best value after each iteration.
    pub history: Vec<f64>,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

struct Counted<'a, F> {
    f: &'a mut F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<'_, F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadOutcome {
    let mut counted = Counted {
        f: &mut f,
        evals: 0,
    };
    let mut x = x0.to_vec();
    project(&mut x, &opts.lower, &opts.upper);
    let mut fx = counted.call(&x);
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    for round in 0..=opts.restarts {
        let (bx, bf, conv) = run(&mut counted, &x, fx, opts, &mut history, &mut iterations);
        let improved = bf < fx - opts.ftol * (fx.abs() + opts.ftol);
        x = bx;
        fx = bf;
        converged = conv;
        if !conv || (round > 0 && !improved) {
            break;
        }
    }
    NelderMeadOutcome {
        x,
        f: fx,
        evals: counted.evals,
        iterations,
        converged,
        history,
    }
}

fn initial_simplex<F: FnMut(&[f64]) -> f64>(
    counted: &mut Counted<'_, F>,
    x0: &[f64],
    f0: f64,
    opts: &NelderMeadOptions,
) -> Vec<(Vec<f64>, f64)> {
    let n = x0.len();
    let mut simplex = vec![(x0.to_vec(), f0)];
    for i in 0..n {
        let mut step = opts.initial_step[i];
        let mut best: Option<(Vec<f64>, f64)> = None;
        for _ in 0..12 {
            for sign in [1.0, -1.0] {
                let mut v = x0.to_vec();
                v[i] += sign * step;
                project(&mut v, &opts.lower, &opts.upper);
                if (v[i] - x0[i]).abs() < 1e-14 {
                    continue;
                }
                let fv = counted.call(&v);
                if fv.is_finite() {
                    best = Some((v, fv));
                    break;
                }
                if best.is_none() {
                    best = Some((v, fv));
                }
            }
            if best.as_ref().is_some_and(|b| b.1.is_finite()) {
                break;
            }
            step *= 0.5;
        }
        simplex.push(best.unwrap_or_else(|| {
            let mut v = x0.to_vec();
            v[i] += 1e-8;
            (v, f64::INFINITY)
        }));
    }
    simplex
}

fn run<F: FnMut(&[f64]) -> f64>(
    counted: &mut Counted<'_, F>,
    x0: &[f64],
    f0: f64,
    opts: &NelderMeadOptions,
    history: &mut Vec<f64>,
    iterations: &mut usize,
) -> (Vec<f64>, f64, bool) {
    let n = x0.len();
    let mut simplex = initial_simplex(counted, x0, f0, opts);
    let order = |s: &mut Vec<(Vec<f64>, f64)>| {
        s.sort_by(|a, b| a.1.total_cmp(&b.1));
    };
    order(&mut simplex);
    let point = |centroid: &[f64], worst: &[f64], coef: f64| -> Vec<f64> {
        let mut p: Vec<f64> = centroid
            .iter()
            .zip(worst)
            .map(|(c, w)| c + coef * (c - w))
            .collect();
        project(&mut p, &opts.lower, &opts.upper);
        p
    };
    loop {
        let best_f = simplex[0].1;
        let worst_f = simplex[n].1;
        let spread_ok = best_f.is_finite()
            && worst_f.is_finite()
            && (worst_f - best_f) <= opts.ftol * (best_f.abs() + opts.ftol);
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if spread_ok && diameter <= opts.xtol {
            return (simplex[0].0.clone(), best_f, true);
        }
        if counted.evals >= opts.max_evals {
            return (simplex[0].0.clone(), best_f, false);
        }
        *iterations += 1;

        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let xr = point(&centroid, &worst, REFLECT);
        let fr = counted.call(&xr);
        if fr < simplex[0].1 {
            let xe = point(&centroid, &worst, EXPAND);
            let fe = counted.call(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = point(&centroid, &worst, CONTRACT);
                let fc = counted.call(&xc);
                (xc, fc)
            } else {
                let xc = point(&centroid, &worst, -CONTRACT);
                let fc = counted.call(&xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let mut v: Vec<f64> = best
                        .iter()
                        .zip(&vertex.0)
                        .map(|(b, x)| b + SHRINK * (x - b))
                        .collect();
                    project(&mut v, &opts.lower, &opts.upper);
                    let fv = counted.call(&v);
                    *vertex = (v, fv);
                }
            }
        }
        order(&mut simplex);
        history.push(simplex[0].1);
    }
}

/// Damped Newton refinement of a minimiser using finite differences, with a
/// five-point gradient. Coordinates within `4h` of the box are snapped onto
/// the bound when that does not raise `f` and held fixed; Newton steps act on
/// the rest. Returns the refined point, its value and the evaluations used.
pub fn polish<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    f0: f64,
    lower: &[f64],
    upper: &[f64],
    max_iter: usize,
) -> (Vec<f64>, f64, usize) {
    let (mut x, mut fx, mut evals) = (x0.to_vec(), f0, 0);
    let no_worse = |fy: f64, fx: f64| fy <= fx + 1e-13 * fx.abs();
    let width = |v: f64| 4e-3 * v.abs().max(1.0);
    let mut free = Vec::new();
    for i in 0..x.len() {
        let bound = if x[i] - width(x[i]) < lower[i] {
            lower[i]
        } else if x[i] + width(x[i]) > upper[i] {
            upper[i]
        } else {
            free.push(i);
            continue;
        };
        if x[i] != bound {
            let mut y = x.clone();
            y[i] = bound;
            evals += 1;
            let fy = f(&y);
            if no_worse(fy, fx) {
                x = y;
                fx = fx.min(fy);
            }
        }
    }
    let k = free.len();
    for _ in 0..max_iter {
        if k == 0
            || free
                .iter()
                .any(|&i| x[i] - width(x[i]) < lower[i] || x[i] + width(x[i]) > upper[i])
        {
            break;
        }
        let hg: Vec<f64> = free.iter().map(|&i| 1e-3 * x[i].abs().max(1.0)).collect();
        let hh: Vec<f64> = free.iter().map(|&i| 1e-4 * x[i].abs().max(1.0)).collect();
        let mut at = |i: usize, a: f64, j: usize, b: f64| {
            let mut y = x.clone();
            y[free[i]] += a;
            y[free[j]] += b;
            evals += 1;
            f(&y)
        };
        let mut g = DVector::zeros(k);
        let mut h = DMatrix::zeros(k, k);
        for i in 0..k {
            g[i] = (8.0 * (at(i, hg[i], i, 0.0) - at(i, -hg[i], i, 0.0))
                - (at(i, 2.0 * hg[i], i, 0.0) - at(i, -2.0 * hg[i], i, 0.0)))
                / (12.0 * hg[i]);
            h[(i, i)] = (at(i, hh[i], i, 0.0) - 2.0 * fx + at(i, -hh[i], i, 0.0)) / (hh[i] * hh[i]);
            for j in 0..i {
                let v =
                    (at(i, hh[i], j, hh[j]) - at(i, hh[i], j, -hh[j]) - at(i, -hh[i], j, hh[j])
                        + at(i, -hh[i], j, -hh[j]))
                        / (4.0 * hh[i] * hh[j]);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        if !g.iter().chain(h.iter()).all(|v| v.is_finite()) {
            break;
        }
        let Some(chol) = h.cholesky() else { break };
        let step = chol.solve(&g);
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..8 {
            let mut y = x.clone();
            for (&i, s) in free.iter().zip(step.iter()) {
                y[i] -= scale * s;
            }
            if y.iter()
                .zip(lower)
                .zip(upper)
                .all(|((v, l), u)| v >= l && v <= u)
            {
                evals += 1;
                let fy = f(&y);
                if no_worse(fy, fx) {
                    x = y;
                    fx = fx.min(fy);
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted || step.amax() * scale < 1e-13 {
            break;
        }
    }
    (x, fx, evals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(n: usize, lo: f64, hi: f64) -> NelderMeadOptions {
        NelderMeadOptions {
            lower: vec![lo; n],
            upper: vec![hi; n],
            initial_step: vec![0.5; n],
            max_evals: 5000,
            ftol: 1e-14,
            xtol: 1e-9,
            restarts: 1,
        }
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let out = minimize(f, &[-1.2, 1.0], &opts(2, -5.0, 5.0));
        assert!(out.converged);
        assert!(
            (out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            out.x
        );
    }

    #[test]
    fn polish_reaches_smooth_minimum() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let start = [1.001, 1.003];
        let (x, fx, evals) = polish(f, &start, f(&start), &[-5.0; 2], &[5.0; 2], 10);
        assert!(evals > 0);
        assert!(
            (x[0] - 1.0).abs() < 1e-7 && (x[1] - 1.0).abs() < 1e-7,
            "{x:?}"
        );
        assert!(fx < 1e-14);
        let g = |x: &[f64]| (x[0] - 6.0).powi(2) + (x[1] - 0.5).powi(2);
        let (y, _, _) = polish(
            g,
            &[4.99999, 0.4],
            g(&[4.99999, 0.4]),
            &[-5.0; 2],
            &[5.0; 2],
            10,
        );
        assert_eq!(y[0], 5.0);
        assert!((y[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + (x[1] + 3.0).powi(2);
        let out = minimize(f, &[0.0, 0.0], &opts(2, -1.0, 1.0));
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn avoids_rejected_region() {
        let f = |x: &[f64]| {
            if x[0] < 0.5 {
                f64::INFINITY
            } else {
                (x[0] - 0.2).powi(2) + x[1].powi(2)
            }
        };
        let out = minimize(f, &[1.0, 1.0], &opts(2, -2.0, 2.0));
        assert!(out.f.is_finite());
        assert!((out.x[0] - 0.5).abs() < 1e-6, "{:?}", out.x);
    }

    #[test]
    fn eval_budget() {
        let f = |x: &[f64]| x.iter().map(|v| v.sin() * v).sum::<f64>();
        let mut o = opts(4, -10.0, 10.0);
        o.max_evals = 40;
        let out = minimize(f, &[1.0, 2.0, 3.0, 4.0], &o);
        assert!(!out.converged);
        assert!(out.evals <= 40 + 4 + 1);
    }
}
