//! Coefficient engine: tempered fractional weights, ARMA power-series
//! expansions and the moving-average / autoregressive filters built from them.
//!
//! All sequences are generated by recursions rather than by evaluating gamma
//! functions, so arbitrarily long prefixes can be produced without overflow.

use std::fmt;
use std::io::Write;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{ArtfimaError, Result};

/// Default relative truncation tolerance for infinite coefficient sequences.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Hard cap on the number of coefficients any truncation may request.
pub const MAX_COEFFICIENTS: usize = 1_000_000;

/// Two inverse roots closer than this are treated as a common root.
const COMMON_ROOT_EPS: f64 = 1e-8;

fn is_negative_integer(x: f64) -> bool {
    x < 0.0 && x.fract() == 0.0
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x.fract() == 0.0
}

/// Memory parameter `d` together with the tempering rate `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOrder")]
pub struct TemperedOrder {
    d: f64,
    lambda: f64,
}

#[derive(Deserialize)]
struct RawOrder {
    d: f64,
    lambda: f64,
}

impl TryFrom<RawOrder> for TemperedOrder {
    type Error = ArtfimaError;
    fn try_from(raw: RawOrder) -> Result<Self> {
        Self::new(raw.d, raw.lambda)
    }
}

impl TemperedOrder {
    /// `lambda = 0` is accepted here (the untempered limit); fitting requires
    /// `lambda > 0`, which [`ArtfimaParams::validate`] enforces.
    pub fn new(d: f64, lambda: f64) -> Result<Self> {
        if !d.is_finite() || !lambda.is_finite() {
            return Err(ArtfimaError::InvalidOrder(format!(
                "non-finite d={d} or lambda={lambda}"
            )));
        }
        if is_negative_integer(d) {
            return Err(ArtfimaError::InvalidOrder(format!(
                "d={d} is a negative integer"
            )));
        }
        if lambda < 0.0 {
            return Err(ArtfimaError::InvalidOrder(format!(
                "lambda={lambda} must be non-negative"
            )));
        }
        Ok(Self { d, lambda })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Same memory parameter with the tempering switched off.
    pub fn untempered(&self) -> Self {
        Self {
            d: self.d,
            lambda: 0.0,
        }
    }
}

/// Sign of the tempered operator: `Integrate` gives the coefficients of
/// `(1 - e^{-λ}z)^{-d}`, `Difference` those of `(1 - e^{-λ}z)^{d}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Integrate,
    Difference,
}

impl Direction {
    fn exponent(self, d: f64) -> f64 {
        match self {
            Direction::Integrate => d,
            Direction::Difference => -d,
        }
    }
}

/// Which rational series [`arma_expansion`] produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expansion {
    /// `Θ(z)/Φ(z) = Σ b(j) z^j`
    ThetaOverPhi,
    /// `Φ(z)/Θ(z) = Σ c(j) z^j`
    PhiOverTheta,
}

/// AR polynomial `Φ(z) = 1 - φ₁z - … - φ_p z^p` and MA polynomial
/// `Θ(z) = 1 + θ₁z + … + θ_q z^q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawArma")]
pub struct ArmaPoly {
    phi: Vec<f64>,
    theta: Vec<f64>,
}

#[derive(Deserialize)]
struct RawArma {
    #[serde(default)]
    phi: Vec<f64>,
    #[serde(default)]
    theta: Vec<f64>,
}

impl TryFrom<RawArma> for ArmaPoly {
    type Error = ArtfimaError;
    fn try_from(raw: RawArma) -> Result<Self> {
        Self::new(raw.phi, raw.theta)
    }
}

impl ArmaPoly {
    /// Validates the leading coefficients, the root conditions of both
    /// polynomials and the absence of common roots.
    pub fn new(phi: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        let arma = Self { phi, theta };
        arma.check()?;
        Ok(arma)
    }

    /// The white-noise filter `Φ = Θ = 1`.
    pub fn identity() -> Self {
        Self {
            phi: Vec::new(),
            theta: Vec::new(),
        }
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn p(&self) -> usize {
        self.phi.len()
    }

    pub fn q(&self) -> usize {
        self.theta.len()
    }

    pub fn is_identity(&self) -> bool {
        self.phi.is_empty() && self.theta.is_empty()
    }

    fn check(&self) -> Result<()> {
        if self.phi.iter().chain(&self.theta).any(|c| !c.is_finite()) {
            return Err(ArtfimaError::InvalidArma("non-finite coefficient".into()));
        }
        if self.phi.last() == Some(&0.0) {
            return Err(ArtfimaError::InvalidArma(
                "leading AR coefficient is zero".into(),
            ));
        }
        if self.theta.last() == Some(&0.0) {
            return Err(ArtfimaError::InvalidArma(
                "leading MA coefficient is zero".into(),
            ));
        }
        let ar_roots = ar_inverse_roots(&self.phi);
        let ma_roots = ma_inverse_roots(&self.theta);
        if let Some(r) = ar_roots.iter().find(|r| r.norm() >= 1.0) {
            return Err(ArtfimaError::InvalidArma(format!(
                "AR polynomial has a root of modulus {:.6} inside the closed unit disk",
                1.0 / r.norm()
            )));
        }
        if let Some(r) = ma_roots.iter().find(|r| r.norm() >= 1.0) {
            return Err(ArtfimaError::InvalidArma(format!(
                "MA polynomial has a root of modulus {:.6} inside the closed unit disk",
                1.0 / r.norm()
            )));
        }
        for a in &ar_roots {
            if ma_roots.iter().any(|m| (a - m).norm() < COMMON_ROOT_EPS) {
                return Err(ArtfimaError::InvalidArma(
                    "AR and MA polynomials share a root".into(),
                ));
            }
        }
        Ok(())
    }

    /// Largest modulus among the inverse roots of `Φ` (0 when `p = 0`).
    pub fn ar_spectral_radius(&self) -> f64 {
        ar_inverse_roots(&self.phi)
            .iter()
            .map(|r| r.norm())
            .fold(0.0, f64::max)
    }

    /// Largest modulus among the inverse roots of `Θ` (0 when `q = 0`).
    pub fn ma_spectral_radius(&self) -> f64 {
        ma_inverse_roots(&self.theta)
            .iter()
            .map(|r| r.norm())
            .fold(0.0, f64::max)
    }
}

fn ar_inverse_roots(phi: &[f64]) -> Vec<Complex<f64>> {
    // Φ(z) = 1 + Σ (-φ_k) z^k
    let c: Vec<f64> = phi.iter().map(|p| -p).collect();
    inverse_roots(&c)
}

fn ma_inverse_roots(theta: &[f64]) -> Vec<Complex<f64>> {
    inverse_roots(theta)
}

/// Inverse roots of `1 + c₁z + … + c_k z^k`, i.e. the roots of
/// `w^k + c₁w^{k-1} + … + c_k`. A polynomial has all its roots outside the
/// closed unit disk iff every inverse root lies strictly inside it.
pub(crate) fn inverse_roots(c: &[f64]) -> Vec<Complex<f64>> {
    match c.len() {
        0 => Vec::new(),
        1 => vec![Complex::new(-c[0], 0.0)],
        2 => {
            let (b, k) = (c[0], c[1]);
            let disc = Complex::new(b * b - 4.0 * k, 0.0).sqrt();
            vec![(-b + disc) / 2.0, (-b - disc) / 2.0]
        }
        n => {
            let mut companion = DMatrix::<f64>::zeros(n, n);
            for (j, cj) in c.iter().enumerate() {
                companion[(0, j)] = -cj;
            }
            for i in 1..n {
                companion[(i, i - 1)] = 1.0;
            }
            companion.complex_eigenvalues().iter().copied().collect()
        }
    }
}

/// Full parameter vector `β = (φ₁..φ_p, d, λ, θ₁..θ_q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRecord", into = "ParamsRecord")]
pub struct ArtfimaParams {
    order: TemperedOrder,
    arma: ArmaPoly,
}

#[derive(Serialize, Deserialize)]
struct ParamsRecord {
    d: f64,
    lambda: f64,
    #[serde(default)]
    phi: Vec<f64>,
    #[serde(default)]
    theta: Vec<f64>,
}

impl TryFrom<ParamsRecord> for ArtfimaParams {
    type Error = ArtfimaError;
    fn try_from(r: ParamsRecord) -> Result<Self> {
        Self::new(r.d, r.lambda, r.phi, r.theta)
    }
}

impl From<ArtfimaParams> for ParamsRecord {
    fn from(p: ArtfimaParams) -> Self {
        ParamsRecord {
            d: p.order.d,
            lambda: p.order.lambda,
            phi: p.arma.phi,
            theta: p.arma.theta,
        }
    }
}

impl fmt::Display for ArtfimaParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ARTFIMA({}, d={}, lambda={}, {}) phi={:?} theta={:?}",
            self.p(),
            self.d(),
            self.lambda(),
            self.q(),
            self.arma.phi,
            self.arma.theta
        )
    }
}

impl ArtfimaParams {
    pub fn new(d: f64, lambda: f64, phi: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        Ok(Self {
            order: TemperedOrder::new(d, lambda)?,
            arma: ArmaPoly::new(phi, theta)?,
        })
    }

    /// ARTFIMA(0, d, λ, 0).
    pub fn pure(d: f64, lambda: f64) -> Result<Self> {
        Self::new(d, lambda, Vec::new(), Vec::new())
    }

    pub fn from_parts(order: TemperedOrder, arma: ArmaPoly) -> Self {
        Self { order, arma }
    }

    /// Inverse of [`ArtfimaParams::beta`].
    pub fn from_beta(p: usize, q: usize, beta: &[f64]) -> Result<Self> {
        if beta.len() != p + q + 2 {
            return Err(ArtfimaError::InvalidArgument(format!(
                "beta has length {}, expected {}",
                beta.len(),
                p + q + 2
            )));
        }
        Self::new(
            beta[p],
            beta[p + 1],
            beta[..p].to_vec(),
            beta[p + 2..].to_vec(),
        )
    }

    pub fn order(&self) -> TemperedOrder {
        self.order
    }

    pub fn arma(&self) -> &ArmaPoly {
        &self.arma
    }

    pub fn d(&self) -> f64 {
        self.order.d
    }

    pub fn lambda(&self) -> f64 {
        self.order.lambda
    }

    pub fn phi(&self) -> &[f64] {
        &self.arma.phi
    }

    pub fn theta(&self) -> &[f64] {
        &self.arma.theta
    }

    pub fn p(&self) -> usize {
        self.arma.p()
    }

    pub fn q(&self) -> usize {
        self.arma.q()
    }

    /// `(φ₁..φ_p, d, λ, θ₁..θ_q)`
    pub fn beta(&self) -> Vec<f64> {
        let mut b = self.arma.phi.clone();
        b.push(self.order.d);
        b.push(self.order.lambda);
        b.extend_from_slice(&self.arma.theta);
        b
    }

    /// Coordinate names matching [`ArtfimaParams::beta`].
    pub fn beta_names(p: usize, q: usize) -> Vec<String> {
        let mut names: Vec<String> = (1..=p).map(|i| format!("phi{i}")).collect();
        names.push("d".into());
        names.push("lambda".into());
        names.extend((1..=q).map(|j| format!("theta{j}")));
        names
    }

    /// Membership in the admissible parameter space: the constructor's checks
    /// plus strictly positive tempering.
    pub fn validate(&self) -> Result<()> {
        if self.order.lambda <= 0.0 {
            return Err(ArtfimaError::InvalidParams(format!(
                "lambda={} must be strictly positive",
                self.order.lambda
            )));
        }
        self.arma.check()
    }
}

/// Which coefficient family a [`WeightSeq`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    /// `ω_{-d,λ}(j)`
    OmegaNegD,
    /// `ω_{d,λ}(j)`
    OmegaPosD,
    /// `b(j)` of `Θ/Φ`
    B,
    /// `c(j)` of `Φ/Θ`
    C,
    /// `a_{-d,λ}(j)`, the causal moving-average filter
    AMa,
    /// `c_{d,λ}(j)`, the invertibility filter
    CAr,
    /// `e^{-λj} a_{-d}(j)`
    SecondKind,
}

/// Finite prefix `values[0..M]` of an infinite coefficient sequence.
///
/// `truncation_tol` is the achieved tail ratio `|values[M-1]| / max |values|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSeq {
    pub values: Vec<f64>,
    pub kind: WeightKind,
    pub truncation_tol: f64,
}

impl WeightSeq {
    fn new(values: Vec<f64>, kind: WeightKind) -> Self {
        let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let last = values.last().map_or(0.0, |v| v.abs());
        let truncation_tol = if max > 0.0 { last / max } else { 0.0 };
        Self {
            values,
            kind,
            truncation_tol,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Two-column `index,value` dump.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,value")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(out, "{j},{v:.16e}")?;
        }
        Ok(())
    }
}

fn require_len(m: usize) -> Result<()> {
    if m == 0 {
        Err(ArtfimaError::EmptyRequest(
            "zero coefficients requested".into(),
        ))
    } else if m > MAX_COEFFICIENTS {
        Err(ArtfimaError::InvalidArgument(format!(
            "{m} coefficients exceed the cap of {MAX_COEFFICIENTS}"
        )))
    } else {
        Ok(())
    }
}

/// Coefficients `ω(0..m)` of `(1 - e^{-λ}z)^{∓d}` from the recursion
/// `ω(j) = ω(j-1) e^{-λ} (j-1±d)/j`, `ω(0) = 1`.
pub fn tempered_weights(order: TemperedOrder, direction: Direction, m: usize) -> Result<WeightSeq> {
    require_len(m)?;
    let kind = match direction {
        Direction::Integrate => WeightKind::OmegaNegD,
        Direction::Difference => WeightKind::OmegaPosD,
    };
    Ok(WeightSeq::new(
        raw_tempered_weights(direction.exponent(order.d), order.lambda, m),
        kind,
    ))
}

fn raw_tempered_weights(exponent: f64, lambda: f64, m: usize) -> Vec<f64> {
    let decay = (-lambda).exp();
    let mut w = Vec::with_capacity(m);
    let mut cur = 1.0;
    w.push(cur);
    for j in 1..m {
        let jf = j as f64;
        cur *= decay * (jf - 1.0 + exponent) / jf;
        w.push(cur);
    }
    w
}

/// Power-series coefficients of `Θ/Φ` (`b`) or `Φ/Θ` (`c`) by the linear
/// recursion of a rational generating function.
pub fn arma_expansion(arma: &ArmaPoly, direction: Expansion, m: usize) -> Result<WeightSeq> {
    require_len(m)?;
    arma.check()?;
    let kind = match direction {
        Expansion::ThetaOverPhi => WeightKind::B,
        Expansion::PhiOverTheta => WeightKind::C,
    };
    let mut impulse = vec![0.0; m];
    impulse[0] = 1.0;
    Ok(WeightSeq::new(arma_filter(arma, direction, &impulse), kind))
}

/// Applies the rational filter `Θ(B)/Φ(B)` or `Φ(B)/Θ(B)` to a one-sided
/// sequence. With `x = δ₀` this yields `b` or `c`; with `x = ω` it yields
/// the convolution `ω * b` (resp. `ω * c`) without forming `b` explicitly.
fn arma_filter(arma: &ArmaPoly, direction: Expansion, x: &[f64]) -> Vec<f64> {
    // numerator coefficients n_k and feedback coefficients f_i such that
    // y(j) = Σ_k n_k x(j-k) + Σ_i f_i y(j-i)
    let (num, feedback): (Vec<f64>, Vec<f64>) = match direction {
        Expansion::ThetaOverPhi => (
            std::iter::once(1.0)
                .chain(arma.theta.iter().copied())
                .collect(),
            arma.phi.clone(),
        ),
        Expansion::PhiOverTheta => (
            std::iter::once(1.0)
                .chain(arma.phi.iter().map(|p| -p))
                .collect(),
            arma.theta.iter().map(|t| -t).collect(),
        ),
    };
    let mut y = vec![0.0; x.len()];
    for j in 0..x.len() {
        let mut acc = 0.0;
        for (k, nk) in num.iter().enumerate().take(j + 1) {
            acc += nk * x[j - k];
        }
        for (i, fi) in feedback.iter().enumerate() {
            if i < j {
                acc += fi * y[j - 1 - i];
            }
        }
        y[j] = acc;
    }
    y
}

/// Causal moving-average weights `a_{-d,λ}(j) = Σ_s ω_{-d,λ}(s) b(j-s)`.
pub fn ma_coefficients(params: &ArtfimaParams, m: usize) -> Result<WeightSeq> {
    require_len(m)?;
    let omega = raw_tempered_weights(params.d(), params.lambda(), m);
    let values = if params.arma.is_identity() {
        omega
    } else {
        arma_filter(&params.arma, Expansion::ThetaOverPhi, &omega)
    };
    Ok(WeightSeq::new(values, WeightKind::AMa))
}

/// Invertibility weights `c_{d,λ}(j) = Σ_s ω_{d,λ}(s) c(j-s)`.
pub fn ar_coefficients(params: &ArtfimaParams, m: usize) -> Result<WeightSeq> {
    require_len(m)?;
    let omega = raw_tempered_weights(-params.d(), params.lambda(), m);
    let values = if params.arma.is_identity() {
        omega
    } else {
        arma_filter(&params.arma, Expansion::PhiOverTheta, &omega)
    };
    Ok(WeightSeq::new(values, WeightKind::CAr))
}

/// Moving-average weights of the second-kind process: `e^{-λj} a_{-d}(j)`
/// where `a_{-d}` is built from the untempered weights `ω_{-d,0}`.
pub fn second_kind_ma_weights(params: &ArtfimaParams, m: usize) -> Result<WeightSeq> {
    require_len(m)?;
    let omega = raw_tempered_weights(params.d(), 0.0, m);
    let untempered = if params.arma.is_identity() {
        omega
    } else {
        arma_filter(&params.arma, Expansion::ThetaOverPhi, &omega)
    };
    let lambda = params.lambda();
    let values = untempered
        .into_iter()
        .enumerate()
        .map(|(j, a)| a * (-lambda * j as f64).exp())
        .collect();
    Ok(WeightSeq::new(values, WeightKind::SecondKind))
}

/// Truncated one-sided convolution `(a * b)(j)` for `j < m`.
pub fn convolve(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m];
    for (i, ai) in a.iter().enumerate().take(m) {
        for (k, bk) in b.iter().enumerate().take(m - i) {
            out[i + k] += ai * bk;
        }
    }
    out
}

/// `ln |Γ(x)|` for any real `x` that is not a non-positive integer.
pub(crate) fn ln_abs_gamma(x: f64) -> f64 {
    if x > 0.0 {
        statrs::function::gamma::ln_gamma(x)
    } else {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().abs().ln()
            - statrs::function::gamma::ln_gamma(1.0 - x)
    }
}

fn check_tail_args(lambda: f64, tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(ArtfimaError::InvalidArgument(format!(
            "tolerance {tol} must lie in (0, 1)"
        )));
    }
    if !(lambda > 0.0) {
        return Err(ArtfimaError::Unsupported(
            "truncation needs lambda > 0 (no exponential tail)".into(),
        ));
    }
    Ok(())
}

/// Smallest `M` for which the tail bound
/// `|Γ(d)|^{-1} M^{d-1} e^{-λM}` of `ω_{-d,λ}(M)` falls below `tol`.
///
/// The bound is solved by fixed-point iteration and then nudged upward until
/// the exact weight at `M` satisfies it too. Capped at [`MAX_COEFFICIENTS`].
pub fn truncation_length(order: TemperedOrder, tol: f64) -> Result<usize> {
    tail_length(order.d, order.lambda, tol)
}

pub(crate) fn tail_length(exponent: f64, lambda: f64, tol: f64) -> Result<usize> {
    check_tail_args(lambda, tol)?;
    if is_nonpositive_integer(exponent) {
        // finite polynomial: ω(j) = 0 for j > -exponent
        return Ok((-exponent) as usize + 1);
    }
    let lg = ln_abs_gamma(exponent);
    let target = -tol.ln() - lg;
    let mut m = (target / lambda).max(1.0);
    for _ in 0..200 {
        let next = (target + (exponent - 1.0) * m.max(1.0).ln()) / lambda;
        let done = (next - m).abs() < 1e-10 * m.max(1.0);
        m = next;
        if done {
            break;
        }
    }
    let mut len = if m.is_finite() && m > 1.0 {
        (m - 1e-9).ceil().min(MAX_COEFFICIENTS as f64) as usize
    } else {
        1
    };
    // exact log-weight at len
    let ln_weight = |j: usize| {
        let jf = j as f64;
        ln_abs_gamma(jf + exponent) - lg - statrs::function::gamma::ln_gamma(jf + 1.0) - lambda * jf
    };
    let ln_tol = tol.ln() + 1e-9;
    while len < MAX_COEFFICIENTS {
        let excess = ln_weight(len) - ln_tol;
        if excess <= 0.0 || (len as f64 + exponent) <= 0.0 {
            break;
        }
        len += ((excess / lambda).ceil() as usize).max(1);
    }
    Ok(len.min(MAX_COEFFICIENTS))
}

/// Number of terms after which the ARMA expansion drops below `tol` relative
/// to its largest term, found by running the recursion itself.
fn arma_tail_length(arma: &ArmaPoly, direction: Expansion, tol: f64) -> usize {
    let (num_deg, den_deg) = match direction {
        Expansion::ThetaOverPhi => (arma.q(), arma.p()),
        Expansion::PhiOverTheta => (arma.p(), arma.q()),
    };
    if den_deg == 0 {
        return num_deg;
    }
    let window = 2 * den_deg + 1;
    let mut chunk = 256usize;
    loop {
        let mut impulse = vec![0.0; chunk];
        impulse[0] = 1.0;
        let y = arma_filter(arma, direction, &impulse);
        let max = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let thresh = 1e-2 * tol * max;
        let mut run = 0;
        for (j, v) in y.iter().enumerate() {
            if j > num_deg && v.abs() <= thresh {
                run += 1;
                if run >= window {
                    return j + 1;
                }
            } else {
                run = 0;
            }
        }
        if chunk >= MAX_COEFFICIENTS {
            return MAX_COEFFICIENTS;
        }
        chunk = (chunk * 4).min(MAX_COEFFICIENTS);
    }
}

/// Filter length for `a_{-d,λ}` so that neglected coefficients are below
/// `tol`: the tempered tail plus the ARMA tail.
pub fn ma_filter_length(params: &ArtfimaParams, tol: f64) -> Result<usize> {
    let tempered = tail_length(params.d(), params.lambda(), tol)?;
    let arma = arma_tail_length(&params.arma, Expansion::ThetaOverPhi, tol);
    Ok((tempered + arma).clamp(1, MAX_COEFFICIENTS))
}

/// Filter length for `c_{d,λ}`.
pub fn ar_filter_length(params: &ArtfimaParams, tol: f64) -> Result<usize> {
    let tempered = tail_length(-params.d(), params.lambda(), tol)?;
    let arma = arma_tail_length(&params.arma, Expansion::PhiOverTheta, tol);
    Ok((tempered + arma).clamp(1, MAX_COEFFICIENTS))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ω(j) from log-gamma, with the sign of the gamma ratio tracked.
    fn lgamma_weight(exponent: f64, lambda: f64, j: usize) -> f64 {
        fn gamma_sign(x: f64) -> f64 {
            if x > 0.0 || (x.floor() as i64) % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }
        let jf = j as f64;
        let sign = gamma_sign(jf + exponent) * gamma_sign(exponent);
        sign * (ln_abs_gamma(jf + exponent)
            - ln_abs_gamma(exponent)
            - statrs::function::gamma::ln_gamma(jf + 1.0)
            - lambda * jf)
            .exp()
    }

    fn schoolbook(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
        (0..m)
            .map(|j| (0..=j).map(|s| a[s] * b[j - s]).sum())
            .collect()
    }

    fn long_division(num: &[f64], den: &[f64], m: usize) -> Vec<f64> {
        // num, den are full polynomial coefficient lists starting with the constant term
        let mut q = vec![0.0; m];
        for j in 0..m {
            let mut r = if j < num.len() { num[j] } else { 0.0 };
            for k in 1..den.len().min(j + 1) {
                r -= den[k] * q[j - k];
            }
            q[j] = r / den[0];
        }
        q
    }

    #[test]
    fn first_weight_is_d() {
        let w = tempered_weights(
            TemperedOrder::new(0.5, 0.0).unwrap(),
            Direction::Integrate,
            2,
        )
        .unwrap();
        assert_eq!(w.values, vec![1.0, 0.5]);
    }

    #[test]
    fn single_weight_is_one() {
        for (d, l) in [(0.3, 0.1), (-0.4, 2.0), (1.7, 0.0)] {
            for dir in [Direction::Integrate, Direction::Difference] {
                let w = tempered_weights(TemperedOrder::new(d, l).unwrap(), dir, 1).unwrap();
                assert_eq!(w.values, vec![1.0]);
            }
        }
    }

    #[test]
    fn weights_match_log_gamma() {
        let w = tempered_weights(
            TemperedOrder::new(0.1, 0.045).unwrap(),
            Direction::Integrate,
            5,
        )
        .unwrap();
        for (j, v) in w.values.iter().enumerate() {
            let oracle = lgamma_weight(0.1, 0.045, j);
            assert!(((v - oracle) / oracle).abs() < 1e-12, "j={j} {v} {oracle}");
        }
    }

    #[test]
    fn invalid_requests() {
        assert!(matches!(
            TemperedOrder::new(-2.0, 0.1),
            Err(ArtfimaError::InvalidOrder(_))
        ));
        let o = TemperedOrder::new(0.2, 0.1).unwrap();
        assert!(matches!(
            tempered_weights(o, Direction::Integrate, 0),
            Err(ArtfimaError::EmptyRequest(_))
        ));
    }

    #[test]
    fn identity_expansion() {
        for dir in [Expansion::ThetaOverPhi, Expansion::PhiOverTheta] {
            let w = arma_expansion(&ArmaPoly::identity(), dir, 3).unwrap();
            assert_eq!(w.values, vec![1.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn geometric_expansion() {
        let arma = ArmaPoly::new(vec![0.5], vec![]).unwrap();
        let w = arma_expansion(&arma, Expansion::ThetaOverPhi, 4).unwrap();
        assert_eq!(w.values, vec![1.0, 0.5, 0.25, 0.125]);
    }

    #[test]
    fn arma11_expansion_matches_long_division() {
        let arma = ArmaPoly::new(vec![0.652], vec![0.225]).unwrap();
        let b = arma_expansion(&arma, Expansion::ThetaOverPhi, 3).unwrap();
        let oracle = long_division(&[1.0, 0.225], &[1.0, -0.652], 3);
        assert!((b.values[1] - 0.877).abs() < 1e-15);
        assert!((b.values[2] - 0.652 * 0.877).abs() < 1e-15);
        for (x, y) in b.values.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-15);
        }
        let c = arma_expansion(&arma, Expansion::PhiOverTheta, 20).unwrap();
        let oracle = long_division(&[1.0, -0.652], &[1.0, 0.225], 20);
        for (x, y) in c.values.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn expansion_decays_geometrically() {
        let arma = ArmaPoly::new(vec![1.2, -0.5], vec![0.4, 0.2]).unwrap();
        let b = arma_expansion(&arma, Expansion::ThetaOverPhi, 400).unwrap();
        let rho = arma.ar_spectral_radius();
        assert!(rho < 1.0);
        let c0 = b
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| v.abs() / (rho + 0.01).powi(j as i32))
            .fold(0.0, f64::max);
        assert!(c0.is_finite() && c0 < 100.0);
    }

    #[test]
    fn root_conditions_are_enforced() {
        assert!(ArmaPoly::new(vec![1.0], vec![]).is_err());
        assert!(ArmaPoly::new(vec![], vec![-1.5]).is_err());
        assert!(ArmaPoly::new(vec![0.5, 0.6], vec![]).is_err());
        assert!(ArmaPoly::new(vec![0.5], vec![-0.5]).is_err(), "common root");
        assert!(
            ArmaPoly::new(vec![0.5, 0.0], vec![]).is_err(),
            "zero leading coefficient"
        );
        assert!(ArmaPoly::new(vec![0.3, 0.2, 0.1], vec![0.1, 0.1, 0.1]).is_ok());
        assert!(ArmaPoly::new(vec![0.3, 0.2, 0.6], vec![]).is_err());
    }

    #[test]
    fn ma_without_arma_is_omega() {
        let p = ArtfimaParams::pure(0.3, 0.1).unwrap();
        let a = ma_coefficients(&p, 50).unwrap();
        let w = tempered_weights(p.order(), Direction::Integrate, 50).unwrap();
        assert_eq!(a.values, w.values);
    }

    #[test]
    fn ma_vanishes_as_d_goes_to_zero() {
        let p = ArtfimaParams::pure(0.0, 0.3).unwrap();
        let a = ma_coefficients(&p, 5).unwrap();
        assert_eq!(a.values, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn ma_matches_schoolbook_convolution() {
        let p = ArtfimaParams::new(0.3, 0.1, vec![0.5], vec![]).unwrap();
        let a = ma_coefficients(&p, 6).unwrap();
        let omega: Vec<f64> = (0..6).map(|j| lgamma_weight(0.3, 0.1, j)).collect();
        let b: Vec<f64> = (0..6).map(|j| 0.5f64.powi(j)).collect();
        let oracle = schoolbook(&omega, &b, 6);
        for (x, y) in a.values.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-14, "{x} vs {y}");
        }
    }

    #[test]
    fn ar_coefficients_single_sign_change() {
        let p = ArtfimaParams::pure(0.4, 0.05).unwrap();
        let c = ar_coefficients(&p, 200).unwrap();
        assert_eq!(c.values[0], 1.0);
        assert!(c.values[1..].iter().all(|v| *v < 0.0));
    }

    #[test]
    fn ar_matches_schoolbook_convolution() {
        let p = ArtfimaParams::new(0.611, 0.026, vec![0.652], vec![0.225]).unwrap();
        let c = ar_coefficients(&p, 8).unwrap();
        let omega: Vec<f64> = (0..8).map(|j| lgamma_weight(-0.611, 0.026, j)).collect();
        let cc = long_division(&[1.0, -0.652], &[1.0, 0.225], 8);
        let oracle = schoolbook(&omega, &cc, 8);
        for (x, y) in c.values.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-13, "{x} vs {y}");
        }
    }

    #[test]
    fn ma_and_ar_are_reciprocal() {
        let p = ArtfimaParams::new(0.611, 0.026, vec![0.652], vec![0.225]).unwrap();
        let m = 400;
        let a = ma_coefficients(&p, m).unwrap();
        let c = ar_coefficients(&p, m).unwrap();
        let prod = convolve(&a.values, &c.values, m / 2);
        assert!((prod[0] - 1.0).abs() < 1e-10);
        assert!(prod[1..].iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn second_kind_coincides_without_arma() {
        let p = ArtfimaParams::pure(0.35, 0.2).unwrap();
        let a = ma_coefficients(&p, 300).unwrap();
        let s = second_kind_ma_weights(&p, 300).unwrap();
        for (x, y) in a.values.iter().zip(&s.values) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300), "{x} vs {y}");
        }
    }

    #[test]
    fn second_kind_untempered_is_arfima() {
        let p = ArtfimaParams::new(0.3, 0.0, vec![0.5], vec![0.2]).unwrap();
        let a = ma_coefficients(&p, 50).unwrap();
        let s = second_kind_ma_weights(&p, 50).unwrap();
        assert_eq!(a.values, s.values);
    }

    #[test]
    fn second_kind_differs_with_arma() {
        let p = ArtfimaParams::new(0.3, 0.1, vec![0.5], vec![]).unwrap();
        let a = ma_coefficients(&p, 6).unwrap();
        let s = second_kind_ma_weights(&p, 6).unwrap();
        assert_eq!(a.values[0], s.values[0]);
        // direct evaluation of both closed forms at j = 1:
        // a(1) = ω(1) + b(1) = 0.3 e^{-0.1} + 0.5, second kind = e^{-0.1}(0.3 + 0.5)
        let a1 = 0.3 * (-0.1f64).exp() + 0.5;
        let s1 = (-0.1f64).exp() * 0.8;
        assert!((a.values[1] - a1).abs() < 1e-15);
        assert!((s.values[1] - s1).abs() < 1e-15);
        for j in 1..6 {
            assert!((a.values[j] - s.values[j]).abs() > 1e-3);
        }
    }

    #[test]
    fn truncation_pure_exponential() {
        let o = TemperedOrder::new(1.0, 1.0).unwrap();
        assert_eq!(truncation_length(o, (-20.0f64).exp()).unwrap(), 20);
    }

    #[test]
    fn truncation_verified_by_direct_evaluation() {
        let o = TemperedOrder::new(0.1, 0.045).unwrap();
        let m = truncation_length(o, 1e-12).unwrap();
        assert!((100..1000).contains(&m), "m={m}");
        assert!(lgamma_weight(0.1, 0.045, m).abs() <= 1e-12);
        let w = tempered_weights(o, Direction::Integrate, m + 1).unwrap();
        assert!(w.values[m].abs() <= 1e-12);
    }

    #[test]
    fn truncation_large_lambda() {
        let o = TemperedOrder::new(0.5, 20.0).unwrap();
        assert_eq!(truncation_length(o, 0.5).unwrap(), 1);
    }

    #[test]
    fn truncation_errors() {
        let o = TemperedOrder::new(0.5, 0.0).unwrap();
        assert!(matches!(
            truncation_length(o, 1e-6),
            Err(ArtfimaError::Unsupported(_))
        ));
        let o = TemperedOrder::new(0.5, 0.1).unwrap();
        assert!(truncation_length(o, 0.0).is_err());
        assert!(truncation_length(o, 1.0).is_err());
    }

    #[test]
    fn weight_seq_tail_invariant() {
        let o = TemperedOrder::new(0.3, 0.05).unwrap();
        let m = truncation_length(o, 1e-10).unwrap();
        let w = tempered_weights(o, Direction::Integrate, m + 1).unwrap();
        assert!(w.truncation_tol <= 1e-10);
    }

    #[test]
    fn params_serde_validates() {
        let p = ArtfimaParams::new(0.611, 0.026, vec![0.652], vec![0.225]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let back: ArtfimaParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
        assert!(
            serde_json::from_str::<ArtfimaParams>(r#"{"d":0.1,"lambda":0.1,"phi":[1.5]}"#).is_err()
        );
    }

    #[test]
    fn validate_requires_positive_lambda() {
        let p = ArtfimaParams::pure(0.2, 0.0).unwrap();
        assert!(p.validate().is_err());
        assert!(ArtfimaParams::pure(0.2, 0.01).unwrap().validate().is_ok());
    }

    #[test]
    fn beta_round_trip() {
        let p = ArtfimaParams::new(0.611, 0.026, vec![0.652], vec![0.225]).unwrap();
        assert_eq!(p.beta(), vec![0.652, 0.611, 0.026, 0.225]);
        assert_eq!(ArtfimaParams::from_beta(1, 1, &p.beta()).unwrap(), p);
        assert_eq!(
            ArtfimaParams::beta_names(1, 1),
            vec!["phi1", "d", "lambda", "theta1"]
        );
    }

    #[test]
    fn csv_dump() {
        let w = arma_expansion(&ArmaPoly::identity(), Expansion::ThetaOverPhi, 2).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,value\n0,1.0000000000000000e0\n"));
    }
}
