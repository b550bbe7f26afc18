//! Whittle estimation of `β`, its asymptotic matrix, and McCulloch's `α̂`.

mod mcculloch;
pub mod nelder_mead;
mod whittle;
mod wmatrix;

pub use mcculloch::{
    alpha_from_ratio, hazen_quantile, mcculloch_alpha, quantile_ratio, MIN_ALPHA_LEN,
};
pub use whittle::{
    fit_whittle, whittle_objective, FitResult, FitTrace, SearchConfig, StartRecord,
    WhittleObjective, MIN_FIT_LEN,
};
pub use wmatrix::{
    compute_w, identifiability_margin, log_transfer_gradient, symmetric_eigenvalues,
    w_quadrature_change, DEFAULT_W_POINTS,
};
