//! Simulation, dependence analysis and Whittle estimation for ARTFIMA(p,d,λ,q)
//! time series driven by symmetric α-stable innovations.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernel`] builds the tempered fractional weights and ARMA expansions
//!   every other module consumes.
//! * [`stable_rng`] draws SαS innovations (Chambers–Mallows–Stuck).
//! * [`simulator`] filters innovations into sample paths.
//! * [`codifference`] evaluates the theoretical co-difference and its tail
//!   asymptotics.
//! * [`spectral`] holds periodograms and the tempered power transfer function.
//! * [`estimation`] implements the Whittle fit, the asymptotic `W` matrix and
//!   the McCulloch tail-index estimator.
//! * [`diagnostics`] provides residual filtering, ACFs and Ljung–Box.
//! * [`montecarlo`] runs replicated simulate-then-fit studies.
//! * [`ingest`] and [`io`] move series in and out of CSV/JSON.

pub mod codifference;
pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod ingest;
pub mod io;
pub mod kernel;
pub mod montecarlo;
pub mod series;
pub mod simulator;
pub mod spectral;
pub mod stable_rng;

pub use error::{ArtfimaError, Result};
pub use kernel::{ArmaPoly, ArtfimaParams, Direction, TemperedOrder, WeightKind, WeightSeq};
pub use series::{SeriesData, SeriesMeta};
pub use stable_rng::StableSpec;

/// Version tag written at the top of every JSON report.
pub const JSON_SCHEMA: &str = "artfima-stable/1";

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 20_170_701;
