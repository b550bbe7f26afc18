use serde::{Deserialize, Serialize};

use crate::error::{ArtfimaError, Result};
use crate::kernel::ArtfimaParams;
use crate::stable_rng::StableSpec;

/// Provenance attached to every series the crate produces.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ArtfimaParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stable: Option<StableSpec>,
    #[serde(default)]
    pub history: Vec<String>,
}

impl SeriesMeta {
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            ..Self::default()
        }
    }
}

/// A real-valued time series with its provenance record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesData {
    pub values: Vec<f64>,
    pub meta: SeriesMeta,
}

impl SeriesData {
    /// Builds a series, rejecting NaN and infinite entries.
    pub fn new(values: Vec<f64>, meta: SeriesMeta) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ArtfimaError::InvalidArgument(format!(
                "non-finite value {} at index {i}",
                values[i]
            )));
        }
        Ok(Self { values, meta })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, SeriesMeta::new("memory"))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Returns a copy multiplied by `c`, with the step appended to the history.
    pub fn scaled(&self, c: f64) -> Self {
        let mut meta = self.meta.clone();
        meta.history.push(format!("scale({c})"));
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            meta,
        }
    }

    pub(crate) fn with_step(mut self, step: impl Into<String>) -> Self {
        self.meta.history.push(step.into());
        self
    }

    pub(crate) fn sum_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}
