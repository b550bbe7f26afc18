//! Replicated simulate-then-fit studies summarised by mean, bias, MSE and a
//! 95% percentile interval per parameter.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ArtfimaError, Result};
use crate::estimation::{fit_whittle, SearchConfig};
use crate::kernel::ArtfimaParams;
use crate::simulator::simulate_with_innovations;
use crate::stable_rng::StableSpec;

pub const DESK_REPLICATES: usize = 200;
pub const DESK_N: usize = 4096;
pub const FULL_REPLICATES: usize = 1000;
pub const FULL_N: usize = 10_000;

/// Replicate `r` draws from stream `r` of the base seed, or every replicate
/// shares stream 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeedMode {
    PerReplicate,
    Shared,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McConfig {
    pub params: ArtfimaParams,
    pub spec: StableSpec,
    pub n: usize,
    pub replicates: usize,
    pub base_seed: u64,
    pub search: SearchConfig,
    /// Truncation tolerance of the simulation filter.
    pub tol: f64,
    pub seed_mode: SeedMode,
}

impl McConfig {
    pub fn new(
        params: ArtfimaParams,
        spec: StableSpec,
        n: usize,
        replicates: usize,
        base_seed: u64,
    ) -> Self {
        let search = SearchConfig::new(params.p(), params.q());
        Self {
            params,
            spec,
            n,
            replicates,
            base_seed,
            search,
            tol: 1e-10,
            seed_mode: SeedMode::PerReplicate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.replicates < 2 {
            return Err(ArtfimaError::InvalidArgument(
                "need at least two replicates".into(),
            ));
        }
        if self.n < 256 {
            return Err(ArtfimaError::InvalidArgument(format!(
                "n={} is below the minimum of 256",
                self.n
            )));
        }
        if self.search.p != self.params.p() || self.search.q != self.params.q() {
            return Err(ArtfimaError::InvalidArgument(
                "search orders differ from the true model".into(),
            ));
        }
        self.search.validate()
    }

    fn stream(&self, replicate: usize) -> u64 {
        match self.seed_mode {
            SeedMode::PerReplicate => replicate as u64,
            SeedMode::Shared => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub stream: u64,
    /// `β̂` in the order of [`ArtfimaParams::beta`]; `None` when the fit failed.
    pub estimate: Option<Vec<f64>>,
    pub sigma2: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    /// Mean squared deviation from the truth.
    pub mse: f64,
    /// Population variance (divisor R), so `mse = bias² + variance`.
    pub variance: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McReport {
    pub params: ArtfimaParams,
    pub alpha: f64,
    pub n: usize,
    pub replicates: usize,
    pub base_seed: u64,
    pub failures: usize,
    pub summaries: Vec<ParamSummary>,
    pub rows: Vec<ReplicateRow>,
}

/// Simulates and fits the given replicate indices in parallel; rows come back
/// in the order of `indices`.
pub fn run_replicates(config: &McConfig, indices: &[usize]) -> Vec<ReplicateRow> {
    indices
        .par_iter()
        .map(|&r| {
            let stream = config.stream(r);
            let fit = simulate_with_innovations(
                &config.params,
                config.spec,
                config.n,
                config.base_seed,
                stream,
                config.tol,
            )
            .and_then(|sim| fit_whittle(&sim.path, &config.search));
            match fit {
                Ok(f) => ReplicateRow {
                    replicate: r,
                    stream,
                    estimate: Some(f.beta_hat.beta()),
                    sigma2: Some(f.sigma2_hat),
                    converged: f.converged,
                    error: None,
                },
                Err(e) => ReplicateRow {
                    replicate: r,
                    stream,
                    estimate: None,
                    sigma2: None,
                    converged: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

pub fn run_mc_study(config: &McConfig) -> Result<McReport> {
    config.validate()?;
    let indices: Vec<usize> = (0..config.replicates).collect();
    summarize(config, run_replicates(config, &indices))
}

/// Type-7 sample quantile of ascending `sorted`.
pub fn percentile(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Aggregates replicate rows; failed replicates are excluded and counted.
pub fn summarize(config: &McConfig, mut rows: Vec<ReplicateRow>) -> Result<McReport> {
    rows.sort_by_key(|r| r.replicate);
    let total = rows.len();
    let ok: Vec<&Vec<f64>> = rows.iter().filter_map(|r| r.estimate.as_ref()).collect();
    let failures = total - ok.len();
    if ok.is_empty() || failures * 10 > total {
        return Err(ArtfimaError::StudyUnreliable {
            failed: failures,
            total,
        });
    }
    let truth = config.params.beta();
    let names = ArtfimaParams::beta_names(config.params.p(), config.params.q());
    let k = ok.len() as f64;
    let summaries = names
        .into_iter()
        .enumerate()
        .map(|(i, name)| {
            let mut v: Vec<f64> = ok.iter().map(|e| e[i]).collect();
            v.sort_by(f64::total_cmp);
            let mean = v.iter().sum::<f64>() / k;
            let variance = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k;
            let mse = v.iter().map(|x| (x - truth[i]).powi(2)).sum::<f64>() / k;
            ParamSummary {
                name,
                truth: truth[i],
                mean,
                bias: mean - truth[i],
                mse,
                variance,
                ci_lower: percentile(&v, 0.025),
                ci_upper: percentile(&v, 0.975),
            }
        })
        .collect();
    Ok(McReport {
        params: config.params.clone(),
        alpha: config.spec.alpha(),
        n: config.n,
        replicates: total,
        base_seed: config.base_seed,
        failures,
        summaries,
        rows,
    })
}

impl McReport {
    /// Plain-text table with one line per parameter.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "alpha={} n={} R={} failures={}",
            self.alpha, self.n, self.replicates, self.failures
        );
        let _ = writeln!(
            s,
            "{:<8} {:>9} {:>9} {:>9} {:>11} {:>21}",
            "param", "true", "mean", "bias", "mse", "95% CI"
        );
        for p in &self.summaries {
            let _ = writeln!(
                s,
                "{:<8} {:>9.4} {:>9.4} {:>9.4} {:>11.3e} [{:>8.4}, {:>8.4}]",
                p.name, p.truth, p.mean, p.bias, p.mse, p.ci_lower, p.ci_upper
            );
        }
        s
    }

    /// One CSV row per replicate: `replicate,stream,<β names>,sigma2,converged,error`.
    pub fn write_rows_csv<W: Write>(&self, out: W) -> Result<()> {
        let names = ArtfimaParams::beta_names(self.params.p(), self.params.q());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["replicate".to_string(), "stream".to_string()];
        header.extend(names.iter().cloned());
        header.extend(["sigma2", "converged", "error"].map(String::from));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.replicate.to_string(), r.stream.to_string()];
            match &r.estimate {
                Some(e) => rec.extend(e.iter().map(|v| crate::io::fmt_f64(*v))),
                None => rec.extend(names.iter().map(|_| String::new())),
            }
            rec.push(r.sigma2.map(crate::io::fmt_f64).unwrap_or_default());
            rec.push(r.converged.to_string());
            rec.push(r.error.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
