use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Simulation, estimation and diagnostics for ARTFIMA models with symmetric
/// stable innovations.
#[derive(Parser, Debug)]
#[command(name = "artfima", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a sample path (CSV `t,x` plus a `.meta.json` sidecar)
    Simulate(SimulateArgs),
    /// Whittle fit of an ARTFIMA(p,d,lambda,q) model
    Fit(FitArgs),
    /// Theoretical co-difference curve
    Codiff(CodiffArgs),
    /// Periodogram at the positive Fourier frequencies
    Periodogram(PeriodogramArgs),
    /// Sample autocorrelations with the white-noise band
    Acf(AcfArgs),
    /// Residuals through the inverse filter
    Residuals(ResidualsArgs),
    /// Ljung-Box portmanteau test
    Lb(LbArgs),
    /// McCulloch estimate of the stability index
    Alpha(AlphaArgs),
    /// Monte Carlo study of the Whittle estimator
    Mc(McArgs),
    /// Merge and transform CSV sources into one series
    Ingest(IngestArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub d: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    /// AR coefficients, comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub phi: Vec<f64>,
    /// MA coefficients, comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta: Vec<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Headed CSV file
    pub input: PathBuf,
    /// Column name or zero-based index
    #[arg(long, default_value = "x")]
    pub column: String,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = artfima::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// Truncation tolerance of the moving-average filter
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Also write the driving innovations as a `z` column
    #[arg(long)]
    pub innovations: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 0)]
    pub p: usize,
    #[arg(long, default_value_t = 0)]
    pub q: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub d_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub d_max: Option<f64>,
    #[arg(long)]
    pub lambda_min: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Bound on |phi_i| and |theta_j|
    #[arg(long)]
    pub arma_bound: Option<f64>,
    /// Random ARMA starts per (d, lambda) lattice node
    #[arg(long)]
    pub multistarts: Option<usize>,
    #[arg(long, default_value_t = artfima::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub max_evals: Option<usize>,
    /// Quadrature points for W at the estimate (0 skips it)
    #[arg(long, default_value_t = 1024)]
    pub w_points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CodiffArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 200)]
    pub max_lag: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PeriodogramArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Use the `n^{-2/alpha}` normalisation instead of self-normalisation
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AcfArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 40)]
    pub max_lag: usize,
    /// Normalised sample autocovariance for this alpha (no mean correction)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Autocorrelations of the squared series
    #[arg(long)]
    pub squared: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ResidualsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LbArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = artfima::diagnostics::DEFAULT_LB_LAGS)]
    pub lags: usize,
    /// Fitted parameters subtracted from the degrees of freedom
    #[arg(long, default_value_t = 0)]
    pub fitted: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AlphaArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct McArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// R=1000, n=10000 unless given explicitly
    #[arg(long)]
    pub full: bool,
    #[arg(long, default_value_t = artfima::DEFAULT_SEED)]
    pub seed: u64,
    /// Every replicate reuses stream 0 of the seed
    #[arg(long)]
    pub shared_seed: bool,
    /// JSON report
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-replicate CSV
    #[arg(long)]
    pub rows: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MergeArg {
    MeanElseMax,
    Single,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// `path:column`, repeatable
    #[arg(long = "source", required = true)]
    pub sources: Vec<String>,
    /// Column joining rows across sources
    #[arg(long)]
    pub key: Option<String>,
    #[arg(long, value_enum, default_value_t = MergeArg::MeanElseMax)]
    pub merge: MergeArg,
    /// Applied in order: `log`, `demean`, `subseries:START:END`
    #[arg(long = "transform")]
    pub transforms: Vec<String>,
    /// Cell value treated as missing
    #[arg(long, allow_negative_numbers = true)]
    pub missing: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn configure_threads() {
    if let Some(n) = std::env::var("ARTFIMA_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    configure_threads();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::CliError::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
