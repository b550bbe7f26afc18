use thiserror::Error;

pub type Result<T> = std::result::Result<T, ArtfimaError>;

#[derive(Debug, Error)]
pub enum ArtfimaError {
    #[error("invalid tempered order: {0}")]
    InvalidOrder(String),
    #[error("empty request: {0}")]
    EmptyRequest(String),
    #[error("invalid ARMA polynomials: {0}")]
    InvalidArma(String),
    #[error("parameters outside the admissible space: {0}")]
    InvalidParams(String),
    #[error("invalid stable law: {0}")]
    InvalidStable(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("empty series")]
    EmptySeries,
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
    #[error("series too short: need at least {needed} values, got {got}")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("singular spectrum: {0}")]
    SingularSpectrum(String),
    #[error("no feasible starting point: {0}")]
    NoFeasiblePoint(String),
    #[error("gradient failure: {0}")]
    GradientFailure(String),
    #[error("study unreliable: {failed} of {total} replicates failed")]
    StudyUnreliable { failed: usize, total: usize },
    #[error("transform error at row {row}: {message}")]
    Transform { row: usize, message: String },
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
