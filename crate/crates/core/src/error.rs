use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate state: {0}")]
    Degenerate(String),

    #[error("SCFT diverged at iteration {iteration} (residual {residual:.3e})")]
    Diverged {
        iteration: usize,
        residual: f64,
        trace: Vec<f64>,
    },

    #[error("structure factor denominator vanishes at x = {x}, f = {f}")]
    Singularity { x: f64, f: f64 },

    #[error("no interior spinodal minimum for f = {f} in x window [{lo}, {hi}]")]
    SearchWindow { f: f64, lo: f64, hi: f64 },

    #[error("chiN = {chi_n} is outside the knot range [{lo}, {hi}] of curve `{curve}`")]
    Extrapolation {
        curve: String,
        chi_n: f64,
        lo: f64,
        hi: f64,
    },

    #[error("boundary table does not cover (f = {f}, chiN = {chi_n}): {reason}")]
    LabelingGap { f: f64, chi_n: f64, reason: String },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("downsample spec error: {0}")]
    Spec(String),

    #[error("class balancing failed: {0}")]
    Balance(String),

    #[error("requested {requested} components but the data has rank {rank}")]
    Rank { requested: usize, rank: usize },

    #[error("component selection error: {0}")]
    Selection(String),

    #[error("encoding expects {expected} features, got {got}")]
    Encoding { expected: usize, got: usize },

    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("majority vote over an empty prediction list")]
    EmptyVote,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("no dataset at {0}; run `qerc generate` first")]
    MissingDataset(PathBuf),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_)
            | Error::Selection(_)
            | Error::Spec(_)
            | Error::Grid(_)
            | Error::Config(_)
            | Error::Encoding { .. } => ErrorKind::Usage,
            Error::Diverged { .. }
            | Error::Degenerate(_)
            | Error::Singularity { .. }
            | Error::SearchWindow { .. }
            | Error::Rank { .. }
            | Error::ZeroVector => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }
}
