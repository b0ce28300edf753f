use std::path::PathBuf;

use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cone matrix is empty")]
    EmptyMatrix,
    #[error("RankDeficient: cone is not pointed (rank {rank} < dimension {dim})")]
    RankDeficient { rank: usize, dim: usize },
    #[error("NotInterior: e is not interior to the cone ((Ae)_{row} = {value})")]
    NotInterior { row: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty input")]
    EmptyInput,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("UnknownProblem: '{0}' (built-ins are ex1..ex7)")]
    UnknownProblem(String),
    #[error("DomainError in f^{function} at x = {x:?}: {detail}")]
    Domain {
        function: usize,
        x: Vec<f64>,
        detail: String,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("FormatError in [{section}] at line {line}: {message}")]
    Format {
        section: String,
        line: usize,
        message: String,
    },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("NumericalBreakdown: {0}")]
    NumericalBreakdown(String),
    #[error("SingularSystem: {0}")]
    SingularSystem(String),
    #[error("subproblem failed for a = {a:?}: {source}")]
    Subproblem {
        a: Vec<usize>,
        #[source]
        source: Box<Error>,
    },
    #[error("LineSearchFailure after {backtracks} backtracks (violating selection index j = {violating})")]
    LineSearchFailure { backtracks: u32, violating: usize },
    #[error("GridTooLarge: {count} points exceeds the guard of {limit}")]
    GridTooLarge { count: u128, limit: u128 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("BracketFailure: bisection bracket [{lo}, {hi}] does not enclose the root")]
    BracketFailure { lo: f64, hi: f64 },
}

impl Error {
    pub(crate) fn at_line(self, line: usize) -> Error {
        Error::AtLine {
            line,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping line/subproblem wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLine { source, .. } | Error::Subproblem { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
