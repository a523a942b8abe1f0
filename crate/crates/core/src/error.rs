use std::path::PathBuf;

use thiserror::Error;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad inputs: files, formats, shapes, labels, configuration.
    Validation,
    /// A numerical routine failed (eigensolver, degenerate bound).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("matrix is not symmetric: entries ({i},{j})={a} and ({j},{i})={b} differ")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },

    #[error("NaN entry at ({i},{j})")]
    NanEntry { i: usize, j: usize },

    #[error("conflicting duplicate edge {src},{dst}: weights {a} and {b}")]
    DuplicateEdge { src: String, dst: String, a: f64, b: f64 },

    #[error("edge references undeclared label {0:?}")]
    UnknownLabel(String),

    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),

    #[error("label {0:?} appears on both sides of the bipartite input")]
    LabelCollision(String),

    #[error("network must have at least 2 agents, got {0}")]
    TooSmall(usize),

    #[error("dimension mismatch: {context} expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("eigendecomposition did not converge for {context} ({n}x{n})")]
    EigenFailure { context: String, n: usize },

    #[error("pattern has {0} vertices; homomorphism densities are limited to 5 (N^|V| enumeration)")]
    PatternTooLarge(usize),

    #[error("{context}: networks take {actual} distinct values; limit is {limit} — use dpo_bounds for individual thresholds")]
    TooManyValues {
        context: &'static str,
        actual: usize,
        limit: usize,
    },

    #[error("empty threshold grid")]
    EmptyGrid,

    #[error("oracle requires equal group sizes, got {n1} and {n0}")]
    OracleUnequalSizes { n1: usize, n0: usize },

    #[error("oracle enumeration is limited to n <= {limit}, got {n}")]
    OracleTooLarge { n: usize, limit: usize },

    #[error("networks must be binary for {0}")]
    NotBinary(&'static str),

    #[error("SVT threshold must be positive, got {0}")]
    InvalidSvtThreshold(f64),

    #[error("lift function is decreasing on the spectrum range near x={0}")]
    DecreasingLift(f64),

    #[error("label sets differ: only in first: {only_left:?}; only in second: {only_right:?}")]
    LabelMismatch {
        only_left: Vec<String>,
        only_right: Vec<String>,
    },

    #[error("masks differ between the two networks")]
    MaskMismatch,

    #[error("masked fractions differ between arms ({mu1} vs {mu0}); cell tables need aligned masks")]
    MaskFractionMismatch { mu1: f64, mu0: f64 },

    #[error("subgroup selection {0:?} matched no agents")]
    EmptySelection(String),

    #[error("agent {label:?} is missing attribute {attr:?}")]
    MissingAttribute { label: String, attr: String },

    #[error("invalid config: {0}")]
    Config(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::EigenFailure { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
