//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // -- validation of inputs --------------------------------------------
    #[error("matrix is not square: {rows} rows, row {row} has {cols} columns")]
    NotSquare { rows: usize, row: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("distance matrix is asymmetric at ({i}, {j}): |{a} - {b}| exceeds 1e-9")]
    AsymmetricMatrix { i: usize, j: usize, a: f64, b: f64 },

    #[error("negative entry {value} at ({i}, {j})")]
    NegativeEntry { i: usize, j: usize, value: f64 },

    #[error("non-zero diagonal entry {value} at index {i}")]
    NonZeroDiagonal { i: usize, value: f64 },

    #[error("non-finite entry at ({i}, {j})")]
    NonFinite { i: usize, j: usize },

    #[error("row {row} of a compositional table sums to {sum}, expected 1")]
    NotCompositional { row: usize, sum: f64 },

    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),

    #[error("sample ids do not match: missing {missing:?}, unexpected {unexpected:?}")]
    IdMismatch { missing: Vec<String>, unexpected: Vec<String> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    // -- tree parsing ------------------------------------------------------
    #[error("unbalanced parenthesis at byte {0}")]
    UnbalancedParenthesis(usize),

    #[error("unexpected token `{token}` at byte {position}")]
    UnexpectedToken { position: usize, token: String },

    #[error("newick statement is not terminated by ';'")]
    MissingTerminator,

    #[error("duplicate leaf name `{0}`")]
    DuplicateLeafName(String),

    #[error("negative branch length {length} at byte {position}")]
    NegativeBranchLength { position: usize, length: f64 },

    #[error("feature `{0}` is not a leaf of the tree")]
    UnknownLeaf(String),

    #[error("total weight is zero{}", .row.map(|r| format!(" in row {r}")).unwrap_or_default())]
    ZeroTotalWeight { row: Option<usize> },

    // -- distances / statistics ---------------------------------------------
    #[error("samples {i} and {j} are both all-zero; Bray-Curtis is undefined")]
    ZeroDenominatorPair { i: usize, j: usize },

    #[error("within-group dispersion is zero; pseudo-F is undefined")]
    DegenerateWithinGroup,

    #[error("too few samples: {0} (need more than 2)")]
    TooFewSamples(usize),

    #[error("labels contain a single group; at least two are required")]
    SingleGroup,

    #[error("permutation {index} failed: {source}")]
    PermutationFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    // -- embedding ---------------------------------------------------------
    #[error("eigendecomposition failed to converge")]
    EigenFailure,

    #[error("all configuration points coincide; majorization cannot proceed")]
    CoincidentPoints,

    #[error("unbalanced design: group sizes {0:?}; F-informed MDS needs equal group sizes (use metric MDS with PERMANOVA instead)")]
    UnbalancedDesign(Vec<usize>),

    #[error("non-positive quadratic coefficient {coefficient} at lambda={lambda}; choose a smaller lambda")]
    NonPositiveQuadraticCoefficient { coefficient: f64, lambda: f64 },

    #[error("no convergence after {} outer iterations", .0.trace.records.len())]
    MaxIterationsExceeded(Box<crate::fmds::FmdsFit>),

    // -- quality metrics -----------------------------------------------------
    #[error("invalid neighbourhood size k={k} for N={n}: {reason}")]
    InvalidK { k: usize, n: usize, reason: String },

    #[error("embedding is degenerate (all points identical)")]
    DegenerateEmbedding,

    #[error("zero variance in {0}; correlation is undefined")]
    ZeroVariance(&'static str),

    #[error("original-space F is never exceeded by zero permutations (p_x = 1); rank ratio is undefined")]
    DegenerateDenominator,

    #[error("group {label} has {size} points; at least 3 are needed")]
    GroupTooSmall { label: usize, size: usize },

    #[error("covariance matrix is not positive semi-definite (eigenvalue {0})")]
    NonPSDCovariance(f64),

    // -- simulation ----------------------------------------------------------
    #[error("truncation region has probability mass {0:e} < 1e-6")]
    TruncationMassTooSmall(f64),

    #[error("row {0} sums to zero; total sum scaling is undefined")]
    ZeroRowSum(usize),
}

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Numerical,
    NonConvergence,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            MaxIterationsExceeded(_) => ErrorCategory::NonConvergence,
            ZeroDenominatorPair { .. }
            | DegenerateWithinGroup
            | PermutationFailed { .. }
            | EigenFailure
            | CoincidentPoints
            | NonPositiveQuadraticCoefficient { .. }
            | DegenerateEmbedding
            | ZeroVariance(_)
            | DegenerateDenominator
            | NonPSDCovariance(_)
            | TruncationMassTooSmall(_)
            | ZeroRowSum(_)
            | ZeroTotalWeight { .. } => ErrorCategory::Numerical,
            _ => ErrorCategory::Validation,
        }
    }
}
