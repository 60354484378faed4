use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("generator matrix is singular")]
    SingularGenerator,

    #[error("generator must be lower triangular with a positive diagonal")]
    NotTriangular,

    #[error("enumeration budget of {0} points exceeded")]
    EnumerationBudget(usize),

    #[error("message component {index} = {value} outside 0..{modulus}")]
    MessageOutOfRange { index: usize, value: i64, modulus: i64 },

    #[error("vector is not a lattice point (max residual {0:.3e})")]
    NotALatticePoint(f64),

    #[error("shaping lattice is not nested in the coding lattice")]
    NotNested,

    #[error("invalid binary code: {0}")]
    InvalidCode(String),

    #[error("payload LSB set at parity position {0}")]
    ForbiddenPayload(usize),

    #[error("{parity} parity bits leave no payload in {bits} message bits")]
    ParityTooLong { parity: usize, bits: f64 },

    #[error("cone restriction violated: radius^2 = {radius2} >= N*P = {limit}")]
    ConeRestriction { radius2: f64, limit: f64 },

    #[error("quadrature failed to reach tolerance {0:e}")]
    Quadrature(f64),

    #[error("conditioning event too rare: {got} conditioned samples, need {need}")]
    RareConditioning { got: usize, need: usize },

    #[error("only {got} error events observed, need {need}")]
    InsufficientErrors { got: u64, need: u64 },

    #[error("no integer coefficient vector has positive computation rate")]
    EmptyCandidates,

    #[error("coefficient matrix has rank {rank}, need {need}")]
    RankDeficient { rank: usize, need: usize },

    #[error("zero denominator: {0}")]
    ZeroDenominator(&'static str),

    #[error("CRC checking needs an even nesting matrix")]
    OddNesting,

    #[error("missing conditional success estimates for level {0}")]
    MissingConditionals(usize),

    #[error("target error rate {0:e} is not reached by any curve")]
    TargetUnreachable(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown lattice '{0}'")]
    UnknownLattice(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
