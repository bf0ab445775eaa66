use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("probability {value} outside {range}")]
    InvalidProbability { value: f64, range: &'static str },

    #[error("length must be at least {min}, got {got}")]
    LengthTooSmall { min: usize, got: usize },

    #[error("threshold tau must be finite and non-negative, got {0}")]
    InvalidTau(f64),

    #[error("bound not evaluable at l={l}, tau={tau}, p={p}: deviation {b} leaves the Chernoff region")]
    BoundNotEvaluable { l: usize, tau: f64, p: f64, b: f64 },

    #[error("alternative probability equals the typical probability ({0})")]
    DegenerateAlternative(f64),

    #[error("empty training set")]
    EmptyTraining,

    #[error("no training sequence is longer than the context depth {depth}")]
    TrainingTooShort { depth: usize },

    #[error("context depth {got} exceeds the supported maximum {max}")]
    DepthTooLarge { got: usize, max: usize },

    #[error("invalid scan configuration: {0}")]
    InvalidConfig(String),

    #[error("input of {got} samples is shorter than the minimum scannable length {min}")]
    InputTooShort { got: usize, min: usize },

    #[error("invalid character {found:?} at line {line}, column {column}")]
    InvalidCharacter { found: char, line: usize, column: usize },

    #[error("invalid number {token:?} at line {line}")]
    InvalidNumber { token: String, line: usize },

    #[error("need at least {min} values, got {got}")]
    TooFewValues { min: usize, got: usize },

    #[error("bit sequence of odd length {0} cannot be read as 2-bit symbols")]
    OddLength(usize),

    #[error("invalid DNA code table: {0}")]
    InvalidDnaMap(String),

    #[error("RANDU seed must be odd, got {0}")]
    EvenRanduSeed(u32),

    #[error("invalid model file: {0}")]
    ModelFormat(String),

    #[error("invalid Markov chain: {0}")]
    InvalidChain(String),

    #[error("invalid simulation grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
