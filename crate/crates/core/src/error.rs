use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("modulus {0} exceeds 2^16")]
    ModulusTooLarge(u32),
    #[error("residue {value} is not reduced modulo {modulus}")]
    ResidueOutOfRange { value: u32, modulus: u32 },
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u32, u32),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported dimension {0}")]
    InvalidDimension(usize),
    #[error("points belong to different ambient spaces")]
    AmbientMismatch,
    #[error("empty point set")]
    EmptyInput,
    #[error("duplicate point {0}")]
    DuplicatePoint(String),
    #[error("points do not span a flat of dimension {expected} (span has dimension {found})")]
    Degenerate { expected: usize, found: usize },
    #[error("flat dimension {0} out of range")]
    FlatDimension(usize),
    #[error("subset size {0} out of range")]
    SubsetSize(usize),
    #[error("q = {q} is too small (need q >= {min})")]
    FieldTooSmall { q: u32, min: u32 },
    #[error("need |U| >= T*q = {required:.1}, got {n}")]
    BelowThreshold { n: usize, required: f64 },
    #[error("U is outside the construction's range: not dense and the rich-triple family is empty")]
    BelowRegime,
    #[error("invalid constant {name} = {value}")]
    InvalidConstant { name: &'static str, value: f64 },
    #[error("plan is for {expected}, not {found}")]
    PlanMismatch { expected: String, found: String },
    #[error("invalid probability {0}")]
    InvalidProbability(f64),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
