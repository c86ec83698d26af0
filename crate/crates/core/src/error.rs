use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operands live over different universes")]
    UniverseMismatch,
    #[error("division by zero")]
    DivisionByZero,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid universe: {0}")]
    InvalidUniverse(String),
    #[error("substitution for `{var}` hits a pole")]
    PoleHit { var: String },
    #[error("denominator {magnitude:e} below floor at evaluation point")]
    NearZeroDenominator { magnitude: f64 },
    #[error("unassigned variable `{0}`")]
    Unassigned(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degree mismatch: {0}")]
    Degree(String),
    #[error("singular matrix")]
    Singular,
    #[error("invalid connection: {0}")]
    InvalidConnection(String),
    #[error("invalid finite algebra: {0}")]
    InvalidAlgebra(String),
    #[error("zero discriminant: the algebra is not semisimple")]
    ZeroDiscriminant,
    #[error("missing class of degree {0}")]
    MissingClass(usize),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid problem file:\n  {}", .0.join("\n  "))]
    Schema(Vec<String>),
    #[error("internal consistency failure: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
