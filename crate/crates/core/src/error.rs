use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("q must be a prime power (got {0})")]
    NotPrimePower(u64),
    #[error("field size out of range: {0}")]
    FieldBounds(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("subfield embedding needs an even extension degree (r = {0})")]
    OddDegree(u32),
    #[error("q = {0} is not a square")]
    NotSquare(u32),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("minimal blocking subset is not unique: {0}")]
    UniquenessViolation(String),
    #[error("malformed split expression: {0}")]
    MalformedExpr(String),
    #[error("plane cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
