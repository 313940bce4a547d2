use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty coefficient list")]
    EmptyPolynomial,
    #[error("coefficient of x^{power} is {value}, but even powers must vanish")]
    EvenCoefficient { power: usize, value: i64 },
    #[error("leading coefficient {0} is not positive")]
    NonPositiveLeading(i64),
    #[error("degree {0} is below 3")]
    DegreeTooSmall(usize),
    #[error("integer overflow while {0}")]
    Overflow(&'static str),
    #[error("no j >= 1 with a_k (d j)^k <= n for n = {n}, d = {d}")]
    EmptySurrogate { n: u64, d: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("scheme needs 2^{s} primes, above the cap 2^{cap_log2}")]
    SchemeTooLarge { s: u32, cap_log2: u32 },
    #[error("difference-set size {n} exceeds cap {cap}")]
    CapExceeded { n: u64, cap: u64 },
    #[error("lower-bound assertion failed: {0}")]
    BoundViolated(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
