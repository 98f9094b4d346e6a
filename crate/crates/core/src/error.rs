use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("discriminant {0} rejected: {1}")]
    BadDiscriminant(i64, &'static str),

    #[error("{0} is not a prime")]
    NotPrime(i64),

    #[error("norm too large: {norm} cannot be factored with prime bound {bound}")]
    NormTooLarge { norm: i64, bound: i64 },

    #[error("{what} cap exceeded: size {size} > cap {cap}")]
    CapExceeded { what: &'static str, size: u64, cap: u64 },

    #[error("ideal is not coprime to the conductor")]
    NotCoprime,

    #[error("element is not idempotent")]
    NotIdempotent,

    #[error("prime is not in the support of the conductor")]
    PrimeNotInSupport,

    #[error("elements belong to different levels")]
    LevelMismatch,

    #[error("conductor {0} does not divide {1}")]
    NotDivisible(String, String),

    #[error("search bound exceeded: {0}")]
    SearchBound(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
