use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("root of unity with zero denominator")]
    ZeroDenominator,
    #[error("order {order} is not a multiple of denominator {den}")]
    OrderMismatch { order: u64, den: u64 },
    #[error("inversion of zero")]
    DivisionByZero,
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("element is not a unit at its window")]
    NotUnit,
    #[error("valuation undetermined: element is zero modulo the uniformizer power {0}")]
    UnknownValuation(i32),
    #[error("window too coarse: modulus {modulus} is below the required {required}")]
    WindowTooCoarse { modulus: i32, required: i32 },
    #[error("precision insufficient: {0}")]
    PrecisionInsufficient(String),
    #[error("invalid root {0:?}")]
    InvalidRoot(Vec<i32>),
    #[error("index {index} out of range 0..={max}")]
    OutOfRange { index: usize, max: usize },
    #[error("enumeration bound exceeded: {0}")]
    BoundExceeded(String),
    #[error("invalid quotient space: {0}")]
    InvalidSpace(String),
    #[error("generator {generator} does not act on the space: {reason}")]
    NotPreserved { generator: String, reason: String },
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("not a filtration inclusion: {0}")]
    NotAnInclusion(String),
    #[error("unsupported generator label {0}")]
    UnknownLabel(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
