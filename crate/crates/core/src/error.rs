use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("step cap must be at least 1")]
    InvalidCap,

    #[error("uniform draw {0} is outside [0, 1)")]
    UniformOutOfRange(f64),

    #[error("needle length {len} and spacing {spacing} must satisfy 0 < length <= spacing")]
    InvalidNeedle { len: f64, spacing: f64 },

    #[error("arcsine series argument {0} is outside [-1, 1]")]
    ArcsinDomain(f64),

    #[error("tail bound needs at least one summed term (K >= 1)")]
    TailBoundNeedsPositiveK,

    #[error("enumeration length {0} must be odd and in 1..={max}", max = crate::oracle::MAX_ENUM_LEN)]
    InvalidEnumerationLength(u32),

    #[error("censored trial cannot enter the running mean")]
    CensoredTrial,

    #[error("no completed trials ({flips_used} flips used, {censored} censored)")]
    NoData { flips_used: u64, censored: u64 },

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("slope fit needs at least 2 budgets with data, found {usable}")]
    DegenerateFit { usable: usize },
}
