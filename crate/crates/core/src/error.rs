use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("divisor ball contains zero")]
    DivisorContainsZero,
    #[error("domain violation in {0}")]
    DomainViolation(&'static str),
    #[error("root isolation failed: {0}")]
    RootIsolationFailure(String),
    #[error("branch images overlap in their interiors")]
    OverlapError,
    #[error("branch system invalid: {0}")]
    InvalidSystem(String),
    #[error("power iteration did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("candidate eigenvector is not positive at node {0}")]
    NonPositiveCandidate(usize),
    #[error("point lies outside the interpolation interval")]
    OutOfDomain,
    #[error("depth limit reached on subinterval [{lo}, {hi}]")]
    DepthExhausted { lo: String, hi: String },
    #[error("leaf coverage gap near leaf {0}")]
    CoverageGap(usize),
    #[error("inequality failure at leaf {0}")]
    InequalityFailure(usize),
    #[error("bounds ({t0}, {t1}) escape the bracket ({lower}, {upper})")]
    BracketViolation {
        t0: String,
        t1: String,
        lower: String,
        upper: String,
    },
    #[error("inconclusive at T = {t}; best bounds ({t0}, {t1})")]
    Inconclusive { t: String, t0: String, t1: String },
    #[error("level {0} is too large (maximum 8)")]
    LevelTooLarge(u32),
    #[error("graph has no interior vertices")]
    EmptyInterior,
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed certificate: {0}")]
    Certificate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
