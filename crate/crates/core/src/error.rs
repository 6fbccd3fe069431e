use thiserror::Error;

#[derive(Debug, Error)]
pub enum HdxError {
    #[error("elements {0} and {1} are not comparable")]
    NotComparable(String, String),
    #[error("bad rank: {0}")]
    BadRank(String),
    #[error("facets are not pure: sizes {0} and {1}")]
    NonPure(usize, usize),
    #[error("bad arguments: {0}")]
    BadArgs(String),
    #[error("resource limit: {needed} elements exceed the cap of {cap}")]
    ResourceLimit { needed: u128, cap: usize },
    #[error("graph is not bipartite")]
    NotBipartite,
    #[error("element {0} covers exactly one element")]
    DegenerateCover(String),
    #[error("level mismatch: {0} vs {1}")]
    LevelMismatch(i32, i32),
    #[error("operator is not self-adjoint (symmetrization residual {0:.3e})")]
    NotSelfAdjoint(f64),
    #[error("weight scheme is not standard")]
    NonStandardScheme,
    #[error("missing regularity: {0}")]
    MissingRegularity(String),
    #[error("UL constants unavailable: {0}")]
    MissingULReport(String),
    #[error("property AL fails (deviation {0:.3e})")]
    ALViolated(f64),
    #[error("property TL fails (deviation {0:.3e})")]
    TLViolated(f64),
    #[error("cochain is not mean zero (<f,1> = {0:.3e})")]
    NotMeanZero(f64),
    #[error("up operator U_{0} is not injective (smallest singular value {1:.3e})")]
    NotInjective(i32, f64),
    #[error("hypotheses unmet: {}", .0.join("; "))]
    HypothesesUnmet(Vec<String>),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HdxError>;
