use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid metric at ({u}, {v}): {reason}")]
    InvalidMetric { u: f64, v: f64, reason: String },
    #[error("mesh too coarse for eps={eps}: need eps > 3h (h={h})")]
    Resolution { eps: f64, h: f64 },
    #[error("log map did not converge")]
    LogMapNoConvergence,
    #[error("no certified injectivity-radius bound for this surface")]
    NoCertifiedBound,
    #[error("degenerate simplex: {0}")]
    Degenerate(String),
    #[error("invalid complex: {0}")]
    InvalidComplex(String),
    #[error("chessboard coloring failed: odd dual cycle through simplices {0:?}")]
    OddCycle(Vec<usize>),
    #[error("model labeling conflict at vertex {0}")]
    LabelConflict(usize),
    #[error("empty complex")]
    EmptyComplex,
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("stage {stage} failed: {reason}")]
    Stage { stage: String, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
