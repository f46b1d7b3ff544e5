use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed row {row}: {reason}")]
    MalformedRow {
        path: PathBuf,
        row: usize,
        reason: String,
    },

    #[error("{path}: expected header `{expected}`, found `{found}`")]
    BadHeader {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("score out of range at row {row}: {value}")]
    ScoreOutOfRange { row: usize, value: f64 },

    #[error("score {0} is outside [0, 1]")]
    InvalidScore(f64),

    #[error("duplicate id `{id}` at row {row}")]
    DuplicateId { id: String, row: usize },

    #[error("significance level {0} must lie strictly inside (0, 1)")]
    InvalidAlpha(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("sample {value} at index {index} lies outside the declared range [{lower}, {upper}]")]
    SampleOutOfRange {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("every candidate mean was eliminated; the data violate the declared bounds or exchangeability")]
    EmptyCandidateSet,

    #[error("hedge intervals are disjoint: [{a_lower}, {a_upper}] and [{b_lower}, {b_upper}]")]
    DisjointHedge {
        a_lower: f64,
        a_upper: f64,
        b_lower: f64,
        b_upper: f64,
    },

    #[error("correlation search stopped after {iterations} iterations at rho = {achieved} (target {target})")]
    CorrelationNotReached {
        target: f64,
        achieved: f64,
        iterations: usize,
    },

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("serialization failed: {0}")]
    Serialize(String),
}

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Infeasible,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidAlpha(_) | Error::Config(_) => ErrorClass::Config,
            Error::Io { .. }
            | Error::MalformedRow { .. }
            | Error::BadHeader { .. }
            | Error::ScoreOutOfRange { .. }
            | Error::InvalidScore(_)
            | Error::DuplicateId { .. }
            | Error::InsufficientData(_)
            | Error::SampleOutOfRange { .. }
            | Error::Serialize(_) => ErrorClass::Data,
            Error::EmptyCandidateSet
            | Error::DisjointHedge { .. }
            | Error::CorrelationNotReached { .. }
            | Error::Infeasible(_) => ErrorClass::Infeasible,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
