//! Error type shared by all modules of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdent { name: String, offset: usize },

    #[error("variable `{name}` out of range at byte {offset}: chart has {n_vars} coordinates")]
    VarOutOfRange {
        name: String,
        offset: usize,
        n_vars: usize,
    },

    #[error("domain violation in `{expr}`: {detail}")]
    Domain { expr: String, detail: String },

    #[error("requested derivative order {requested} exceeds jet order {order}")]
    OrderExceeded { requested: usize, order: usize },

    #[error("invalid metric specification: {0}")]
    BadSpec(String),

    #[error("metric matrix is not symmetric: g[{i}][{j}] differs from g[{j}][{i}]")]
    Asymmetric { i: usize, j: usize },

    #[error("signature mismatch: expected {expected_negative} negative eigenvalues, found {found_negative}")]
    BadSignature {
        expected_negative: usize,
        found_negative: usize,
    },

    #[error("metric singular at sample point (|det| = {det:.3e})")]
    SingularMetric { det: f64 },

    #[error("point rejected by chart guard")]
    GuardViolation,

    #[error("frame pivot breakdown: all candidate directions numerically null; try a different point")]
    PivotBreakdown,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degree mismatch: {0}")]
    Degree(String),

    #[error("insufficient jet order: need {needed}, have {have}")]
    InsufficientJets { needed: usize, have: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("path leaves the chart domain: {0}")]
    PathOutOfDomain(String),

    #[error("json error: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;
