use std::fmt;

use crate::exact::Rational;

/// Which axis of a matrix an index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Column,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Row => f.write_str("row"),
            Axis::Column => f.write_str("column"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix contains unknown entries")]
    UnknownEntriesPresent,
    #[error("{axis} {} of the joint sums to zero", .index + 1)]
    ZeroMarginal { axis: Axis, index: usize },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("no fully known column in A")]
    NoKnownColumn,
    #[error("unknown entries of A span more than one column")]
    UnknownsNotConfinedToOneColumn,
    #[error("unsupported unknown pattern: {0}")]
    PatternMismatch(String),
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("filled value {value} at ({}, {}) lies outside [0, 1]", .row + 1, .col + 1)]
    InfeasibleFill {
        row: usize,
        col: usize,
        value: Rational,
    },
    #[error("linear system is singular")]
    SingularSystem,
    #[error("perturbed entry ({}, {}) leaves [0, 1]", .row + 1, .col + 1)]
    EntryOutOfRange { row: usize, col: usize },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
