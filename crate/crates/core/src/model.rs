//! Conditional matrices, joints, marginals and verdicts.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Axis, Error, Result};
use crate::exact::{sum, RatMatrix, Rational};

/// Which conditional a matrix holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// `A`: entry `(i, j)` is `P(X = i | Y = j)`; columns sum to one.
    GivenColumn,
    /// `B`: entry `(i, j)` is `P(Y = j | X = i)`; rows sum to one.
    GivenRow,
}

impl Orientation {
    /// Axis along which the matrix is stochastic.
    pub fn stochastic_axis(self) -> Axis {
        match self {
            Orientation::GivenColumn => Axis::Column,
            Orientation::GivenRow => Axis::Row,
        }
    }
}

/// An `I x J` conditional probability matrix whose entries may be unknown.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConditionalMatrix {
    orientation: Orientation,
    rows: usize,
    cols: usize,
    entries: Vec<Option<Rational>>,
}

/// A single failed invariant, as reported by [`ConditionalMatrix::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EntryOutOfRange {
        row: usize,
        col: usize,
        value: Rational,
    },
    /// A fully known line does not sum to one; `defect = sum - 1`.
    SumNotOne {
        axis: Axis,
        index: usize,
        sum: Rational,
        defect: Rational,
    },
    /// Known entries of a partially unknown line already exceed one.
    KnownSumExceedsOne {
        axis: Axis,
        index: usize,
        sum: Rational,
        excess: Rational,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EntryOutOfRange { row, col, value } => {
                write!(
                    f,
                    "entry ({}, {}) = {value} is outside [0, 1]",
                    row + 1,
                    col + 1
                )
            }
            Violation::SumNotOne {
                axis,
                index,
                sum,
                defect,
            } => write!(f, "{axis} {} sums to {sum} (off by {defect})", index + 1),
            Violation::KnownSumExceedsOne {
                axis,
                index,
                sum,
                excess,
            } => write!(
                f,
                "known entries of {axis} {} sum to {sum}, exceeding 1 by {excess}",
                index + 1
            ),
        }
    }
}

impl ConditionalMatrix {
    /// Builds a matrix from rows of optional entries (`None` = unknown).
    pub fn new(orientation: Orientation, rows: Vec<Vec<Option<Rational>>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self {
            orientation,
            rows: rows.len(),
            cols,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn known(orientation: Orientation, rows: Vec<Vec<Rational>>) -> Result<Self> {
        Self::new(
            orientation,
            rows.into_iter()
                .map(|r| r.into_iter().map(Some).collect())
                .collect(),
        )
    }

    pub fn from_matrix(orientation: Orientation, m: &RatMatrix) -> Result<Self> {
        Self::known(orientation, m.to_rows())
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&Rational> {
        self.entries[i * self.cols + j].as_ref()
    }

    /// Known entry at `(i, j)`. Panics on an unknown entry.
    pub fn value(&self, i: usize, j: usize) -> &Rational {
        self.get(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) is unknown"))
    }

    pub fn set(&mut self, i: usize, j: usize, value: Option<Rational>) {
        self.entries[i * self.cols + j] = value;
    }

    pub fn is_fully_known(&self) -> bool {
        self.entries.iter().all(Option::is_some)
    }

    /// Positions of unknown entries in row-major order.
    pub fn unknown_positions(&self) -> Vec<(usize, usize)> {
        (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
            .filter(|&(i, j)| self.get(i, j).is_none())
            .collect()
    }

    pub fn to_matrix(&self) -> Result<RatMatrix> {
        if !self.is_fully_known() {
            return Err(Error::UnknownEntriesPresent);
        }
        Ok(RatMatrix::from_fn(self.rows, self.cols, |i, j| {
            self.value(i, j).clone()
        }))
    }

    pub fn rows_of_options(&self) -> Vec<Vec<Option<Rational>>> {
        self.entries.chunks(self.cols).map(<[_]>::to_vec).collect()
    }

    fn line(&self, axis: Axis, index: usize) -> Vec<Option<&Rational>> {
        match axis {
            Axis::Row => (0..self.cols).map(|j| self.get(index, j)).collect(),
            Axis::Column => (0..self.rows).map(|i| self.get(i, index)).collect(),
        }
    }

    /// Every broken invariant; empty when the matrix is a valid conditional.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if let Some(v) = self.get(i, j) {
                    if v.is_negative() || *v > Rational::one() {
                        out.push(Violation::EntryOutOfRange {
                            row: i,
                            col: j,
                            value: v.clone(),
                        });
                    }
                }
            }
        }
        let axis = self.orientation.stochastic_axis();
        let count = match axis {
            Axis::Row => self.rows,
            Axis::Column => self.cols,
        };
        for index in 0..count {
            let line = self.line(axis, index);
            let known_sum = sum(line.iter().flatten().copied());
            let has_unknown = line.iter().any(Option::is_none);
            if has_unknown {
                if known_sum > Rational::one() {
                    out.push(Violation::KnownSumExceedsOne {
                        axis,
                        index,
                        excess: &known_sum - Rational::one(),
                        sum: known_sum,
                    });
                }
            } else if !known_sum.is_one() {
                out.push(Violation::SumNotOne {
                    axis,
                    index,
                    defect: &known_sum - Rational::one(),
                    sum: known_sum,
                });
            }
        }
        out
    }
}

/// Cells where exactly one of `a_ij`, `b_ij` is zero. Such a cell forces
/// `eta_i = 0` or rules compatibility out; the rank test adjudicates.
pub fn one_sided_zeros(a: &ConditionalMatrix, b: &ConditionalMatrix) -> Vec<(usize, usize)> {
    let (rows, cols) = a.dims();
    if b.dims() != (rows, cols) {
        return Vec::new();
    }
    let mut out = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if let (Some(x), Some(y)) = (a.get(i, j), b.get(i, j)) {
                if x.is_zero() != y.is_zero() {
                    out.push((i, j));
                }
            }
        }
    }
    out
}

/// A joint distribution on the `I x J` cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointDistribution {
    cells: RatMatrix,
}

impl JointDistribution {
    pub fn new(cells: RatMatrix) -> Result<Self> {
        if cells.rows() == 0 || cells.cols() == 0 {
            return Err(Error::InvalidMatrix("empty joint".into()));
        }
        let rows = cells.to_rows();
        if rows.iter().flatten().any(Signed::is_negative) {
            return Err(Error::InvalidMatrix("joint has a negative cell".into()));
        }
        let total = sum(rows.iter().flatten());
        if !total.is_one() {
            return Err(Error::InvalidMatrix(format!(
                "joint sums to {total}, not 1"
            )));
        }
        Ok(Self { cells })
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        Self::new(RatMatrix::from_rows(rows)?)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.cells.rows(), self.cells.cols())
    }

    pub fn cells(&self) -> &RatMatrix {
        &self.cells
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.cells[(i, j)]
    }

    /// `p_i.`, the marginal of X.
    pub fn row_marginals(&self) -> Vec<Rational> {
        (0..self.cells.rows())
            .map(|i| sum(self.cells.row(i)))
            .collect()
    }

    /// `p_.j`, the marginal of Y.
    pub fn col_marginals(&self) -> Vec<Rational> {
        let (rows, cols) = self.dims();
        (0..cols)
            .map(|j| sum((0..rows).map(|i| &self.cells[(i, j)])))
            .collect()
    }

    /// Row-major `vec(P) = (p_11, p_12, ..., p_IJ)`.
    pub fn vec(&self) -> Vec<Rational> {
        self.cells.to_rows().into_iter().flatten().collect()
    }
}

/// Marginals `eta` (of X, length I) and `tau` (of Y, length J).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MarginalPair {
    pub eta: Vec<Rational>,
    pub tau: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompatibilityVerdict {
    Incompatible {
        rank: usize,
    },
    CompatibleUnique {
        marginals: MarginalPair,
        joint: JointDistribution,
    },
    /// The kernel of `D` has dimension at least two; `representative` is one
    /// nonnegative solution scaled to a probability vector.
    CompatibleNonUnique {
        rank: usize,
        kernel_basis: Vec<Vec<Rational>>,
        representative: Vec<Rational>,
    },
}

impl CompatibilityVerdict {
    pub fn is_compatible(&self) -> bool {
        !matches!(self, CompatibilityVerdict::Incompatible { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            CompatibilityVerdict::Incompatible { .. } => "incompatible",
            CompatibilityVerdict::CompatibleUnique { .. } => "compatible_unique",
            CompatibilityVerdict::CompatibleNonUnique { .. } => "compatible_non_unique",
        }
    }
}

/// The conditionals `a_ij = p_ij / p_.j` and `b_ij = p_ij / p_i.` of a joint.
pub fn derive_conditionals(
    p: &JointDistribution,
) -> Result<(ConditionalMatrix, ConditionalMatrix)> {
    let (rows, cols) = p.dims();
    let eta = p.row_marginals();
    let tau = p.col_marginals();
    if let Some(i) = eta.iter().position(Zero::is_zero) {
        return Err(Error::ZeroMarginal {
            axis: Axis::Row,
            index: i,
        });
    }
    if let Some(j) = tau.iter().position(Zero::is_zero) {
        return Err(Error::ZeroMarginal {
            axis: Axis::Column,
            index: j,
        });
    }
    let a = RatMatrix::from_fn(rows, cols, |i, j| p.get(i, j) / &tau[j]);
    let b = RatMatrix::from_fn(rows, cols, |i, j| p.get(i, j) / &eta[i]);
    Ok((
        ConditionalMatrix::from_matrix(Orientation::GivenColumn, &a)?,
        ConditionalMatrix::from_matrix(Orientation::GivenRow, &b)?,
    ))
}
