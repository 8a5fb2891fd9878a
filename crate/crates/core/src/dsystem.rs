//! The homogeneous systems `D eta = 0` and `C vec(P) = 0`, and an idempotent
//! projector describing the solution space of the latter.
//!
//! Row `(i, j)` of both systems sits at position `i * J + j`: rows are grouped
//! by `i`, with `j` running fastest.

use num_traits::One;

use crate::error::{Error, Result};
use crate::exact::{RatMatrix, Rational};
use crate::model::{ConditionalMatrix, Orientation};

/// `D` of shape `IJ x I` over the unknown X-marginal `eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct DSystem {
    pub d: RatMatrix,
    pub dims: (usize, usize),
}

impl DSystem {
    pub fn row_index(&self, i: usize, j: usize) -> usize {
        i * self.dims.1 + j
    }
}

/// `C` of shape `IJ x IJ` over row-major `vec(P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CSystem {
    pub c: RatMatrix,
    pub dims: (usize, usize),
}

/// Checks orientation, equal shapes and absence of unknowns; returns the
/// two matrices as plain rational matrices.
pub(crate) fn known_pair(
    a: &ConditionalMatrix,
    b: &ConditionalMatrix,
) -> Result<(RatMatrix, RatMatrix)> {
    if a.orientation() != Orientation::GivenColumn || b.orientation() != Orientation::GivenRow {
        return Err(Error::InvalidMatrix(
            "expected A given column and B given row".into(),
        ));
    }
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{} but B is {}x{}",
            a.dims().0,
            a.dims().1,
            b.dims().0,
            b.dims().1
        )));
    }
    Ok((a.to_matrix()?, b.to_matrix()?))
}

/// Row `(i, j)` of `D` given `a_ij` and a fully known `B`.
pub(crate) fn d_row(a_ij: &Rational, b: &RatMatrix, i: usize, j: usize) -> Vec<Rational> {
    (0..b.rows())
        .map(|s| {
            if s == i {
                &b[(i, j)] * (a_ij - Rational::one())
            } else {
                a_ij * &b[(s, j)]
            }
        })
        .collect()
}

/// Row `(i, j)`: `a_ij * b_sj` in column `s != i`, `b_ij * (a_ij - 1)` in column `i`.
pub fn build_d(a: &ConditionalMatrix, b: &ConditionalMatrix) -> Result<DSystem> {
    let (am, bm) = known_pair(a, b)?;
    let (rows, cols) = a.dims();
    let mut all = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            all.push(d_row(&am[(i, j)], &bm, i, j));
        }
    }
    let d = RatMatrix::from_rows(all)?;
    Ok(DSystem {
        d,
        dims: (rows, cols),
    })
}

/// Row `(i, j)` encodes `a_ij * sum_s p_sj - b_ij * sum_k p_ik = 0`.
pub fn build_c(a: &ConditionalMatrix, b: &ConditionalMatrix) -> Result<CSystem> {
    let (am, bm) = known_pair(a, b)?;
    let (rows, cols) = a.dims();
    let n = rows * cols;
    let c = RatMatrix::from_fn(n, n, |r, q| {
        let (i, j) = (r / cols, r % cols);
        let (s, k) = (q / cols, q % cols);
        let mut v = Rational::default();
        if k == j {
            v += &am[(i, j)];
        }
        if s == i {
            v -= &bm[(i, j)];
        }
        v
    });
    Ok(CSystem {
        c,
        dims: (rows, cols),
    })
}

/// Idempotent `M` with `{x : C x = 0} = {(I - M) z}`.
///
/// Row `p` of `M` is the reduced echelon row whose pivot sits in column `p`;
/// rows at free columns are zero. Then `M^2 = M`, and `(I - M) z` keeps the
/// free coordinates of `z` and solves for the pivot coordinates.
pub fn solution_projector(c: &CSystem) -> RatMatrix {
    let n = c.c.cols();
    let ech = c.c.row_echelon();
    let mut m = RatMatrix::zeros(n, n);
    for (k, &p) in ech.pivot_cols.iter().enumerate() {
        for j in 0..n {
            m[(p, j)] = ech.reduced[(k, j)].clone();
        }
    }
    m
}
