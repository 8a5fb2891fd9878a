//! Compatibility decisions, marginal and joint recovery, and the minimal
//! uniform relaxation `epsilon*` of an incompatible pair.

use num_traits::{One, Signed, Zero};

use crate::dsystem::{build_d, known_pair, DSystem};
use crate::error::{Error, Result};
use crate::exact::{is_nonnegative, normalize, sum, RatMatrix, Rational};
use crate::lp::{LinearProgram, LpOutcome};
use crate::model::{
    CompatibilityVerdict, ConditionalMatrix, JointDistribution, MarginalPair, Orientation,
};

/// Smallest `epsilon` with `|D eta| <= epsilon` row-wise for some stochastic `eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonResult {
    pub epsilon_star: Rational,
    pub eta: Vec<Rational>,
}

/// A 2x2 minor on rows `(i, i2)` and columns `(j, j2)`, zero-based, `i < i2`, `j < j2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Minor {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CrossProductOutcome {
    Agree,
    Disagree(Minor),
    /// Every minor touched a zero; lists the cells where A or B is zero.
    Inapplicable(Vec<(usize, usize)>),
}

/// `tau_j = sum_s b_sj eta_s`.
pub fn column_marginals(b: &RatMatrix, eta: &[Rational]) -> Vec<Rational> {
    (0..b.cols())
        .map(|j| {
            eta.iter()
                .enumerate()
                .fold(Rational::zero(), |acc, (s, e)| acc + &b[(s, j)] * e)
        })
        .collect()
}

/// `p_ij = b_ij * eta_i`.
pub fn recover_joint(b: &ConditionalMatrix, eta: &[Rational]) -> Result<JointDistribution> {
    if b.orientation() != Orientation::GivenRow {
        return Err(Error::InvalidMatrix(
            "recover_joint expects B given row".into(),
        ));
    }
    let bm = b.to_matrix()?;
    if eta.len() != bm.rows() {
        return Err(Error::DimensionMismatch(format!(
            "eta has length {} but B has {} rows",
            eta.len(),
            bm.rows()
        )));
    }
    JointDistribution::new(RatMatrix::from_fn(bm.rows(), bm.cols(), |i, j| {
        &bm[(i, j)] * &eta[i]
    }))
}

fn unique_verdict(b: &ConditionalMatrix, eta: Vec<Rational>) -> Result<CompatibilityVerdict> {
    let tau = column_marginals(&b.to_matrix()?, &eta);
    let joint = recover_joint(b, &eta)?;
    Ok(CompatibilityVerdict::CompatibleUnique {
        marginals: MarginalPair { eta, tau },
        joint,
    })
}

/// Nonzero rows of the reduced echelon form of `D`.
fn reduced_rows(sys: &DSystem) -> (RatMatrix, usize) {
    let ech = sys.d.row_echelon();
    let keep: Vec<usize> = (0..ech.rank).collect();
    (ech.reduced.select_rows(&keep), ech.rank)
}

/// Maximizes `sum y` over `D_r y = 0`, `sum y <= 1`, `y >= 0`.
/// Returns the optimal value and the optimizer.
pub fn feasibility_program(d_reduced: &RatMatrix, n: usize) -> (Rational, Vec<Rational>) {
    let ones = vec![Rational::one(); n];
    let mut lp = LinearProgram::maximize(ones.clone());
    if d_reduced.rows() > 0 {
        lp = lp
            .with_equalities(d_reduced.clone(), vec![Rational::zero(); d_reduced.rows()])
            .expect("reduced D has one column per unknown");
    }
    let lp = lp
        .with_inequalities(
            RatMatrix::from_rows(vec![ones]).expect("one row"),
            vec![Rational::one()],
        )
        .expect("one constraint");
    match lp.solve() {
        LpOutcome::Optimal { value, point } => (value, point),
        // y = 0 is always feasible and the objective is capped at one.
        LpOutcome::Infeasible | LpOutcome::Unbounded => {
            unreachable!("feasibility LP is bounded and feasible")
        }
    }
}

/// Rank criterion on `D`.
///
/// * rank `I`: only the zero vector solves `D eta = 0`.
/// * rank `I - 1`: the kernel is a line; compatible iff it holds a
///   probability vector.
/// * rank below `I - 1`: compatible iff the feasibility program finds a
///   nonnegative kernel vector; the joint is then not unique.
pub fn check_rank(a: &ConditionalMatrix, b: &ConditionalMatrix) -> Result<CompatibilityVerdict> {
    let sys = build_d(a, b)?;
    let n = sys.dims.0;
    let ech = sys.d.row_echelon();
    let rank = ech.rank;
    if rank == n {
        return Ok(CompatibilityVerdict::Incompatible { rank });
    }
    let kernel = sys.d.null_space();
    if rank + 1 == n {
        return match normalize(&kernel[0]) {
            Some(eta) if is_nonnegative(&eta) => unique_verdict(b, eta),
            _ => Ok(CompatibilityVerdict::Incompatible { rank }),
        };
    }
    let keep: Vec<usize> = (0..rank).collect();
    let (value, y) = feasibility_program(&ech.reduced.select_rows(&keep), n);
    if value.is_zero() {
        return Ok(CompatibilityVerdict::Incompatible { rank });
    }
    Ok(CompatibilityVerdict::CompatibleNonUnique {
        rank,
        kernel_basis: kernel,
        representative: y.iter().map(|v| v / &value).collect(),
    })
}

/// Linear-programming criterion: compatible iff `max sum y > 0`.
pub fn check_lp(a: &ConditionalMatrix, b: &ConditionalMatrix) -> Result<CompatibilityVerdict> {
    let sys = build_d(a, b)?;
    let n = sys.dims.0;
    let (d_r, rank) = reduced_rows(&sys);
    let (value, y) = feasibility_program(&d_r, n);
    if value.is_zero() {
        return Ok(CompatibilityVerdict::Incompatible { rank });
    }
    let eta: Vec<Rational> = y.iter().map(|v| v / &value).collect();
    if rank + 1 == n {
        unique_verdict(b, eta)
    } else {
        Ok(CompatibilityVerdict::CompatibleNonUnique {
            rank,
            kernel_basis: sys.d.null_space(),
            representative: eta,
        })
    }
}

/// Compares cross-product ratios of every 2x2 minor, written without
/// division: `a_ij a_i'j' b_i'j b_ij'` against `a_i'j a_ij' b_ij b_i'j'`.
/// Minors with a zero entry in A or B are skipped.
pub fn cross_product_check(
    a: &ConditionalMatrix,
    b: &ConditionalMatrix,
) -> Result<CrossProductOutcome> {
    let (am, bm) = known_pair(a, b)?;
    let (rows, cols) = a.dims();
    let mut tested = false;
    for i in 0..rows {
        for i2 in i + 1..rows {
            for j in 0..cols {
                for j2 in j + 1..cols {
                    let cells = [(i, j), (i, j2), (i2, j), (i2, j2)];
                    if cells.iter().any(|&c| am[c].is_zero() || bm[c].is_zero()) {
                        continue;
                    }
                    tested = true;
                    let lhs = &am[(i, j)] * &am[(i2, j2)] * &bm[(i2, j)] * &bm[(i, j2)];
                    let rhs = &am[(i2, j)] * &am[(i, j2)] * &bm[(i, j)] * &bm[(i2, j2)];
                    if lhs != rhs {
                        return Ok(CrossProductOutcome::Disagree(Minor {
                            rows: (i, i2),
                            cols: (j, j2),
                        }));
                    }
                }
            }
        }
    }
    if tested {
        return Ok(CrossProductOutcome::Agree);
    }
    let zeros = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .filter(|&c| am[c].is_zero() || bm[c].is_zero())
        .collect();
    Ok(CrossProductOutcome::Inapplicable(zeros))
}

/// Solves `min epsilon` s.t. `-epsilon <= (D eta)_r <= epsilon` for every
/// row, `sum eta = 1`, `eta >= 0`.
pub fn min_epsilon(a: &ConditionalMatrix, b: &ConditionalMatrix) -> Result<EpsilonResult> {
    let sys = build_d(a, b)?;
    let n = sys.dims.0;
    let d = &sys.d;
    let live: Vec<usize> = (0..d.rows())
        .filter(|&r| d.row(r).iter().any(|v| !v.is_zero()))
        .collect();
    let mut le_rows = Vec::with_capacity(2 * live.len());
    for &r in &live {
        for sign in [Rational::one(), -Rational::one()] {
            let mut row: Vec<Rational> = d.row(r).iter().map(|v| v * &sign).collect();
            row.push(-Rational::one());
            le_rows.push(row);
        }
    }
    let mut objective = vec![Rational::zero(); n];
    objective.push(-Rational::one());
    let mut normalization = vec![Rational::one(); n];
    normalization.push(Rational::zero());
    let mut lp = LinearProgram::maximize(objective).with_equalities(
        RatMatrix::from_rows(vec![normalization])?,
        vec![Rational::one()],
    )?;
    if !le_rows.is_empty() {
        let count = le_rows.len();
        lp = lp.with_inequalities(
            RatMatrix::from_rows(le_rows)?,
            vec![Rational::zero(); count],
        )?;
    }
    match lp.solve() {
        LpOutcome::Optimal { mut point, .. } => {
            let epsilon_star = point.pop().expect("epsilon variable");
            debug_assert!(!epsilon_star.is_negative());
            debug_assert!(sum(&point).is_one());
            Ok(EpsilonResult {
                epsilon_star,
                eta: point,
            })
        }
        other => unreachable!("epsilon program is feasible and bounded below: {other:?}"),
    }
}
