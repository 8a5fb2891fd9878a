//! Filling unknown entries of `A` (and `B`) so that the pair becomes
//! compatible, with diagnostics when no exact completion exists and an
//! epsilon-relaxed estimate for one small incompatible pattern.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};

use crate::compat::check_rank;
use crate::dsystem::d_row;
use crate::error::{Error, Result};
use crate::exact::{dot, is_nonnegative, sum, LinearSolution, RatMatrix, Rational};
use crate::model::{CompatibilityVerdict, ConditionalMatrix, Orientation};

/// What a single fully known column of `A` says about `eta` on its own.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnCandidate {
    pub column: usize,
    /// `None` when the column alone does not pin down a probability vector.
    pub eta: Option<Vec<Rational>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostics {
    ExactUnique,
    /// The known columns admit no common probability vector `eta`.
    KnownColumnsInconsistent {
        candidates: Vec<ColumnCandidate>,
    },
    /// The known equations leave `free_parameters` directions in `eta` open.
    Underdetermined {
        free_parameters: usize,
    },
    /// Filled from one column's `eta` on request, ignoring the others; the
    /// result need not be compatible.
    Forced {
        column: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    pub filled_a: ConditionalMatrix,
    pub filled_b: ConditionalMatrix,
    pub eta: Option<Vec<Rational>>,
    pub diagnostics: Diagnostics,
}

/// `eta` and the two unknowns of the 3x2 pattern under a fixed `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonEstimate {
    pub eta: Vec<Rational>,
    /// `(alpha_12, alpha_22)`.
    pub alpha: (Rational, Rational),
    /// `eta` is nonnegative and both `alpha` lie in `[0, 1]`.
    pub feasible: bool,
}

fn check_orientations(a: &ConditionalMatrix, b: &ConditionalMatrix) -> Result<()> {
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
    Ok(())
}

/// Solves `rows . eta = 0`, `sum eta = 1`.
fn solve_eta(rows: &[Vec<Rational>], n: usize) -> Result<LinearSolution> {
    let mut system = rows.to_vec();
    system.push(vec![Rational::one(); n]);
    let mut rhs = vec![Rational::zero(); rows.len()];
    rhs.push(Rational::one());
    RatMatrix::from_rows(system)?.solve(&rhs)
}

fn column_rows(a: &ConditionalMatrix, bm: &RatMatrix, j: usize) -> Vec<Vec<Rational>> {
    (0..bm.rows())
        .filter_map(|i| a.get(i, j).map(|v| d_row(v, bm, i, j)))
        .collect()
}

fn unit_interval(v: &Rational) -> bool {
    !v.is_negative() && *v <= Rational::one()
}

fn check_fill(row: usize, col: usize, value: &Rational) -> Result<()> {
    if unit_interval(value) {
        Ok(())
    } else {
        Err(Error::InfeasibleFill {
            row,
            col,
            value: value.clone(),
        })
    }
}

/// Completes unknowns confined to one column `l` of `A`, with `B` fully known.
///
/// `eta` is solved from the `D` rows of every fully known column together
/// with the known entries of column `l` and `sum eta = 1`. When that system
/// has a unique probability solution the unknowns are
/// `alpha_il = b_il eta_i / sum_s b_sl eta_s`.
///
/// With `force_column = Some(j)` only column `j` is used for `eta`, and the
/// unknowns share the remaining mass of column `l` in proportion to
/// `b_il eta_i`.
pub fn complete_column_in_a(
    a: &ConditionalMatrix,
    b: &ConditionalMatrix,
    force_column: Option<usize>,
) -> Result<CompletionResult> {
    check_orientations(a, b)?;
    let bm = b.to_matrix()?;
    let (rows, cols) = a.dims();
    let unknown = a.unknown_positions();
    if unknown.is_empty() {
        return Err(Error::PatternMismatch("A has no unknown entries".into()));
    }
    let unknown_cols: BTreeSet<usize> = unknown.iter().map(|&(_, j)| j).collect();
    if unknown_cols.len() > 1 {
        return Err(Error::UnknownsNotConfinedToOneColumn);
    }
    let target = unknown[0].1;
    let known_cols: Vec<usize> = (0..cols).filter(|&j| j != target).collect();
    if known_cols.is_empty() {
        return Err(Error::NoKnownColumn);
    }

    let per_column = |j: usize| -> Option<Vec<Rational>> {
        match solve_eta(&column_rows(a, &bm, j), rows).ok()? {
            LinearSolution::Unique(eta) if is_nonnegative(&eta) => Some(eta),
            _ => None,
        }
    };

    if let Some(j) = force_column {
        if !known_cols.contains(&j) {
            return Err(Error::PatternMismatch(format!(
                "forced column {} is not a fully known column of A",
                j + 1
            )));
        }
        let Some(eta) = per_column(j) else {
            return Ok(CompletionResult {
                filled_a: a.clone(),
                filled_b: b.clone(),
                eta: None,
                diagnostics: Diagnostics::Underdetermined {
                    free_parameters: free_parameters(&column_rows(a, &bm, j), rows)?,
                },
            });
        };
        let filled_a = fill_by_remainder(a, &bm, target, &eta)?;
        return Ok(CompletionResult {
            filled_a,
            filled_b: b.clone(),
            eta: Some(eta),
            diagnostics: Diagnostics::Forced { column: j },
        });
    }

    let mut stacked: Vec<Vec<Rational>> = known_cols
        .iter()
        .flat_map(|&j| column_rows(a, &bm, j))
        .collect();
    stacked.extend(column_rows(a, &bm, target));

    let inconsistent = || Diagnostics::KnownColumnsInconsistent {
        candidates: known_cols
            .iter()
            .map(|&j| ColumnCandidate {
                column: j,
                eta: per_column(j),
            })
            .collect(),
    };
    let eta = match solve_eta(&stacked, rows)? {
        LinearSolution::Unique(eta) if is_nonnegative(&eta) => eta,
        LinearSolution::Unique(_) | LinearSolution::Inconsistent => {
            return Ok(CompletionResult {
                filled_a: a.clone(),
                filled_b: b.clone(),
                eta: None,
                diagnostics: inconsistent(),
            });
        }
        LinearSolution::Family { kernel, .. } => {
            return Ok(CompletionResult {
                filled_a: a.clone(),
                filled_b: b.clone(),
                eta: None,
                diagnostics: Diagnostics::Underdetermined {
                    free_parameters: kernel.len(),
                },
            });
        }
    };

    let tau = dot(&column_of(&bm, target), &eta);
    if tau.is_zero() {
        return Err(Error::DivisionByZero(format!(
            "column {} of B carries no mass under eta",
            target + 1
        )));
    }
    let mut filled_a = a.clone();
    for &(i, j) in &unknown {
        let alpha = &bm[(i, j)] * &eta[i] / &tau;
        check_fill(i, j, &alpha)?;
        filled_a.set(i, j, Some(alpha));
    }
    debug_assert!(filled_a.validate().is_empty());
    Ok(CompletionResult {
        filled_a,
        filled_b: b.clone(),
        eta: Some(eta),
        diagnostics: Diagnostics::ExactUnique,
    })
}

fn free_parameters(rows: &[Vec<Rational>], n: usize) -> Result<usize> {
    Ok(match solve_eta(rows, n)? {
        LinearSolution::Family { kernel, .. } => kernel.len(),
        _ => 0,
    })
}

fn column_of(m: &RatMatrix, j: usize) -> Vec<Rational> {
    (0..m.rows()).map(|i| m[(i, j)].clone()).collect()
}

fn fill_by_remainder(
    a: &ConditionalMatrix,
    bm: &RatMatrix,
    target: usize,
    eta: &[Rational],
) -> Result<ConditionalMatrix> {
    let rows = a.dims().0;
    let known_mass = sum((0..rows).filter_map(|i| a.get(i, target)));
    let remainder = Rational::one() - known_mass;
    let unknown_rows: Vec<usize> = (0..rows).filter(|&i| a.get(i, target).is_none()).collect();
    let terms: Vec<Rational> = unknown_rows
        .iter()
        .map(|&i| &bm[(i, target)] * &eta[i])
        .collect();
    let weight = sum(&terms);
    if weight.is_zero() {
        return Err(Error::DivisionByZero(
            "unknown cells carry no mass under the forced eta".into(),
        ));
    }
    let mut filled = a.clone();
    for &i in &unknown_rows {
        let alpha = &remainder * &bm[(i, target)] * &eta[i] / &weight;
        check_fill(i, target, &alpha)?;
        filled.set(i, target, Some(alpha));
    }
    Ok(filled)
}

fn expect_unknowns(m: &ConditionalMatrix, expected: &[(usize, usize)], name: &str) -> Result<()> {
    if m.unknown_positions() != expected {
        let want: Vec<String> = expected
            .iter()
            .map(|(i, j)| format!("({}, {})", i + 1, j + 1))
            .collect();
        return Err(Error::PatternMismatch(format!(
            "{name} must have unknowns exactly at {}",
            want.join(", ")
        )));
    }
    Ok(())
}

fn nonzero<'a>(v: &'a Rational, what: &str) -> Result<&'a Rational> {
    if v.is_zero() {
        Err(Error::DivisionByZero(what.to_string()))
    } else {
        Ok(v)
    }
}

/// Closed forms for the 2x3 pattern with `alpha_12, alpha_22` unknown in
/// `A` and `beta_12, beta_13` unknown in `B`. Returns
/// `(eta_1, beta_12, beta_13, alpha_12)`.
pub fn closed_form_2x3(
    a: &ConditionalMatrix,
    b: &ConditionalMatrix,
) -> Result<(Rational, Rational, Rational, Rational)> {
    let (a11, a21, a13, a23) = (a.value(0, 0), a.value(1, 0), a.value(0, 2), a.value(1, 2));
    let (b11, b21, b22, b23) = (b.value(0, 0), b.value(1, 0), b.value(1, 1), b.value(1, 2));
    let one = Rational::one();

    let eta_den = a11 * b21 + b11 * (&one - a11);
    let eta1 = a11 * b21 / nonzero(&eta_den, "a11 b21 + b11 (1 - a11)")?;
    let beta_den = a11 * a23 * b21;
    let beta13 = b11 * b23 * a21 * a13 / nonzero(&beta_den, "a11 a23 b21")?;
    let beta12 = &one - b11 - &beta13;
    let alpha_den = &beta12 * &eta1 + b22 * (&one - &eta1);
    let alpha12 = &beta12 * &eta1 / nonzero(&alpha_den, "beta12 eta1 + b22 (1 - eta1)")?;
    Ok((eta1, beta12, beta13, alpha12))
}

/// Fills the same 2x3 pattern by propagation: `eta` from the fully known
/// first column, `tau_3` and `beta_13` from column three, `beta_12` from
/// the row sum of `B`, then column two of `A` from `b_i2 eta_i / tau_2`.
fn propagate_2x3(
    a: &ConditionalMatrix,
    b: &ConditionalMatrix,
) -> Result<(ConditionalMatrix, ConditionalMatrix, Vec<Rational>)> {
    let first_b = RatMatrix::from_rows(vec![
        vec![b.value(0, 0).clone()],
        vec![b.value(1, 0).clone()],
    ])?;
    let rows: Vec<Vec<Rational>> = (0..2)
        .map(|i| d_row(a.value(i, 0), &first_b, i, 0))
        .collect();
    let eta = match solve_eta(&rows, 2)? {
        LinearSolution::Unique(eta) if is_nonnegative(&eta) => eta,
        _ => {
            return Err(Error::PatternMismatch(
                "first column does not determine eta".into(),
            ))
        }
    };
    let tau3 = b.value(1, 2) * &eta[1] / nonzero(a.value(1, 2), "a23")?;
    let beta13 = a.value(0, 2) * &tau3 / nonzero(&eta[0], "eta1")?;
    let beta12 = Rational::one() - b.value(0, 0) - &beta13;
    let mut filled_b = b.clone();
    filled_b.set(0, 1, Some(beta12));
    filled_b.set(0, 2, Some(beta13));
    let bm = filled_b.to_matrix()?;
    let tau2 = dot(&column_of(&bm, 1), &eta);
    let tau2 = nonzero(&tau2, "tau2")?;
    let mut filled_a = a.clone();
    for i in 0..2 {
        filled_a.set(i, 1, Some(&bm[(i, 1)] * &eta[i] / tau2));
    }
    Ok((filled_a, filled_b, eta))
}

/// Completes the 2x3 pattern with unknowns at `(1,2), (2,2)` of `A` and
/// `(1,2), (1,3)` of `B`. The closed forms and the propagation route are
/// both evaluated; propagation wins if they ever differ.
pub fn complete_a_and_b_2x3(
    a: &ConditionalMatrix,
    b: &ConditionalMatrix,
) -> Result<CompletionResult> {
    check_orientations(a, b)?;
    if a.dims() != (2, 3) {
        return Err(Error::PatternMismatch(format!(
            "expected 2x3 matrices, got {}x{}",
            a.dims().0,
            a.dims().1
        )));
    }
    expect_unknowns(a, &[(0, 1), (1, 1)], "A")?;
    expect_unknowns(b, &[(0, 1), (0, 2)], "B")?;

    let (eta1, beta12, beta13, alpha12) = closed_form_2x3(a, b)?;
    let (filled_a, filled_b, eta) = propagate_2x3(a, b)?;
    debug_assert_eq!(eta[0], eta1);
    debug_assert_eq!(filled_b.get(0, 1), Some(&beta12));
    debug_assert_eq!(filled_b.get(0, 2), Some(&beta13));
    debug_assert_eq!(filled_a.get(0, 1), Some(&alpha12));

    for (m, cells) in [(&filled_a, [(0, 1), (1, 1)]), (&filled_b, [(0, 1), (0, 2)])] {
        for (i, j) in cells {
            check_fill(i, j, m.value(i, j))?;
        }
    }
    match check_rank(&filled_a, &filled_b)? {
        CompatibilityVerdict::CompatibleUnique { marginals, .. } if marginals.eta == eta => {}
        other => {
            return Err(Error::PatternMismatch(format!(
                "completed pair failed the rank check ({})",
                other.label()
            )))
        }
    }
    Ok(CompletionResult {
        filled_a,
        filled_b,
        eta: Some(eta),
        diagnostics: Diagnostics::ExactUnique,
    })
}

/// Relaxed estimate for a 3x2 `A` with `alpha_12, alpha_22` unknown.
///
/// The two fully known rows `(3,1)` and `(3,2)` of `D` are set equal to
/// `epsilon` and solved together with `sum eta = 1`. Row `(1,2)` set equal
/// to `epsilon` then gives `alpha_12 = (epsilon + b_12 eta_1) / tau_2`, and
/// `alpha_22` takes the rest of column two.
pub fn epsilon_estimates(
    a: &ConditionalMatrix,
    b: &ConditionalMatrix,
    epsilon: &Rational,
) -> Result<EpsilonEstimate> {
    check_orientations(a, b)?;
    if a.dims() != (3, 2) {
        return Err(Error::PatternMismatch(format!(
            "expected 3x2 matrices, got {}x{}",
            a.dims().0,
            a.dims().1
        )));
    }
    expect_unknowns(a, &[(0, 1), (1, 1)], "A")?;
    let bm = b.to_matrix()?;
    let system = RatMatrix::from_rows(vec![
        d_row(a.value(2, 0), &bm, 2, 0),
        d_row(a.value(2, 1), &bm, 2, 1),
        vec![Rational::one(); 3],
    ])?;
    let eta = match system.solve(&[epsilon.clone(), epsilon.clone(), Rational::one()])? {
        LinearSolution::Unique(eta) => eta,
        _ => return Err(Error::SingularSystem),
    };
    let tau2 = dot(&column_of(&bm, 1), &eta);
    let alpha12 = (epsilon + &bm[(0, 1)] * &eta[0]) / nonzero(&tau2, "tau2")?;
    let alpha22 = Rational::one() - a.value(2, 1) - &alpha12;
    let feasible = is_nonnegative(&eta) && unit_interval(&alpha12) && unit_interval(&alpha22);
    Ok(EpsilonEstimate {
        eta,
        alpha: (alpha12, alpha22),
        feasible,
    })
}

/// Closed-form `eta` for the same 3x2 system, written with the determinant
/// `d11` and the auxiliary `d12`, `d22`:
///
/// ```text
/// eta_2 = (epsilon d12 + d22) / d11
/// eta_1 = (epsilon - (a31 - 1) b31 - (a31 b21 - b31 (a31 - 1)) eta_2) / (a31 b11 - b31 (a31 - 1))
/// eta_3 = 1 - eta_1 - eta_2
/// ```
pub fn epsilon_closed_form_eta(
    a: &ConditionalMatrix,
    b: &ConditionalMatrix,
    epsilon: &Rational,
) -> Result<Vec<Rational>> {
    let one = Rational::one();
    let (a31, a32) = (a.value(2, 0), a.value(2, 1));
    let (b11, b12, b21, b22, b31, b32) = (
        b.value(0, 0),
        b.value(0, 1),
        b.value(1, 0),
        b.value(1, 1),
        b.value(2, 0),
        b.value(2, 1),
    );
    let c31 = b31 * (a31 - &one);
    let c32 = b32 * (a32 - &one);
    let d11 = (a31 * b21 - &c31) * (a32 * b12 - &c32) - (a32 * b22 - &c32) * (a31 * b11 - &c31);
    let d12 = a32 * b12 - &c32 - a31 * b11 + &c31;
    let d22 = &c32 * (a31 * b11 - &c31) - &c31 * (a32 * b12 - &c32);
    let eta2 = (epsilon * &d12 + &d22) / nonzero(&d11, "d11")?;
    let eta1_den = a31 * b11 - &c31;
    let eta1 = (epsilon - &c31 - (a31 * b21 - &c31) * &eta2)
        / nonzero(&eta1_den, "a31 b11 - b31 (a31 - 1)")?;
    let eta3 = &one - &eta1 - &eta2;
    Ok(vec![eta1, eta2, eta3])
}
