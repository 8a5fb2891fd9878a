//! Dense two-phase simplex over exact rationals with Bland's rule.
//!
//! Problems have the form
//!
//! ```text
//! maximize    c . x
//! subject to  E x  = e
//!             L x <= l
//!             x   >= 0
//! ```
//!
//! Sizes here are desk-scale (a few dozen rows), so a dense tableau is fine.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{dot, RatMatrix, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<Rational>,
    eq_lhs: RatMatrix,
    eq_rhs: Vec<Rational>,
    le_lhs: RatMatrix,
    le_rhs: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal {
        value: Rational,
        point: Vec<Rational>,
    },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    /// Maximize `objective . x` over `x >= 0`; add constraints with the builders.
    pub fn maximize(objective: Vec<Rational>) -> Self {
        let n = objective.len();
        Self {
            objective,
            eq_lhs: RatMatrix::zeros(0, n),
            eq_rhs: Vec::new(),
            le_lhs: RatMatrix::zeros(0, n),
            le_rhs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn with_equalities(mut self, lhs: RatMatrix, rhs: Vec<Rational>) -> Result<Self> {
        self.check(&lhs, &rhs)?;
        self.eq_lhs = self.eq_lhs.stack(&lhs)?;
        self.eq_rhs.extend(rhs);
        Ok(self)
    }

    pub fn with_inequalities(mut self, lhs: RatMatrix, rhs: Vec<Rational>) -> Result<Self> {
        self.check(&lhs, &rhs)?;
        self.le_lhs = self.le_lhs.stack(&lhs)?;
        self.le_rhs.extend(rhs);
        Ok(self)
    }

    fn check(&self, lhs: &RatMatrix, rhs: &[Rational]) -> Result<()> {
        if lhs.rows() > 0 && lhs.cols() != self.num_vars() {
            return Err(Error::DimensionMismatch(format!(
                "constraint has {} columns for {} variables",
                lhs.cols(),
                self.num_vars()
            )));
        }
        if lhs.rows() != rhs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} constraint rows but {} right-hand sides",
                lhs.rows(),
                rhs.len()
            )));
        }
        Ok(())
    }

    /// True when `x` satisfies every constraint exactly.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars()
            && x.iter().all(|v| !v.is_negative())
            && (0..self.eq_lhs.rows()).all(|r| dot(self.eq_lhs.row(r), x) == self.eq_rhs[r])
            && (0..self.le_lhs.rows()).all(|r| dot(self.le_lhs.row(r), x) <= self.le_rhs[r])
    }

    pub fn objective_at(&self, x: &[Rational]) -> Rational {
        dot(&self.objective, x)
    }

    pub fn solve(&self) -> LpOutcome {
        let n = self.num_vars();
        let n_le = self.le_lhs.rows();
        let n_eq = self.eq_lhs.rows();
        let m = n_le + n_eq;

        // Column layout: [structural | slacks for <= rows | artificials].
        // A <= row with nonnegative rhs starts with its slack basic; every
        // other row gets an artificial.
        let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(m);
        let mut rhs: Vec<Rational> = Vec::with_capacity(m);
        let mut needs_artificial = Vec::with_capacity(m);
        for r in 0..n_le {
            let mut row = vec![Rational::zero(); n + n_le];
            row[..n].clone_from_slice(self.le_lhs.row(r));
            row[n + r] = Rational::one();
            let mut b = self.le_rhs[r].clone();
            let flip = b.is_negative();
            if flip {
                row.iter_mut().for_each(|v| *v = -v.clone());
                b = -b;
            }
            rows.push(row);
            rhs.push(b);
            needs_artificial.push(flip);
        }
        for r in 0..n_eq {
            let mut row = vec![Rational::zero(); n + n_le];
            row[..n].clone_from_slice(self.eq_lhs.row(r));
            let mut b = self.eq_rhs[r].clone();
            if b.is_negative() {
                row.iter_mut().for_each(|v| *v = -v.clone());
                b = -b;
            }
            rows.push(row);
            rhs.push(b);
            needs_artificial.push(true);
        }
        let n_art = needs_artificial.iter().filter(|&&f| f).count();
        let width = n + n_le + n_art;
        let mut basis = Vec::with_capacity(m);
        let mut next_art = n + n_le;
        for (r, row) in rows.iter_mut().enumerate() {
            row.resize(width, Rational::zero());
            if needs_artificial[r] {
                row[next_art] = Rational::one();
                basis.push(next_art);
                next_art += 1;
            } else {
                basis.push(n + r);
            }
        }
        let mut tab = Tableau { rows, rhs, basis };

        if n_art > 0 {
            let mut cost = vec![Rational::zero(); width];
            for c in cost.iter_mut().skip(n + n_le) {
                *c = -Rational::one();
            }
            let allowed = vec![true; width];
            // Phase one is bounded above by zero, so it always terminates optimally.
            let _ = tab.optimize(&cost, &allowed);
            let infeasibility: Rational = tab
                .basis
                .iter()
                .zip(&tab.rhs)
                .filter(|(&v, _)| v >= n + n_le)
                .fold(Rational::zero(), |acc, (_, b)| acc + b);
            if !infeasibility.is_zero() {
                return LpOutcome::Infeasible;
            }
            tab.drive_out_artificials(n + n_le);
        }

        let mut cost = vec![Rational::zero(); width];
        cost[..n].clone_from_slice(&self.objective);
        let allowed: Vec<bool> = (0..width).map(|j| j < n + n_le).collect();
        if tab.optimize(&cost, &allowed).is_err() {
            return LpOutcome::Unbounded;
        }
        let mut point = vec![Rational::zero(); n];
        for (r, &v) in tab.basis.iter().enumerate() {
            if v < n {
                point[v] = tab.rhs[r].clone();
            }
        }
        LpOutcome::Optimal {
            value: self.objective_at(&point),
            point,
        }
    }
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
}

struct Unbounded;

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        self.rhs[r] *= &inv;
        let (pivot_row, pivot_rhs) = (self.rows[r].clone(), self.rhs[r].clone());
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let factor = self.rows[i][c].clone();
            for (v, p) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
            self.rhs[i] -= &factor * &pivot_rhs;
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost . x` from the current basic feasible point.
    /// Bland's rule: lowest-index improving column enters, and ratio ties
    /// leave by lowest basic variable index.
    fn optimize(
        &mut self,
        cost: &[Rational],
        allowed: &[bool],
    ) -> std::result::Result<(), Unbounded> {
        loop {
            let entering = (0..cost.len()).find(|&j| {
                allowed[j] && !self.basis.contains(&j) && {
                    let reduced = self
                        .basis
                        .iter()
                        .zip(&self.rows)
                        .fold(cost[j].clone(), |acc, (&b, row)| acc - &cost[b] * &row[j]);
                    reduced.is_positive()
                }
            });
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, Rational)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[r] / a;
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => {
                        ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            let Some((r, _)) = leave else {
                return Err(Unbounded);
            };
            self.pivot(r, c);
        }
    }

    /// After a successful phase one, replaces artificial basics (all at level
    /// zero) by structural or slack columns, dropping redundant rows.
    fn drive_out_artificials(&mut self, first_artificial: usize) {
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] < first_artificial {
                r += 1;
                continue;
            }
            match (0..first_artificial).find(|&j| !self.rows[r][j].is_zero()) {
                Some(c) => {
                    self.pivot(r, c);
                    r += 1;
                }
                None => {
                    self.rows.remove(r);
                    self.rhs.remove(r);
                    self.basis.remove(r);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};
    use proptest::prelude::*;

    fn row(v: &[i64]) -> RatMatrix {
        RatMatrix::from_rows(vec![v.iter().map(|&x| int(x)).collect()]).unwrap()
    }

    #[test]
    fn simple_face_returns_first_vertex() {
        let lp = LinearProgram::maximize(vec![int(1), int(1)])
            .with_inequalities(row(&[1, 1]), vec![int(1)])
            .unwrap();
        assert_eq!(
            lp.solve(),
            LpOutcome::Optimal {
                value: int(1),
                point: vec![int(1), int(0)],
            }
        );
    }

    #[test]
    fn pinned_variable() {
        let lp = LinearProgram::maximize(vec![int(1)])
            .with_equalities(row(&[1]), vec![int(0)])
            .unwrap()
            .with_inequalities(row(&[1]), vec![int(1)])
            .unwrap();
        assert_eq!(
            lp.solve(),
            LpOutcome::Optimal {
                value: int(0),
                point: vec![int(0)],
            }
        );
    }

    #[test]
    fn feasibility_program_of_incompatible_pair_peaks_at_zero() {
        let d = RatMatrix::from_rows(vec![
            vec![rat(-1, 6), rat(1, 3)],
            vec![rat(-1, 3), rat(1, 6)],
            vec![rat(1, 6), rat(-1, 3)],
            vec![rat(1, 3), rat(-1, 6)],
        ])
        .unwrap();
        let ech = d.row_echelon();
        let reduced = ech.reduced.select_rows(&(0..ech.rank).collect::<Vec<_>>());
        let lp = LinearProgram::maximize(vec![int(1), int(1)])
            .with_equalities(reduced, vec![int(0); ech.rank])
            .unwrap()
            .with_inequalities(row(&[1, 1]), vec![int(1)])
            .unwrap();
        assert_eq!(
            lp.solve(),
            LpOutcome::Optimal {
                value: int(0),
                point: vec![int(0), int(0)],
            }
        );
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = LinearProgram::maximize(vec![int(1)])
            .with_equalities(row(&[1]), vec![int(2)])
            .unwrap()
            .with_inequalities(row(&[1]), vec![int(1)])
            .unwrap();
        assert_eq!(lp.solve(), LpOutcome::Infeasible);

        let lp = LinearProgram::maximize(vec![int(1), int(0)])
            .with_inequalities(row(&[-1, 1]), vec![int(1)])
            .unwrap();
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn negative_rhs_inequality_needs_phase_one() {
        // maximize -x subject to -x <= -2  (x >= 2)
        let lp = LinearProgram::maximize(vec![int(-1)])
            .with_inequalities(row(&[-1]), vec![int(-2)])
            .unwrap();
        assert_eq!(
            lp.solve(),
            LpOutcome::Optimal {
                value: int(-2),
                point: vec![int(2)],
            }
        );
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let eq = RatMatrix::from_rows(vec![vec![int(1), int(1)], vec![int(2), int(2)]]).unwrap();
        let lp = LinearProgram::maximize(vec![int(0), int(1)])
            .with_equalities(eq, vec![int(1), int(2)])
            .unwrap();
        assert_eq!(
            lp.solve(),
            LpOutcome::Optimal {
                value: int(1),
                point: vec![int(0), int(1)],
            }
        );
    }

    #[test]
    fn dimension_checks() {
        assert!(LinearProgram::maximize(vec![int(1)])
            .with_equalities(row(&[1, 1]), vec![int(0)])
            .is_err());
        assert!(LinearProgram::maximize(vec![int(1)])
            .with_inequalities(row(&[1]), vec![])
            .is_err());
    }

    // Brute force over vertices of a two-variable box-and-cut polytope.
    fn brute_max(c: (i64, i64), cuts: &[(i64, i64, i64)]) -> Option<Rational> {
        let mut lines: Vec<(Rational, Rational, Rational)> = cuts
            .iter()
            .map(|&(a, b, r)| (int(a), int(b), int(r)))
            .collect();
        lines.push((int(1), int(0), int(0)));
        lines.push((int(0), int(1), int(0)));
        let feasible = |x: &Rational, y: &Rational| {
            !x.is_negative()
                && !y.is_negative()
                && cuts
                    .iter()
                    .all(|&(a, b, r)| int(a) * x + int(b) * y <= int(r))
        };
        let mut best: Option<Rational> = None;
        for p in 0..lines.len() {
            for q in p + 1..lines.len() {
                let (a1, b1, r1) = &lines[p];
                let (a2, b2, r2) = &lines[q];
                let det = a1 * b2 - a2 * b1;
                if det.is_zero() {
                    continue;
                }
                let x = (r1 * b2 - r2 * b1) / &det;
                let y = (a1 * r2 - a2 * r1) / &det;
                if feasible(&x, &y) {
                    let v = int(c.0) * &x + int(c.1) * &y;
                    if best.as_ref().is_none_or(|b| v > *b) {
                        best = Some(v);
                    }
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration_on_bounded_2d(
            c in (-5i64..6, -5i64..6),
            cuts in proptest::collection::vec((-4i64..5, -4i64..5, 0i64..8), 1..5),
        ) {
            let mut all = cuts.clone();
            all.push((1, 1, 10));
            let lhs = RatMatrix::from_rows(
                all.iter().map(|&(a, b, _)| vec![int(a), int(b)]).collect(),
            ).unwrap();
            let rhs = all.iter().map(|&(_, _, r)| int(r)).collect();
            let lp = LinearProgram::maximize(vec![int(c.0), int(c.1)])
                .with_inequalities(lhs, rhs).unwrap();
            match lp.solve() {
                LpOutcome::Optimal { value, point } => {
                    prop_assert!(lp.is_feasible(&point));
                    prop_assert_eq!(lp.objective_at(&point), value.clone());
                    prop_assert_eq!(Some(value), brute_max(c, &all));
                }
                other => prop_assert!(false, "unexpected {:?}", other),
            }
        }
    }
}
