//! Small dense convex QP solved by KKT systems over enumerated active sets.
//!
//! ```text
//! minimize    ½ zᵀ H z + cᵀ z
//! subject to  A z = b
//!             G z ≤ h
//! ```
//!
//! Candidate active sets are visited in order of increasing cardinality and
//! lexicographically within one cardinality. The first set whose KKT point
//! is primal and dual feasible is returned; with a positive definite Hessian
//! that point is the unique minimizer. Intended for desk-scale problems
//! (tens of variables, a few dozen inequalities, few constraints active).

use nalgebra::{DMatrix, DVector};

use super::SolverError;

const FEASIBILITY_TOL: f64 = 1e-9;
const MULTIPLIER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct QpSpec {
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
    eq_matrix: DMatrix<f64>,
    eq_rhs: DVector<f64>,
    ineq_matrix: DMatrix<f64>,
    ineq_rhs: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub point: DVector<f64>,
    pub value: f64,
    /// Indices of the inequality rows treated as active.
    pub active: Vec<usize>,
    /// Multipliers of the equality rows followed by those of `active`.
    pub multipliers: DVector<f64>,
}

impl QpSpec {
    /// Unconstrained QP; add constraints with the `with_*` builders.
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>) -> Result<Self, SolverError> {
        let n = linear.len();
        if hessian.nrows() != n || hessian.ncols() != n {
            return Err(SolverError::Dimension(format!(
                "hessian is {}x{}, linear term has length {n}",
                hessian.nrows(),
                hessian.ncols()
            )));
        }
        let asym = (&hessian - hessian.transpose()).amax();
        if asym > 1e-9 * (1.0 + hessian.amax()) {
            return Err(SolverError::NotPositiveDefinite);
        }
        if hessian.clone().cholesky().is_none() {
            return Err(SolverError::NotPositiveDefinite);
        }
        Ok(Self {
            hessian,
            linear,
            eq_matrix: DMatrix::zeros(0, n),
            eq_rhs: DVector::zeros(0),
            ineq_matrix: DMatrix::zeros(0, n),
            ineq_rhs: DVector::zeros(0),
        })
    }

    pub fn with_equalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self, SolverError> {
        if a.ncols() != self.dim() || a.nrows() != b.len() {
            return Err(SolverError::Dimension("equality rows inconsistent".into()));
        }
        self.eq_matrix = a;
        self.eq_rhs = b;
        Ok(self)
    }

    pub fn with_inequalities(mut self, g: DMatrix<f64>, h: DVector<f64>) -> Result<Self, SolverError> {
        if g.ncols() != self.dim() || g.nrows() != h.len() {
            return Err(SolverError::Dimension("inequality rows inconsistent".into()));
        }
        self.ineq_matrix = g;
        self.ineq_rhs = h;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.hessian * z)) + self.linear.dot(z)
    }

    fn ineq_feasible(&self, z: &DVector<f64>) -> bool {
        let lhs = &self.ineq_matrix * z;
        lhs.iter()
            .zip(self.ineq_rhs.iter())
            .all(|(l, r)| *l <= r + FEASIBILITY_TOL * (1.0 + r.abs()))
    }

    fn solve_kkt(&self, active: &[usize]) -> Option<(DVector<f64>, DVector<f64>)> {
        let n = self.dim();
        let n_eq = self.eq_matrix.nrows();
        let rows = n_eq + active.len();
        let size = n + rows;
        let mut kkt = DMatrix::zeros(size, size);
        let mut rhs = DVector::zeros(size);
        kkt.view_mut((0, 0), (n, n)).copy_from(&self.hessian);
        for k in 0..n {
            rhs[k] = -self.linear[k];
        }
        for r in 0..rows {
            let (row, b) = if r < n_eq {
                (self.eq_matrix.row(r), self.eq_rhs[r])
            } else {
                let a = active[r - n_eq];
                (self.ineq_matrix.row(a), self.ineq_rhs[a])
            };
            for c in 0..n {
                kkt[(n + r, c)] = row[c];
                kkt[(c, n + r)] = row[c];
            }
            rhs[n + r] = b;
        }
        let sol = kkt.lu().solve(&rhs)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let z = sol.rows(0, n).into_owned();
        let nu = sol.rows(n, rows).into_owned();
        // Reject near-singular systems whose "solution" does not satisfy the rows.
        let resid = (&self.eq_matrix * &z - &self.eq_rhs).amax();
        if resid > 1e-7 * (1.0 + self.eq_rhs.amax()) {
            return None;
        }
        Some((z, nu))
    }
}

/// Solves the QP exactly (to ~1e-9) by active-set enumeration.
pub fn solve_qp(spec: &QpSpec) -> Result<QpSolution, SolverError> {
    let n = spec.dim();
    let n_eq = spec.eq_matrix.nrows();
    let m = spec.ineq_matrix.nrows();
    let max_active = m.min(n.saturating_sub(n_eq));
    for size in 0..=max_active {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            if let Some((z, nu)) = spec.solve_kkt(&combo) {
                let duals_ok = nu.iter().skip(n_eq).all(|&v| v >= -MULTIPLIER_TOL);
                if duals_ok && spec.ineq_feasible(&z) {
                    let value = spec.objective(&z);
                    return Ok(QpSolution {
                        point: z,
                        value,
                        active: combo,
                        multipliers: nu,
                    });
                }
            }
            if !next_combination(&mut combo, m) {
                break;
            }
        }
    }
    Err(SolverError::Infeasible)
}

/// Advances `combo` to the next k-subset of `0..m` in lexicographic order.
fn next_combination(combo: &mut [usize], m: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < m - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn projection(target: &[f64]) -> QpSpec {
        let n = target.len();
        QpSpec::new(
            DMatrix::identity(n, n),
            -DVector::from_column_slice(target),
        )
        .unwrap()
    }

    #[test]
    fn combinations_enumerate_all_subsets() {
        let mut combo = vec![0, 1];
        let mut seen = vec![combo.clone()];
        while next_combination(&mut combo, 4) {
            seen.push(combo.clone());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen.last().unwrap(), &vec![2, 3]);
        let mut empty: Vec<usize> = vec![];
        assert!(!next_combination(&mut empty, 3));
    }

    #[test]
    fn unit_box_projection() {
        let g = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        let h = DVector::from_element(4, 1.0);
        let qp = projection(&[2.0, 0.0]).with_inequalities(g, h).unwrap();
        let sol = solve_qp(&qp).unwrap();
        assert!((sol.point[0] - 1.0).abs() < 1e-12);
        assert!(sol.point[1].abs() < 1e-12);
        assert_eq!(sol.active, vec![0]);
    }

    #[test]
    fn diamond_vertex_projection() {
        let g = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0]);
        let h = DVector::from_element(4, 3.0);
        let qp = projection(&[4.0, 0.0]).with_inequalities(g, h).unwrap();
        let sol = solve_qp(&qp).unwrap();
        assert!((sol.point[0] - 3.0).abs() < 1e-12);
        assert!(sol.point[1].abs() < 1e-12);
        assert_eq!(sol.active.len(), 2);
        assert!(sol.multipliers.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn equality_only() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let qp = projection(&[0.0, 0.0, 0.0])
            .with_equalities(a, DVector::from_element(1, 1.0))
            .unwrap();
        let sol = solve_qp(&qp).unwrap();
        assert!((sol.point - DVector::from_column_slice(&[1.0, 0.0, 0.0])).amax() < 1e-12);
    }

    #[test]
    fn infeasible_inequalities_reported() {
        // z ≤ -1 and -z ≤ -1 (z ≥ 1)
        let g = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let h = DVector::from_column_slice(&[-1.0, -1.0]);
        let qp = projection(&[0.0]).with_inequalities(g, h).unwrap();
        assert!(matches!(solve_qp(&qp), Err(SolverError::Infeasible)));
    }

    #[test]
    fn indefinite_hessian_rejected() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            QpSpec::new(h, DVector::zeros(2)),
            Err(SolverError::NotPositiveDefinite)
        ));
    }
}
