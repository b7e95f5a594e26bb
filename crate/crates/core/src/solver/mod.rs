//! Constrained optimization backends: an augmented-Lagrangian NLP solver for
//! the single-shooting control problems, and a small dense QP routine used for
//! polytope projections and as an independent verification oracle.

mod nlp;
mod qp;

pub use nlp::{solve_nlp, NlpSolution, NlpSpec, SolveStatus, SolverConfig};
pub use qp::{solve_qp, QpSolution, QpSpec};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolverError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("hessian is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("problem is infeasible")]
    Infeasible,
    #[error("non-finite objective at iterate {iterate:?}")]
    NonFiniteObjective { iterate: Vec<f64> },
}

/// Central-difference gradient with per-coordinate step `1e-6·(1 + |z_k|)`.
pub fn finite_diff_gradient<F>(f: F, z: &[f64]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = z.to_vec();
    (0..z.len())
        .map(|k| {
            let h = 1e-6 * (1.0 + z[k].abs());
            probe[k] = z[k] + h;
            let up = f(&probe);
            probe[k] = z[k] - h;
            let down = f(&probe);
            probe[k] = z[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_diff_of_squared_norm() {
        let g = finite_diff_gradient(|z| z.iter().map(|v| v * v).sum(), &[1.0, 0.0]);
        assert!((g[0] - 2.0).abs() < 1e-6);
        assert!(g[1].abs() < 1e-6);
    }

    #[test]
    fn finite_diff_of_constant_is_zero() {
        let g = finite_diff_gradient(|_| 3.5, &[0.2, -4.0, 7.0]);
        assert!(g.iter().all(|v| *v == 0.0));
    }
}
