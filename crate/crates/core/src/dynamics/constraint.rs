use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::DynamicsError;
use crate::solver::{solve_qp, QpSpec};

/// A single constraint `normal · z ≤ offset` with unit-length normal.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub normal: DVector<f64>,
    pub offset: f64,
}

impl HalfSpace {
    /// Normalizes `normal` (and scales `offset` accordingly).
    pub fn new(normal: DVector<f64>, offset: f64) -> Result<Self, DynamicsError> {
        let norm = normal.norm();
        if !(norm > 0.0 && norm.is_finite() && offset.is_finite()) {
            return Err(DynamicsError::InvalidSet("degenerate half-space".into()));
        }
        Ok(Self {
            normal: normal / norm,
            offset: offset / norm,
        })
    }

    pub fn slack(&self, z: &[f64]) -> f64 {
        self.offset - self.normal.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Intersection of a (possibly unbounded) box and finitely many half-spaces.
///
/// A point strictly inside the set is stored and checked at construction,
/// so every `ConstraintSet` is nonempty with nonempty interior.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
    halfspaces: Vec<HalfSpace>,
    interior: Vec<f64>,
}

impl ConstraintSet {
    pub fn new(
        lower: Vec<f64>,
        upper: Vec<f64>,
        halfspaces: Vec<HalfSpace>,
        interior: Vec<f64>,
    ) -> Result<Self, DynamicsError> {
        let n = lower.len();
        if upper.len() != n || interior.len() != n || halfspaces.iter().any(|h| h.normal.len() != n) {
            return Err(DynamicsError::Dimension {
                expected: n,
                found: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| l.is_nan() || u.is_nan() || l >= u) {
            return Err(DynamicsError::InvalidSet("box bounds must satisfy lower < upper".into()));
        }
        let set = Self {
            lower,
            upper,
            halfspaces,
            interior,
        };
        if set.margin(&set.interior) <= 0.0 {
            return Err(DynamicsError::InvalidSet(format!(
                "stored point {:?} is not strictly interior",
                set.interior
            )));
        }
        Ok(set)
    }

    /// Pure box; the interior point is the midpoint of the finite bounds.
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, DynamicsError> {
        let interior = lower
            .iter()
            .zip(&upper)
            .map(|(&l, &u)| match (l.is_finite(), u.is_finite()) {
                (true, true) => 0.5 * (l + u),
                (true, false) => l + 1.0,
                (false, true) => u - 1.0,
                (false, false) => 0.0,
            })
            .collect();
        Self::new(lower, upper, Vec::new(), interior)
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
            halfspaces: Vec::new(),
            interior: vec![0.0; dim],
        }
    }

    /// Adds the facets of a convex polygon living in coordinates `axes` of
    /// the ambient space. Vertices may be given in either orientation.
    pub fn with_polygon(self, axes: (usize, usize), vertices: &[[f64; 2]]) -> Result<Self, DynamicsError> {
        let n = self.dim();
        if vertices.len() < 3 || axes.0 >= n || axes.1 >= n || axes.0 == axes.1 {
            return Err(DynamicsError::InvalidSet("polygon needs 3+ vertices on two distinct axes".into()));
        }
        let area: f64 = (0..vertices.len())
            .map(|k| {
                let a = vertices[k];
                let b = vertices[(k + 1) % vertices.len()];
                a[0] * b[1] - b[0] * a[1]
            })
            .sum();
        let ccw = area > 0.0;
        let mut halfspaces = self.halfspaces.clone();
        for k in 0..vertices.len() {
            let a = vertices[k];
            let b = vertices[(k + 1) % vertices.len()];
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            // Outward normal of edge a→b.
            let (nx, ny) = if ccw { (dy, -dx) } else { (-dy, dx) };
            let mut normal = DVector::zeros(n);
            normal[axes.0] = nx;
            normal[axes.1] = ny;
            halfspaces.push(HalfSpace::new(normal, nx * a[0] + ny * a[1])?);
        }
        let mut interior = self.interior.clone();
        let m = vertices.len() as f64;
        interior[axes.0] = vertices.iter().map(|v| v[0]).sum::<f64>() / m;
        interior[axes.1] = vertices.iter().map(|v| v[1]).sum::<f64>() / m;
        Self::new(self.lower, self.upper, halfspaces, interior)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn interior_point(&self) -> &[f64] {
        &self.interior
    }

    pub fn is_box(&self) -> bool {
        self.halfspaces.is_empty()
    }

    /// Smallest slack over all constraints; negative outside the set.
    pub fn margin(&self, z: &[f64]) -> f64 {
        let mut m = f64::INFINITY;
        for ((v, l), u) in z.iter().zip(&self.lower).zip(&self.upper) {
            m = m.min(v - l).min(u - v);
        }
        for h in &self.halfspaces {
            m = m.min(h.slack(z));
        }
        m
    }

    /// Largest constraint violation (0 inside the set).
    pub fn violation(&self, z: &[f64]) -> f64 {
        (-self.margin(z)).max(0.0)
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        z.len() == self.dim() && self.violation(z) <= tol
    }

    /// Euclidean projection: clipping for boxes, a small QP otherwise.
    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        let clipped: Vec<f64> = z
            .iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .map(|((v, l), u)| v.clamp(*l, *u))
            .collect();
        if self.halfspaces.is_empty() || self.margin(z) >= 0.0 {
            return if self.halfspaces.is_empty() { clipped } else { z.to_vec() };
        }
        self.project_polytope(z)
    }

    /// Rejection sample from the set. Unbounded coordinates are drawn within
    /// ±`spread` of the stored interior point.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, spread: f64) -> Vec<f64> {
        let bounds: Vec<(f64, f64)> = (0..self.dim())
            .map(|k| {
                let c = self.interior[k];
                let lo = if self.lower[k].is_finite() { self.lower[k] } else { c - spread };
                let hi = if self.upper[k].is_finite() { self.upper[k] } else { c + spread };
                (lo, hi.max(lo))
            })
            .collect();
        for _ in 0..100_000 {
            let z: Vec<f64> = bounds.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>()).collect();
            if self.margin(&z) >= 0.0 {
                return z;
            }
        }
        self.interior.clone()
    }

    fn project_polytope(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut rows: Vec<(Vec<f64>, f64)> = self
            .halfspaces
            .iter()
            .map(|h| (h.normal.iter().copied().collect(), h.offset))
            .collect();
        for k in 0..n {
            if self.upper[k].is_finite() {
                let mut r = vec![0.0; n];
                r[k] = 1.0;
                rows.push((r, self.upper[k]));
            }
            if self.lower[k].is_finite() {
                let mut r = vec![0.0; n];
                r[k] = -1.0;
                rows.push((r, -self.lower[k]));
            }
        }
        let g = DMatrix::from_fn(rows.len(), n, |r, c| rows[r].0[c]);
        let h = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
        let qp = QpSpec::new(DMatrix::identity(n, n), -DVector::from_column_slice(z))
            .and_then(|qp| qp.with_inequalities(g, h))
            .expect("projection QP is well-formed");
        // Nonempty by construction, so the QP is feasible.
        let sol = solve_qp(&qp).expect("constraint set has an interior point");
        sol.point.iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> ConstraintSet {
        ConstraintSet::unbounded(2)
            .with_polygon((0, 1), &[[3.0, 0.0], [0.0, 3.0], [-3.0, 0.0], [0.0, -3.0]])
            .unwrap()
    }

    #[test]
    fn box_boundary_membership() {
        let b = ConstraintSet::boxed(vec![-1.0], vec![1.0]).unwrap();
        assert!(b.contains(&[1.0], 0.0));
        assert!(!b.contains(&[1.001], 1e-6));
    }

    #[test]
    fn polygon_orientation_does_not_matter() {
        let cw = ConstraintSet::unbounded(2)
            .with_polygon((0, 1), &[[0.0, -3.0], [-3.0, 0.0], [0.0, 3.0], [3.0, 0.0]])
            .unwrap();
        let ccw = diamond();
        for z in [[0.0, 0.0], [2.9, 0.0], [1.6, 1.6], [-2.0, -1.5]] {
            assert_eq!(cw.contains(&z, 0.0), ccw.contains(&z, 0.0));
        }
        assert!(ccw.contains(&[3.0, 0.0], 1e-12));
        assert!(!ccw.contains(&[1.6, 1.6], 1e-9));
    }

    #[test]
    fn projection_onto_diamond_vertex() {
        let p = diamond().project(&[4.0, 0.0]);
        assert!((p[0] - 3.0).abs() < 1e-9 && p[1].abs() < 1e-9);
    }

    #[test]
    fn projection_is_identity_inside() {
        let d = diamond();
        assert_eq!(d.project(&[0.5, -1.0]), vec![0.5, -1.0]);
        let b = ConstraintSet::boxed(vec![0.0], vec![8.0]).unwrap();
        assert_eq!(b.project(&[9.0]), vec![8.0]);
    }

    #[test]
    fn empty_box_rejected() {
        assert!(ConstraintSet::boxed(vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn non_interior_point_rejected() {
        let h = HalfSpace::new(DVector::from_column_slice(&[1.0]), 0.0).unwrap();
        assert!(ConstraintSet::new(vec![-1.0], vec![1.0], vec![h], vec![0.0]).is_err());
    }
}
