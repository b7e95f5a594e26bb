//! Separable costs for cooperation, their per-agent partial costs and
//! gradients, the projected-gradient map on cooperation outputs, and
//! distances to the cooperation set.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dynamics::ConstraintSet;
use crate::graph::{Graph, GraphError};
use crate::solver::{solve_qp, QpSpec, SolverError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CooperationError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("expected {expected} output sets of dimension {dim}, got {found}")]
    OutputSets { expected: usize, dim: usize, found: usize },
    #[error("invalid formation: {0}")]
    Formation(String),
    #[error("the cooperation output sets have no common point")]
    EmptyIntersection,
}

/// Target inter-agent distances for a formation, plus whether the remaining
/// output coordinates (beyond the planar pair) should reach consensus.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationSpec {
    distances: BTreeMap<(usize, usize), f64>,
    altitude_consensus: bool,
}

impl FormationSpec {
    /// `distances` lists each undirected edge once; order within a pair is
    /// irrelevant.
    pub fn new(distances: &[((usize, usize), f64)], altitude_consensus: bool) -> Result<Self, CooperationError> {
        let mut map = BTreeMap::new();
        for &((i, j), d) in distances {
            if !(d > 0.0 && d.is_finite()) {
                return Err(CooperationError::Formation(format!(
                    "distance for edge ({i}, {j}) must be positive, got {d}"
                )));
            }
            let key = (i.min(j), i.max(j));
            if map.insert(key, d).is_some_and(|old| old != d) {
                return Err(CooperationError::Formation(format!(
                    "conflicting distances for edge ({i}, {j})"
                )));
            }
        }
        Ok(Self {
            distances: map,
            altitude_consensus,
        })
    }

    /// Same distance on every edge of `graph`.
    pub fn uniform(graph: &Graph, distance: f64, altitude_consensus: bool) -> Result<Self, CooperationError> {
        let entries: Vec<_> = graph.edges().into_iter().map(|e| (e, distance)).collect();
        Self::new(&entries, altitude_consensus)
    }

    pub fn distance(&self, i: usize, j: usize) -> Option<f64> {
        self.distances.get(&(i.min(j), i.max(j))).copied()
    }

    pub fn altitude_consensus(&self) -> bool {
        self.altitude_consensus
    }

    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.distances.iter().map(|(&e, &d)| (e, d))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CooperationSetSpec {
    Consensus,
    Formation(FormationSpec),
}

#[derive(Debug, Clone, PartialEq)]
enum PairCost {
    /// `‖a − b‖²`
    Consensus,
    /// `(‖a_p − b_p‖² − d²)² + ‖a_r − b_r‖²`, planar part `p` = first two
    /// coordinates, remainder `r` only when `altitude` is set.
    Formation {
        squared_distances: Vec<Vec<f64>>,
        altitude: bool,
    },
}

/// Cost for cooperation `V^c(y) = Σ_i Σ_{j∈N_i} V_ij(y_i, y_j)` over a fixed
/// graph, together with each agent's cooperation-output set.
#[derive(Debug, Clone, PartialEq)]
pub struct CooperationCost {
    graph: Graph,
    output_sets: Vec<ConstraintSet>,
    pair: PairCost,
    lipschitz: Vec<f64>,
}

/// Distance of a stacked output to the cooperation set. For nonconvex sets
/// the cost itself is reported and `is_proxy` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoopDistance {
    pub value: f64,
    pub is_proxy: bool,
}

fn check_sets(graph: &Graph, sets: &[ConstraintSet]) -> Result<usize, CooperationError> {
    let dim = sets.first().map_or(0, ConstraintSet::dim);
    if sets.len() != graph.len() || sets.iter().any(|s| s.dim() != dim) || dim == 0 {
        return Err(CooperationError::OutputSets {
            expected: graph.len(),
            dim,
            found: sets.len(),
        });
    }
    Ok(dim)
}

/// `V_ij(y_i, y_j) = ‖y_i − y_j‖²` on every directed edge. Its partial
/// gradient is `4 Σ_j (y_i − ȳ_j)` with Lipschitz constant `4|N_i|`.
pub fn consensus_cost(graph: &Graph, output_sets: Vec<ConstraintSet>) -> Result<CooperationCost, CooperationError> {
    check_sets(graph, &output_sets)?;
    let lipschitz = (0..graph.len()).map(|i| 4.0 * graph.degree(i) as f64).collect();
    Ok(CooperationCost {
        graph: graph.clone(),
        output_sets,
        pair: PairCost::Consensus,
        lipschitz,
    })
}

/// Number of sampled points for the numerical Lipschitz estimate of
/// nonconvex costs.
const LIPSCHITZ_SAMPLES: usize = 200;
const LIPSCHITZ_SEED: u64 = 0x1d57_a9ce;

/// Distance-based formation cost. The Lipschitz constants of the partial
/// gradients are estimated from finite-difference Hessians sampled over the
/// output sets.
pub fn formation_cost(
    graph: &Graph,
    spec: &FormationSpec,
    output_sets: Vec<ConstraintSet>,
) -> Result<CooperationCost, CooperationError> {
    let dim = check_sets(graph, &output_sets)?;
    if dim < 2 || (!spec.altitude_consensus && dim != 2) {
        return Err(CooperationError::Formation(format!(
            "outputs of dimension {dim} do not fit a planar formation"
        )));
    }
    let graph_edges = graph.edges();
    let spec_edges: Vec<_> = spec.edges().map(|(e, _)| e).collect();
    if graph_edges != spec_edges {
        return Err(CooperationError::Formation(
            "target distances must be given for exactly the graph's edges".into(),
        ));
    }
    let squared_distances = (0..graph.len())
        .map(|i| {
            graph
                .neighbors(i)
                .iter()
                .map(|&j| spec.distance(i, j).map_or(0.0, |d| d * d))
                .collect()
        })
        .collect();
    let mut cost = CooperationCost {
        graph: graph.clone(),
        output_sets,
        pair: PairCost::Formation {
            squared_distances,
            altitude: spec.altitude_consensus,
        },
        lipschitz: Vec::new(),
    };
    cost.lipschitz = (0..graph.len())
        .map(|i| cost.estimate_lipschitz(i, LIPSCHITZ_SAMPLES, LIPSCHITZ_SEED + i as u64))
        .collect();
    Ok(cost)
}

/// Builds the cost matching `spec`.
pub fn cooperation_cost(
    graph: &Graph,
    spec: &CooperationSetSpec,
    output_sets: Vec<ConstraintSet>,
) -> Result<CooperationCost, CooperationError> {
    match spec {
        CooperationSetSpec::Consensus => consensus_cost(graph, output_sets),
        CooperationSetSpec::Formation(f) => formation_cost(graph, f, output_sets),
    }
}

/// Euclidean projection onto a cooperation-output set.
pub fn project_onto(set: &ConstraintSet, y: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(set.project(y.as_slice()))
}

impl CooperationCost {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn num_agents(&self) -> usize {
        self.graph.len()
    }

    pub fn output_dim(&self) -> usize {
        self.output_sets[0].dim()
    }

    pub fn output_set(&self, i: usize) -> &ConstraintSet {
        &self.output_sets[i]
    }

    pub fn output_sets(&self) -> &[ConstraintSet] {
        &self.output_sets
    }

    pub fn is_convex(&self) -> bool {
        matches!(self.pair, PairCost::Consensus)
    }

    /// Lipschitz constant of agent `i`'s partial gradient on its output set.
    pub fn lipschitz(&self, i: usize) -> f64 {
        self.lipschitz[i]
    }

    /// `V_ij(a, b)` where `slot` is the position of `j` in `N_i`.
    fn pair_value(&self, i: usize, slot: usize, a: &[f64], b: &[f64]) -> f64 {
        match &self.pair {
            PairCost::Consensus => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
            PairCost::Formation {
                squared_distances,
                altitude,
            } => {
                let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
                let e = dx * dx + dy * dy - squared_distances[i][slot];
                let mut v = e * e;
                if *altitude {
                    v += a[2..].iter().zip(&b[2..]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
                }
                v
            }
        }
    }

    /// Adds `∂/∂y [V_ij(y, ȳ) + V_ji(ȳ, y)]` to `grad`. Both pair costs are
    /// symmetric in their arguments, so this is twice the first-argument
    /// derivative of `V_ij`.
    fn pair_gradient(&self, i: usize, slot: usize, y: &[f64], other: &[f64], grad: &mut [f64]) {
        match &self.pair {
            PairCost::Consensus => {
                for ((g, a), b) in grad.iter_mut().zip(y).zip(other) {
                    *g += 4.0 * (a - b);
                }
            }
            PairCost::Formation {
                squared_distances,
                altitude,
            } => {
                let (dx, dy) = (y[0] - other[0], y[1] - other[1]);
                let e = dx * dx + dy * dy - squared_distances[i][slot];
                grad[0] += 8.0 * e * dx;
                grad[1] += 8.0 * e * dy;
                if *altitude {
                    for k in 2..y.len() {
                        grad[k] += 4.0 * (y[k] - other[k]);
                    }
                }
            }
        }
    }

    /// Pair cost `V_ij(y_i, y_j)` for adjacent agents.
    pub fn pair_cost(&self, i: usize, j: usize, y_i: &DVector<f64>, y_j: &DVector<f64>) -> f64 {
        let slot = self
            .graph
            .neighbors(i)
            .binary_search(&j)
            .expect("pair cost queried for non-adjacent agents");
        self.pair_value(i, slot, y_i.as_slice(), y_j.as_slice())
    }

    /// `V^c(y) = Σ_i Σ_{j∈N_i} V_ij(y_i, y_j)`; each undirected edge
    /// contributes both directed terms.
    pub fn global_cost(&self, outputs: &[DVector<f64>]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.num_agents() {
            for (slot, &j) in self.graph.neighbors(i).iter().enumerate() {
                total += self.pair_value(i, slot, outputs[i].as_slice(), outputs[j].as_slice());
            }
        }
        total
    }

    /// Agent `i`'s share `Σ_{j∈N_i} V_ij(y, ȳ_j) + V_ji(ȳ_j, y)`, with
    /// `neighbor_values` aligned to `graph().neighbors(i)`.
    pub fn partial_cost(&self, i: usize, y: &[f64], neighbor_values: &[DVector<f64>]) -> f64 {
        let mut total = 0.0;
        for (slot, &j) in self.graph.neighbors(i).iter().enumerate() {
            let other = neighbor_values[slot].as_slice();
            total += self.pair_value(i, slot, y, other);
            let back = self.graph.neighbors(j).binary_search(&i).expect("bilateral graph");
            total += self.pair_value(j, back, other, y);
        }
        total
    }

    /// Adds the gradient of [`Self::partial_cost`] with respect to `y`.
    pub fn partial_gradient_into(&self, i: usize, y: &[f64], neighbor_values: &[DVector<f64>], grad: &mut [f64]) {
        for (slot, other) in neighbor_values.iter().enumerate() {
            self.pair_gradient(i, slot, y, other.as_slice(), grad);
        }
    }

    pub fn partial_gradient(&self, i: usize, y: &DVector<f64>, neighbor_values: &[DVector<f64>]) -> DVector<f64> {
        let mut g = DVector::zeros(y.len());
        self.partial_gradient_into(i, y.as_slice(), neighbor_values, g.as_mut_slice());
        g
    }

    /// Projected-gradient map `T(y) = P_{Y_i}[y − step·∇barV_i(y)]`.
    pub fn pg_update(&self, i: usize, y: &DVector<f64>, neighbor_values: &[DVector<f64>], step: f64) -> DVector<f64> {
        let trial = y - self.partial_gradient(i, y, neighbor_values) * step;
        project_onto(&self.output_sets[i], &trial)
    }

    /// Distance from stacked outputs to the cooperation set. For consensus
    /// this is `min_{z ∈ ∩Y_i} sqrt(Σ‖y_i − z‖²)`; for formations `V^c(y)`
    /// is returned as a proxy.
    pub fn coop_set_distance(&self, outputs: &[DVector<f64>]) -> Result<CoopDistance, CooperationError> {
        if !self.is_convex() {
            return Ok(CoopDistance {
                value: self.global_cost(outputs),
                is_proxy: true,
            });
        }
        let z = self.consensus_point(outputs)?;
        let value = outputs.iter().map(|y| (y - &z).norm_squared()).sum::<f64>().sqrt();
        Ok(CoopDistance { value, is_proxy: false })
    }

    /// Point of `∩Y_i` closest (in summed squared distance) to all outputs.
    pub fn consensus_point(&self, outputs: &[DVector<f64>]) -> Result<DVector<f64>, CooperationError> {
        let p = self.output_dim();
        let m = outputs.len() as f64;
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for set in &self.output_sets {
            for h in set.halfspaces() {
                rows.push((h.normal.iter().copied().collect(), h.offset));
            }
            for k in 0..p {
                let mut e = vec![0.0; p];
                if set.upper()[k].is_finite() {
                    e[k] = 1.0;
                    rows.push((e.clone(), set.upper()[k]));
                }
                if set.lower()[k].is_finite() {
                    e[k] = -1.0;
                    rows.push((e, -set.lower()[k]));
                }
            }
        }
        let sum: DVector<f64> = outputs.iter().fold(DVector::zeros(p), |acc, y| acc + y);
        let g = DMatrix::from_fn(rows.len(), p, |r, c| rows[r].0[c]);
        let h = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
        let qp = QpSpec::new(DMatrix::identity(p, p) * (2.0 * m), -2.0 * sum)
            .and_then(|qp| qp.with_inequalities(g, h))
            .expect("consensus distance QP is well-formed");
        match solve_qp(&qp) {
            Ok(sol) => Ok(sol.point),
            Err(SolverError::Infeasible) => Err(CooperationError::EmptyIntersection),
            Err(e) => unreachable!("unexpected QP failure: {e}"),
        }
    }

    /// Largest spectral norm of a finite-difference Hessian of agent `i`'s
    /// partial cost over points sampled from the output sets.
    pub fn estimate_lipschitz(&self, i: usize, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = self.output_dim();
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let y = self.output_sets[i].sample(&mut rng, 10.0);
            let nb: Vec<DVector<f64>> = self
                .graph
                .neighbors(i)
                .iter()
                .map(|&j| DVector::from_vec(self.output_sets[j].sample(&mut rng, 10.0)))
                .collect();
            let mut hess = DMatrix::zeros(p, p);
            let mut probe = y.clone();
            for k in 0..p {
                let h = 1e-5 * (1.0 + y[k].abs());
                let mut up = vec![0.0; p];
                let mut down = vec![0.0; p];
                probe[k] = y[k] + h;
                self.partial_gradient_into(i, &probe, &nb, &mut up);
                probe[k] = y[k] - h;
                self.partial_gradient_into(i, &probe, &nb, &mut down);
                probe[k] = y[k];
                for r in 0..p {
                    hess[(r, k)] = (up[r] - down[r]) / (2.0 * h);
                }
            }
            let sym = (&hess + hess.transpose()) * 0.5;
            let norm = SymmetricEigen::new(sym).eigenvalues.amax();
            worst = worst.max(norm);
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn big_box(dim: usize) -> ConstraintSet {
        ConstraintSet::boxed(vec![-100.0; dim], vec![100.0; dim]).unwrap()
    }

    fn path2() -> CooperationCost {
        consensus_cost(&Graph::new(2, &[(0, 1)]).unwrap(), vec![big_box(2), big_box(2)]).unwrap()
    }

    fn triangle(altitude: bool) -> CooperationCost {
        let g = Graph::complete(3).unwrap();
        let dim = if altitude { 3 } else { 2 };
        let spec = FormationSpec::uniform(&g, 1.0, altitude).unwrap();
        formation_cost(&g, &spec, vec![big_box(dim); 3]).unwrap()
    }

    #[test]
    fn consensus_path_counts_both_directions() {
        let c = path2();
        assert_eq!(c.global_cost(&[dv(&[0.0, 0.0]), dv(&[1.0, 0.0])]), 2.0);
        assert_eq!(c.global_cost(&[dv(&[0.3, 0.7]), dv(&[0.3, 0.7])]), 0.0);
    }

    #[test]
    fn consensus_lipschitz_on_ring() {
        let g = Graph::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let c = consensus_cost(&g, vec![big_box(2); 4]).unwrap();
        assert!((0..4).all(|i| c.lipschitz(i) == 8.0));
        assert!(c.is_convex());
    }

    #[test]
    fn consensus_rejects_mismatched_sets() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        assert!(consensus_cost(&g, vec![big_box(2)]).is_err());
        assert!(consensus_cost(&g, vec![big_box(2), big_box(3)]).is_err());
    }

    #[test]
    fn formation_zero_on_unit_triangle() {
        let c = triangle(true);
        let h = 3f64.sqrt() / 2.0;
        let ys = [dv(&[0.0, 0.0, 2.0]), dv(&[1.0, 0.0, 2.0]), dv(&[0.5, h, 2.0])];
        assert!(c.global_cost(&ys).abs() < 1e-12);
        assert!(!c.is_convex());
    }

    #[test]
    fn formation_coincident_pair() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        let spec = FormationSpec::uniform(&g, 1.0, true).unwrap();
        let c = formation_cost(&g, &spec, vec![big_box(3); 2]).unwrap();
        let y = dv(&[0.5, 0.5, 1.0]);
        assert_eq!(c.pair_cost(0, 1, &y, &y), 1.0);
        assert_eq!(c.global_cost(&[y.clone(), y]), 2.0);
    }

    #[test]
    fn formation_gradient_vanishes_in_plane_when_coincident() {
        let c = triangle(true);
        let y = dv(&[0.0, 0.0, 1.0]);
        let nb = vec![dv(&[0.0, 0.0, 2.0]), dv(&[0.0, 0.0, 3.0])];
        let g = c.partial_gradient(0, &y, &nb);
        assert_eq!((g[0], g[1]), (0.0, 0.0));
        assert!(g[2] < 0.0);
    }

    #[test]
    fn formation_spec_validation() {
        assert!(FormationSpec::new(&[((0, 1), 0.0)], true).is_err());
        assert!(FormationSpec::new(&[((0, 1), 1.0), ((1, 0), 2.0)], true).is_err());
        let spec = FormationSpec::new(&[((1, 0), 1.5)], false).unwrap();
        assert_eq!(spec.distance(0, 1), Some(1.5));
        let g = Graph::complete(3).unwrap();
        assert!(formation_cost(&g, &spec, vec![big_box(2); 3]).is_err());
    }

    #[test]
    fn pg_update_single_neighbor() {
        let c = path2();
        let t = c.pg_update(0, &dv(&[1.0, 0.0]), &[dv(&[0.0, 0.0])], 0.1);
        assert!((t - dv(&[0.6, 0.0])).amax() < 1e-15);
    }

    #[test]
    fn pg_update_at_minimizer_is_fixed() {
        let c = path2();
        let y = dv(&[0.2, -0.4]);
        assert_eq!(c.pg_update(0, &y, std::slice::from_ref(&y), 0.1), y);
    }

    #[test]
    fn projections() {
        let b = ConstraintSet::boxed(vec![0.0], vec![8.0]).unwrap();
        assert_eq!(project_onto(&b, &dv(&[9.0])), dv(&[8.0]));
        let diamond = ConstraintSet::unbounded(2)
            .with_polygon((0, 1), &[[3.0, 0.0], [0.0, 3.0], [-3.0, 0.0], [0.0, -3.0]])
            .unwrap();
        let p = project_onto(&diamond, &dv(&[4.0, 0.0]));
        assert!((p - dv(&[3.0, 0.0])).amax() < 1e-9);
    }

    #[test]
    fn consensus_distance_two_agents() {
        let c = path2();
        let d = c.coop_set_distance(&[dv(&[0.0, 0.0]), dv(&[2.0, 0.0])]).unwrap();
        assert!((d.value - 2f64.sqrt()).abs() < 1e-9);
        assert!(!d.is_proxy);
        let z = c.coop_set_distance(&[dv(&[1.0, 1.0]), dv(&[1.0, 1.0])]).unwrap();
        assert!(z.value.abs() < 1e-12);
    }

    #[test]
    fn consensus_distance_empty_intersection() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        let a = ConstraintSet::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let b = ConstraintSet::boxed(vec![2.0, 2.0], vec![3.0, 3.0]).unwrap();
        let c = consensus_cost(&g, vec![a, b]).unwrap();
        let ys = [dv(&[0.5, 0.5]), dv(&[2.5, 2.5])];
        assert_eq!(c.coop_set_distance(&ys), Err(CooperationError::EmptyIntersection));
    }

    #[test]
    fn formation_distance_is_proxy() {
        let c = triangle(false);
        let ys = [dv(&[0.0, 0.0]), dv(&[0.0, 0.0]), dv(&[0.0, 0.0])];
        let d = c.coop_set_distance(&ys).unwrap();
        assert!(d.is_proxy);
        assert_eq!(d.value, 6.0);
    }

    #[test]
    fn formation_lipschitz_is_positive_and_finite() {
        let c = triangle(true);
        for i in 0..3 {
            assert!(c.lipschitz(i).is_finite() && c.lipschitz(i) > 4.0);
        }
    }
}
