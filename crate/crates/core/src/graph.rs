//! Undirected (bilateral) communication graphs over agents `0..m`.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph has no agents")]
    Empty,
    #[error("edge ({0}, {1}) references an agent outside 0..{2}")]
    OutOfRange(usize, usize, usize),
    #[error("self loop at agent {0}")]
    SelfLoop(usize),
    #[error("graph is not connected: agent {0} is unreachable from agent 0")]
    Disconnected(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a connected graph on `m` agents. Each edge is stored in both
    /// directions; duplicates are ignored.
    pub fn new(m: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if m == 0 {
            return Err(GraphError::Empty);
        }
        let mut neighbors = vec![Vec::new(); m];
        for &(i, j) in edges {
            if i >= m || j >= m {
                return Err(GraphError::OutOfRange(i, j, m));
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        let graph = Self { neighbors };
        if let Some(unreached) = graph.first_unreachable() {
            return Err(GraphError::Disconnected(unreached));
        }
        Ok(graph)
    }

    /// Every pair of agents connected.
    pub fn complete(m: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
        Self::new(m, &edges)
    }

    fn first_unreachable(&self) -> Option<usize> {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &self.neighbors[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.iter().position(|s| !s)
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Sorted neighbor indices of agent `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn are_adjacent(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Undirected edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        let m = self.len();
        let mut l = DMatrix::zeros(m, m);
        for (i, list) in self.neighbors.iter().enumerate() {
            l[(i, i)] = list.len() as f64;
            for &j in list {
                l[(i, j)] = -1.0;
            }
        }
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_are_bilateral() {
        let g = Graph::new(4, &[(0, 1), (0, 3), (2, 3)]).unwrap();
        assert_eq!(g.neighbors(0), &[1, 3]);
        assert_eq!(g.neighbors(3), &[0, 2]);
        assert!(g.are_adjacent(3, 2) && g.are_adjacent(2, 3));
        assert_eq!(g.edges(), vec![(0, 1), (0, 3), (2, 3)]);
    }

    #[test]
    fn invalid_graphs_rejected() {
        assert_eq!(Graph::new(0, &[]), Err(GraphError::Empty));
        assert_eq!(Graph::new(3, &[(0, 1)]), Err(GraphError::Disconnected(2)));
        assert_eq!(Graph::new(2, &[(1, 1), (0, 1)]), Err(GraphError::SelfLoop(1)));
        assert!(matches!(Graph::new(2, &[(0, 2)]), Err(GraphError::OutOfRange(..))));
    }

    #[test]
    fn single_agent_is_connected() {
        let g = Graph::new(1, &[]).unwrap();
        assert_eq!(g.degree(0), 0);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let g = Graph::complete(4).unwrap();
        let l = g.laplacian();
        for r in 0..4 {
            assert_eq!(l.row(r).sum(), 0.0);
            assert_eq!(l[(r, r)], 3.0);
        }
    }
}
