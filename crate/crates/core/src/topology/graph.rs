use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::numkit::{eigenvalues, RealMatrix, SPECTRAL_ATOL};

/// A weighted edge `from → to`. Information flows along the edge: `to`
/// listens to `from`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(from: usize, to: usize, weight: f64) -> Self {
        Edge { from, to, weight }
    }
}

/// Weighted digraph on the leader (node 0) and followers `1..=N`.
///
/// `adjacency[(i, j)] = a_ij > 0` iff there is an edge `j → i`. The leader
/// row is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    adjacency: RealMatrix,
    undirected: bool,
}

impl WeightedDigraph {
    /// Graph with `followers + 1` nodes and no edges.
    pub fn empty(followers: usize, undirected: bool) -> Self {
        WeightedDigraph {
            adjacency: RealMatrix::zeros(followers + 1, followers + 1),
            undirected,
        }
    }

    /// Builds a graph from directed edges. For an undirected graph every
    /// follower–follower edge is mirrored; leader edges stay one-way.
    pub fn from_edges(followers: usize, edges: &[Edge], undirected: bool) -> Result<Self> {
        let mut g = Self::empty(followers, undirected);
        let nodes = followers + 1;
        for (k, e) in edges.iter().enumerate() {
            if e.from >= nodes || e.to >= nodes {
                return Err(Error::Model(format!(
                    "edge {k} ({} -> {}) references a node outside 0..{nodes}",
                    e.from, e.to
                )));
            }
            if e.from == e.to {
                return Err(Error::Model(format!(
                    "edge {k} is a self-loop on node {}",
                    e.to
                )));
            }
            if e.to == 0 {
                return Err(Error::Model(format!(
                    "edge {k} points into the leader; the leader receives nothing"
                )));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(Error::Model(format!(
                    "edge {k} has non-positive weight {}",
                    e.weight
                )));
            }
            g.adjacency[(e.to, e.from)] += e.weight;
            if undirected && e.from != 0 {
                g.adjacency[(e.from, e.to)] += e.weight;
            }
        }
        Ok(g)
    }

    /// Builds a graph from a full `(N+1)×(N+1)` adjacency matrix.
    pub fn from_adjacency(adjacency: RealMatrix, undirected: bool) -> Result<Self> {
        let n = adjacency.nrows();
        if n == 0 || adjacency.ncols() != n {
            return Err(Error::Dimension(
                "adjacency must be square and non-empty".into(),
            ));
        }
        for i in 0..n {
            for j in 0..n {
                let a = adjacency[(i, j)];
                if !(a.is_finite() && a >= 0.0) {
                    return Err(Error::Model(format!(
                        "a_{i}{j} = {a} is not a valid weight"
                    )));
                }
                if i == j && a != 0.0 {
                    return Err(Error::Model(format!("self-loop weight on node {i}")));
                }
                if i == 0 && a != 0.0 {
                    return Err(Error::Model("leader row must be zero".into()));
                }
                if undirected && i > 0 && j > 0 && a != adjacency[(j, i)] {
                    return Err(Error::Model(format!(
                        "undirected graph has a_{i}{j} != a_{j}{i}"
                    )));
                }
            }
        }
        Ok(WeightedDigraph {
            adjacency,
            undirected,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn followers(&self) -> usize {
        self.node_count() - 1
    }

    pub fn is_undirected(&self) -> bool {
        self.undirected
    }

    pub fn adjacency(&self) -> &RealMatrix {
        &self.adjacency
    }

    /// `a_ij`, the weight with which node `i` listens to node `j`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[(i, j)]
    }

    /// Directed edges with positive weight, ordered by (to, from).
    pub fn edges(&self) -> Vec<Edge> {
        let n = self.node_count();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let w = self.adjacency[(i, j)];
                if w > 0.0 {
                    out.push(Edge::new(j, i, w));
                }
            }
        }
        out
    }

    /// True iff follower–follower weights are symmetric.
    pub fn follower_part_symmetric(&self) -> bool {
        let n = self.node_count();
        (1..n).all(|i| (1..n).all(|j| self.adjacency[(i, j)] == self.adjacency[(j, i)]))
    }

    /// `l_ii = Σ_j a_ij`, `l_ij = −a_ij`, over all nodes or followers only.
    pub fn laplacian(&self, followers_only: bool) -> RealMatrix {
        let off = usize::from(followers_only);
        let n = self.node_count() - off;
        let mut l = RealMatrix::zeros(n, n);
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                if i != j {
                    let a = self.adjacency[(i + off, j + off)];
                    l[(i, j)] = -a;
                    sum += a;
                }
            }
            l[(i, i)] = sum;
        }
        l
    }

    /// Leader pinning weights `(a_10, …, a_N0)`.
    pub fn leader_weights(&self) -> Vec<f64> {
        (1..self.node_count())
            .map(|i| self.adjacency[(i, 0)])
            .collect()
    }

    /// `H = ℒ + Δ` with ℒ the follower Laplacian and `Δ = diag(a_i0)`.
    pub fn h_matrix(&self) -> HMatrix {
        let mut h = self.laplacian(true);
        for (i, a) in self.leader_weights().into_iter().enumerate() {
            h[(i, i)] += a;
        }
        HMatrix {
            matrix: h,
            graph_index: 0,
        }
    }

    /// Every follower is reachable from node 0 along directed edges.
    pub fn reachable_from_leader(&self) -> bool {
        let n = self.node_count();
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(j) = queue.pop_front() {
            for (i, s) in seen.iter_mut().enumerate() {
                if !*s && self.adjacency[(i, j)] > 0.0 {
                    *s = true;
                    queue.push_back(i);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Follower subgraph connected when edge directions are ignored.
    pub fn followers_weakly_connected(&self) -> bool {
        let n = self.followers();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(j) = queue.pop_front() {
            for i in 0..n {
                if !seen[i]
                    && (self.adjacency[(i + 1, j + 1)] > 0.0
                        || self.adjacency[(j + 1, i + 1)] > 0.0)
                {
                    seen[i] = true;
                    queue.push_back(i);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Some follower is a root of the follower subgraph: every other follower
    /// is reachable from it.
    pub fn followers_have_spanning_tree(&self) -> bool {
        let n = self.followers();
        (0..n).any(|root| {
            let mut seen = vec![false; n];
            seen[root] = true;
            let mut queue = VecDeque::from([root]);
            while let Some(j) = queue.pop_front() {
                for i in 0..n {
                    if !seen[i] && self.adjacency[(i + 1, j + 1)] > 0.0 {
                        seen[i] = true;
                        queue.push_back(i);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        })
    }
}

/// `H = ℒ + Δ` for one graph of a family.
#[derive(Debug, Clone, PartialEq)]
pub struct HMatrix {
    pub matrix: RealMatrix,
    pub graph_index: usize,
}

/// Union of a graph family; weights add.
pub fn union_graph(graphs: &[&WeightedDigraph]) -> Result<WeightedDigraph> {
    let first = graphs
        .first()
        .ok_or_else(|| Error::Model("union of an empty graph family".into()))?;
    let n = first.node_count();
    let mut adjacency = RealMatrix::zeros(n, n);
    for g in graphs {
        if g.node_count() != n {
            return Err(Error::Dimension(format!(
                "union: node counts {} and {} differ",
                n,
                g.node_count()
            )));
        }
        adjacency += &g.adjacency;
    }
    Ok(WeightedDigraph {
        adjacency,
        undirected: graphs.iter().all(|g| g.undirected),
    })
}

/// `δ = min Re σ(H)`; a non-positive value means some follower is cut off
/// from the leader.
pub fn min_real_eig_h(h: &HMatrix) -> Result<f64> {
    let vals = eigenvalues(&h.matrix)?;
    let delta = vals.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    if vals.is_empty() || delta <= SPECTRAL_ATOL {
        return Err(Error::Connectivity(format!(
            "H has an eigenvalue with real part {delta:.3e} <= 0; some follower is not reachable from the leader"
        )));
    }
    Ok(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn chain(undirected: bool) -> WeightedDigraph {
        WeightedDigraph::from_edges(2, &[Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)], undirected)
            .unwrap()
    }

    #[test]
    fn laplacian_examples() {
        assert_eq!(
            WeightedDigraph::empty(0, false).laplacian(false),
            dmatrix![0.0]
        );
        let g = WeightedDigraph::from_edges(2, &[Edge::new(1, 2, 1.0)], false).unwrap();
        assert_eq!(g.laplacian(true), dmatrix![0.0, 0.0; -1.0, 1.0]);
        let g = WeightedDigraph::from_edges(2, &[Edge::new(1, 2, 1.0)], true).unwrap();
        assert_eq!(g.laplacian(true), dmatrix![1.0, -1.0; -1.0, 1.0]);
    }

    #[test]
    fn h_matrix_examples() {
        let h = chain(false).h_matrix();
        assert_eq!(h.matrix, dmatrix![1.0, 0.0; -1.0, 1.0]);
        assert!((min_real_eig_h(&h).unwrap() - 1.0).abs() < 1e-12);

        let h = chain(true).h_matrix();
        assert_eq!(h.matrix, dmatrix![2.0, -1.0; -1.0, 1.0]);
        let delta = min_real_eig_h(&h).unwrap();
        assert!((delta - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);

        let h = WeightedDigraph::empty(2, false).h_matrix();
        assert_eq!(h.matrix, RealMatrix::zeros(2, 2));
        assert!(matches!(min_real_eig_h(&h), Err(Error::Connectivity(_))));
    }

    #[test]
    fn row_sums() {
        let g = WeightedDigraph::from_edges(
            3,
            &[
                Edge::new(0, 1, 0.7),
                Edge::new(1, 2, 2.0),
                Edge::new(2, 3, 1.5),
                Edge::new(0, 3, 0.2),
            ],
            false,
        )
        .unwrap();
        let l = g.laplacian(false);
        for i in 0..4 {
            assert!(l.row(i).sum().abs() < 1e-15);
        }
        let h = g.h_matrix().matrix;
        for (i, a) in g.leader_weights().iter().enumerate() {
            assert!((h.row(i).sum() - a).abs() < 1e-15);
        }
    }

    #[test]
    fn reachability_examples() {
        assert!(chain(false).reachable_from_leader());
        let g = WeightedDigraph::from_edges(2, &[Edge::new(0, 1, 1.0)], false).unwrap();
        assert!(!g.reachable_from_leader());
        // edges into the leader are rejected outright
        assert!(WeightedDigraph::from_edges(2, &[Edge::new(1, 0, 1.0)], false).is_err());
        let g = WeightedDigraph::from_edges(2, &[Edge::new(1, 2, 1.0)], false).unwrap();
        assert!(!g.reachable_from_leader());
    }

    #[test]
    fn union_examples() {
        let g1 = WeightedDigraph::from_edges(2, &[Edge::new(0, 1, 1.0)], false).unwrap();
        let g2 = WeightedDigraph::from_edges(2, &[Edge::new(1, 2, 1.0)], false).unwrap();
        let empty = WeightedDigraph::empty(2, false);
        assert_eq!(union_graph(&[&g1, &empty]).unwrap(), g1);
        let u = union_graph(&[&g1, &g2]).unwrap();
        assert_eq!(u.edges().len(), 2);
        assert!(u.reachable_from_leader());
        let d = union_graph(&[&g1, &g1]).unwrap();
        assert_eq!(d.weight(1, 0), 2.0);
        assert_eq!(d.reachable_from_leader(), g1.reachable_from_leader());
        assert!(union_graph(&[&g1, &WeightedDigraph::empty(3, false)]).is_err());
    }

    #[test]
    fn invalid_graphs_rejected() {
        assert!(WeightedDigraph::from_edges(2, &[Edge::new(1, 1, 1.0)], false).is_err());
        assert!(WeightedDigraph::from_edges(2, &[Edge::new(0, 3, 1.0)], false).is_err());
        assert!(WeightedDigraph::from_edges(2, &[Edge::new(0, 1, -1.0)], false).is_err());
        let asym = dmatrix![0.0, 0.0, 0.0; 1.0, 0.0, 1.0; 0.0, 0.0, 0.0];
        assert!(WeightedDigraph::from_adjacency(asym, true).is_err());
    }
}
