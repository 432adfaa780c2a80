//! Weighted undirected graphs, edge operators and combinatorial cut quantities.
//!
//! Edges are stored once as `(i, j, w)` with `i < j`, sorted by `(i, j)`.
//! Vertex functions are plain `&[f64]` slices of length `n`; edge functions
//! carry one value per stored edge, read as `p(i -> j) = p_e = -p(j -> i)`.

use std::collections::VecDeque;

use crate::error::{Error, Result};

mod io;
mod knn;

pub use io::{read_edge_list, read_graph, read_matrix_market, write_edge_list};
pub use knn::{build_knn_graph, KnnGraph};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// One value per stored undirected edge.
pub type EdgeFunction = Vec<f64>;

#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    // CSR adjacency: neighbors of v are adj[offsets[v]..offsets[v + 1]] as (vertex, edge index)
    offsets: Vec<usize>,
    adj: Vec<(usize, usize)>,
    connected: bool,
}

impl Graph {
    /// Builds a graph from undirected edges given in any orientation and order.
    ///
    /// Zero weights are dropped. Self-loops, negative or non-finite weights and
    /// repeated vertex pairs are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut list = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::VertexOutOfRange { i: a, j: b, n });
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeight { i: a, j: b, w });
            }
            if w == 0.0 {
                continue;
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            list.push(Edge { i, j, w });
        }
        list.sort_by_key(|e| (e.i, e.j));
        if let Some(pair) = list.windows(2).find(|p| (p[0].i, p[0].j) == (p[1].i, p[1].j)) {
            return Err(Error::DuplicateEdge { i: pair[0].i, j: pair[0].j });
        }
        Ok(Self::from_sorted(n, list))
    }

    fn from_sorted(n: usize, edges: Vec<Edge>) -> Self {
        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.i] += 1;
            degree[e.j] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![(0usize, 0usize); offsets[n]];
        for (idx, e) in edges.iter().enumerate() {
            adj[fill[e.i]] = (e.j, idx);
            fill[e.i] += 1;
            adj[fill[e.j]] = (e.i, idx);
            fill[e.j] += 1;
        }
        let mut graph = Self { n, edges, offsets, adj, connected: false };
        graph.connected = n > 0 && graph.component_count() == 1;
        graph
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// Neighbors of `v` as `(vertex, edge index)` pairs.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn weighted_degree(&self, v: usize) -> f64 {
        self.neighbors(v).iter().map(|&(_, e)| self.edges[e].w).sum()
    }

    /// Upper bound on the squared norm of the (unweighted) gradient operator.
    ///
    /// The largest Laplacian eigenvalue is at most `2 * max degree`.
    pub fn gradient_norm_bound(&self) -> f64 {
        (2 * self.max_degree()).max(1) as f64
    }

    pub fn require_connected(&self) -> Result<()> {
        if self.connected {
            Ok(())
        } else {
            Err(Error::Disconnected)
        }
    }

    pub(crate) fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: f.len() });
        }
        Ok(())
    }

    /// Component id per vertex, numbered in order of smallest member.
    pub fn connected_components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for &(u, _) in self.neighbors(v) {
                    if label[u] == usize::MAX {
                        label[u] = next;
                        queue.push_back(u);
                    }
                }
            }
            next += 1;
        }
        label
    }

    fn component_count(&self) -> usize {
        self.connected_components().iter().max().map_or(0, |&c| c + 1)
    }

    /// Subgraph induced by `vertices`; vertex `vertices[t]` becomes vertex `t`.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Graph {
        let mut local = vec![usize::MAX; self.n];
        for (t, &v) in vertices.iter().enumerate() {
            local[v] = t;
        }
        let mut edges: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| local[e.i] != usize::MAX && local[e.j] != usize::MAX)
            .map(|e| {
                let (a, b) = (local[e.i], local[e.j]);
                Edge { i: a.min(b), j: a.max(b), w: e.w }
            })
            .collect();
        edges.sort_by_key(|e| (e.i, e.j));
        Graph::from_sorted(vertices.len(), edges)
    }

    /// Disjoint union; vertices of `other` are shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let shift = self.n;
        let edges = self
            .edges
            .iter()
            .copied()
            .chain(other.edges.iter().map(|e| Edge { i: e.i + shift, j: e.j + shift, w: e.w }))
            .collect();
        Graph::from_sorted(self.n + other.n, edges)
    }
}

/// Forward differences `(grad f)_e = f_j - f_i`.
pub fn gradient(g: &Graph, f: &[f64]) -> Result<EdgeFunction> {
    g.check_len(f)?;
    Ok(g.edges.iter().map(|e| f[e.j] - f[e.i]).collect())
}

/// Negative adjoint of [`gradient`]: `<grad f, p> = -<f, div p>`.
pub fn divergence(g: &Graph, p: &[f64]) -> Result<Vec<f64>> {
    if p.len() != g.edge_count() {
        return Err(Error::DimensionMismatch { expected: g.edge_count(), got: p.len() });
    }
    let mut out = vec![0.0; g.n];
    divergence_into(g, p, &mut out);
    Ok(out)
}

pub(crate) fn divergence_into(g: &Graph, p: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (e, &pe) in g.edges.iter().zip(p) {
        out[e.i] += pe;
        out[e.j] -= pe;
    }
}

/// A vertex subset `S` of a graph with `n` vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    in_set: Vec<bool>,
    size: usize,
}

impl Partition {
    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut in_set = vec![false; n];
        for &i in indices {
            if i >= n {
                return Err(Error::VertexOutOfRange { i, j: i, n });
            }
            in_set[i] = true;
        }
        Ok(Self::from_mask(in_set))
    }

    pub fn from_mask(in_set: Vec<bool>) -> Self {
        let size = in_set.iter().filter(|&&b| b).count();
        Self { in_set, size }
    }

    pub fn n(&self) -> usize {
        self.in_set.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn contains(&self, v: usize) -> bool {
        self.in_set[v]
    }

    pub fn mask(&self) -> &[bool] {
        &self.in_set
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.in_set[v]).collect()
    }

    pub fn complement(&self) -> Partition {
        Partition::from_mask(self.in_set.iter().map(|b| !b).collect())
    }

    pub fn is_proper(&self) -> bool {
        self.size > 0 && self.size < self.n()
    }

    /// Indicator function `1_S`.
    pub fn indicator(&self) -> Vec<f64> {
        self.in_set.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    /// Labels 1 for members of `S`, 0 otherwise.
    pub fn labels(&self) -> Vec<usize> {
        self.in_set.iter().map(|&b| usize::from(b)).collect()
    }
}

fn check_partition(g: &Graph, p: &Partition) -> Result<()> {
    if p.n() != g.n {
        return Err(Error::DimensionMismatch { expected: g.n, got: p.n() });
    }
    if !p.is_proper() {
        return Err(Error::ImproperSubset);
    }
    Ok(())
}

/// Total weight of edges with exactly one endpoint in `S`.
pub fn cut_value(g: &Graph, p: &Partition) -> Result<f64> {
    check_partition(g, p)?;
    Ok(g.edges
        .iter()
        .filter(|e| p.in_set[e.i] != p.in_set[e.j])
        .map(|e| e.w)
        .sum())
}

/// `Cut(S, S^c) / min(|S|, |S^c|)`.
pub fn balanced_cut_value(g: &Graph, p: &Partition) -> Result<f64> {
    let cut = cut_value(g, p)?;
    let smaller = p.size.min(g.n - p.size);
    Ok(cut / smaller as f64)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn cycle(n: usize, w: f64) -> Graph {
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n, w))).unwrap()
    }

    pub(crate) fn complete(n: usize, w: f64) -> Graph {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                e.push((i, j, w));
            }
        }
        Graph::from_edges(n, e).unwrap()
    }

    #[test]
    fn cut_of_four_cycle() {
        let g = cycle(4, 1.0);
        let s = Partition::from_indices(4, &[0, 1]).unwrap();
        assert_eq!(cut_value(&g, &s).unwrap(), 2.0);
        assert_eq!(balanced_cut_value(&g, &s).unwrap(), 1.0);
    }

    #[test]
    fn cut_of_triangle() {
        let g = complete(3, 1.0);
        let s = Partition::from_indices(3, &[0]).unwrap();
        assert_eq!(cut_value(&g, &s).unwrap(), 2.0);
        assert_eq!(balanced_cut_value(&g, &s).unwrap(), 2.0);
    }

    #[test]
    fn single_edge_balanced_cut_is_weight() {
        let g = Graph::from_edges(2, [(0, 1, 0.37)]).unwrap();
        let s = Partition::from_indices(2, &[0]).unwrap();
        assert_eq!(balanced_cut_value(&g, &s).unwrap(), 0.37);
    }

    #[test]
    fn no_crossing_edges_gives_zero_cut() {
        let g = Graph::from_edges(4, [(0, 1, 1.0), (2, 3, 2.0)]).unwrap();
        assert!(!g.is_connected());
        let s = Partition::from_indices(4, &[0, 1]).unwrap();
        assert_eq!(cut_value(&g, &s).unwrap(), 0.0);
    }

    #[test]
    fn improper_subsets_rejected() {
        let g = cycle(4, 1.0);
        let empty = Partition::from_indices(4, &[]).unwrap();
        assert!(matches!(cut_value(&g, &empty), Err(Error::ImproperSubset)));
        assert!(matches!(cut_value(&g, &empty.complement()), Err(Error::ImproperSubset)));
    }

    #[test]
    fn invalid_edges_rejected() {
        assert!(matches!(Graph::from_edges(3, [(1, 1, 1.0)]), Err(Error::SelfLoop(1))));
        assert!(matches!(Graph::from_edges(3, [(0, 1, -1.0)]), Err(Error::InvalidWeight { .. })));
        assert!(matches!(
            Graph::from_edges(3, [(0, 1, 1.0), (1, 0, 2.0)]),
            Err(Error::DuplicateEdge { i: 0, j: 1 })
        ));
        assert!(matches!(Graph::from_edges(2, [(0, 2, 1.0)]), Err(Error::VertexOutOfRange { .. })));
        let g = Graph::from_edges(3, [(0, 1, 0.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!(!g.is_connected());
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = complete(5, 0.5);
        assert!(gradient(&g, &[3.0; 5]).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gradient_on_single_edge() {
        let g = Graph::from_edges(2, [(0, 1, 1.0)]).unwrap();
        assert_eq!(gradient(&g, &[0.0, 2.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn operator_dimension_mismatch() {
        let g = cycle(4, 1.0);
        assert!(matches!(gradient(&g, &[0.0; 3]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(divergence(&g, &[0.0; 3]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn disjoint_component_does_not_change_cut() {
        let g1 = cycle(5, 1.3);
        let g2 = complete(4, 0.7);
        let g = g1.disjoint_union(&g2);
        let s1 = Partition::from_indices(5, &[0, 2]).unwrap();
        let mut s: Vec<usize> = vec![0, 2];
        s.extend(5..9);
        let s = Partition::from_indices(9, &s).unwrap();
        assert_eq!(cut_value(&g, &s).unwrap(), cut_value(&g1, &s1).unwrap());
    }

    #[test]
    fn induced_subgraph_relabels() {
        let g = cycle(6, 1.0);
        let sub = g.induced_subgraph(&[5, 0, 1]);
        assert_eq!(sub.n(), 3);
        assert_eq!(sub.edge_count(), 2);
        assert!(sub.is_connected());
        let sub = g.induced_subgraph(&[0, 3]);
        assert!(!sub.is_connected());
        assert_eq!(sub.connected_components(), vec![0, 1]);
    }
}
