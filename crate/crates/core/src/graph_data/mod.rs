//! Attributed graphs: the immutable [`GraphBundle`], its on-disk directory
//! format, the symmetric normalized adjacency, a stochastic-block-model
//! generator and seeded train/validation/test splits.

mod io;
mod splits;
mod synthetic;

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::numerics::CsrMatrix;

pub use io::{load_bundle, save_bundle, BundleMeta};
pub use splits::{make_splits, SplitConfig, SplitSpec};
pub use synthetic::{generate_synthetic, SyntheticSpec, BACKGROUND_FEATURE_RATE};

/// Undirected, unweighted attributed graph with one class label per node.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBundle {
    name: String,
    num_nodes: usize,
    num_features: usize,
    num_classes: usize,
    edges: Vec<(usize, usize)>,
    features: CsrMatrix,
    labels: Vec<usize>,
}

impl GraphBundle {
    /// Validates and builds a bundle.
    ///
    /// Edges are stored as sorted `(u, v)` pairs with `u < v`; an input pair
    /// with `u > v` is flipped. Self-loops, duplicate undirected edges,
    /// out-of-range ids, negative or non-finite feature values and empty
    /// classes are rejected. All-zero feature rows are accepted with a
    /// warning.
    pub fn new(
        name: impl Into<String>,
        num_classes: usize,
        edges: Vec<(usize, usize)>,
        features: CsrMatrix,
        labels: Vec<usize>,
    ) -> Result<Self> {
        let num_nodes = features.rows();
        let num_features = features.cols();
        if labels.len() != num_nodes {
            return Err(Error::Invariant(format!(
                "{} labels for {num_nodes} nodes",
                labels.len()
            )));
        }
        if num_classes == 0 {
            return Err(Error::Invariant("num_classes must be positive".into()));
        }

        let mut seen = HashSet::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::Invariant(format!(
                    "edge ({u}, {v}) has an endpoint outside [0, {num_nodes})"
                )));
            }
            if u == v {
                return Err(Error::Invariant(format!("self-loop edge ({u}, {v})")));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(Error::Invariant(format!(
                    "duplicate undirected edge ({}, {})",
                    e.0, e.1
                )));
            }
            normalized.push(e);
        }
        normalized.sort_unstable();

        let mut class_counts = vec![0usize; num_classes];
        for (i, &y) in labels.iter().enumerate() {
            if y >= num_classes {
                return Err(Error::Invariant(format!(
                    "node {i} has class {y}, outside [0, {num_classes})"
                )));
            }
            class_counts[y] += 1;
        }
        if let Some(c) = class_counts.iter().position(|&n| n == 0) {
            return Err(Error::Invariant(format!("class {c} has no nodes")));
        }

        if let Some(bad) = features.values().iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Invariant(format!(
                "feature value {bad} is negative or not finite"
            )));
        }
        let zero_rows = (0..num_nodes)
            .filter(|&r| features.row(r).all(|(_, v)| v == 0.0))
            .count();
        if zero_rows > 0 {
            log::warn!("{zero_rows} node(s) have an all-zero feature row");
        }

        Ok(GraphBundle {
            name: name.into(),
            num_nodes,
            num_features,
            num_classes,
            edges: normalized,
            features,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Undirected edges as sorted `(u, v)` pairs with `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &CsrMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Node ids per class, each list ascending.
    pub fn nodes_by_class(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes];
        for (i, &y) in self.labels.iter().enumerate() {
            out[y].push(i);
        }
        out
    }

    /// The same bundle with each feature row scaled to unit L1 norm.
    pub fn with_row_normalized_features(&self) -> Self {
        GraphBundle {
            features: self.features.row_normalized(),
            ..self.clone()
        }
    }
}

/// `D^-1/2 (A + I) D^-1/2` where `D` holds degrees of `A + I`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency(CsrMatrix);

impl NormalizedAdjacency {
    pub fn as_csr(&self) -> &CsrMatrix {
        &self.0
    }

    pub fn num_nodes(&self) -> usize {
        self.0.rows()
    }
}

pub fn normalize_adjacency(bundle: &GraphBundle) -> NormalizedAdjacency {
    let n = bundle.num_nodes();
    let deg = bundle.degrees();
    let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| vec![(i, 0.0)]).collect();
    for &(u, v) in bundle.edges() {
        rows[u].push((v, 0.0));
        rows[v].push((u, 0.0));
    }
    for (i, row) in rows.iter_mut().enumerate() {
        row.sort_unstable_by_key(|&(j, _)| j);
        for (j, w) in row.iter_mut() {
            // integer product keeps (i, j) and (j, i) bit-identical
            let prod = ((deg[i] + 1) * (deg[*j] + 1)) as f64;
            *w = 1.0 / prod.sqrt();
        }
    }
    NormalizedAdjacency(CsrMatrix::from_row_entries(n, &rows).expect("sorted, in-range columns"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DenseMatrix;

    fn ones_features(n: usize) -> CsrMatrix {
        CsrMatrix::from_row_entries(1, &vec![vec![(0, 1.0)]; n]).unwrap()
    }

    pub(crate) fn bundle(n: usize, edges: Vec<(usize, usize)>, labels: Vec<usize>, k: usize) -> GraphBundle {
        GraphBundle::new("t", k, edges, ones_features(n), labels).unwrap()
    }

    /// Dense evaluation of D^-1/2 (A + I) D^-1/2.
    fn dense_oracle(b: &GraphBundle) -> DenseMatrix {
        let n = b.num_nodes();
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            a.set(i, i, 1.0);
        }
        for &(u, v) in b.edges() {
            a.set(u, v, 1.0);
            a.set(v, u, 1.0);
        }
        let mut d = DenseMatrix::zeros(n, n);
        for i in 0..n {
            let s: f64 = a.row(i).iter().sum();
            d.set(i, i, 1.0 / s.sqrt());
        }
        d.matmul(&a).unwrap().matmul(&d).unwrap()
    }

    #[test]
    fn isolated_node_normalizes_to_one() {
        let adj = normalize_adjacency(&bundle(1, vec![], vec![0], 1));
        assert_eq!(adj.as_csr().to_dense().as_slice(), &[1.0]);
    }

    #[test]
    fn single_edge_gives_halves() {
        let b = bundle(2, vec![(0, 1)], vec![0, 1], 2);
        let adj = normalize_adjacency(&b).as_csr().to_dense();
        assert!(adj.max_abs_diff(&dense_oracle(&b)) < 1e-15);
        assert!(adj.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn triangle_gives_thirds() {
        let b = bundle(3, vec![(0, 1), (1, 2), (0, 2)], vec![0, 1, 0], 2);
        let adj = normalize_adjacency(&b).as_csr().to_dense();
        assert!(adj.max_abs_diff(&dense_oracle(&b)) < 1e-15);
        assert!(adj.as_slice().iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn regular_graph_entries_equal_inverse_degree_plus_one() {
        // 6-cycle: 2-regular
        let edges = (0..6).map(|i| (i, (i + 1) % 6)).collect();
        let b = bundle(6, edges, vec![0, 1, 0, 1, 0, 1], 2);
        let adj = normalize_adjacency(&b);
        let csr = adj.as_csr();
        assert_eq!(csr.nnz(), 6 + 12);
        assert!(csr.values().iter().all(|&v| v == 1.0 / 3.0));
    }

    #[test]
    fn matches_oracle_on_irregular_graph_and_is_symmetric() {
        let b = bundle(
            5,
            vec![(0, 1), (0, 2), (0, 3), (3, 4)],
            vec![0, 0, 1, 1, 1],
            2,
        );
        let adj = normalize_adjacency(&b).as_csr().to_dense();
        assert!(adj.max_abs_diff(&dense_oracle(&b)) < 1e-15);
        assert_eq!(adj, adj.transpose());
    }

    #[test]
    fn constructor_rejects_bad_graphs() {
        let f = ones_features(3);
        let dup = GraphBundle::new("d", 2, vec![(0, 1), (1, 0)], f.clone(), vec![0, 0, 1]);
        assert!(matches!(dup, Err(Error::Invariant(m)) if m.contains("duplicate")));
        let range = GraphBundle::new("r", 3, vec![], f.clone(), vec![0, 5, 1]);
        assert!(matches!(range, Err(Error::Invariant(_))));
        let empty = GraphBundle::new("e", 3, vec![], f.clone(), vec![0, 0, 1]);
        assert!(matches!(empty, Err(Error::Invariant(m)) if m.contains("class 2")));
        let loop_ = GraphBundle::new("l", 2, vec![(1, 1)], f.clone(), vec![0, 0, 1]);
        assert!(loop_.is_err());
        let oob = GraphBundle::new("o", 2, vec![(0, 3)], f, vec![0, 0, 1]);
        assert!(oob.is_err());
    }

    #[test]
    fn reversed_edges_are_flipped() {
        let b = bundle(3, vec![(2, 0), (1, 0)], vec![0, 1, 1], 2);
        assert_eq!(b.edges(), &[(0, 1), (0, 2)]);
    }
}
