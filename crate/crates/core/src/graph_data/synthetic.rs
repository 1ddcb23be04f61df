use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{CsrMatrix, RngStream};

use super::GraphBundle;

/// Activation probability of a feature column outside the node's own class
/// block.
pub const BACKGROUND_FEATURE_RATE: f64 = 0.02;

/// Stochastic block model with class-correlated binary features.
///
/// Class `c` owns the signal columns `[c*b, (c+1)*b)` with
/// `b = num_features / num_classes`; any leftover columns carry background
/// noise only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub num_features: usize,
    pub edge_prob_in: f64,
    pub edge_prob_out: f64,
    pub feature_signal: f64,
}

impl SyntheticSpec {
    /// 400 nodes, 4 classes, 64 features: small enough for test suites,
    /// hard enough that the choice of labeled nodes matters.
    pub fn reference() -> Self {
        SyntheticSpec {
            num_nodes: 400,
            num_classes: 4,
            num_features: 64,
            edge_prob_in: 0.05,
            edge_prob_out: 0.006,
            feature_signal: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.num_classes == 0 || self.num_nodes < self.num_classes {
            return bad(format!(
                "need num_nodes >= num_classes >= 1, got {} nodes and {} classes",
                self.num_nodes, self.num_classes
            ));
        }
        if self.num_features < self.num_classes {
            return bad(format!(
                "need at least one signal column per class ({} features, {} classes)",
                self.num_features, self.num_classes
            ));
        }
        let (pin, pout) = (self.edge_prob_in, self.edge_prob_out);
        if !(pin <= 1.0 && pin > pout && pout >= 0.0) {
            return bad(format!(
                "edge probabilities must satisfy 1 >= in > out >= 0, got in={pin} out={pout}"
            ));
        }
        if !(self.feature_signal > 0.0 && self.feature_signal <= 1.0) {
            return bad(format!(
                "feature_signal must lie in (0, 1], got {}",
                self.feature_signal
            ));
        }
        Ok(())
    }

    /// Expected number of undirected edges.
    pub fn expected_edges(&self) -> f64 {
        let n = self.num_nodes as f64;
        let k = self.num_classes as f64;
        let within = k * (n / k) * (n / k - 1.0) / 2.0;
        let total = n * (n - 1.0) / 2.0;
        within * self.edge_prob_in + (total - within) * self.edge_prob_out
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<GraphBundle> {
    spec.validate()?;
    let root = RngStream::new(seed);
    let n = spec.num_nodes;
    let k = spec.num_classes;

    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    root.substream("synthetic-labels").shuffle(&mut labels);

    let mut edge_rng = root.substream("synthetic-edges");
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] {
                spec.edge_prob_in
            } else {
                spec.edge_prob_out
            };
            if edge_rng.bernoulli(p) {
                edges.push((u, v));
            }
        }
    }

    let block = spec.num_features / k;
    let mut feat_rng = root.substream("synthetic-features");
    let rows: Vec<Vec<(usize, f64)>> = labels
        .iter()
        .map(|&y| {
            let own = y * block..(y + 1) * block;
            let mut row: Vec<(usize, f64)> = (0..spec.num_features)
                .filter(|c| {
                    let p = if own.contains(c) {
                        spec.feature_signal
                    } else {
                        BACKGROUND_FEATURE_RATE
                    };
                    feat_rng.bernoulli(p)
                })
                .map(|c| (c, 1.0))
                .collect();
            if row.is_empty() {
                row.push((own.start + feat_rng.below(block), 1.0));
            }
            row
        })
        .collect();
    let features = CsrMatrix::from_row_entries(spec.num_features, &rows)?;

    let name = format!(
        "synthetic-n{}-k{}-m{}-seed{}",
        n, k, spec.num_features, seed
    );
    GraphBundle::new(name, k, edges, features, labels)
}
