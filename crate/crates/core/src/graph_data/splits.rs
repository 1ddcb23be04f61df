use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RngStream;

use super::GraphBundle;

/// Split sizes and the bundle-level test seed.
///
/// The test set depends only on `test_seed`, so it stays fixed across every
/// validation and initial-label seed drawn for the same bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub test_size: usize,
    pub val_size: usize,
    pub per_class_init: usize,
    pub test_seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_size: 1000,
            val_size: 500,
            per_class_init: 4,
            test_seed: 0,
        }
    }
}

/// Disjoint test, validation and initial labeled node sets, each ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_ids: Vec<usize>,
    pub val_ids: Vec<usize>,
    pub init_labeled_ids: Vec<usize>,
    pub seed_val: u64,
    pub seed_init: u64,
    pub test_seed: u64,
}

impl SplitSpec {
    /// Nodes outside test and validation: the active-learning pool `L ∪ U`.
    pub fn pool_ids(&self, num_nodes: usize) -> Vec<usize> {
        let mut excluded = vec![false; num_nodes];
        for &i in self.test_ids.iter().chain(&self.val_ids) {
            excluded[i] = true;
        }
        (0..num_nodes).filter(|&i| !excluded[i]).collect()
    }
}

pub fn make_splits(
    bundle: &GraphBundle,
    seed_val: u64,
    seed_init: u64,
    config: &SplitConfig,
) -> Result<SplitSpec> {
    let n = bundle.num_nodes();
    let k = bundle.num_classes();
    let needed = config.test_size + config.val_size + config.per_class_init * k;
    if needed > n {
        return Err(Error::InfeasibleSplit(format!(
            "{} test + {} validation + {}x{} initial labels exceed {n} nodes",
            config.test_size, config.val_size, config.per_class_init, k
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    RngStream::new(config.test_seed)
        .substream("split-test")
        .shuffle(&mut order);
    let mut test_ids = order[..config.test_size].to_vec();
    let mut rest = order[config.test_size..].to_vec();
    rest.sort_unstable();

    RngStream::new(seed_val).substream("split-val").shuffle(&mut rest);
    let mut val_ids = rest[..config.val_size].to_vec();
    let mut remaining = rest[config.val_size..].to_vec();
    remaining.sort_unstable();

    let labels = bundle.labels();
    let init_root = RngStream::new(seed_init);
    let mut init_labeled_ids = Vec::with_capacity(config.per_class_init * k);
    for c in 0..k {
        let mut members: Vec<usize> = remaining.iter().copied().filter(|&i| labels[i] == c).collect();
        if members.len() < config.per_class_init {
            return Err(Error::InfeasibleSplit(format!(
                "class {c} has {} nodes outside test/validation, {} needed",
                members.len(),
                config.per_class_init
            )));
        }
        init_root
            .indexed("split-init", c as u64)
            .shuffle(&mut members);
        init_labeled_ids.extend_from_slice(&members[..config.per_class_init]);
    }

    test_ids.sort_unstable();
    val_ids.sort_unstable();
    init_labeled_ids.sort_unstable();
    Ok(SplitSpec {
        test_ids,
        val_ids,
        init_labeled_ids,
        seed_val,
        seed_init,
        test_seed: config.test_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_data::{generate_synthetic, SyntheticSpec};
    use crate::numerics::CsrMatrix;
    use std::collections::HashSet;

    fn cora_shaped() -> GraphBundle {
        // Cora's size and class count; structure is irrelevant for splitting.
        let n = 2708;
        let feats = CsrMatrix::from_row_entries(1, &vec![vec![(0, 1.0)]; n]).unwrap();
        let labels = (0..n).map(|i| i % 7).collect();
        GraphBundle::new("cora-shaped", 7, vec![], feats, labels).unwrap()
    }

    #[test]
    fn defaults_on_cora_shape_give_28_initial_labels() {
        let b = cora_shaped();
        let s = make_splits(&b, 1, 2, &SplitConfig::default()).unwrap();
        assert_eq!(s.init_labeled_ids.len(), 28);
        assert_eq!(s.test_ids.len(), 1000);
        assert_eq!(s.val_ids.len(), 500);
        let mut per_class = [0; 7];
        for &i in &s.init_labeled_ids {
            per_class[b.labels()[i]] += 1;
        }
        assert_eq!(per_class, [4; 7]);
        let t: HashSet<_> = s.test_ids.iter().collect();
        let v: HashSet<_> = s.val_ids.iter().collect();
        let l: HashSet<_> = s.init_labeled_ids.iter().collect();
        assert!(t.is_disjoint(&v) && t.is_disjoint(&l) && v.is_disjoint(&l));
        assert_eq!(s.pool_ids(2708).len(), 1208);
    }

    #[test]
    fn deterministic_and_test_set_fixed_across_seeds() {
        let b = cora_shaped();
        let cfg = SplitConfig::default();
        assert_eq!(make_splits(&b, 3, 4, &cfg).unwrap(), make_splits(&b, 3, 4, &cfg).unwrap());
        let a = make_splits(&b, 3, 4, &cfg).unwrap();
        let c = make_splits(&b, 5, 6, &cfg).unwrap();
        assert_eq!(a.test_ids, c.test_ids);
        assert_ne!(a.val_ids, c.val_ids);
    }

    #[test]
    fn infeasible_when_a_class_is_too_small() {
        // class 2 has exactly 3 nodes, all outside test/val
        let feats = CsrMatrix::from_row_entries(1, &vec![vec![(0, 1.0)]; 20]).unwrap();
        let mut labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        labels[17] = 2;
        labels[18] = 2;
        labels[19] = 2;
        let b = GraphBundle::new("small", 3, vec![], feats, labels).unwrap();
        let cfg = SplitConfig {
            test_size: 0,
            val_size: 0,
            per_class_init: 4,
            test_seed: 0,
        };
        assert!(matches!(make_splits(&b, 0, 0, &cfg), Err(Error::InfeasibleSplit(_))));
    }

    #[test]
    fn oversized_request_is_infeasible() {
        let spec = SyntheticSpec {
            num_nodes: 30,
            num_classes: 3,
            num_features: 6,
            edge_prob_in: 0.3,
            edge_prob_out: 0.0,
            feature_signal: 0.5,
        };
        let b = generate_synthetic(&spec, 1).unwrap();
        let cfg = SplitConfig {
            test_size: 20,
            val_size: 5,
            per_class_init: 2,
            test_seed: 0,
        };
        assert!(make_splits(&b, 0, 0, &cfg).is_err());
    }
}
