//! Labeled/unlabeled pools and confidence-based pool tuning.
//!
//! Unlabeled nodes whose top predicted class probability strictly exceeds
//! `delta` are promoted into the pseudo-labeled pool `L+`; the rest form the
//! pseudo-unlabeled pool `U-`, the only place queries are drawn from.
//! Promoted nodes carry no label.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub iteration: usize,
    pub node: usize,
    pub score: f64,
    /// `|L|` right after this query.
    pub labeled_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolState {
    pub labeled: BTreeSet<usize>,
    pub unlabeled: BTreeSet<usize>,
    pub p_labeled: BTreeSet<usize>,
    pub p_unlabeled: BTreeSet<usize>,
    pub query_log: Vec<QueryRecord>,
}

impl PoolState {
    /// `L = initial`, `U = pool \ initial`, and untuned `L+ = L`, `U- = U`.
    pub fn new(pool: &[usize], initial_labeled: &[usize]) -> Result<Self> {
        let labeled: BTreeSet<usize> = initial_labeled.iter().copied().collect();
        let all: BTreeSet<usize> = pool.iter().copied().collect();
        if !labeled.is_subset(&all) {
            return Err(Error::InvalidArgument(
                "initial labeled nodes must belong to the pool".into(),
            ));
        }
        let unlabeled: BTreeSet<usize> = all.difference(&labeled).copied().collect();
        Ok(PoolState {
            p_labeled: labeled.clone(),
            p_unlabeled: unlabeled.clone(),
            labeled,
            unlabeled,
            query_log: Vec::new(),
        })
    }

    pub fn labeled_ids(&self) -> Vec<usize> {
        self.labeled.iter().copied().collect()
    }

    pub fn p_labeled_ids(&self) -> Vec<usize> {
        self.p_labeled.iter().copied().collect()
    }

    pub fn p_unlabeled_ids(&self) -> Vec<usize> {
        self.p_unlabeled.iter().copied().collect()
    }

    /// All pool nodes `L ∪ U`, ascending.
    pub fn pool_ids(&self) -> Vec<usize> {
        self.labeled.union(&self.unlabeled).copied().collect()
    }

    /// Moves a queried node from `U` to `L` (and from `U-` to `L+`).
    pub fn reveal(&mut self, node: usize, iteration: usize, score: f64) -> Result<()> {
        if !self.unlabeled.remove(&node) {
            return Err(Error::InvalidArgument(format!(
                "node {node} is not in the unlabeled pool"
            )));
        }
        self.labeled.insert(node);
        self.p_unlabeled.remove(&node);
        self.p_labeled.insert(node);
        self.query_log.push(QueryRecord {
            iteration,
            node,
            score,
            labeled_count: self.labeled.len(),
        });
        Ok(())
    }

    /// Checks every set-algebra invariant, plus that none of `excluded`
    /// (test and validation nodes) appears in any pool.
    pub fn check_invariants(&self, excluded: &[usize]) -> Result<()> {
        let fail = |m: &str| Err(Error::Invariant(format!("pool state: {m}")));
        if !self.labeled.is_disjoint(&self.unlabeled) {
            return fail("L and U overlap");
        }
        if !self.labeled.is_subset(&self.p_labeled) {
            return fail("L is not contained in L+");
        }
        if !self.p_labeled.is_disjoint(&self.p_unlabeled) {
            return fail("L+ and U- overlap");
        }
        let pool: BTreeSet<usize> = self.labeled.union(&self.unlabeled).copied().collect();
        let tuned: BTreeSet<usize> = self.p_labeled.union(&self.p_unlabeled).copied().collect();
        if pool != tuned {
            return fail("L+ ∪ U- differs from L ∪ U");
        }
        if excluded.iter().any(|e| pool.contains(e)) {
            return fail("a test or validation node entered the pools");
        }
        let mut seen = BTreeSet::new();
        if !self.query_log.iter().all(|r| seen.insert(r.node)) {
            return fail("a node was queried twice");
        }
        if excluded.iter().any(|e| seen.contains(e)) {
            return fail("a test or validation node was queried");
        }
        Ok(())
    }
}

/// Recomputes `L+` and `U-` from the current predictions.
pub fn tune_pools(probs: &DenseMatrix, pools: &mut PoolState, delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    let mut p_labeled = pools.labeled.clone();
    let mut p_unlabeled = BTreeSet::new();
    for &x in &pools.unlabeled {
        if x >= probs.rows() {
            return Err(Error::shape(
                "tune_pools",
                format!("node {x} beyond {} probability rows", probs.rows()),
            ));
        }
        let confidence = probs.row(x).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if confidence > delta {
            p_labeled.insert(x);
        } else {
            p_unlabeled.insert(x);
        }
    }
    pools.p_labeled = p_labeled;
    pools.p_unlabeled = p_unlabeled;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn probs() -> DenseMatrix {
        DenseMatrix::from_rows(&[
            vec![0.7, 0.2, 0.1],
            vec![0.4, 0.3, 0.3],
            vec![0.1, 0.1, 0.8],
            vec![0.34, 0.33, 0.33],
            vec![0.6, 0.3, 0.1],
        ])
    }

    #[test]
    fn delta_one_disables_tuning() {
        let mut p = PoolState::new(&[0, 1, 2, 3, 4], &[2]).unwrap();
        tune_pools(&probs(), &mut p, 1.0).unwrap();
        assert_eq!(p.p_labeled, p.labeled);
        assert_eq!(p.p_unlabeled, p.unlabeled);
    }

    #[test]
    fn confident_node_is_promoted_with_strict_threshold() {
        let mut p = PoolState::new(&[0, 1, 2, 3, 4], &[2]).unwrap();
        tune_pools(&probs(), &mut p, 0.6).unwrap();
        assert_eq!(p.p_labeled_ids(), vec![0, 2]);
        // node 4 sits exactly at 0.6 and stays unlabeled
        assert_eq!(p.p_unlabeled_ids(), vec![1, 3, 4]);
        p.check_invariants(&[]).unwrap();
    }

    #[test]
    fn tiny_delta_empties_candidates() {
        let mut p = PoolState::new(&[0, 1, 2, 3, 4], &[2]).unwrap();
        tune_pools(&probs(), &mut p, 1e-9).unwrap();
        assert!(p.p_unlabeled.is_empty());
        assert!(tune_pools(&probs(), &mut p, 0.0).is_err());
    }

    #[test]
    fn reveal_updates_sets_and_log() {
        let mut p = PoolState::new(&[0, 1, 2, 3], &[0]).unwrap();
        p.reveal(3, 7, 0.9).unwrap();
        assert!(p.labeled.contains(&3) && !p.unlabeled.contains(&3));
        assert_eq!(p.query_log[0].labeled_count, 2);
        assert!(p.reveal(3, 8, 0.1).is_err());
        p.check_invariants(&[5, 6]).unwrap();
        assert!(p.check_invariants(&[1]).is_err());
    }

    proptest! {
        #[test]
        fn invariants_hold_and_raising_delta_never_shrinks_candidates(
            raw in proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 3), 12),
            d1 in 0.05f64..1.0,
            d2 in 0.05f64..1.0,
        ) {
            let rows: Vec<Vec<f64>> = raw.iter().map(|r| {
                let s: f64 = r.iter().sum();
                r.iter().map(|v| v / s).collect()
            }).collect();
            let z = DenseMatrix::from_rows(&rows);
            let pool: Vec<usize> = (0..12).collect();
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let mut a = PoolState::new(&pool, &[0, 5]).unwrap();
            let mut b = a.clone();
            tune_pools(&z, &mut a, lo).unwrap();
            tune_pools(&z, &mut b, hi).unwrap();
            a.check_invariants(&[]).unwrap();
            b.check_invariants(&[]).unwrap();
            prop_assert!(a.p_unlabeled.is_subset(&b.p_unlabeled));
        }
    }
}
