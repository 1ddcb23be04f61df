use std::collections::BTreeSet;

use seal_core::embedder::{gcn_forward, gcn_supervised_loss, train_g_epoch, GcnParams};
use seal_core::engine::{final_train_eval, run_active_loop, PreparedGraph, Strategy, TrainingConfig};
use seal_core::graph_data::{generate_synthetic, make_splits, SplitConfig, SyntheticSpec};
use seal_core::numerics::RngStream;

fn reference_split() -> SplitConfig {
    SplitConfig {
        test_size: 100,
        val_size: 50,
        per_class_init: 4,
        test_seed: 0,
    }
}

#[test]
fn labeling_the_whole_pool_clears_ninety_percent() {
    let bundle = generate_synthetic(&SyntheticSpec::reference(), 0).unwrap();
    let config = TrainingConfig::default();
    let graph = PreparedGraph::new(&bundle, config.row_normalize);
    let splits = make_splits(&bundle, 0, 0, &reference_split()).unwrap();
    let pool = splits.pool_ids(bundle.num_nodes());
    let eval = final_train_eval(&graph, &splits, &pool, &config, 0).unwrap();
    assert!(eval.micro_f1 > 0.9, "{eval:?}");
}

#[test]
fn supervised_loss_falls_over_training() {
    let bundle = generate_synthetic(&SyntheticSpec::reference(), 1).unwrap();
    let graph = PreparedGraph::new(&bundle, true);
    let splits = make_splits(&bundle, 0, 0, &reference_split()).unwrap();
    let labeled = &splits.init_labeled_ids;
    let mut params = GcnParams::init(64, 16, 4, 0.01, 5e-4, 0.5, &RngStream::new(2));
    let mut rng = RngStream::new(3);
    let loss = |p: &GcnParams| {
        let a = gcn_forward(&graph.adj, &graph.features, p, false, &mut RngStream::new(0)).unwrap();
        gcn_supervised_loss(&a, labeled, &graph.labels).unwrap()
    };
    let start = loss(&params);
    for _ in 0..300 {
        train_g_epoch(&graph.adj, &graph.features, labeled, &graph.labels, &mut params, None, &mut rng).unwrap();
    }
    let end = loss(&params);
    assert!(end < 0.25 * start, "{start} -> {end}");
}

#[test]
fn held_out_nodes_never_enter_the_pools() {
    let bundle = generate_synthetic(&SyntheticSpec::reference(), 0).unwrap();
    let graph = PreparedGraph::new(&bundle, true);
    let splits = make_splits(&bundle, 3, 4, &reference_split()).unwrap();
    let held_out: BTreeSet<usize> = splits.test_ids.iter().chain(&splits.val_ids).copied().collect();
    let config = TrainingConfig {
        strategy: Strategy::Seal,
        delta: 0.9,
        pretrain_epochs: 30,
        budget: Some(20),
        patience: 2,
        ..TrainingConfig::default()
    };
    let mut calls = 0;
    let out = run_active_loop(&graph, &splits, &config, 11, &mut |pools| {
        calls += 1;
        assert!(pools.labeled.is_subset(&pools.p_labeled));
        assert!(pools.p_labeled.is_disjoint(&held_out));
        assert!(pools.p_unlabeled.is_disjoint(&held_out));
        Ok(())
    })
    .unwrap();
    assert_eq!(calls, 21);
    assert!(out.query_log().iter().all(|r| !held_out.contains(&r.node)));
    assert_eq!(out.pools.labeled.len(), 16 + 20);
}
