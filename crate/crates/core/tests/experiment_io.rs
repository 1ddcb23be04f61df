use seal_core::engine::{Strategy, TrainingConfig};
use seal_core::experiment::{read_csv, run_plan, CurveRow, DataSource, ExperimentPlan, ResultsRow, SweepAxis};
use seal_core::graph_data::{SplitConfig, SyntheticSpec};

fn plan(out: &std::path::Path) -> ExperimentPlan {
    ExperimentPlan {
        source: DataSource::Synthetic {
            spec: SyntheticSpec {
                num_nodes: 60,
                num_classes: 3,
                num_features: 12,
                edge_prob_in: 0.15,
                edge_prob_out: 0.02,
                feature_signal: 0.4,
            },
            seed: 0,
        },
        strategies: vec![Strategy::Seal, Strategy::Random],
        val_seeds: vec![1, 2],
        init_seeds: vec![3],
        sweep: SweepAxis::Delta,
        sweep_values: vec![0.8, 0.9],
        curve_interval: Some(2),
        jobs: 1,
        out_dir: out.to_path_buf(),
        base: TrainingConfig {
            pretrain_epochs: 3,
            budget: Some(4),
            patience: 1,
            final_train_epochs: 20,
            disc_widths: (16, 16),
            ..TrainingConfig::default()
        },
        split: SplitConfig {
            test_size: 20,
            val_size: 10,
            per_class_init: 2,
            test_seed: 0,
        },
    }
}

#[test]
fn written_rows_parse_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_plan(&plan(dir.path())).unwrap();
    assert!(outcome.is_success(), "{:?}", outcome.failures);
    assert_eq!(outcome.results.len(), 2 * 2 * 2);
    // interval 2 over a budget of 4: snapshots at 0, 2 and 4 queries
    assert_eq!(outcome.curves.len(), 8 * 3);
    let results: Vec<ResultsRow> = read_csv(&dir.path().join("results.csv")).unwrap();
    let curves: Vec<CurveRow> = read_csv(&dir.path().join("curves.csv")).unwrap();
    assert_eq!(results, outcome.results);
    assert_eq!(curves, outcome.curves);
    for r in &results {
        assert!((0.0..=1.0).contains(&r.micro_f1) && r.wall_seconds >= 0.0);
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["groups"].as_array().unwrap().len(), 4);
}

#[test]
fn invalid_plans_are_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = plan(dir.path());
    p.sweep_values = vec![1.5];
    assert!(run_plan(&p).is_err());
    let mut p = plan(dir.path());
    p.val_seeds.clear();
    assert!(run_plan(&p).is_err());
    let mut p = plan(&dir.path().join("out"));
    p.source = DataSource::Bundle(dir.path().join("missing"));
    assert!(run_plan(&p).is_err());
    assert!(!dir.path().join("out").exists());
}
