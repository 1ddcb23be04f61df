//! The active-learning loop, its baselines and ablations, and the final
//! retrain-and-evaluate stage.
//!
//! One outer iteration trains the embedder for `g_epochs`, re-tunes the
//! pools, trains the discriminator for `d_epochs`, and, once pre-training is
//! over and budget remains, queries the pseudo-unlabeled node with the
//! highest divergence score `1 - D(x)`. The loop ends `patience` outer
//! iterations after the last query.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::discriminator::{
    disc_forward, feature_matching_representation_grad, log_likelihood_representation_grad,
    train_d_epoch, DiscBatch, DiscParams, DEFAULT_DISC_WIDTHS,
};
use crate::embedder::{
    gcn_forward, gcn_supervised_loss, train_g_epoch, AdversarialTerm, GcnParams,
    DEFAULT_DROPOUT, DEFAULT_HIDDEN_WIDTH, DEFAULT_L2_LAMBDA,
};
use crate::error::{Error, Result};
use crate::graph_data::{normalize_adjacency, GraphBundle, NormalizedAdjacency, SplitSpec};
use crate::metrics::{macro_f1, micro_f1, ConfusionTable};
use crate::numerics::{CsrMatrix, DenseMatrix, RngStream};
use crate::pool::{tune_pools, PoolState, QueryRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    Seal,
    SealAd,
    SealFm,
    SealSal,
    SealPt,
    Random,
    Entropy,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Seal,
        Strategy::SealAd,
        Strategy::SealFm,
        Strategy::SealSal,
        Strategy::SealPt,
        Strategy::Random,
        Strategy::Entropy,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Strategy::Seal => "seal",
            Strategy::SealAd => "seal-ad",
            Strategy::SealFm => "seal-fm",
            Strategy::SealSal => "seal-sal",
            Strategy::SealPt => "seal-pt",
            Strategy::Random => "random",
            Strategy::Entropy => "entropy",
        }
    }

    /// Whether the strategy trains a discriminator and tunes pools.
    pub fn is_adversarial(self) -> bool {
        !matches!(self, Strategy::Random | Strategy::Entropy)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Strategy::ALL
            .into_iter()
            .find(|st| st.id() == s)
            .ok_or(Error::UnknownStrategy(s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub strategy: Strategy,
    pub delta: f64,
    pub alpha: f64,
    /// Outer iterations before querying starts.
    pub pretrain_epochs: usize,
    pub g_epochs: usize,
    pub d_epochs: usize,
    /// `None` means `20 K - |L_init|`.
    pub budget: Option<usize>,
    pub lr_select: f64,
    pub lr_predict: f64,
    pub lr_disc: f64,
    pub hidden_width: usize,
    pub disc_widths: (usize, usize),
    pub dropout: f64,
    pub l2_lambda: f64,
    pub final_train_epochs: usize,
    pub patience: usize,
    /// L1-normalize feature rows before training.
    pub row_normalize: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            strategy: Strategy::Seal,
            delta: 0.6,
            alpha: 0.6,
            pretrain_epochs: 300,
            g_epochs: 5,
            d_epochs: 5,
            budget: None,
            lr_select: 0.005,
            lr_predict: 0.01,
            lr_disc: 0.01,
            hidden_width: DEFAULT_HIDDEN_WIDTH,
            disc_widths: DEFAULT_DISC_WIDTHS,
            dropout: DEFAULT_DROPOUT,
            l2_lambda: DEFAULT_L2_LAMBDA,
            final_train_epochs: 200,
            patience: 20,
            row_normalize: true,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad(format!("delta must lie in (0, 1], got {}", self.delta));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be a finite value >= 0, got {}", self.alpha));
        }
        for (name, lr) in [
            ("lr_select", self.lr_select),
            ("lr_predict", self.lr_predict),
            ("lr_disc", self.lr_disc),
        ] {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(format!("{name} must be positive, got {lr}"));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if self.l2_lambda < 0.0 {
            return bad(format!("l2_lambda must be >= 0, got {}", self.l2_lambda));
        }
        if self.hidden_width == 0 || self.disc_widths.0 == 0 || self.disc_widths.1 == 0 {
            return bad("layer widths must be positive".into());
        }
        Ok(())
    }

    /// The query budget for a bundle with `num_classes` classes and
    /// `initial` starting labels.
    pub fn resolved_budget(&self, num_classes: usize, initial: usize) -> Result<usize> {
        match self.budget {
            Some(b) => Ok(b),
            None => (20 * num_classes).checked_sub(initial).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "default budget 20*{num_classes} is below the {initial} initial labels"
                ))
            }),
        }
    }
}

/// Rewrites the hyperparameters an ablation fixes. Strategies without such
/// an override are returned unchanged.
pub fn apply_ablation(config: &TrainingConfig) -> TrainingConfig {
    let mut c = config.clone();
    match c.strategy {
        Strategy::SealSal => c.alpha = 0.0,
        Strategy::SealPt => c.delta = 1.0,
        _ => {}
    }
    c
}

pub fn div_score(labeled_prob: f64) -> f64 {
    1.0 - labeled_prob
}

/// Argmax over `scores`; ties go to the smallest node id.
pub fn select_node(candidates: &[usize], scores: &[f64]) -> Result<usize> {
    if candidates.len() != scores.len() {
        return Err(Error::shape(
            "select_node",
            format!("{} candidates vs {} scores", candidates.len(), scores.len()),
        ));
    }
    let mut best: Option<(usize, f64)> = None;
    for (&id, &s) in candidates.iter().zip(scores) {
        if !s.is_finite() {
            return Err(Error::InvalidArgument(format!("score for node {id} is {s}")));
        }
        best = match best {
            Some((bid, bs)) if bs > s || (bs == s && bid < id) => Some((bid, bs)),
            _ => Some((id, s)),
        };
    }
    best.map(|(id, _)| id)
        .ok_or(Error::NoCandidates { remaining: 0 })
}

/// `-Σ_k z_k ln z_k` per row, with `0 ln 0 = 0`.
pub fn prediction_entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Normalized adjacency, training features and labels of one bundle, shared
/// read-only by every run on it.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub adj: NormalizedAdjacency,
    pub features: CsrMatrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl PreparedGraph {
    pub fn new(bundle: &GraphBundle, row_normalize: bool) -> Self {
        let features = if row_normalize {
            bundle.features().row_normalized()
        } else {
            bundle.features().clone()
        };
        PreparedGraph {
            adj: normalize_adjacency(bundle),
            features,
            labels: bundle.labels().to_vec(),
            num_classes: bundle.num_classes(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }
}

#[derive(Debug, Clone)]
pub struct ActiveOutcome {
    pub pools: PoolState,
    pub gcn: GcnParams,
    pub disc: Option<DiscParams>,
    pub outer_iterations: usize,
    pub budget: usize,
}

impl ActiveOutcome {
    pub fn query_log(&self) -> &[QueryRecord] {
        &self.pools.query_log
    }
}

/// Called once before the first query and once after every query.
pub type QueryObserver<'a> = dyn FnMut(&PoolState) -> Result<()> + 'a;

enum Scoring {
    Divergence,
    Random,
    Entropy,
}

#[derive(Clone, Copy, PartialEq)]
enum GeneratorFeedback {
    None,
    FeatureMatching,
    LogLikelihood,
}

/// Runs the full selection phase of `config.strategy` from seed `seed`.
pub fn run_active_loop(
    graph: &PreparedGraph,
    splits: &SplitSpec,
    config: &TrainingConfig,
    seed: u64,
    observer: &mut QueryObserver<'_>,
) -> Result<ActiveOutcome> {
    let config = apply_ablation(config);
    config.validate()?;
    let (scoring, feedback) = match config.strategy {
        Strategy::Seal | Strategy::SealSal | Strategy::SealPt => {
            (Scoring::Divergence, GeneratorFeedback::FeatureMatching)
        }
        Strategy::SealAd => (Scoring::Divergence, GeneratorFeedback::None),
        Strategy::SealFm => (Scoring::Divergence, GeneratorFeedback::LogLikelihood),
        Strategy::Random => (Scoring::Random, GeneratorFeedback::None),
        Strategy::Entropy => (Scoring::Entropy, GeneratorFeedback::None),
    };
    let n = graph.num_nodes();
    let pool_ids = splits.pool_ids(n);
    let mut pools = PoolState::new(&pool_ids, &splits.init_labeled_ids)?;
    let budget = config.resolved_budget(graph.num_classes, splits.init_labeled_ids.len())?;
    if budget > pools.unlabeled.len() {
        return Err(Error::InvalidArgument(format!(
            "budget {budget} exceeds the {} unlabeled pool nodes",
            pools.unlabeled.len()
        )));
    }
    let excluded: Vec<usize> = splits.test_ids.iter().chain(&splits.val_ids).copied().collect();

    let root = RngStream::new(seed);
    let mut gcn = GcnParams::init(
        graph.features.cols(),
        config.hidden_width,
        graph.num_classes,
        config.lr_select,
        config.l2_lambda,
        config.dropout,
        &root.substream("gcn"),
    );
    let mut disc = config.strategy.is_adversarial().then(|| {
        DiscParams::init(
            config.hidden_width,
            config.disc_widths,
            graph.num_classes,
            config.lr_disc,
            config.dropout,
            &root.substream("disc"),
        )
    });
    let mut g_rng = root.substream("g-train");
    let mut d_rng = root.substream("d-train");
    let mut select_rng = root.substream("select");

    observer(&pools)?;
    let mut queries = 0usize;
    let mut settled = 0usize;
    let mut t = 0usize;
    loop {
        t += 1;
        let labeled = pools.labeled_ids();
        let adversarial_phase = t > config.pretrain_epochs;

        let mut last = None;
        for _ in 0..config.g_epochs {
            let out = match (&disc, feedback) {
                (Some(d), f) if adversarial_phase && f != GeneratorFeedback::None && !pools.p_unlabeled.is_empty() => {
                    let ids = pools.pool_ids();
                    let (_, batch) = DiscBatch::from_pools(&pools, &graph.labels);
                    let adversary = |hidden: &DenseMatrix| -> Result<(f64, DenseMatrix)> {
                        let reps = hidden.select_rows(&ids);
                        let (term, grad) = match f {
                            GeneratorFeedback::FeatureMatching => feature_matching_representation_grad(
                                &reps,
                                d,
                                &batch.p_labeled_rows,
                                &batch.p_unlabeled_rows,
                            )?,
                            _ => {
                                let all: Vec<usize> = (0..ids.len()).collect();
                                log_likelihood_representation_grad(&reps, d, &all)?
                            }
                        };
                        Ok((term, grad.scatter_rows(&ids, hidden.rows())))
                    };
                    let adversary: &AdversarialTerm<'_> = &adversary;
                    train_g_epoch(&graph.adj, &graph.features, &labeled, &graph.labels, &mut gcn, Some(adversary), &mut g_rng)?
                }
                _ => train_g_epoch(&graph.adj, &graph.features, &labeled, &graph.labels, &mut gcn, None, &mut g_rng)?,
            };
            last = Some(out.activations);
        }
        let acts = match last {
            Some(a) => a,
            None => gcn_forward(&graph.adj, &graph.features, &gcn, false, &mut g_rng)?,
        };

        if let Some(d) = disc.as_mut() {
            tune_pools(&acts.probs, &mut pools, config.delta)?;
            if pools.p_unlabeled.is_empty() && queries < budget {
                return Err(Error::NoCandidates {
                    remaining: budget - queries,
                });
            }
            if !pools.p_unlabeled.is_empty() {
                for _ in 0..config.d_epochs {
                    train_d_epoch(&acts.hidden, &pools, &graph.labels, d, config.alpha, &mut d_rng)?;
                }
            }
        }
        pools.check_invariants(&excluded)?;

        if !adversarial_phase {
            continue;
        }
        if queries < budget {
            let (candidates, scores) = match scoring {
                Scoring::Divergence => {
                    let d = disc.as_ref().expect("adversarial strategies own a discriminator");
                    let candidates = pools.p_unlabeled_ids();
                    let reps = acts.hidden.select_rows(&candidates);
                    let dacts = disc_forward(&reps, d, false, &mut d_rng)?;
                    let scores: Vec<f64> = dacts.labeled_prob.iter().map(|&p| div_score(p)).collect();
                    (candidates, scores)
                }
                Scoring::Random => {
                    let candidates: Vec<usize> = pools.unlabeled.iter().copied().collect();
                    let scores: Vec<f64> = candidates.iter().map(|_| select_rng.uniform()).collect();
                    (candidates, scores)
                }
                Scoring::Entropy => {
                    let candidates: Vec<usize> = pools.unlabeled.iter().copied().collect();
                    let scores: Vec<f64> = candidates
                        .iter()
                        .map(|&c| prediction_entropy(acts.probs.row(c)))
                        .collect();
                    (candidates, scores)
                }
            };
            let node = select_node(&candidates, &scores).map_err(|e| match e {
                Error::NoCandidates { .. } => Error::NoCandidates {
                    remaining: budget - queries,
                },
                e => e,
            })?;
            let score = scores[candidates.iter().position(|&c| c == node).expect("selected candidate")];
            pools.reveal(node, t, score)?;
            queries += 1;
            pools.check_invariants(&excluded)?;
            log::debug!("iteration {t}: queried node {node} (score {score:.4}), {queries}/{budget}");
            observer(&pools)?;
        } else {
            settled += 1;
            if settled >= config.patience {
                break;
            }
        }
    }

    Ok(ActiveOutcome {
        pools,
        gcn,
        disc,
        outer_iterations: t,
        budget,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub micro_f1: f64,
    pub macro_f1: f64,
    /// Epochs actually trained before early stopping.
    pub epochs: usize,
    pub best_val_loss: f64,
}

/// Trains a fresh GCN on `labeled` with `lr_predict`, early-stopping on mean
/// validation cross-entropy and keeping the best validation parameters, then
/// scores argmax predictions on the test nodes.
pub fn final_train_eval(
    graph: &PreparedGraph,
    splits: &SplitSpec,
    labeled: &[usize],
    config: &TrainingConfig,
    seed: u64,
) -> Result<Evaluation> {
    config.validate()?;
    if splits.test_ids.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let root = RngStream::new(seed).substream("final");
    let mut gcn = GcnParams::init(
        graph.features.cols(),
        config.hidden_width,
        graph.num_classes,
        config.lr_predict,
        config.l2_lambda,
        config.dropout,
        &root.substream("gcn"),
    );
    let mut rng = root.substream("train");
    let mut best = (f64::INFINITY, gcn.clone());
    let mut stale = 0;
    let mut epochs = 0;
    for _ in 0..config.final_train_epochs {
        let out = train_g_epoch(&graph.adj, &graph.features, labeled, &graph.labels, &mut gcn, None, &mut rng)?;
        epochs += 1;
        if splits.val_ids.is_empty() {
            best = (f64::NAN, gcn.clone());
            continue;
        }
        let val = gcn_supervised_loss(&out.activations, &splits.val_ids, &graph.labels)?
            / splits.val_ids.len() as f64;
        if val < best.0 {
            best = (val, gcn.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    let (best_val_loss, params) = best;
    let acts = gcn_forward(&graph.adj, &graph.features, &params, false, &mut rng)?;
    let truth: Vec<usize> = splits.test_ids.iter().map(|&i| graph.labels[i]).collect();
    let predicted: Vec<usize> = splits.test_ids.iter().map(|&i| acts.probs.row_argmax(i)).collect();
    let table = ConfusionTable::from_predictions(&truth, &predicted, graph.num_classes)?;
    Ok(Evaluation {
        micro_f1: micro_f1(&table)?,
        macro_f1: macro_f1(&table)?,
        epochs,
        best_val_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_data::{generate_synthetic, make_splits, SplitConfig, SyntheticSpec};
    use super::Strategy;
    use proptest::prelude::*;

    #[test]
    fn div_score_cases() {
        assert_eq!(div_score(0.75), 0.25);
        assert!(div_score(1.0 - 1e-12) < 1e-11);
        let d = crate::discriminator::labeled_probability(&[0.0, 0.0, 0.0]);
        assert!((div_score(d) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn select_node_cases() {
        assert_eq!(select_node(&[5, 2, 9], &[0.1, 0.9, 0.4]).unwrap(), 2);
        assert_eq!(select_node(&[4, 1], &[0.7, 0.7]).unwrap(), 1);
        assert_eq!(select_node(&[8], &[0.0]).unwrap(), 8);
        assert!(matches!(select_node(&[], &[]), Err(Error::NoCandidates { .. })));
        assert!(select_node(&[1], &[f64::NAN]).is_err());
    }

    #[test]
    fn entropy_cases() {
        assert!((prediction_entropy(&[0.25; 4]) - 4f64.ln()).abs() < 1e-15);
        assert_eq!(prediction_entropy(&[0.0, 1.0, 0.0]), 0.0);
    }

    #[test]
    fn strategy_ids_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.id().parse::<Strategy>().unwrap(), s);
        }
        assert!(matches!("seal-xx".parse::<Strategy>(), Err(Error::UnknownStrategy(_))));
    }

    #[test]
    fn ablations_fix_their_parameters() {
        let base = TrainingConfig::default();
        let sal = apply_ablation(&TrainingConfig { strategy: Strategy::SealSal, ..base.clone() });
        assert_eq!(sal.alpha, 0.0);
        let pt = apply_ablation(&TrainingConfig { strategy: Strategy::SealPt, ..base.clone() });
        assert_eq!(pt.delta, 1.0);
        assert_eq!(apply_ablation(&base), base);
    }

    #[test]
    fn config_validation() {
        let ok = TrainingConfig::default();
        ok.validate().unwrap();
        assert!(TrainingConfig { delta: 0.0, ..ok.clone() }.validate().is_err());
        assert!(TrainingConfig { delta: 1.2, ..ok.clone() }.validate().is_err());
        assert!(TrainingConfig { alpha: -0.1, ..ok.clone() }.validate().is_err());
        assert!(TrainingConfig { lr_disc: 0.0, ..ok.clone() }.validate().is_err());
        assert_eq!(ok.resolved_budget(7, 28).unwrap(), 112);
        assert_eq!(ok.resolved_budget(6, 24).unwrap(), 96);
        assert!(ok.resolved_budget(1, 30).is_err());
    }

    fn tiny() -> (PreparedGraph, SplitSpec) {
        let spec = SyntheticSpec {
            num_nodes: 60,
            num_classes: 3,
            num_features: 12,
            edge_prob_in: 0.15,
            edge_prob_out: 0.02,
            feature_signal: 0.4,
        };
        let b = generate_synthetic(&spec, 5).unwrap();
        let cfg = SplitConfig {
            test_size: 20,
            val_size: 10,
            per_class_init: 2,
            test_seed: 0,
        };
        let s = make_splits(&b, 1, 2, &cfg).unwrap();
        (PreparedGraph::new(&b, true), s)
    }

    fn quick(strategy: Strategy) -> TrainingConfig {
        TrainingConfig {
            strategy,
            pretrain_epochs: 4,
            g_epochs: 2,
            d_epochs: 2,
            budget: Some(6),
            disc_widths: (8, 8),
            patience: 3,
            final_train_epochs: 30,
            ..TrainingConfig::default()
        }
    }

    fn run(graph: &PreparedGraph, s: &SplitSpec, c: &TrainingConfig, seed: u64) -> ActiveOutcome {
        run_active_loop(graph, s, c, seed, &mut |_| Ok(())).unwrap()
    }

    #[test]
    fn every_strategy_spends_exactly_the_budget() {
        let (g, s) = tiny();
        for st in Strategy::ALL {
            let out = run(&g, &s, &quick(st), 9);
            assert_eq!(out.query_log().len(), 6, "{st}");
            assert_eq!(out.pools.labeled.len(), s.init_labeled_ids.len() + 6);
            let counts: Vec<usize> = out.query_log().iter().map(|r| r.labeled_count).collect();
            assert!(counts.windows(2).all(|w| w[1] == w[0] + 1));
            assert_eq!(out.outer_iterations, 4 + 6 + 3);
        }
    }

    #[test]
    fn zero_budget_matches_pure_training() {
        let (g, s) = tiny();
        let c = TrainingConfig { budget: Some(0), ..quick(Strategy::Seal) };
        let out = run(&g, &s, &c, 1);
        assert!(out.query_log().is_empty());
        assert_eq!(out.outer_iterations, 4 + 3);
    }

    #[test]
    fn runs_are_deterministic() {
        let (g, s) = tiny();
        let a = run(&g, &s, &quick(Strategy::Seal), 3);
        let b = run(&g, &s, &quick(Strategy::Seal), 3);
        assert_eq!(a.query_log(), b.query_log());
        assert_eq!(a.gcn, b.gcn);
    }

    #[test]
    fn no_adversarial_feedback_leaves_the_embedder_untouched_by_d() {
        let (g, s) = tiny();
        // with no queries the labeled set is fixed, so the embedder trajectory
        // depends only on whether D feeds back into it
        let ad = TrainingConfig { budget: Some(0), ..quick(Strategy::SealAd) };
        let plain = TrainingConfig { budget: Some(0), ..quick(Strategy::Entropy) };
        let with_d = run(&g, &s, &ad, 4);
        let without_d = run(&g, &s, &plain, 4);
        assert!(with_d.disc.is_some() && without_d.disc.is_none());
        assert_eq!(with_d.gcn, without_d.gcn);
        let full = TrainingConfig { budget: Some(0), ..quick(Strategy::Seal) };
        assert_ne!(run(&g, &s, &full, 4).gcn, without_d.gcn);
    }

    #[test]
    fn pool_tuning_off_keeps_pools_untuned() {
        let (g, s) = tiny();
        let mut checked = 0;
        let out = run_active_loop(&g, &s, &quick(Strategy::SealPt), 2, &mut |p| {
            assert_eq!(p.p_labeled, p.labeled);
            assert_eq!(p.p_unlabeled, p.unlabeled);
            checked += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(checked, 7);
        assert_eq!(out.pools.p_labeled, out.pools.labeled);
    }

    #[test]
    fn degenerate_delta_reports_no_candidates() {
        let (g, s) = tiny();
        let c = TrainingConfig { delta: 1e-9, ..quick(Strategy::Seal) };
        let err = run_active_loop(&g, &s, &c, 2, &mut |_| Ok(())).unwrap_err();
        assert!(matches!(err, Error::NoCandidates { remaining: 6 }));
    }

    #[test]
    fn oversized_budget_is_rejected() {
        let (g, s) = tiny();
        let c = TrainingConfig { budget: Some(1000), ..quick(Strategy::Random) };
        assert!(run_active_loop(&g, &s, &c, 2, &mut |_| Ok(())).is_err());
    }

    #[test]
    fn final_eval_is_deterministic_and_bounded() {
        let (g, s) = tiny();
        let c = quick(Strategy::Seal);
        let a = final_train_eval(&g, &s, &s.init_labeled_ids, &c, 7).unwrap();
        let b = final_train_eval(&g, &s, &s.init_labeled_ids, &c, 7).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a.micro_f1) && (0.0..=1.0).contains(&a.macro_f1));
        assert!(a.epochs <= 30);
    }

    proptest! {
        #[test]
        fn selection_is_invariant_to_positive_rescaling(
            scores in proptest::collection::vec(0.0f64..1.0, 1..30),
            scale in 0.01f64..100.0,
        ) {
            let ids: Vec<usize> = (0..scores.len()).map(|i| (i * 7) % 31).collect();
            let scaled: Vec<f64> = scores.iter().map(|s| s * scale).collect();
            let pick = select_node(&ids, &scores).unwrap();
            prop_assert_eq!(pick, select_node(&ids, &scaled).unwrap());
            let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(scores[ids.iter().position(|&i| i == pick).unwrap()], best);
        }
    }
}
