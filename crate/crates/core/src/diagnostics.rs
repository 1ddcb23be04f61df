//! Finite-difference audit of every hand-derived gradient on a small
//! synthetic instance, with dropout disabled.

use serde::Serialize;

use crate::discriminator::{
    disc_backward, disc_forward, DiscActivations, disc_objective, disc_sup_loss, disc_unsup_loss, feature_matching_representation_grad,
    log_likelihood_representation_grad, DiscBatch, DiscParams,
};
use crate::embedder::{
    gcn_backward, gcn_forward, gcn_supervised_loss, GcnActivations, GcnParams, DEFAULT_L2_LAMBDA,
};
use crate::error::Result;
use crate::graph_data::{generate_synthetic, normalize_adjacency, SyntheticSpec};
use crate::numerics::{piecewise_difference_check, DenseMatrix, FdReport, RngStream, DEFAULT_FD_STEP};
use crate::pool::PoolState;

pub const GRADIENT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct GradientCheck {
    pub name: &'static str,
    pub max_relative_error: f64,
    pub checked: usize,
    /// Sampled coordinates whose perturbation crossed a ReLU kink.
    pub skipped: usize,
}

impl GradientCheck {
    fn new(name: &'static str, r: FdReport) -> Self {
        GradientCheck {
            name,
            max_relative_error: r.max_relative_error,
            checked: r.checked,
            skipped: r.skipped,
        }
    }

    /// Error under tolerance, with at most a fifth of sampled coordinates skipped.
    pub fn passed(&self) -> bool {
        self.max_relative_error < GRADIENT_TOLERANCE
            && self.checked > 0
            && self.skipped * 5 <= self.checked + self.skipped
    }
}

/// Coordinates sampled per check.
const MAX_COORDS: usize = 3000;

fn signs(m: &DenseMatrix) -> impl Iterator<Item = bool> + '_ {
    m.as_slice().iter().map(|&v| v > 0.0)
}

fn gcn_pattern(a: &GcnActivations) -> Vec<bool> {
    signs(&a.pre_hidden).collect()
}

fn disc_pattern(a: &DiscActivations) -> Vec<bool> {
    signs(&a.pre1).chain(signs(&a.pre2)).collect()
}

/// Checks `J_GCN`, the full generator objective, `J_sup`, `J_unsup`, `J_D`,
/// and both representation gradients the discriminator feeds back to the
/// embedder, on a 12-node graph with 5 features and 3 classes.
pub fn run_gradient_checks(seed: u64) -> Result<Vec<GradientCheck>> {
    let spec = SyntheticSpec {
        num_nodes: 12,
        num_classes: 3,
        num_features: 5,
        edge_prob_in: 0.6,
        edge_prob_out: 0.1,
        feature_signal: 0.6,
    };
    let bundle = generate_synthetic(&spec, seed)?;
    let adj = normalize_adjacency(&bundle);
    let x = bundle.features().row_normalized();
    let labels = bundle.labels().to_vec();
    let root = RngStream::new(seed);
    let labeled = vec![0, 4, 8];
    let alpha = 0.6;

    let mut pools = PoolState::new(&(0..12).collect::<Vec<_>>(), &labeled)?;
    // promote two unlabeled nodes so every pool role is populated
    for p in [2, 9] {
        pools.p_unlabeled.remove(&p);
        pools.p_labeled.insert(p);
    }
    let (ids, batch) = DiscBatch::from_pools(&pools, &labels);
    let no_rng = || RngStream::new(0);

    let mut gcn = GcnParams::init(5, 16, 3, 0.01, 0.0, 0.0, &root.substream("gcn"));
    let disc = DiscParams::init(16, (128, 128), 3, 0.01, 0.0, &root.substream("disc"));
    let mut out = Vec::new();
    let mut fd = root.substream("fd");

    // J_GCN
    let acts = gcn_forward(&adj, &x, &gcn, false, &mut no_rng())?;
    let g = gcn_backward(&adj, &acts, &labeled, &labels, None, &gcn)?;
    let w = gcn.weights();
    let r = piecewise_difference_check(
        |ts| {
            let p = GcnParams { w0: ts[0].clone(), w1: ts[1].clone(), ..gcn.clone() };
            let a = gcn_forward(&adj, &x, &p, false, &mut no_rng()).unwrap();
            (gcn_supervised_loss(&a, &labeled, &labels).unwrap(), gcn_pattern(&a))
        },
        &w,
        &[g.w0, g.w1],
        DEFAULT_FD_STEP,
        MAX_COORDS,
        &mut fd,
    )?;
    out.push(GradientCheck::new("J_GCN", r));

    // generator objective: feature matching + J_GCN + L2 on W0
    gcn.l2_lambda = DEFAULT_L2_LAMBDA;
    let generator = |p: &GcnParams| -> Result<(f64, DenseMatrix, GcnActivations, Vec<bool>)> {
        let a = gcn_forward(&adj, &x, p, false, &mut no_rng())?;
        let reps = a.hidden.select_rows(&ids);
        let (fm, grad) = feature_matching_representation_grad(&reps, &disc, &batch.p_labeled_rows, &batch.p_unlabeled_rows)?;
        let loss = fm + gcn_supervised_loss(&a, &labeled, &labels)? + p.l2_penalty();
        let mut pattern = gcn_pattern(&a);
        pattern.extend(disc_pattern(&disc_forward(&reps, &disc, false, &mut no_rng())?));
        Ok((loss, grad.scatter_rows(&ids, 12), a, pattern))
    };
    let (_, upstream, acts, _) = generator(&gcn)?;
    let g = gcn_backward(&adj, &acts, &labeled, &labels, Some(&upstream), &gcn)?;
    let r = piecewise_difference_check(
        |ts| {
            let p = GcnParams { w0: ts[0].clone(), w1: ts[1].clone(), ..gcn.clone() };
            let (loss, _, _, pattern) = generator(&p).unwrap();
            (loss, pattern)
        },
        &w,
        &[g.w0, g.w1],
        DEFAULT_FD_STEP,
        MAX_COORDS,
        &mut fd,
    )?;
    out.push(GradientCheck::new("J_G", r));

    // discriminator objectives; J_D is linear in alpha, so the alpha = 0 and
    // alpha = 1 logit gradients isolate J_unsup and J_sup
    let reps = acts.hidden.select_rows(&ids);
    let dacts = disc_forward(&reps, &disc, false, &mut no_rng())?;
    let (_, d_unsup) = disc_objective(&dacts, &batch, 0.0)?;
    let (_, d_one) = disc_objective(&dacts, &batch, 1.0)?;
    let mut d_sup = d_one;
    d_sup.scaled_add_assign(-1.0, &d_unsup)?;
    let (_, d_total) = disc_objective(&dacts, &batch, alpha)?;
    let tensors = disc.tensors();
    type DLoss<'a> = Box<dyn Fn(&DiscActivations) -> f64 + 'a>;
    let cases: [(&'static str, DenseMatrix, DLoss<'_>); 3] = [
        ("J_sup", d_sup, Box::new(|a| disc_sup_loss(a, &batch.labeled_rows, &batch.labeled_classes).unwrap())),
        ("J_unsup", d_unsup, Box::new(|a| disc_unsup_loss(a, &batch.p_labeled_rows, &batch.p_unlabeled_rows).unwrap())),
        ("J_D", d_total, Box::new(|a| disc_objective(a, &batch, alpha).unwrap().0.total)),
    ];
    for (name, d_logits, loss) in cases {
        let g = disc_backward(&dacts, &disc, &d_logits, None)?;
        let r = piecewise_difference_check(
            |ts| {
                let q = disc.with_tensors(ts);
                let a = disc_forward(&reps, &q, false, &mut no_rng()).unwrap();
                (loss(&a), disc_pattern(&a))
            },
            &tensors,
            &g.params,
            DEFAULT_FD_STEP,
            MAX_COORDS,
            &mut fd,
        )?;
        out.push(GradientCheck::new(name, r));
    }

    // representation gradients fed back into the embedder
    let (_, g) = feature_matching_representation_grad(&reps, &disc, &batch.p_labeled_rows, &batch.p_unlabeled_rows)?;
    let pattern = |r: &DenseMatrix| disc_pattern(&disc_forward(r, &disc, false, &mut no_rng()).unwrap());
    let r = piecewise_difference_check(
        |r| {
            let (term, _) = feature_matching_representation_grad(&r[0], &disc, &batch.p_labeled_rows, &batch.p_unlabeled_rows).unwrap();
            (term, pattern(&r[0]))
        },
        std::slice::from_ref(&reps),
        &[g],
        DEFAULT_FD_STEP,
        MAX_COORDS,
        &mut fd,
    )?;
    out.push(GradientCheck::new("feature matching (representations)", r));
    let all: Vec<usize> = (0..ids.len()).collect();
    let (_, g) = log_likelihood_representation_grad(&reps, &disc, &all)?;
    let r = piecewise_difference_check(
        |r| (log_likelihood_representation_grad(&r[0], &disc, &all).unwrap().0, pattern(&r[0])),
        std::slice::from_ref(&reps),
        &[g],
        DEFAULT_FD_STEP,
        MAX_COORDS,
        &mut fd,
    )?;
    out.push(GradientCheck::new("log-likelihood (representations)", r));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let checks = run_gradient_checks(1).unwrap();
        assert_eq!(checks.len(), 7);
        for c in &checks {
            assert!(c.passed(), "{c:?}");
        }
    }
}
