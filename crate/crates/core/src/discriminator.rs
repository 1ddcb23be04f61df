//! Semisupervised discriminator over node representations.
//!
//! Three fully connected layers produce `K` class logits; the `(K+1)`-th
//! "unlabeled" logit is pinned to zero, so with `S = Σ_k exp(l_k)` the
//! probability that a node looks labeled is `D = S / (S + 1)`, i.e.
//! `sigmoid(logsumexp(l))`. All log-probabilities are evaluated through
//! `softplus` on the log-sum-exp, never through `D` itself.

use crate::error::{Error, Result};
use crate::numerics::{
    adam_step, dropout, glorot_uniform, leaky_relu, leaky_relu_mask, log_sum_exp, sigmoid,
    softmax_in_place, softplus, AdamState, DenseMatrix, RngStream, DEFAULT_LEAKY_SLOPE,
};
use crate::pool::PoolState;

pub const DEFAULT_DISC_WIDTHS: (usize, usize) = (128, 128);

#[derive(Debug, Clone, PartialEq)]
pub struct DiscParams {
    pub w_a: DenseMatrix,
    pub b_a: DenseMatrix,
    pub w_b: DenseMatrix,
    pub b_b: DenseMatrix,
    pub w_c: DenseMatrix,
    pub b_c: DenseMatrix,
    pub adam: AdamState,
    pub dropout_rate: f64,
    pub leaky_slope: f64,
}

impl DiscParams {
    pub fn init(
        input_width: usize,
        widths: (usize, usize),
        num_classes: usize,
        learning_rate: f64,
        dropout_rate: f64,
        rng: &RngStream,
    ) -> Self {
        let (h1, h2) = widths;
        let w_a = glorot_uniform(input_width, h1, &mut rng.substream("init-Da"));
        let w_b = glorot_uniform(h1, h2, &mut rng.substream("init-Db"));
        let w_c = glorot_uniform(h2, num_classes, &mut rng.substream("init-Dc"));
        let b_a = DenseMatrix::zeros(1, h1);
        let b_b = DenseMatrix::zeros(1, h2);
        let b_c = DenseMatrix::zeros(1, num_classes);
        let shapes = [
            w_a.shape(),
            b_a.shape(),
            w_b.shape(),
            b_b.shape(),
            w_c.shape(),
            b_c.shape(),
        ];
        DiscParams {
            w_a,
            b_a,
            w_b,
            b_b,
            w_c,
            b_c,
            adam: AdamState::new(&shapes, learning_rate),
            dropout_rate,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    pub fn input_width(&self) -> usize {
        self.w_a.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.w_c.cols()
    }

    /// Weights and biases in a fixed order: `[w_a, b_a, w_b, b_b, w_c, b_c]`.
    pub fn tensors(&self) -> Vec<DenseMatrix> {
        vec![
            self.w_a.clone(),
            self.b_a.clone(),
            self.w_b.clone(),
            self.b_b.clone(),
            self.w_c.clone(),
            self.b_c.clone(),
        ]
    }

    pub fn with_tensors(&self, t: &[DenseMatrix]) -> Self {
        let mut out = self.clone();
        [
            &mut out.w_a,
            &mut out.b_a,
            &mut out.w_b,
            &mut out.b_b,
            &mut out.w_c,
            &mut out.b_c,
        ]
        .into_iter()
        .zip(t)
        .for_each(|(dst, src)| *dst = src.clone());
        out
    }

    fn apply_step(&mut self, grads: &DiscGrads) -> Result<()> {
        let DiscParams {
            w_a,
            b_a,
            w_b,
            b_b,
            w_c,
            b_c,
            adam,
            ..
        } = self;
        adam_step(
            &mut [w_a, b_a, w_b, b_b, w_c, b_c],
            &grads.params,
            adam,
        )
    }
}

/// Probability of looking labeled for one row of `K` logits.
pub fn labeled_probability(logits: &[f64]) -> f64 {
    sigmoid(log_sum_exp(logits))
}

/// `(ln D, ln(1 - D))` for one row of `K` logits.
pub fn log_labeled_probabilities(logits: &[f64]) -> (f64, f64) {
    let lse = log_sum_exp(logits);
    (-softplus(-lse), -softplus(lse))
}

#[derive(Debug, Clone)]
pub struct DiscActivations {
    pub input: DenseMatrix,
    pub pre1: DenseMatrix,
    pub mask1: DenseMatrix,
    pub hidden1: DenseMatrix,
    pub pre2: DenseMatrix,
    pub mask2: DenseMatrix,
    /// Second hidden layer after activation (and dropout when training); the
    /// feature-matching tap.
    pub hidden2: DenseMatrix,
    pub logits: DenseMatrix,
    pub labeled_prob: Vec<f64>,
}

pub fn disc_forward(
    reps: &DenseMatrix,
    params: &DiscParams,
    training: bool,
    rng: &mut RngStream,
) -> Result<DiscActivations> {
    if reps.cols() != params.input_width() {
        return Err(Error::shape(
            "disc_forward",
            format!(
                "representations have {} columns, discriminator expects {}",
                reps.cols(),
                params.input_width()
            ),
        ));
    }
    let slope = params.leaky_slope;
    let mut pre1 = reps.matmul(&params.w_a)?;
    pre1.add_row_vector(&params.b_a)?;
    let (hidden1, mask1) = dropout(&leaky_relu(&pre1, slope), params.dropout_rate, rng, training)?;
    let mut pre2 = hidden1.matmul(&params.w_b)?;
    pre2.add_row_vector(&params.b_b)?;
    let (hidden2, mask2) = dropout(&leaky_relu(&pre2, slope), params.dropout_rate, rng, training)?;
    let mut logits = hidden2.matmul(&params.w_c)?;
    logits.add_row_vector(&params.b_c)?;
    let labeled_prob = (0..logits.rows())
        .map(|r| labeled_probability(logits.row(r)))
        .collect();
    Ok(DiscActivations {
        input: reps.clone(),
        pre1,
        mask1,
        hidden1,
        pre2,
        mask2,
        hidden2,
        logits,
        labeled_prob,
    })
}

fn nonempty(rows: &[usize], what: &'static str) -> Result<()> {
    if rows.is_empty() {
        Err(Error::Empty(what))
    } else {
        Ok(())
    }
}

/// Mean `K`-class cross-entropy over `rows` (rows of `acts`) with true
/// classes `classes`.
pub fn disc_sup_loss(acts: &DiscActivations, rows: &[usize], classes: &[usize]) -> Result<f64> {
    nonempty(rows, "labeled set")?;
    let total: f64 = rows
        .iter()
        .zip(classes)
        .map(|(&r, &y)| {
            let l = acts.logits.row(r);
            log_sum_exp(l) - l[y]
        })
        .sum();
    Ok(total / rows.len() as f64)
}

/// `-(mean_{L+} ln D + mean_{U-} ln(1 - D))`.
pub fn disc_unsup_loss(acts: &DiscActivations, p_labeled_rows: &[usize], p_unlabeled_rows: &[usize]) -> Result<f64> {
    nonempty(p_labeled_rows, "p-labeled pool")?;
    nonempty(p_unlabeled_rows, "p-unlabeled pool")?;
    let pos: f64 = p_labeled_rows
        .iter()
        .map(|&r| log_labeled_probabilities(acts.logits.row(r)).0)
        .sum::<f64>()
        / p_labeled_rows.len() as f64;
    let neg: f64 = p_unlabeled_rows
        .iter()
        .map(|&r| log_labeled_probabilities(acts.logits.row(r)).1)
        .sum::<f64>()
        / p_unlabeled_rows.len() as f64;
    Ok(-(pos + neg))
}

/// `alpha * sup + unsup`.
pub fn disc_total_loss(sup: f64, unsup: f64, alpha: f64) -> f64 {
    alpha * sup + unsup
}

/// Row indices of a discriminator batch, grouped by role.
#[derive(Debug, Clone)]
pub struct DiscBatch {
    /// Original labeled rows and their classes (supervised term).
    pub labeled_rows: Vec<usize>,
    pub labeled_classes: Vec<usize>,
    pub p_labeled_rows: Vec<usize>,
    pub p_unlabeled_rows: Vec<usize>,
}

impl DiscBatch {
    /// Lays out the pool nodes `L+ ∪ U-` in ascending id order and returns
    /// the batch together with those node ids.
    pub fn from_pools(pools: &PoolState, labels: &[usize]) -> (Vec<usize>, DiscBatch) {
        let ids = pools.pool_ids();
        let pos = |id: usize| ids.binary_search(&id).expect("pool member");
        let labeled_rows: Vec<usize> = pools.labeled.iter().map(|&i| pos(i)).collect();
        let labeled_classes = pools.labeled.iter().map(|&i| labels[i]).collect();
        let p_labeled_rows = pools.p_labeled.iter().map(|&i| pos(i)).collect();
        let p_unlabeled_rows = pools.p_unlabeled.iter().map(|&i| pos(i)).collect();
        (
            ids,
            DiscBatch {
                labeled_rows,
                labeled_classes,
                p_labeled_rows,
                p_unlabeled_rows,
            },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscLosses {
    pub sup: f64,
    pub unsup: f64,
    pub total: f64,
}

/// `J_D` and its gradient with respect to the logits.
pub fn disc_objective(acts: &DiscActivations, batch: &DiscBatch, alpha: f64) -> Result<(DiscLosses, DenseMatrix)> {
    let sup = disc_sup_loss(acts, &batch.labeled_rows, &batch.labeled_classes)?;
    let unsup = disc_unsup_loss(acts, &batch.p_labeled_rows, &batch.p_unlabeled_rows)?;
    let logits = &acts.logits;
    let mut d = DenseMatrix::zeros(logits.rows(), logits.cols());

    let mut probs = vec![0.0; logits.cols()];
    let softmax_of = |r: usize, buf: &mut Vec<f64>| {
        buf.copy_from_slice(logits.row(r));
        softmax_in_place(buf);
    };

    let w = alpha / batch.labeled_rows.len() as f64;
    for (&r, &y) in batch.labeled_rows.iter().zip(&batch.labeled_classes) {
        softmax_of(r, &mut probs);
        let row = d.row_mut(r);
        for (k, p) in probs.iter().enumerate() {
            row[k] += w * (p - if k == y { 1.0 } else { 0.0 });
        }
    }
    // d ln D / d l_k = p_k (1 - D);  d ln(1 - D) / d l_k = -p_k D
    let w = 1.0 / batch.p_labeled_rows.len() as f64;
    for &r in &batch.p_labeled_rows {
        softmax_of(r, &mut probs);
        let one_minus_d = sigmoid(-log_sum_exp(logits.row(r)));
        for (o, p) in d.row_mut(r).iter_mut().zip(&probs) {
            *o -= w * p * one_minus_d;
        }
    }
    let w = 1.0 / batch.p_unlabeled_rows.len() as f64;
    for &r in &batch.p_unlabeled_rows {
        softmax_of(r, &mut probs);
        let dprob = acts.labeled_prob[r];
        for (o, p) in d.row_mut(r).iter_mut().zip(&probs) {
            *o += w * p * dprob;
        }
    }
    Ok((
        DiscLosses {
            sup,
            unsup,
            total: disc_total_loss(sup, unsup, alpha),
        },
        d,
    ))
}

#[derive(Debug, Clone)]
pub struct DiscGrads {
    /// Same order as [`DiscParams::tensors`].
    pub params: Vec<DenseMatrix>,
    /// Gradient with respect to the input representations.
    pub input: DenseMatrix,
}

/// Backpropagates a logit gradient and an optional gradient at the
/// feature-matching tap through the network.
pub fn disc_backward(
    acts: &DiscActivations,
    params: &DiscParams,
    d_logits: &DenseMatrix,
    d_tap: Option<&DenseMatrix>,
) -> Result<DiscGrads> {
    let slope = params.leaky_slope;
    let g_wc = acts.hidden2.t_matmul(d_logits)?;
    let g_bc = d_logits.column_sums();
    let mut d_h2 = d_logits.matmul_t(&params.w_c)?;
    if let Some(t) = d_tap {
        d_h2.add_assign(t)?;
    }
    d_h2.hadamard_assign(&acts.mask2)?;
    d_h2.hadamard_assign(&leaky_relu_mask(&acts.pre2, slope))?;
    let g_wb = acts.hidden1.t_matmul(&d_h2)?;
    let g_bb = d_h2.column_sums();
    let mut d_h1 = d_h2.matmul_t(&params.w_b)?;
    d_h1.hadamard_assign(&acts.mask1)?;
    d_h1.hadamard_assign(&leaky_relu_mask(&acts.pre1, slope))?;
    let g_wa = acts.input.t_matmul(&d_h1)?;
    let g_ba = d_h1.column_sums();
    let input = d_h1.matmul_t(&params.w_a)?;
    Ok(DiscGrads {
        params: vec![g_wa, g_ba, g_wb, g_bb, g_wc, g_bc],
        input,
    })
}

/// Squared distance between the mean tap activations of the two pools, and
/// its gradient with respect to the tap rows.
pub fn feature_matching_term(
    tap: &DenseMatrix,
    p_labeled_rows: &[usize],
    p_unlabeled_rows: &[usize],
) -> Result<(f64, DenseMatrix)> {
    let mean_pos = tap.mean_of_rows(p_labeled_rows).map_err(|_| Error::Empty("p-labeled pool"))?;
    let mean_neg = tap.mean_of_rows(p_unlabeled_rows).map_err(|_| Error::Empty("p-unlabeled pool"))?;
    let mut diff = mean_pos;
    diff.scaled_add_assign(-1.0, &mean_neg)?;
    let term = diff.frobenius_sq();
    let mut grad = DenseMatrix::zeros(tap.rows(), tap.cols());
    let wp = 2.0 / p_labeled_rows.len() as f64;
    for &r in p_labeled_rows {
        for (g, d) in grad.row_mut(r).iter_mut().zip(diff.as_slice()) {
            *g += wp * d;
        }
    }
    let wn = 2.0 / p_unlabeled_rows.len() as f64;
    for &r in p_unlabeled_rows {
        for (g, d) in grad.row_mut(r).iter_mut().zip(diff.as_slice()) {
            *g -= wn * d;
        }
    }
    Ok((term, grad))
}

/// Feature-matching term evaluated on representations through the frozen,
/// dropout-free discriminator, with its gradient per representation row.
pub fn feature_matching_representation_grad(
    reps: &DenseMatrix,
    params: &DiscParams,
    p_labeled_rows: &[usize],
    p_unlabeled_rows: &[usize],
) -> Result<(f64, DenseMatrix)> {
    let acts = disc_forward(reps, params, false, &mut RngStream::new(0))?;
    let (term, d_tap) = feature_matching_term(&acts.hidden2, p_labeled_rows, p_unlabeled_rows)?;
    let zero_logits = DenseMatrix::zeros(acts.logits.rows(), acts.logits.cols());
    let grads = disc_backward(&acts, params, &zero_logits, Some(&d_tap))?;
    Ok((term, grads.input))
}

/// `-mean_rows ln D` through the frozen, dropout-free discriminator, with its
/// gradient per representation row.
pub fn log_likelihood_representation_grad(
    reps: &DenseMatrix,
    params: &DiscParams,
    rows: &[usize],
) -> Result<(f64, DenseMatrix)> {
    nonempty(rows, "pool")?;
    let acts = disc_forward(reps, params, false, &mut RngStream::new(0))?;
    let w = 1.0 / rows.len() as f64;
    let mut term = 0.0;
    let mut d_logits = DenseMatrix::zeros(acts.logits.rows(), acts.logits.cols());
    let mut probs = vec![0.0; acts.logits.cols()];
    for &r in rows {
        let l = acts.logits.row(r);
        term -= w * log_labeled_probabilities(l).0;
        probs.copy_from_slice(l);
        softmax_in_place(&mut probs);
        let one_minus_d = sigmoid(-log_sum_exp(l));
        for (o, p) in d_logits.row_mut(r).iter_mut().zip(&probs) {
            *o -= w * p * one_minus_d;
        }
    }
    let grads = disc_backward(&acts, params, &d_logits, None)?;
    Ok((term, grads.input))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DEpochOutcome {
    pub losses: DiscLosses,
}

/// One discriminator update on the current pools. `reps` are the embedder's
/// hidden rows for every node (`N x H`) and are treated as constants.
pub fn train_d_epoch(
    reps: &DenseMatrix,
    pools: &PoolState,
    labels: &[usize],
    params: &mut DiscParams,
    alpha: f64,
    rng: &mut RngStream,
) -> Result<DEpochOutcome> {
    let (ids, batch) = DiscBatch::from_pools(pools, labels);
    let batch_reps = reps.select_rows(&ids);
    let acts = disc_forward(&batch_reps, params, true, rng)?;
    let (losses, d_logits) = disc_objective(&acts, &batch, alpha)?;
    let grads = disc_backward(&acts, params, &d_logits, None)?;
    params.apply_step(&grads)?;
    Ok(DEpochOutcome { losses })
}
