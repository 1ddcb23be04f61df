//! Two-layer GCN embedder with hand-derived gradients.
//!
//! ```text
//! hidden = ReLU(Â · dropout(X) · W0)
//! probs  = softmax(Â · dropout(hidden) · W1)
//! ```
//!
//! `hidden` is the node representation handed to the discriminator; `probs`
//! feed pool tuning and prediction.

use crate::error::{Error, Result};
use crate::graph_data::NormalizedAdjacency;
use crate::numerics::{
    adam_step, dropout, glorot_uniform, relu, relu_mask, softmax_rows, sparse_dropout, AdamState,
    CsrMatrix, DenseMatrix, RngStream,
};

pub const DEFAULT_HIDDEN_WIDTH: usize = 16;
pub const DEFAULT_L2_LAMBDA: f64 = 5e-4;
pub const DEFAULT_DROPOUT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    /// `M x H` input weights; the only L2-regularized tensor.
    pub w0: DenseMatrix,
    /// `H x K` output weights.
    pub w1: DenseMatrix,
    pub adam: AdamState,
    pub l2_lambda: f64,
    pub dropout_rate: f64,
}

impl GcnParams {
    /// Glorot-uniform weights drawn from the `init-W0` / `init-W1` substreams
    /// of `rng`.
    pub fn init(
        num_features: usize,
        hidden_width: usize,
        num_classes: usize,
        learning_rate: f64,
        l2_lambda: f64,
        dropout_rate: f64,
        rng: &RngStream,
    ) -> Self {
        let w0 = glorot_uniform(num_features, hidden_width, &mut rng.substream("init-W0"));
        let w1 = glorot_uniform(hidden_width, num_classes, &mut rng.substream("init-W1"));
        let adam = AdamState::new(&[w0.shape(), w1.shape()], learning_rate);
        GcnParams {
            w0,
            w1,
            adam,
            l2_lambda,
            dropout_rate,
        }
    }

    pub fn hidden_width(&self) -> usize {
        self.w0.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.w1.cols()
    }

    pub fn weights(&self) -> [DenseMatrix; 2] {
        [self.w0.clone(), self.w1.clone()]
    }

    /// `l2_lambda * ||W0||^2`.
    pub fn l2_penalty(&self) -> f64 {
        self.l2_lambda * self.w0.frobenius_sq()
    }
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct GcnActivations {
    /// Features after input dropout.
    pub input: CsrMatrix,
    /// `Â · input · W0` before the ReLU.
    pub pre_hidden: DenseMatrix,
    /// Post-ReLU hidden layer, the node representation.
    pub hidden: DenseMatrix,
    /// Inverted-dropout mask applied to `hidden` on the way to layer two.
    pub hidden_mask: DenseMatrix,
    pub hidden_dropped: DenseMatrix,
    pub logits: DenseMatrix,
    pub probs: DenseMatrix,
}

pub fn gcn_forward(
    adj: &NormalizedAdjacency,
    features: &CsrMatrix,
    params: &GcnParams,
    training: bool,
    rng: &mut RngStream,
) -> Result<GcnActivations> {
    let a = adj.as_csr();
    if features.rows() != a.rows() || features.cols() != params.w0.rows() {
        return Err(Error::shape(
            "gcn_forward",
            format!(
                "adjacency {}x{}, features {}x{}, W0 {:?}",
                a.rows(),
                a.cols(),
                features.rows(),
                features.cols(),
                params.w0.shape()
            ),
        ));
    }
    if params.w1.rows() != params.w0.cols() {
        return Err(Error::shape(
            "gcn_forward",
            format!("W0 {:?} feeds W1 {:?}", params.w0.shape(), params.w1.shape()),
        ));
    }
    let input = sparse_dropout(features, params.dropout_rate, rng, training)?;
    let pre_hidden = a.spmm(&input.spmm(&params.w0)?)?;
    let hidden = relu(&pre_hidden);
    let (hidden_dropped, hidden_mask) = dropout(&hidden, params.dropout_rate, rng, training)?;
    let logits = a.spmm(&hidden_dropped.matmul(&params.w1)?)?;
    let probs = softmax_rows(&logits);
    Ok(GcnActivations {
        input,
        pre_hidden,
        hidden,
        hidden_mask,
        hidden_dropped,
        logits,
        probs,
    })
}

fn check_labeled(labeled: &[usize], labels: &[usize], n: usize) -> Result<()> {
    if labeled.is_empty() {
        return Err(Error::Empty("labeled set"));
    }
    if let Some(&bad) = labeled.iter().find(|&&l| l >= n || l >= labels.len()) {
        return Err(Error::InvalidArgument(format!("labeled node {bad} out of range")));
    }
    Ok(())
}

/// Summed cross-entropy `-Σ_l ln probs[l, y_l]` over the labeled nodes.
pub fn gcn_supervised_loss(acts: &GcnActivations, labeled: &[usize], labels: &[usize]) -> Result<f64> {
    check_labeled(labeled, labels, acts.probs.rows())?;
    Ok(labeled
        .iter()
        .map(|&l| -acts.probs.get(l, labels[l]).ln())
        .sum())
}

/// Generator objective: adversarial term plus supervised term, equally
/// weighted.
pub fn generator_loss(adversarial_term: f64, supervised_term: f64) -> f64 {
    adversarial_term + supervised_term
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnGrads {
    pub w0: DenseMatrix,
    pub w1: DenseMatrix,
}

/// Gradients of `J_GCN + l2_lambda ||W0||^2 + adversarial term` where the
/// adversarial term reaches the network only through `upstream_hidden`,
/// its gradient with respect to [`GcnActivations::hidden`].
pub fn gcn_backward(
    adj: &NormalizedAdjacency,
    acts: &GcnActivations,
    labeled: &[usize],
    labels: &[usize],
    upstream_hidden: Option<&DenseMatrix>,
    params: &GcnParams,
) -> Result<GcnGrads> {
    let n = acts.probs.rows();
    check_labeled(labeled, labels, n)?;
    if acts.hidden.shape() != (n, params.hidden_width())
        || acts.hidden_mask.shape() != acts.hidden.shape()
        || acts.probs.cols() != params.num_classes()
    {
        return Err(Error::shape(
            "gcn_backward",
            "activations do not match the parameter shapes",
        ));
    }
    let a = adj.as_csr();

    // softmax + cross-entropy: dL/dlogits = Z - Y on labeled rows
    let mut d_logits = DenseMatrix::zeros(n, params.num_classes());
    for &l in labeled {
        let row = d_logits.row_mut(l);
        row.copy_from_slice(acts.probs.row(l));
        row[labels[l]] -= 1.0;
    }

    // Â is symmetric, so Âᵀ · g = Â · g
    let d_hw = a.spmm(&d_logits)?;
    let w1 = acts.hidden_dropped.t_matmul(&d_hw)?;
    let mut d_hidden = d_hw.matmul_t(&params.w1)?;
    d_hidden.hadamard_assign(&acts.hidden_mask)?;
    if let Some(up) = upstream_hidden {
        d_hidden.add_assign(up).map_err(|_| {
            Error::shape("gcn_backward", format!("upstream gradient {:?}", up.shape()))
        })?;
    }
    d_hidden.hadamard_assign(&relu_mask(&acts.pre_hidden))?;
    let d_xw = a.spmm(&d_hidden)?;
    let mut w0 = acts.input.t_spmm(&d_xw)?;
    w0.scaled_add_assign(2.0 * params.l2_lambda, &params.w0)?;
    Ok(GcnGrads { w0, w1 })
}

/// Adversarial contribution to the generator objective: maps the hidden
/// representation to `(term, d term / d hidden)`.
pub type AdversarialTerm<'a> = dyn Fn(&DenseMatrix) -> Result<(f64, DenseMatrix)> + 'a;

#[derive(Debug, Clone)]
pub struct GEpochOutcome {
    pub supervised_loss: f64,
    pub adversarial_loss: f64,
    pub l2_penalty: f64,
    /// Post-update activations with dropout disabled.
    pub activations: GcnActivations,
}

impl GEpochOutcome {
    pub fn generator_loss(&self) -> f64 {
        generator_loss(self.adversarial_loss, self.supervised_loss)
    }
}

/// One full-graph forward, backward and Adam step of the embedder.
pub fn train_g_epoch(
    adj: &NormalizedAdjacency,
    features: &CsrMatrix,
    labeled: &[usize],
    labels: &[usize],
    params: &mut GcnParams,
    adversary: Option<&AdversarialTerm<'_>>,
    rng: &mut RngStream,
) -> Result<GEpochOutcome> {
    let acts = gcn_forward(adj, features, params, true, rng)?;
    let supervised_loss = gcn_supervised_loss(&acts, labeled, labels)?;
    let l2_penalty = params.l2_penalty();
    let (adversarial_loss, upstream) = match adversary {
        Some(f) => {
            let (term, grad) = f(&acts.hidden)?;
            (term, Some(grad))
        }
        None => (0.0, None),
    };
    let grads = gcn_backward(adj, &acts, labeled, labels, upstream.as_ref(), params)?;
    {
        let GcnParams { w0, w1, adam, .. } = params;
        adam_step(&mut [w0, w1], &[grads.w0, grads.w1], adam)?;
    }
    let activations = gcn_forward(adj, features, params, false, rng)?;
    Ok(GEpochOutcome {
        supervised_loss,
        adversarial_loss,
        l2_penalty,
        activations,
    })
}
