//! Multi-layer graph convolutional network with hand-derived reverse-mode
//! gradients, inverted dropout, L2 regularization, and Adam.
//!
//! The forward rule per layer is `H_{l+1} = relu(A_hat · dropout(H_l) · W_l)`,
//! with the final layer replacing relu by a row-wise softmax. The input
//! product `dropout(H_l) · W_l` is taken first so sparse feature matrices
//! stay cheap.

mod checkpoint;

pub use checkpoint::{load_checkpoint, save_checkpoint};

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::SplitState;
use crate::error::{Error, Result};
use crate::graph::{spmm, DenseMatrix, SparseMatrix};
use crate::seed::{derive_seed, TAG_EPOCH};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    layer_dims: Vec<usize>,
    weights: Vec<DenseMatrix>,
    adam_m: Vec<DenseMatrix>,
    adam_v: Vec<DenseMatrix>,
    adam_t: u64,
    dropout_rate: f64,
    l2_weight: f64,
    l2_first_layer_only: bool,
}

/// Everything the backward pass needs from a forward pass, plus the output
/// probabilities.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    training: bool,
    /// Post-dropout input of each layer (`P_l`).
    layer_inputs: Vec<DenseMatrix>,
    /// Dropout masks (`0` or `1/(1-p)`); `None` means identity.
    dropout_masks: Vec<Option<DenseMatrix>>,
    /// Pre-activations `S_l = A_hat (P_l W_l)`.
    pre_activations: Vec<DenseMatrix>,
    /// Post-relu hidden activations `H_1 .. H_{L-1}`.
    hidden: Vec<DenseMatrix>,
    /// Row-stochastic output `Z`.
    probabilities: DenseMatrix,
}

impl ForwardTrace {
    pub fn probabilities(&self) -> &DenseMatrix {
        &self.probabilities
    }

    /// Activation of the last hidden layer; `None` for single-layer models.
    pub fn last_hidden(&self) -> Option<&DenseMatrix> {
        self.hidden.last()
    }

    pub fn is_training(&self) -> bool {
        self.training
    }
}

fn softmax_rows(s: &DenseMatrix) -> Result<DenseMatrix> {
    let mut out = s.clone();
    for i in 0..out.n_rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    if !out.is_finite() {
        return Err(Error::Numeric("softmax produced non-finite values".into()));
    }
    Ok(out)
}

/// Argmax with ties broken by the lowest index.
pub fn argmax_row(row: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = row[0];
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > best_val {
            best = j;
            best_val = v;
        }
    }
    best
}

impl GcnModel {
    /// Glorot-uniform initialization in `±sqrt(6 / (fan_in + fan_out))`.
    pub fn init(
        layer_dims: &[usize],
        dropout_rate: f64,
        l2_weight: f64,
        seed: u64,
    ) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::Config(format!(
                "need at least input and output dims, got {:?}",
                layer_dims
            )));
        }
        if layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::Config(format!("zero-sized layer in {:?}", layer_dims)));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::Config(format!(
                "dropout rate {} outside [0, 1)",
                dropout_rate
            )));
        }
        if l2_weight < 0.0 || !l2_weight.is_finite() {
            return Err(Error::Config(format!("bad L2 weight {}", l2_weight)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut adam_m = Vec::new();
        let mut adam_v = Vec::new();
        for w in layer_dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut values = Vec::with_capacity(fan_in * fan_out);
            for _ in 0..fan_in * fan_out {
                values.push((rand::Rng::random::<f64>(&mut rng) * 2.0 - 1.0) * limit);
            }
            weights.push(DenseMatrix::from_vec(fan_in, fan_out, values)?);
            adam_m.push(DenseMatrix::zeros(fan_in, fan_out));
            adam_v.push(DenseMatrix::zeros(fan_in, fan_out));
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights,
            adam_m,
            adam_v,
            adam_t: 0,
            dropout_rate,
            l2_weight,
            l2_first_layer_only: true,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[DenseMatrix] {
        &self.weights
    }

    pub fn adam_t(&self) -> u64 {
        self.adam_t
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn l2_weight(&self) -> f64 {
        self.l2_weight
    }

    pub fn l2_first_layer_only(&self) -> bool {
        self.l2_first_layer_only
    }

    /// Apply L2 to every layer instead of only the first.
    pub fn set_l2_all_layers(&mut self) {
        self.l2_first_layer_only = false;
    }

    /// Replace one weight matrix (shape-checked). Moments are left alone.
    pub fn set_weight(&mut self, layer: usize, weight: DenseMatrix) -> Result<()> {
        let current = self.weights.get(layer).ok_or_else(|| {
            Error::Validation(format!("layer {} out of range", layer))
        })?;
        if weight.n_rows() != current.n_rows() || weight.n_cols() != current.n_cols() {
            return Err(Error::Validation(format!(
                "weight {} must be {}x{}",
                layer,
                current.n_rows(),
                current.n_cols()
            )));
        }
        self.weights[layer] = weight;
        Ok(())
    }

    /// Nudge a single weight entry (used by finite-difference checks).
    pub fn perturb_weight(&mut self, layer: usize, row: usize, col: usize, delta: f64) {
        let w = &mut self.weights[layer];
        let v = w.get(row, col);
        w.set(row, col, v + delta);
    }

    pub(crate) fn from_parts(
        layer_dims: Vec<usize>,
        weights: Vec<DenseMatrix>,
        adam_m: Vec<DenseMatrix>,
        adam_v: Vec<DenseMatrix>,
        adam_t: u64,
        dropout_rate: f64,
        l2_weight: f64,
        l2_first_layer_only: bool,
    ) -> Self {
        Self {
            layer_dims,
            weights,
            adam_m,
            adam_v,
            adam_t,
            dropout_rate,
            l2_weight,
            l2_first_layer_only,
        }
    }

    pub(crate) fn adam_moments(&self) -> (&[DenseMatrix], &[DenseMatrix]) {
        (&self.adam_m, &self.adam_v)
    }

    /// Forward pass. Dropout is active only when `training` and draws its
    /// masks row-major from a generator seeded with `seed`, so a fixed seed
    /// reproduces the pass exactly.
    pub fn forward(
        &self,
        x: &DenseMatrix,
        a_hat: &SparseMatrix,
        training: bool,
        seed: u64,
    ) -> Result<ForwardTrace> {
        if x.n_cols() != self.layer_dims[0] {
            return Err(Error::Dimension(format!(
                "features have {} columns, model expects {}",
                x.n_cols(),
                self.layer_dims[0]
            )));
        }
        if !a_hat.is_square() || a_hat.n_rows() != x.n_rows() {
            return Err(Error::Dimension(format!(
                "operator is {}x{}, features have {} rows",
                a_hat.n_rows(),
                a_hat.n_cols(),
                x.n_rows()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let drop = training && self.dropout_rate > 0.0;
        let scale = 1.0 / (1.0 - self.dropout_rate);

        let n_layers = self.weights.len();
        let mut layer_inputs = Vec::with_capacity(n_layers);
        let mut dropout_masks = Vec::with_capacity(n_layers);
        let mut pre_activations = Vec::with_capacity(n_layers);
        let mut hidden = Vec::with_capacity(n_layers.saturating_sub(1));
        let mut current = x.clone();

        for (l, w) in self.weights.iter().enumerate() {
            let (dropped, mask) = if drop {
                let mut mask = DenseMatrix::zeros(current.n_rows(), current.n_cols());
                for v in mask.values_mut() {
                    *v = if rand::Rng::random::<f64>(&mut rng) < self.dropout_rate {
                        0.0
                    } else {
                        scale
                    };
                }
                let mut dropped = current.clone();
                for (d, m) in dropped.values_mut().iter_mut().zip(mask.values()) {
                    *d *= m;
                }
                (dropped, Some(mask))
            } else {
                (current.clone(), None)
            };
            let s = spmm(a_hat, &dropped.matmul(w)?)?;
            if !s.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite pre-activation at layer {}",
                    l
                )));
            }
            layer_inputs.push(dropped);
            dropout_masks.push(mask);
            if l + 1 < n_layers {
                let h = s.map(|v| v.max(0.0));
                pre_activations.push(s);
                current = h.clone();
                hidden.push(h);
            } else {
                let z = softmax_rows(&s)?;
                pre_activations.push(s);
                current = z;
            }
        }

        Ok(ForwardTrace {
            training,
            layer_inputs,
            dropout_masks,
            pre_activations,
            hidden,
            probabilities: current,
        })
    }

    /// Mean cross-entropy over the labeled set (virtual labels included) plus
    /// the L2 penalty `l2/2 · ‖W‖²` on the first layer (or all layers when
    /// configured).
    pub fn loss(&self, trace: &ForwardTrace, split: &SplitState) -> Result<f64> {
        if split.labeled().is_empty() {
            return Err(Error::Config("loss needs a non-empty labeled set".into()));
        }
        let z = &trace.probabilities;
        let mut total = 0.0;
        for (&node, &label) in split.assigned_labels() {
            if node >= z.n_rows() || label >= z.n_cols() {
                return Err(Error::Validation(format!(
                    "labeled node {} / class {} outside {}x{} output",
                    node,
                    label,
                    z.n_rows(),
                    z.n_cols()
                )));
            }
            total -= z.get(node, label).ln();
        }
        let mut loss = total / split.labeled().len() as f64;
        for (l, w) in self.weights.iter().enumerate() {
            if l > 0 && self.l2_first_layer_only {
                break;
            }
            let sq: f64 = w.values().iter().map(|v| v * v).sum();
            loss += 0.5 * self.l2_weight * sq;
        }
        if !loss.is_finite() {
            return Err(Error::Numeric("non-finite loss".into()));
        }
        Ok(loss)
    }

    /// Exact gradients of [`GcnModel::loss`] with respect to every weight
    /// matrix. The output delta `(Z - onehot) / |L|` lives on labeled rows
    /// only and is pulled back through the symmetric operator, the dropout
    /// masks, and the relu gates.
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        split: &SplitState,
        a_hat: &SparseMatrix,
    ) -> Result<Vec<DenseMatrix>> {
        if !trace.training {
            return Err(Error::Validation(
                "backward needs a trace recorded with training = true".into(),
            ));
        }
        if trace.layer_inputs.len() != self.weights.len() {
            return Err(Error::Validation(format!(
                "trace has {} layers, model has {}",
                trace.layer_inputs.len(),
                self.weights.len()
            )));
        }
        for (l, (p, w)) in trace.layer_inputs.iter().zip(&self.weights).enumerate() {
            if p.n_cols() != w.n_rows() {
                return Err(Error::Validation(format!(
                    "trace layer {} input width {} does not match weight rows {}",
                    l,
                    p.n_cols(),
                    w.n_rows()
                )));
            }
        }
        if split.labeled().is_empty() {
            return Err(Error::Config("backward needs a non-empty labeled set".into()));
        }

        let z = &trace.probabilities;
        let n_labeled = split.labeled().len() as f64;
        let mut delta = DenseMatrix::zeros(z.n_rows(), z.n_cols());
        for (&node, &label) in split.assigned_labels() {
            for j in 0..z.n_cols() {
                let g = (z.get(node, j) - if j == label { 1.0 } else { 0.0 }) / n_labeled;
                delta.set(node, j, g);
            }
        }

        let n_layers = self.weights.len();
        let mut grads: Vec<Option<DenseMatrix>> = vec![None; n_layers];
        for l in (0..n_layers).rev() {
            // A_hat is symmetric, so pulling the delta back through it is
            // another forward product.
            let t = spmm(a_hat, &delta)?;
            let mut grad = trace.layer_inputs[l].matmul_at_b(&t)?;
            if l == 0 || !self.l2_first_layer_only {
                for (g, w) in grad.values_mut().iter_mut().zip(self.weights[l].values()) {
                    *g += self.l2_weight * w;
                }
            }
            if l > 0 {
                let mut d_input = t.matmul_a_bt(&self.weights[l])?;
                if let Some(mask) = &trace.dropout_masks[l] {
                    for (d, m) in d_input.values_mut().iter_mut().zip(mask.values()) {
                        *d *= m;
                    }
                }
                let gate = &trace.pre_activations[l - 1];
                for (d, s) in d_input.values_mut().iter_mut().zip(gate.values()) {
                    if *s <= 0.0 {
                        *d = 0.0;
                    }
                }
                delta = d_input;
            }
            grads[l] = Some(grad);
        }
        Ok(grads.into_iter().map(Option::unwrap).collect())
    }

    /// One Adam update with bias correction.
    pub fn adam_step(&mut self, grads: &[DenseMatrix], learning_rate: f64) -> Result<()> {
        if grads.len() != self.weights.len() {
            return Err(Error::Validation(format!(
                "{} gradients for {} layers",
                grads.len(),
                self.weights.len()
            )));
        }
        for (g, w) in grads.iter().zip(&self.weights) {
            if g.n_rows() != w.n_rows() || g.n_cols() != w.n_cols() {
                return Err(Error::Validation("gradient shape mismatch".into()));
            }
        }
        self.adam_t += 1;
        let t = self.adam_t as i32;
        let bias1 = 1.0 - ADAM_BETA1.powi(t);
        let bias2 = 1.0 - ADAM_BETA2.powi(t);
        for l in 0..self.weights.len() {
            let m = self.adam_m[l].values_mut();
            let v = self.adam_v[l].values_mut();
            let w = self.weights[l].values_mut();
            let g = grads[l].values();
            for i in 0..g.len() {
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                w[i] -= learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
            }
            if !self.weights[l].is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite weight after Adam step at layer {}",
                    l
                )));
            }
        }
        Ok(())
    }

    /// Full-batch training: `n_epochs` iterations of forward, backward, Adam.
    /// Dropout masks come from a per-epoch stream derived from `seed`.
    pub fn train_epochs(
        &mut self,
        x: &DenseMatrix,
        a_hat: &SparseMatrix,
        split: &SplitState,
        n_epochs: usize,
        learning_rate: f64,
        seed: u64,
    ) -> Result<()> {
        for epoch in 0..n_epochs {
            let epoch_seed = derive_seed(seed, TAG_EPOCH, epoch as u64);
            let trace = self.forward(x, a_hat, true, epoch_seed)?;
            let grads = self.backward(&trace, split, a_hat)?;
            self.adam_step(&grads, learning_rate)?;
        }
        Ok(())
    }

    /// Dropout-free forward plus per-row argmax (ties to the lowest class).
    pub fn predict(
        &self,
        x: &DenseMatrix,
        a_hat: &SparseMatrix,
    ) -> Result<(DenseMatrix, Vec<usize>)> {
        let trace = self.forward(x, a_hat, false, 0)?;
        let z = trace.probabilities;
        let labels = (0..z.n_rows()).map(|i| argmax_row(z.row(i))).collect();
        Ok((z, labels))
    }
}

/// Fraction of `eval_set` nodes whose prediction matches the ground truth.
pub fn accuracy(
    predicted: &[usize],
    ground_truth: &[usize],
    eval_set: &BTreeSet<usize>,
) -> Result<f64> {
    if eval_set.is_empty() {
        return Err(Error::Config("accuracy needs a non-empty eval set".into()));
    }
    if predicted.len() != ground_truth.len() {
        return Err(Error::Validation(format!(
            "{} predictions for {} labels",
            predicted.len(),
            ground_truth.len()
        )));
    }
    let mut correct = 0usize;
    for &node in eval_set {
        if node >= predicted.len() {
            return Err(Error::Validation(format!(
                "eval node {} out of range",
                node
            )));
        }
        if predicted[node] == ground_truth[node] {
            correct += 1;
        }
    }
    Ok(correct as f64 / eval_set.len() as f64)
}
