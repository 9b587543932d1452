//! Stacked hop layers with a linear classification head, softmax
//! cross-entropy, full-batch gradient descent and finite-difference checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{hop_backward, hop_forward, Activation, Aggregation, HopOperators, LayerCache, LayerParams};
use crate::matrix::RealMatrix;
use crate::paths::DEFAULT_ENUMERATION_CAP;
use crate::reduce::ReductionKind;
use crate::tensor::Semantics;

/// Where a model's layer operators come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorSource {
    /// MixHop: adjacency powers `A^L` (optionally of the normalized adjacency).
    AdjPowers,
    /// T-Hop: depth slices of the reduced tensors `T̂^L`.
    ReducedTensor,
}

fn default_depth() -> usize {
    1
}
fn default_reduction() -> ReductionKind {
    ReductionKind::Pca
}
fn default_semantics() -> Semantics {
    Semantics::Walk
}
fn default_hidden() -> Vec<usize> {
    vec![16]
}
fn default_learning_rate() -> f64 {
    0.05
}
fn default_epochs() -> usize {
    200
}
fn default_cap() -> usize {
    DEFAULT_ENUMERATION_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub source: OperatorSource,
    /// Ordered power set `P`.
    pub powers: Vec<u32>,
    /// Reduced depth `d` (T-Hop only).
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_reduction")]
    pub reduction: ReductionKind,
    #[serde(default = "default_semantics")]
    pub semantics: Semantics,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub aggregation: Aggregation,
    /// Per-power block width `ŝ` of each hidden layer.
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Seed for random-projection reductions.
    #[serde(default)]
    pub projection_seed: u64,
    /// Use powers of `D̃^{-1/2}(A+I)D̃^{-1/2}` instead of `A` (MixHop only).
    #[serde(default)]
    pub normalize: bool,
    #[serde(default = "default_cap")]
    pub enumeration_cap: usize,
}

impl ModelConfig {
    pub fn mixhop(name: impl Into<String>, powers: Vec<u32>) -> Self {
        Self {
            name: name.into(),
            source: OperatorSource::AdjPowers,
            powers,
            depth: 1,
            reduction: ReductionKind::Sum,
            semantics: Semantics::Walk,
            activation: Activation::default(),
            aggregation: Aggregation::default(),
            hidden: default_hidden(),
            learning_rate: default_learning_rate(),
            epochs: default_epochs(),
            seed: 0,
            projection_seed: 0,
            normalize: false,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    pub fn thop(name: impl Into<String>, powers: Vec<u32>, reduction: ReductionKind, depth: usize) -> Self {
        Self { source: OperatorSource::ReducedTensor, reduction, depth, ..Self::mixhop(name, powers) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.powers.is_empty() {
            return Err(Error::Invalid("power set P is empty".into()));
        }
        let mut sorted = self.powers.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.powers.len() {
            return Err(Error::Invalid("power set P has duplicates".into()));
        }
        if self.hidden.is_empty() {
            return Err(Error::Invalid("at least one hidden layer is required".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Invalid("layer widths must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Invalid("learning rate must be finite and nonnegative".into()));
        }
        if self.source == OperatorSource::ReducedTensor {
            if self.depth == 0 {
                return Err(Error::Dimension("depth d must be at least 1".into()));
            }
            if self.reduction == ReductionKind::Sum && self.depth != 1 {
                return Err(Error::Dimension("sum reduction forces d = 1".into()));
            }
            if self.normalize {
                return Err(Error::Invalid("normalize applies to adjacency-power operators only".into()));
            }
        }
        Ok(())
    }
}

/// Final linear layer `logits = H W + 1 bᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    pub weight: RealMatrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub activation: Activation,
    pub aggregation: Aggregation,
    pub layers: Vec<LayerParams>,
    pub head: LinearHead,
}

/// Uniform Glorot initialization: `U[-√(6/(fan_in+fan_out)), +√(…)]`.
fn glorot(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> RealMatrix {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    RealMatrix::from_fn(fan_in, fan_out, |_, _| rng.random_range(-bound..=bound))
}

impl Model {
    /// Seeded initialization. Matrices are drawn in order: each hidden layer's
    /// `W_L` in the order of `P`, then the head weight; biases start at zero.
    pub fn init(config: &ModelConfig, in_features: usize, classes: usize) -> Result<Self> {
        config.validate()?;
        if classes < 2 {
            return Err(Error::Invalid(format!("need at least 2 classes, got {classes}")));
        }
        if in_features == 0 {
            return Err(Error::Invalid("feature width must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut width = in_features;
        let mut layers = Vec::with_capacity(config.hidden.len());
        for &block in &config.hidden {
            let weights = config.powers.iter().map(|_| glorot(&mut rng, width, block)).collect();
            layers.push(LayerParams::new(config.powers.clone(), weights)?);
            width = config.powers.len() * block;
        }
        let head = LinearHead { weight: glorot(&mut rng, width, classes), bias: vec![0.0; classes] };
        Ok(Self { activation: config.activation, aggregation: config.aggregation, layers, head })
    }

    pub fn classes(&self) -> usize {
        self.head.bias.len()
    }

    pub fn forward(&self, ops: &HopOperators, features: &RealMatrix) -> Result<ForwardPass> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = features.clone();
        for layer in &self.layers {
            let (out, cache) = hop_forward(&h, ops, layer, self.activation, self.aggregation)?;
            caches.push(cache);
            h = out;
        }
        let mut logits = h.matmul(&self.head.weight)?;
        for i in 0..logits.rows() {
            for (c, b) in self.head.bias.iter().enumerate() {
                logits[(i, c)] += b;
            }
        }
        Ok(ForwardPass { logits, caches, head_input: h })
    }

    pub fn backward(&self, ops: &HopOperators, pass: &ForwardPass, grad_logits: &RealMatrix) -> Result<Gradients> {
        if grad_logits.shape() != pass.logits.shape() {
            return Err(Error::Shape("logit gradient shape differs from logits".into()));
        }
        let head_weight = pass.head_input.t_matmul(grad_logits)?;
        let head_bias = (0..grad_logits.cols())
            .map(|c| (0..grad_logits.rows()).map(|i| grad_logits.get(i, c)).sum())
            .collect();
        let mut upstream = grad_logits.matmul_t(&self.head.weight)?;
        let mut layers = vec![Vec::new(); self.layers.len()];
        for (idx, (layer, cache)) in self.layers.iter().zip(&pass.caches).enumerate().rev() {
            let g = hop_backward(cache, ops, layer, self.activation, self.aggregation, &upstream)?;
            layers[idx] = g.weights;
            upstream = g.input;
        }
        Ok(Gradients { layers, head_weight, head_bias })
    }

    /// In-place update `θ ← θ − lr · ∇θ`.
    pub fn apply_gradients(&mut self, grads: &Gradients, lr: f64) {
        for (p, g) in self.parameters_mut().into_iter().zip(grads.flatten()) {
            *p -= lr * g;
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().flat_map(|l| &l.weights).map(|w| w.as_slice().len()).sum::<usize>()
            + self.head.weight.as_slice().len()
            + self.head.bias.len()
    }

    /// Mutable references in the canonical order (hidden layers, head
    /// weight, head bias), matching [`Gradients::flatten`].
    pub fn parameters_mut(&mut self) -> Vec<&mut f64> {
        let mut out: Vec<&mut f64> = Vec::with_capacity(self.parameter_count());
        for layer in &mut self.layers {
            for w in &mut layer.weights {
                out.extend(w.as_mut_slice().iter_mut());
            }
        }
        out.extend(self.head.weight.as_mut_slice().iter_mut());
        out.extend(self.head.bias.iter_mut());
        out
    }

    /// Human-readable group names with their sizes, in canonical order.
    pub fn parameter_groups(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            for (p, w) in layer.powers.iter().zip(&layer.weights) {
                out.push((format!("layer{l}.W[L={p}]"), w.as_slice().len()));
            }
        }
        out.push(("head.W".into(), self.head.weight.as_slice().len()));
        out.push(("head.b".into(), self.head.bias.len()));
        out
    }

    /// Convenience: forward, loss and gradients in one call.
    pub fn loss_and_gradients(
        &self,
        ops: &HopOperators,
        features: &RealMatrix,
        labels: &[usize],
        mask: &[bool],
    ) -> Result<(f64, ForwardPass, Gradients)> {
        let pass = self.forward(ops, features)?;
        let (loss, grad) = softmax_cross_entropy(&pass.logits, labels, mask)?;
        let grads = self.backward(ops, &pass, &grad)?;
        Ok((loss, pass, grads))
    }
}

/// Activations cached by [`Model::forward`].
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub logits: RealMatrix,
    pub caches: Vec<LayerCache>,
    pub head_input: RealMatrix,
}

impl ForwardPass {
    pub fn min_abs_preactivation(&self) -> f64 {
        self.caches.iter().map(LayerCache::min_abs_preactivation).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Vec<RealMatrix>>,
    pub head_weight: RealMatrix,
    pub head_bias: Vec<f64>,
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for w in layer {
                out.extend_from_slice(w.as_slice());
            }
        }
        out.extend_from_slice(self.head_weight.as_slice());
        out.extend_from_slice(&self.head_bias);
        out
    }
}

/// Mean softmax cross-entropy over the masked rows and its gradient with
/// respect to the logits: `(softmax − onehot) / |mask|` on masked rows,
/// zero elsewhere.
pub fn softmax_cross_entropy(logits: &RealMatrix, labels: &[usize], mask: &[bool]) -> Result<(f64, RealMatrix)> {
    let (n, classes) = logits.shape();
    if labels.len() != n || mask.len() != n {
        return Err(Error::Shape(format!(
            "{n} logit rows, {} labels, {} mask entries",
            labels.len(),
            mask.len()
        )));
    }
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::Invalid("empty mask".into()));
    }
    let mut grad = RealMatrix::zeros(n, classes);
    let mut total = 0.0;
    for i in (0..n).filter(|&i| mask[i]) {
        let label = labels[i];
        if label >= classes {
            return Err(Error::Invalid(format!("label {label} out of range for {classes} classes")));
        }
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = row.iter().map(|&z| (z - max).exp()).sum();
        let log_norm = max + sum_exp.ln();
        total += log_norm - row[label];
        for c in 0..classes {
            let p = (row[c] - log_norm).exp();
            grad[(i, c)] = (p - f64::from(c == label)) / count as f64;
        }
    }
    Ok((total / count as f64, grad))
}

/// Arg-max class per row, lowest index on ties.
pub fn predict(logits: &RealMatrix) -> Vec<usize> {
    (0..logits.rows())
        .map(|i| {
            let row = logits.row(i);
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Exact fraction of masked rows whose prediction matches the label;
/// 0 for an empty mask.
pub fn accuracy(logits: &RealMatrix, labels: &[usize], mask: &[bool]) -> f64 {
    let preds = predict(logits);
    let total = mask.iter().filter(|&&m| m).count();
    if total == 0 {
        return 0.0;
    }
    let hits = (0..preds.len()).filter(|&i| mask[i] && preds[i] == labels[i]).count();
    hits as f64 / total as f64
}

/// Denominator floor for relative gradient errors.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct GroupError {
    pub name: String,
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub step: f64,
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
    pub groups: Vec<GroupError>,
    /// Smallest pre-activation magnitude at the checked point.
    pub min_abs_preactivation: f64,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error < tolerance
    }
}

/// Compare analytic gradients with central differences
/// `(L(θ + h) − L(θ − h)) / 2h` for every parameter.
///
/// The relative error for one parameter is
/// `|a − f| / max(|a|, |f|, RELATIVE_ERROR_FLOOR)`.
pub fn grad_check(
    model: &Model,
    ops: &HopOperators,
    features: &RealMatrix,
    labels: &[usize],
    mask: &[bool],
    step: f64,
) -> Result<GradCheckReport> {
    if !(1e-7..=1e-3).contains(&step) {
        return Err(Error::Invalid(format!("finite-difference step {step} outside [1e-7, 1e-3]")));
    }
    let (_, pass, grads) = model.loss_and_gradients(ops, features, labels, mask)?;
    let analytic = grads.flatten();
    let mut probe = model.clone();
    let loss_at = |m: &Model| -> Result<f64> {
        let pass = m.forward(ops, features)?;
        Ok(softmax_cross_entropy(&pass.logits, labels, mask)?.0)
    };

    let mut numeric = Vec::with_capacity(analytic.len());
    for idx in 0..analytic.len() {
        let original = *probe.parameters_mut()[idx];
        *probe.parameters_mut()[idx] = original + step;
        let plus = loss_at(&probe)?;
        *probe.parameters_mut()[idx] = original - step;
        let minus = loss_at(&probe)?;
        *probe.parameters_mut()[idx] = original;
        numeric.push((plus - minus) / (2.0 * step));
    }

    let mut groups = Vec::new();
    let mut offset = 0;
    for (name, size) in model.parameter_groups() {
        let mut rel: f64 = 0.0;
        let mut abs: f64 = 0.0;
        for idx in offset..offset + size {
            let (a, f) = (analytic[idx], numeric[idx]);
            let diff = (a - f).abs();
            abs = abs.max(diff);
            rel = rel.max(diff / a.abs().max(f.abs()).max(RELATIVE_ERROR_FLOOR));
        }
        groups.push(GroupError { name, max_relative_error: rel, max_absolute_error: abs });
        offset += size;
    }
    Ok(GradCheckReport {
        step,
        max_relative_error: groups.iter().map(|g| g.max_relative_error).fold(0.0, f64::max),
        max_absolute_error: groups.iter().map(|g| g.max_absolute_error).fold(0.0, f64::max),
        groups,
        min_abs_preactivation: pass.min_abs_preactivation(),
    })
}

/// Model checkpoint: configuration plus every weight matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub model: Model,
}
