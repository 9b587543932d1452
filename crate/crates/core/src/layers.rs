//! MixHop and T-Hop graph-convolution layers with analytic backward passes.
//!
//! Both layers are instances of one computation. For every power `L` in the
//! index set `P`, a list of `n × n` operator slices `S_{L,1..d}` is applied
//! to the shared product `H · W_L`, passed through `σ`, and aggregated over
//! the slices; the per-power results are concatenated along columns in the
//! order of `P`. MixHop uses the single slice `A^L`; T-Hop uses the `d`
//! depth slices of the reduced tensor `T̂^L`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::reduce::ReducedTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Identity,
    Tanh,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative at pre-activation `x`. ReLU uses 0 at the kink.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }
}

/// Element-wise combination of the per-slice activations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    Sum,
    Max,
}

/// One weight matrix per power, `s_in × ŝ_out`, in the order of `powers`.
/// T-Hop shares each `W_L` across all depth slices of `T̂^L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub powers: Vec<u32>,
    pub weights: Vec<RealMatrix>,
}

impl LayerParams {
    pub fn new(powers: Vec<u32>, weights: Vec<RealMatrix>) -> Result<Self> {
        let p = Self { powers, weights };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.powers.is_empty() {
            return Err(Error::Invalid("power set is empty".into()));
        }
        if self.powers.len() != self.weights.len() {
            return Err(Error::Shape(format!(
                "{} powers but {} weight matrices",
                self.powers.len(),
                self.weights.len()
            )));
        }
        let mut seen = self.powers.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.powers.len() {
            return Err(Error::Invalid("duplicate power in P".into()));
        }
        let shape = self.weights[0].shape();
        if self.weights.iter().any(|w| w.shape() != shape) {
            return Err(Error::Shape("weight matrices differ in shape".into()));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.weights[0].rows()
    }

    /// `ŝ`, the width contributed by each power.
    pub fn block_width(&self) -> usize {
        self.weights[0].cols()
    }

    /// `|P| · ŝ`.
    pub fn output_width(&self) -> usize {
        self.powers.len() * self.block_width()
    }
}

/// Operator slices for every power in `P`, aligned with [`LayerParams::powers`].
#[derive(Debug, Clone, PartialEq)]
pub struct HopOperators {
    slices: Vec<Vec<RealMatrix>>,
}

impl HopOperators {
    /// One `n × n` operator per power (MixHop).
    pub fn single(ops: Vec<RealMatrix>) -> Result<Self> {
        Self::sliced(ops.into_iter().map(|m| vec![m]).collect())
    }

    /// The depth slices of each reduced tensor (T-Hop). All tensors must
    /// share `n` and `d`.
    pub fn from_reduced(tensors: &[ReducedTensor]) -> Result<Self> {
        Self::sliced(tensors.iter().map(ReducedTensor::slices).collect())
    }

    pub fn sliced(slices: Vec<Vec<RealMatrix>>) -> Result<Self> {
        let Some(first) = slices.first() else {
            return Err(Error::Invalid("no operators".into()));
        };
        let depth = first.len();
        if depth == 0 {
            return Err(Error::Dimension("operator depth d = 0".into()));
        }
        let n = first[0].rows();
        for group in &slices {
            if group.len() != depth {
                return Err(Error::Shape("operators differ in depth".into()));
            }
            if group.iter().any(|m| m.shape() != (n, n)) {
                return Err(Error::Shape(format!("operators must all be {n}x{n}")));
            }
        }
        Ok(Self { slices })
    }

    pub fn node_count(&self) -> usize {
        self.slices[0][0].rows()
    }

    pub fn depth(&self) -> usize {
        self.slices[0].len()
    }

    pub fn power_count(&self) -> usize {
        self.slices.len()
    }

    pub fn slices(&self) -> &[Vec<RealMatrix>] {
        &self.slices
    }

    /// Relabel nodes: every slice becomes `Π S Πᵀ`.
    pub fn permute(&self, perm: &[usize]) -> HopOperators {
        HopOperators {
            slices: self
                .slices
                .iter()
                .map(|g| g.iter().map(|m| m.permute_symmetric(perm)).collect())
                .collect(),
        }
    }
}

/// Values kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct LayerCache {
    input: RealMatrix,
    /// Pre-activations `S_k · H · W_L`, per power then slice.
    pre: Vec<Vec<RealMatrix>>,
}

impl LayerCache {
    pub fn input(&self) -> &RealMatrix {
        &self.input
    }

    /// Smallest `|z|` over all pre-activations; distance to the ReLU kink.
    pub fn min_abs_preactivation(&self) -> f64 {
        self.pre
            .iter()
            .flatten()
            .flat_map(|m| m.as_slice().iter())
            .fold(f64::INFINITY, |acc, z| acc.min(z.abs()))
    }
}

fn check_shapes(h: &RealMatrix, ops: &HopOperators, params: &LayerParams) -> Result<()> {
    params.validate()?;
    if ops.power_count() != params.powers.len() {
        return Err(Error::Shape(format!(
            "{} operator groups for {} powers",
            ops.power_count(),
            params.powers.len()
        )));
    }
    if h.rows() != ops.node_count() {
        return Err(Error::Shape(format!("features have {} rows, operators are {n}x{n}", h.rows(), n = ops.node_count())));
    }
    if h.cols() != params.input_width() {
        return Err(Error::Shape(format!("features have {} columns, weights expect {}", h.cols(), params.input_width())));
    }
    Ok(())
}

/// General hop layer; returns the `n × |P|ŝ` output and the cache.
pub fn hop_forward(
    h: &RealMatrix,
    ops: &HopOperators,
    params: &LayerParams,
    activation: Activation,
    aggregation: Aggregation,
) -> Result<(RealMatrix, LayerCache)> {
    check_shapes(h, ops, params)?;
    let mut blocks = Vec::with_capacity(params.powers.len());
    let mut pre = Vec::with_capacity(params.powers.len());
    for (slices, w) in ops.slices().iter().zip(&params.weights) {
        let hw = h.matmul(w)?;
        let zs = slices.iter().map(|s| s.matmul(&hw)).collect::<Result<Vec<_>>>()?;
        blocks.push(aggregate(&zs, activation, aggregation));
        pre.push(zs);
    }
    let out = RealMatrix::hconcat(&blocks)?;
    Ok((out, LayerCache { input: h.clone(), pre }))
}

fn aggregate(zs: &[RealMatrix], activation: Activation, aggregation: Aggregation) -> RealMatrix {
    let (rows, cols) = zs[0].shape();
    let mut out = RealMatrix::zeros(rows, cols);
    let d = zs.len() as f64;
    for (idx, o) in out.as_mut_slice().iter_mut().enumerate() {
        let mut values = zs.iter().map(|z| activation.apply(z.as_slice()[idx]));
        *o = match aggregation {
            Aggregation::Sum => values.sum(),
            // shifted mean: exact when every slice agrees
            Aggregation::Mean => {
                let first = values.next().expect("d >= 1");
                first + values.map(|v| v - first).sum::<f64>() / d
            }
            Aggregation::Max => {
                let first = values.next().expect("d >= 1");
                values.fold(first, f64::max)
            }
        };
    }
    out
}

/// `∥_{L∈P} σ(A^L H W_L)`.
pub fn mixhop_forward(h: &RealMatrix, ops: &[RealMatrix], params: &LayerParams, activation: Activation) -> Result<RealMatrix> {
    let ops = HopOperators::single(ops.to_vec())?;
    // a single slice makes every aggregation the identity
    Ok(hop_forward(h, &ops, params, activation, Aggregation::Mean)?.0)
}

/// `∥_{L∈P} ⊕_{k=1..d} σ(T̂^L_{:,:,k} H W_L)` with `W_L` shared over `k`.
pub fn thop_forward(
    h: &RealMatrix,
    ops: &[ReducedTensor],
    params: &LayerParams,
    activation: Activation,
    aggregation: Aggregation,
) -> Result<RealMatrix> {
    let ops = HopOperators::from_reduced(ops)?;
    Ok(hop_forward(h, &ops, params, activation, aggregation)?.0)
}

/// Gradients of a hop layer with respect to its weights and its input.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub weights: Vec<RealMatrix>,
    pub input: RealMatrix,
}

/// Backward pass through concatenation, aggregation, activation and both
/// matrix products. The shared `W_L` collects the sum of its slice
/// contributions: `∂W_L = Hᵀ Σ_k S_kᵀ ∂Z_k`.
pub fn hop_backward(
    cache: &LayerCache,
    ops: &HopOperators,
    params: &LayerParams,
    activation: Activation,
    aggregation: Aggregation,
    grad_out: &RealMatrix,
) -> Result<LayerGrads> {
    let width = params.block_width();
    if grad_out.shape() != (cache.input.rows(), params.output_width()) {
        return Err(Error::Shape(format!(
            "output gradient is {:?}, layer output is {:?}",
            grad_out.shape(),
            (cache.input.rows(), params.output_width())
        )));
    }
    let mut grad_input = RealMatrix::zeros(cache.input.rows(), cache.input.cols());
    let mut grad_weights = Vec::with_capacity(params.weights.len());
    for (p, ((slices, zs), w)) in ops.slices().iter().zip(&cache.pre).zip(&params.weights).enumerate() {
        let g = grad_out.column_block(p * width, width);
        let grad_pre = slice_grads(zs, &g, activation, aggregation);
        let mut grad_hw = RealMatrix::zeros(g.rows(), g.cols());
        for (s, dz) in slices.iter().zip(&grad_pre) {
            grad_hw.add_assign(&s.t_matmul(dz)?)?;
        }
        grad_weights.push(cache.input.t_matmul(&grad_hw)?);
        grad_input.add_assign(&grad_hw.matmul_t(w)?)?;
    }
    Ok(LayerGrads { weights: grad_weights, input: grad_input })
}

/// `∂Z_k` for each slice given `∂(aggregated output)`.
fn slice_grads(zs: &[RealMatrix], g: &RealMatrix, activation: Activation, aggregation: Aggregation) -> Vec<RealMatrix> {
    let d = zs.len();
    let mut grads: Vec<RealMatrix> = zs.iter().map(|z| RealMatrix::zeros(z.rows(), z.cols())).collect();
    for (idx, &gv) in g.as_slice().iter().enumerate() {
        match aggregation {
            Aggregation::Sum | Aggregation::Mean => {
                let share = if aggregation == Aggregation::Mean { gv / d as f64 } else { gv };
                for (grad, z) in grads.iter_mut().zip(zs) {
                    grad.as_mut_slice()[idx] = share * activation.derivative(z.as_slice()[idx]);
                }
            }
            Aggregation::Max => {
                // route to the first slice attaining the maximum
                let mut best = 0;
                let mut best_val = activation.apply(zs[0].as_slice()[idx]);
                for (k, z) in zs.iter().enumerate().skip(1) {
                    let v = activation.apply(z.as_slice()[idx]);
                    if v > best_val {
                        best = k;
                        best_val = v;
                    }
                }
                grads[best].as_mut_slice()[idx] = gv * activation.derivative(zs[best].as_slice()[idx]);
            }
        }
    }
    grads
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{adjacency, Graph};
    use crate::tensor::Semantics;

    fn path_adj() -> RealMatrix {
        adjacency(&Graph::path(3)).to_real()
    }

    #[test]
    fn identities_pass_through() {
        let params = LayerParams::new(vec![1], vec![RealMatrix::identity(3)]).unwrap();
        let out = mixhop_forward(&RealMatrix::identity(3), &[path_adj()], &params, Activation::Identity).unwrap();
        assert_eq!(out, path_adj());
    }

    #[test]
    fn concatenation_follows_power_order() {
        let params = LayerParams::new(vec![0, 1], vec![RealMatrix::identity(3); 2]).unwrap();
        let ops = [RealMatrix::identity(3), path_adj()];
        let out = mixhop_forward(&RealMatrix::identity(3), &ops, &params, Activation::Identity).unwrap();
        assert_eq!(out.shape(), (3, 6));
        assert_eq!(out.column_block(0, 3), RealMatrix::identity(3));
        assert_eq!(out.column_block(3, 3), path_adj());
    }

    #[test]
    fn output_width_is_powers_times_block() {
        let w = RealMatrix::from_fn(3, 4, |i, j| (i + j) as f64 * 0.1);
        let params = LayerParams::new(vec![0, 1, 2], vec![w; 3]).unwrap();
        let ops = vec![RealMatrix::identity(5); 3];
        let h = RealMatrix::from_fn(5, 3, |i, j| (i * j) as f64);
        let out = mixhop_forward(&h, &ops, &params, Activation::Relu).unwrap();
        assert_eq!(out.shape(), (5, 12));
        assert_eq!(params.output_width(), 12);
    }

    #[test]
    fn mean_of_identical_slices_is_one_slice() {
        let a = path_adj();
        let h = RealMatrix::from_fn(3, 2, |i, j| i as f64 - j as f64 * 0.7);
        let params = LayerParams::new(vec![1], vec![RealMatrix::from_fn(2, 2, |i, j| 1.0 + (i * 2 + j) as f64)]).unwrap();
        let three = ReducedTensor::from_parts(
            3,
            1,
            3,
            Semantics::Walk,
            (0..9).flat_map(|p| [a.as_slice()[p]; 3]).collect(),
        )
        .unwrap();
        let one = mixhop_forward(&h, std::slice::from_ref(&a), &params, Activation::Identity).unwrap();
        let many = thop_forward(&h, &[three], &params, Activation::Identity, Aggregation::Mean).unwrap();
        assert_eq!(many, one);
    }

    #[test]
    fn zero_input_gives_sigma_of_zero() {
        let params = LayerParams::new(vec![1], vec![RealMatrix::from_fn(2, 2, |_, _| 3.0)]).unwrap();
        let h = RealMatrix::zeros(3, 2);
        for act in [Activation::Relu, Activation::Identity, Activation::Tanh] {
            let out = mixhop_forward(&h, &[path_adj()], &params, act).unwrap();
            assert!(out.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn shape_errors() {
        let params = LayerParams::new(vec![1], vec![RealMatrix::identity(2)]).unwrap();
        assert!(matches!(
            mixhop_forward(&RealMatrix::identity(3), &[path_adj()], &params, Activation::Relu),
            Err(Error::Shape(_))
        ));
        assert!(LayerParams::new(vec![1, 1], vec![RealMatrix::identity(2); 2]).is_err());
        assert!(LayerParams::new(vec![], vec![]).is_err());
        assert!(matches!(HopOperators::sliced(vec![vec![]]), Err(Error::Dimension(_))));
    }

    #[test]
    fn max_aggregation_routes_gradient_to_argmax() {
        let s1 = RealMatrix::identity(2);
        let mut s2 = RealMatrix::identity(2);
        s2.scale(2.0);
        let ops = HopOperators::sliced(vec![vec![s1, s2]]).unwrap();
        let params = LayerParams::new(vec![1], vec![RealMatrix::identity(1)]).unwrap();
        let h = RealMatrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
        let (out, cache) = hop_forward(&h, &ops, &params, Activation::Identity, Aggregation::Max).unwrap();
        assert_eq!(out.to_rows(), vec![vec![2.0], vec![-1.0]]);
        let g = RealMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let grads = hop_backward(&cache, &ops, &params, Activation::Identity, Aggregation::Max, &g).unwrap();
        // row 0 takes slice 2 (factor 2), row 1 slice 1 (factor 1): dW = 1*2*1 + (-1)*1*1
        assert_eq!(grads.weights[0].get(0, 0), 1.0);
        assert_eq!(grads.input.to_rows(), vec![vec![2.0], vec![1.0]]);
    }
}
