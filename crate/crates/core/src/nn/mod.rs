//! Fully connected ReLU networks with exact reverse-mode gradients.
//!
//! Everything is batched: a [`ForwardTrace`] holds one row per sample, and
//! single-sample calls are batches of one. The gradient-penalty gradient is
//! computed analytically with the ReLU masks of the forward pass held
//! fixed, which is exact almost everywhere for piecewise-linear networks.

mod adam;

pub use adam::{Adam, AdamConfig};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{shape, Result};
use crate::rng::RngStream;

/// Penalty input-gradient norms below this are treated as degenerate.
pub const DEGENERATE_GRAD_NORM: f64 = 1e-12;

/// Weights and biases of a ReLU network `x ↦ W_L σ(… σ(W_1 x + b_1) …) + b_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    widths: Vec<usize>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

/// Gradient with the same layout as an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Cached intermediates of a batched forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    input: Array2<f64>,
    /// Pre-activations `z_l`, one matrix per layer (last one is the output).
    pre: Vec<Array2<f64>>,
    /// Post-activations `a_l = max(z_l, 0)` of the hidden layers.
    post: Vec<Array2<f64>>,
}

/// Gradient-penalty value and its parameter gradient, summed over a batch.
#[derive(Debug, Clone)]
pub struct PenaltyOutput {
    pub total: f64,
    pub values: Vec<f64>,
    pub input_grad_norms: Vec<f64>,
    pub grads: MlpGrads,
    /// Samples whose input gradient vanished; their penalty gradient is 0.
    pub degenerate: usize,
}

fn relu_mask(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        0.0
    }
}

impl Mlp {
    /// Network with all weights and biases zero.
    pub fn zeros(widths: &[usize]) -> Result<Self> {
        if widths.len() < 2 || widths.iter().any(|&w| w == 0) {
            return Err(shape(format!("invalid layer widths {widths:?}")));
        }
        let weights = widths
            .windows(2)
            .map(|w| Array2::zeros((w[1], w[0])))
            .collect();
        let biases = widths[1..].iter().map(|&w| Array1::zeros(w)).collect();
        Ok(Mlp {
            widths: widths.to_vec(),
            weights,
            biases,
        })
    }

    /// Gaussian weights with the given variance and constant biases.
    pub fn init(widths: &[usize], weight_var: f64, bias: f64, rng: &mut RngStream) -> Result<Self> {
        let mut net = Mlp::zeros(widths)?;
        let sd = weight_var.sqrt();
        for w in &mut net.weights {
            w.mapv_inplace(|_| sd * rng.standard_normal());
        }
        for b in &mut net.biases {
            b.fill(bias);
        }
        Ok(net)
    }

    pub fn from_parts(weights: Vec<Array2<f64>>, biases: Vec<Array1<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(shape("need one bias vector per weight matrix"));
        }
        let mut widths = vec![weights[0].ncols()];
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.ncols() != widths[l] || b.len() != w.nrows() || w.nrows() == 0 {
                return Err(shape(format!("layer {} has inconsistent shape", l + 1)));
            }
            widths.push(w.nrows());
        }
        Ok(Mlp {
            widths,
            weights,
            biases,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Array1<f64>] {
        &mut self.biases
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            weights: self.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: self.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace> {
        let row = ArrayView1::from(x).insert_axis(Axis(0));
        self.forward_batch(row)
    }

    /// Forward pass on a batch with one sample per row.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<ForwardTrace> {
        if x.ncols() != self.input_dim() {
            return Err(shape(format!(
                "input has {} columns, network expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        let n_layers = self.n_layers();
        let mut pre = Vec::with_capacity(n_layers);
        let mut post = Vec::with_capacity(n_layers - 1);
        let input = x.to_owned();
        for l in 0..n_layers {
            let prev = if l == 0 { &input } else { &post[l - 1] };
            let mut z = prev.dot(&self.weights[l].t());
            z += &self.biases[l];
            if l + 1 < n_layers {
                post.push(z.mapv(|v| v.max(0.0)));
            }
            pre.push(z);
        }
        Ok(ForwardTrace { input, pre, post })
    }

    /// Reverse sweep returning `δ_l = ∂⟨upstream, output⟩/∂z_l` for every layer.
    fn deltas(&self, trace: &ForwardTrace, upstream: ArrayView2<f64>) -> Result<Vec<Array2<f64>>> {
        let out = trace.output();
        if upstream.dim() != out.dim() {
            return Err(shape(format!(
                "upstream shape {:?} does not match output shape {:?}",
                upstream.dim(),
                out.dim()
            )));
        }
        let n_layers = self.n_layers();
        let mut deltas = vec![Array2::zeros((0, 0)); n_layers];
        deltas[n_layers - 1] = upstream.to_owned();
        for l in (1..n_layers).rev() {
            let mut d = deltas[l].dot(&self.weights[l]);
            Zip::from(&mut d)
                .and(&trace.pre[l - 1])
                .for_each(|d, &z| *d *= relu_mask(z));
            deltas[l - 1] = d;
        }
        Ok(deltas)
    }

    fn grads_from_deltas(&self, trace: &ForwardTrace, deltas: &[Array2<f64>]) -> MlpGrads {
        let weights = deltas
            .iter()
            .enumerate()
            .map(|(l, d)| {
                let prev = if l == 0 { &trace.input } else { &trace.post[l - 1] };
                d.t().dot(prev)
            })
            .collect();
        let biases = deltas.iter().map(|d| d.sum_axis(Axis(0))).collect();
        MlpGrads { weights, biases }
    }

    /// Gradient of `Σ_rows ⟨upstream_row, output_row⟩` with respect to all
    /// weights and biases.
    pub fn backward_params(&self, trace: &ForwardTrace, upstream: ArrayView2<f64>) -> Result<MlpGrads> {
        let deltas = self.deltas(trace, upstream)?;
        Ok(self.grads_from_deltas(trace, &deltas))
    }

    /// Vector–Jacobian product with respect to the inputs, row by row.
    pub fn backward_input(&self, trace: &ForwardTrace, upstream: ArrayView2<f64>) -> Result<Array2<f64>> {
        let deltas = self.deltas(trace, upstream)?;
        Ok(deltas[0].dot(&self.weights[0]))
    }

    /// Parameter and input gradients from one reverse sweep.
    pub fn backward(&self, trace: &ForwardTrace, upstream: ArrayView2<f64>) -> Result<(MlpGrads, Array2<f64>)> {
        let deltas = self.deltas(trace, upstream)?;
        let input = deltas[0].dot(&self.weights[0]);
        Ok((self.grads_from_deltas(trace, &deltas), input))
    }

    /// `∇_x f` for each row of a scalar-output network.
    pub fn grad_input(&self, trace: &ForwardTrace) -> Result<Array2<f64>> {
        self.require_scalar_output()?;
        let ones = Array2::ones((trace.batch_size(), 1));
        self.backward_input(trace, ones.view())
    }

    fn require_scalar_output(&self) -> Result<()> {
        if self.output_dim() != 1 {
            return Err(shape(format!(
                "operation needs a scalar-output network, output width is {}",
                self.output_dim()
            )));
        }
        Ok(())
    }

    /// `ζ (‖∇_x f(x)‖ − 1)²` at a single point with its parameter gradient.
    pub fn grad_penalty_params(&self, x: &[f64], zeta: f64) -> Result<(f64, MlpGrads, bool)> {
        let row = ArrayView1::from(x).insert_axis(Axis(0));
        let out = self.grad_penalty_batch(row, zeta)?;
        Ok((out.total, out.grads, out.degenerate > 0))
    }

    /// Gradient penalty summed over a batch.
    ///
    /// With masks `D_l` fixed, `∇_x f = W_1ᵀ r_1` where `r_L = 1` and
    /// `r_l = D_l W_{l+1}ᵀ r_{l+1}`. For `u = ∂P/∂(∇_x f)` the forward
    /// tangents `q_0 = u`, `q_l = D_l W_l q_{l-1}` give `∂P/∂W_l = r_l q_{l-1}ᵀ`.
    /// Biases only enter through the masks, so their gradient is zero.
    pub fn grad_penalty_batch(&self, x: ArrayView2<f64>, zeta: f64) -> Result<PenaltyOutput> {
        self.require_scalar_output()?;
        let trace = self.forward_batch(x)?;
        let m = trace.batch_size();
        let ones = Array2::ones((m, 1));
        let r = self.deltas(&trace, ones.view())?;
        let g = r[0].dot(&self.weights[0]);

        let mut u = Array2::zeros(g.raw_dim());
        let mut values = Vec::with_capacity(m);
        let mut norms = Vec::with_capacity(m);
        let mut degenerate = 0;
        for (i, gi) in g.outer_iter().enumerate() {
            let norm = gi.dot(&gi).sqrt();
            norms.push(norm);
            values.push(zeta * (norm - 1.0).powi(2));
            if norm < DEGENERATE_GRAD_NORM {
                degenerate += 1;
                continue;
            }
            let scale = 2.0 * zeta * (norm - 1.0) / norm;
            u.row_mut(i).assign(&(&gi * scale));
        }

        let n_layers = self.n_layers();
        let mut weights = Vec::with_capacity(n_layers);
        let mut q = u;
        for l in 0..n_layers {
            weights.push(r[l].t().dot(&q));
            if l + 1 < n_layers {
                let mut next = q.dot(&self.weights[l].t());
                Zip::from(&mut next)
                    .and(&trace.pre[l])
                    .for_each(|v, &z| *v *= relu_mask(z));
                q = next;
            }
        }
        let biases = self.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect();
        Ok(PenaltyOutput {
            total: values.iter().sum(),
            values,
            input_grad_norms: norms,
            grads: MlpGrads { weights, biases },
            degenerate,
        })
    }
}

impl ForwardTrace {
    pub fn batch_size(&self) -> usize {
        self.input.nrows()
    }

    pub fn input(&self) -> ArrayView2<'_, f64> {
        self.input.view()
    }

    pub fn output(&self) -> ArrayView2<'_, f64> {
        self.pre.last().unwrap().view()
    }

    pub fn pre_activations(&self) -> &[Array2<f64>] {
        &self.pre
    }

    pub fn post_activations(&self) -> &[Array2<f64>] {
        &self.post
    }

    /// ReLU masks of the hidden layers (1 where the unit is active).
    pub fn masks(&self) -> Vec<Array2<f64>> {
        let hidden = self.pre.len() - 1;
        self.pre[..hidden].iter().map(|z| z.mapv(relu_mask)).collect()
    }
}

impl MlpGrads {
    pub fn add_assign(&mut self, other: &MlpGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for w in &mut self.weights {
            *w *= c;
        }
        for b in &mut self.biases {
            *b *= c;
        }
    }

    pub fn norm(&self) -> f64 {
        self.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    /// All entries, weights then biases, layer by layer.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights
            .iter()
            .flat_map(|w| w.iter().copied())
            .chain(self.biases.iter().flat_map(|b| b.iter().copied()))
    }
}

/// On-disk layout: widths plus row-major weight arrays.
#[derive(Serialize, Deserialize)]
struct MlpFile {
    layer_widths: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl Serialize for Mlp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MlpFile {
            layer_widths: self.widths.clone(),
            weights: self.weights.iter().map(|w| w.iter().copied().collect()).collect(),
            biases: self.biases.iter().map(|b| b.to_vec()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mlp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let f = MlpFile::deserialize(d)?;
        if f.layer_widths.len() < 2 || f.weights.len() != f.layer_widths.len() - 1 {
            return Err(D::Error::custom("layer_widths and weights disagree"));
        }
        let weights = f
            .weights
            .into_iter()
            .zip(f.layer_widths.windows(2))
            .map(|(w, dims)| Array2::from_shape_vec((dims[1], dims[0]), w))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        let biases = f.biases.into_iter().map(Array1::from).collect();
        Mlp::from_parts(weights, biases).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests;
