//! Shared dense-layer math for the model implementations: affine layers,
//! row-wise softmax/log-softmax, initialization, and the optimizers.
//!
//! Everything operates on f64 `ndarray` arrays with rows = batch items.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Dense affine layer, weights stored as [out_dim, in_dim].
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Linear {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Linear {
    /// Scaled-normal init with std 1/sqrt(in_dim); biases start at zero.
    pub fn init(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Linear {
        let scale = 1.0 / (in_dim.max(1) as f64).sqrt();
        let mut w = Array2::zeros((out_dim, in_dim));
        for v in w.iter_mut() {
            let n: f64 = rng.sample(StandardNormal);
            *v = n * scale;
        }
        Linear {
            w,
            b: Array1::zeros(out_dim),
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Linear {
        Linear {
            w: Array2::zeros((out_dim, in_dim)),
            b: Array1::zeros(out_dim),
        }
    }

    pub fn zeros_like(&self) -> Linear {
        Linear {
            w: Array2::zeros(self.w.raw_dim()),
            b: Array1::zeros(self.b.raw_dim()),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.w.nrows()
    }

    /// x [B, in] -> x * w^T + b [B, out].
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w.t()) + &self.b
    }

    /// Accumulate parameter gradients in `grad` and return the gradient
    /// with respect to the layer input.
    pub fn backward(
        &self,
        x: &Array2<f64>,
        g_out: &Array2<f64>,
        grad: &mut Linear,
    ) -> Array2<f64> {
        grad.w += &g_out.t().dot(x);
        grad.b += &g_out.sum_axis(Axis(0));
        g_out.dot(&self.w)
    }
}

/// Numerically stable row-wise softmax.
pub(crate) fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Numerically stable row-wise log-softmax.
pub(crate) fn log_softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        row.mapv_inplace(|v| v - log_sum);
    }
    out
}

pub(crate) fn softmax_vec(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = logits.mapv(|v| (v - max).exp());
    let sum = out.sum();
    out.mapv_inplace(|v| v / sum);
    out
}

/// Standard-normal noise matrix from a seeded generator.
pub(crate) fn sample_noise(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut out = Array2::zeros((rows, cols));
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    out
}

/// Gradient-descent variants used across the models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    /// Plain stochastic gradient descent with a fixed learning rate.
    Sgd,
    /// Adaptive moment estimation.
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Optimizer {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Sgd
    }
}

/// Per-tensor optimizer state. Tensors are addressed by their position in
/// the flat parameter list, which each model keeps in a fixed order.
pub(crate) struct OptimizerState {
    optimizer: Optimizer,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(optimizer: Optimizer) -> OptimizerState {
        OptimizerState {
            optimizer,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Apply one update. `params` and `grads` must be parallel slices of the
    /// same flat tensors in the same order on every call.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], lr: f64) {
        debug_assert_eq!(params.len(), grads.len());
        match self.optimizer {
            Optimizer::Sgd => {
                for (p, g) in params.iter_mut().zip(grads.iter()) {
                    for (pv, gv) in p.iter_mut().zip(g.iter()) {
                        *pv -= lr * gv;
                    }
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                if self.m.is_empty() {
                    self.m = grads.iter().map(|g| vec![0.0; g.len()]).collect();
                    self.v = grads.iter().map(|g| vec![0.0; g.len()]).collect();
                }
                self.step += 1;
                let t = self.step as f64;
                let bc1 = 1.0 - beta1.powf(t);
                let bc2 = 1.0 - beta2.powf(t);
                for ((p, g), (m, v)) in params
                    .iter_mut()
                    .zip(grads.iter())
                    .zip(self.m.iter_mut().zip(self.v.iter_mut()))
                {
                    for i in 0..g.len() {
                        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                        let m_hat = m[i] / bc1;
                        let v_hat = v[i] / bc2;
                        p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
            }
        }
    }
}

/// Borrow the flat storage of a list of linear layers, parameters paired
/// with gradients, for an optimizer step.
pub(crate) fn step_linears(
    state: &mut OptimizerState,
    layers: Vec<&mut Linear>,
    grads: Vec<&Linear>,
    lr: f64,
) {
    let mut params: Vec<&mut [f64]> = Vec::with_capacity(layers.len() * 2);
    for layer in layers {
        let Linear { w, b } = layer;
        params.push(w.as_slice_mut().expect("standard layout"));
        params.push(b.as_slice_mut().expect("standard layout"));
    }
    let mut flat_grads: Vec<&[f64]> = Vec::with_capacity(grads.len() * 2);
    for grad in grads {
        flat_grads.push(grad.w.as_slice().expect("standard layout"));
        flat_grads.push(grad.b.as_slice().expect("standard layout"));
    }
    state.step(&mut params, &flat_grads, lr);
}
