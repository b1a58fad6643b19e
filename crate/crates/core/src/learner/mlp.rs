//! Fully connected network with hand-written backpropagation.
//!
//! Activations are row-major batches: a `(batch, features)` matrix in, a
//! `(batch, outputs)` matrix out. Weights are stored `(inputs, outputs)` so a
//! layer is `act(x W + b)`.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Tanh),
            _ => None,
        }
    }

    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
        }
    }

    /// Multiplies `grad` by the derivative, expressed through the output `y`.
    fn backprop(self, y: &Array2<f64>, grad: &mut Array2<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => Zip::from(grad).and(y).for_each(|g, &y| {
                if y <= 0.0 {
                    *g = 0.0;
                }
            }),
            Activation::Tanh => Zip::from(grad).and(y).for_each(|g, &y| *g *= 1.0 - y * y),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }

    fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights);
        z += &self.bias;
        self.activation.apply(&mut z);
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Per-layer inputs and outputs of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    outputs: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.outputs.last().expect("network has layers")
    }
}

/// Parameter-shaped buffers: gradients, or optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.layers.iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            biases: net.layers.iter().map(|l| Array1::zeros(l.bias.raw_dim())).collect(),
        }
    }
}

impl Mlp {
    /// `sizes` lists every layer width including input and output. Weights
    /// and biases are drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], hidden: Activation, output: Activation, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output widths");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let (fan_in, fan_out) = (sizes[i], sizes[i + 1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let weights = Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-bound..bound));
                let bias = Array1::from_shape_fn(fan_out, |_| rng.random_range(-bound..bound));
                Dense {
                    weights,
                    bias,
                    activation: if i + 1 == n { output } else { hidden },
                }
            })
            .collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<Dense>) -> Self {
        assert!(!layers.is_empty());
        for pair in layers.windows(2) {
            assert_eq!(pair[0].outputs(), pair[1].inputs(), "layer widths must chain");
        }
        Self { layers }
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut h = self.layers[0].forward(x);
        for layer in &self.layers[1..] {
            h = layer.forward(h.view());
        }
        h
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> ForwardCache {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut current = x.to_owned();
        for layer in &self.layers {
            let y = layer.forward(current.view());
            inputs.push(current);
            current = y.clone();
            outputs.push(y);
        }
        ForwardCache { inputs, outputs }
    }

    /// Backpropagates `d_output` (gradient of the loss w.r.t. the network
    /// output) and returns parameter gradients and the gradient w.r.t. the
    /// input batch.
    pub fn backward(&self, cache: &ForwardCache, d_output: ArrayView2<f64>) -> (Gradients, Array2<f64>) {
        let n = self.layers.len();
        let mut weights = Vec::with_capacity(n);
        let mut biases = Vec::with_capacity(n);
        let mut grad = d_output.to_owned();
        for i in (0..n).rev() {
            let layer = &self.layers[i];
            layer.activation.backprop(&cache.outputs[i], &mut grad);
            weights.push(cache.inputs[i].t().dot(&grad));
            biases.push(grad.sum_axis(Axis(0)));
            grad = grad.dot(&layer.weights.t());
        }
        weights.reverse();
        biases.reverse();
        (Gradients { weights, biases }, grad)
    }

    /// `self <- tau * source + (1 - tau) * self`, parameter by parameter.
    pub fn soft_update_from(&mut self, source: &Mlp, tau: f64) {
        for (dst, src) in self.layers.iter_mut().zip(&source.layers) {
            Zip::from(&mut dst.weights)
                .and(&src.weights)
                .for_each(|d, &s| *d = tau * s + (1.0 - tau) * *d);
            Zip::from(&mut dst.bias)
                .and(&src.bias)
                .for_each(|d, &s| *d = tau * s + (1.0 - tau) * *d);
        }
    }

    /// Every parameter in layer order (weights row-major, then bias).
    pub fn flat_parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend(l.weights.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }

    /// Mutable access to parameter `index` in [`Mlp::flat_parameters`] order.
    pub fn parameter_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            let nw = l.weights.len();
            if index < nw {
                let cols = l.weights.ncols();
                return &mut l.weights[[index / cols, index % cols]];
            }
            index -= nw;
            let nb = l.bias.len();
            if index < nb {
                return &mut l.bias[index];
            }
            index -= nb;
        }
        panic!("parameter index out of range");
    }

    /// Sets the final layer's weights and bias to zero.
    pub fn zero_output_layer(&mut self) {
        let last = self.layers.last_mut().expect("network has layers");
        last.weights.fill(0.0);
        last.bias.fill(0.0);
    }
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter().copied());
            out.extend(b.iter().copied());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_and_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::new(&[11, 8, 8, 1], Activation::Relu, Activation::Identity, &mut rng);
        assert_eq!(net.input_dim(), 11);
        assert_eq!(net.output_dim(), 1);
        assert_eq!(net.parameter_count(), 11 * 8 + 8 + 8 * 8 + 8 + 8 + 1);
        let out = net.forward(Array2::zeros((5, 11)).view());
        assert_eq!(out.dim(), (5, 1));
    }

    #[test]
    fn cached_forward_matches_plain_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::new(&[3, 6, 2], Activation::Tanh, Activation::Tanh, &mut rng);
        let x = array![[0.1, -0.2, 0.3], [1.0, 0.5, -0.7]];
        assert_eq!(net.forward(x.view()), *net.forward_cached(x.view()).output());
    }

    #[test]
    fn zero_output_layer_with_tanh_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Mlp::new(&[10, 16, 16, 1], Activation::Relu, Activation::Tanh, &mut rng);
        net.zero_output_layer();
        let x = Array2::from_shape_fn((4, 10), |(i, j)| (i as f64) - 0.3 * j as f64);
        assert!(net.forward(x.view()).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn soft_update_with_tau_one_copies() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = Mlp::new(&[2, 3, 1], Activation::Relu, Activation::Identity, &mut rng);
        let mut b = Mlp::new(&[2, 3, 1], Activation::Relu, Activation::Identity, &mut rng);
        b.soft_update_from(&a, 1.0);
        assert_eq!(a, b);
    }

    #[test]
    fn parameter_indexing_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = Mlp::new(&[3, 4, 2], Activation::Relu, Activation::Identity, &mut rng);
        let flat = net.flat_parameters();
        for (i, v) in flat.iter().enumerate() {
            assert_eq!(*net.parameter_mut(i), *v);
        }
    }
}
