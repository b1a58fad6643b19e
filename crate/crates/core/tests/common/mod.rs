#![allow(dead_code)]

use ndarray::{Array2, ArrayView2};
use pursuit_shield::learner::mlp::{Activation, Mlp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-6;

/// Scalar probe loss `sum(w * net(x))`.
pub fn probe_loss(net: &Mlp, x: ArrayView2<f64>, w: &Array2<f64>) -> f64 {
    (&net.forward(x) * w).sum()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-10 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Largest relative error between backprop and central differences over
/// every parameter and every input entry.
pub fn max_gradient_error(net: &Mlp, x: &Array2<f64>, w: &Array2<f64>) -> f64 {
    let cache = net.forward_cached(x.view());
    let (grads, d_input) = net.backward(&cache, w.view());
    let analytic = grads.flat();
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let mut plus = net.clone();
        *plus.parameter_mut(i) += FD_STEP;
        let mut minus = net.clone();
        *minus.parameter_mut(i) -= FD_STEP;
        let numeric = (probe_loss(&plus, x.view(), w) - probe_loss(&minus, x.view(), w)) / (2.0 * FD_STEP);
        worst = worst.max(relative_error(a, numeric));
    }
    for idx in 0..x.len() {
        let (r, c) = (idx / x.ncols(), idx % x.ncols());
        let mut xp = x.clone();
        xp[[r, c]] += FD_STEP;
        let mut xm = x.clone();
        xm[[r, c]] -= FD_STEP;
        let numeric = (probe_loss(net, xp.view(), w) - probe_loss(net, xm.view(), w)) / (2.0 * FD_STEP);
        worst = worst.max(relative_error(d_input[[r, c]], numeric));
    }
    worst
}

/// Miniature network with two hidden layers of width 4, plus a random batch
/// and probe weights.
pub fn miniature(seed: u64, inputs: usize, outputs: usize, head: Activation) -> (Mlp, Array2<f64>, Array2<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = Mlp::new(&[inputs, 4, 4, outputs], Activation::Relu, head, &mut rng);
    let batch = 5;
    let x = Array2::from_shape_fn((batch, inputs), |_| rng.random_range(-1.5..1.5));
    let w = Array2::from_shape_fn((batch, outputs), |_| rng.random_range(-1.0..1.0));
    (net, x, w)
}
