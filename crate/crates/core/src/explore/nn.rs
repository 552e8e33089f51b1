//! Minimal feedforward network with hand-rolled backpropagation:
//! tanh hidden layers, sigmoid output, binary cross-entropy loss.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const LEAK: f64 = 0.01;

/// Hidden-layer nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    LeakyRelu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::LeakyRelu => {
                if z >= 0.0 {
                    z
                } else {
                    LEAK * z
                }
            }
        }
    }

    /// Derivative expressed through the activation value (tanh) or its
    /// sign (leaky relu, where a >= 0 iff z >= 0).
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::LeakyRelu => {
                if a >= 0.0 {
                    1.0
                } else {
                    LEAK
                }
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::LeakyRelu => "leaky-relu",
        }
    }

    pub fn parse(s: &str) -> Option<Activation> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "leaky-relu" => Some(Activation::LeakyRelu),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub dims: Vec<usize>,
    pub activation: Activation,
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

impl Mlp {
    /// Xavier-uniform initialization from a seeded generator.
    pub fn new(dims: &[usize], activation: Activation, rng: &mut ChaCha8Rng) -> Mlp {
        assert!(dims.len() >= 2);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(DMatrix::from_fn(fan_out, fan_in, |_, _| rng.gen_range(-bound..bound)));
            biases.push(DVector::zeros(fan_out));
        }
        Mlp { dims: dims.to_vec(), activation, weights, biases }
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    /// Probability in (0, 1).
    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut a = DVector::from_column_slice(x);
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = w * a + b;
            a = if l == last { z.map(sigmoid) } else { z.map(|v| self.activation.apply(v)) };
        }
        a[0]
    }

    /// Cross-entropy loss of one sample.
    pub fn loss(&self, x: &[f64], y: f64) -> f64 {
        bce(self.forward(x), y)
    }

    /// Backpropagate one sample; returns (weight grads, bias grads, loss).
    pub fn backprop(&self, x: &[f64], y: f64) -> (Vec<DMatrix<f64>>, Vec<DVector<f64>>, f64) {
        let layers = self.weights.len();
        let mut activations = Vec::with_capacity(layers + 1);
        activations.push(DVector::from_column_slice(x));
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = w * activations.last().unwrap() + b;
            let a = if l == layers - 1 { z.map(sigmoid) } else { z.map(|v| self.activation.apply(v)) };
            activations.push(a);
        }
        let p = activations[layers][0];
        let loss = bce(p, y);

        let mut wgrads: Vec<DMatrix<f64>> = Vec::with_capacity(layers);
        let mut bgrads: Vec<DVector<f64>> = Vec::with_capacity(layers);
        // sigmoid + cross-entropy collapse to (p - y) at the output
        let mut delta = DVector::from_element(1, p - y);
        for l in (0..layers).rev() {
            wgrads.push(&delta * activations[l].transpose());
            bgrads.push(delta.clone());
            if l > 0 {
                let upstream = self.weights[l].transpose() * delta;
                delta = upstream
                    .zip_map(&activations[l], |u, a| u * self.activation.derivative_from_output(a));
            }
        }
        wgrads.reverse();
        bgrads.reverse();
        (wgrads, bgrads, loss)
    }

    /// Apply one gradient step with accumulated batch gradients.
    pub fn apply(&mut self, wgrads: &[DMatrix<f64>], bgrads: &[DVector<f64>], lr: f64) {
        for l in 0..self.weights.len() {
            self.weights[l] -= lr * &wgrads[l];
            self.biases[l] -= lr * &bgrads[l];
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Flatten all parameters (weights then biases, layer by layer).
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in 0..self.weights.len() {
            out.extend(self.weights[l].iter());
            out.extend(self.biases[l].iter());
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) {
        let mut k = 0;
        for l in 0..self.weights.len() {
            for v in self.weights[l].iter_mut() {
                *v = flat[k];
                k += 1;
            }
            for v in self.biases[l].iter_mut() {
                *v = flat[k];
                k += 1;
            }
        }
        assert_eq!(k, flat.len());
    }

    /// Flat analytic gradient of the single-sample loss, in
    /// [`Self::params_flat`] order.
    pub fn grad_flat(&self, x: &[f64], y: f64) -> Vec<f64> {
        let (wg, bg, _) = self.backprop(x, y);
        let mut out = Vec::with_capacity(self.param_count());
        for l in 0..wg.len() {
            out.extend(wg[l].iter());
            out.extend(bg[l].iter());
        }
        out
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn bce(p: f64, y: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;
    use rand::Rng;

    fn check_gradients(mlp: &Mlp, x: &[f64]) {
        for y in [0.0, 1.0] {
            let analytic = mlp.grad_flat(x, y);
            let mut probe = mlp.clone();
            let params = probe.params_flat();
            let h = 1e-5;
            for (i, g) in analytic.iter().enumerate() {
                let mut plus = params.clone();
                plus[i] += h;
                probe.set_params_flat(&plus);
                let lp = probe.loss(x, y);
                let mut minus = params.clone();
                minus[i] -= h;
                probe.set_params_flat(&minus);
                let lm = probe.loss(x, y);
                let numeric = (lp - lm) / (2.0 * h);
                let denom = g.abs().max(numeric.abs()).max(1e-8);
                assert!(
                    (g - numeric).abs() / denom < 1e-4,
                    "param {}: analytic {} vs numeric {}",
                    i,
                    g,
                    numeric
                );
            }
        }
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        for (activation, seed) in [(Activation::Tanh, 42), (Activation::LeakyRelu, 43)] {
            let mut rng = seeding::rng(seed, 0);
            let mlp = Mlp::new(&[4, 8, 8, 1], activation, &mut rng);
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            check_gradients(&mlp, &x);
        }
    }

    #[test]
    fn output_is_a_probability() {
        let mut rng = seeding::rng(7, 0);
        let mlp = Mlp::new(&[3, 5, 1], Activation::LeakyRelu, &mut rng);
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let p = mlp.forward(&x);
            assert!(p > 0.0 && p < 1.0);
        }
    }
}
