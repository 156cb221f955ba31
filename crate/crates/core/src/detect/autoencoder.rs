//! Small dense autoencoder: tanh hidden layers, identity output, MSE loss,
//! Adam, full-batch training.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_EPOCHS: usize = 500;
pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;
pub const GRADIENT_CHECK_STEP: f64 = 1e-5;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_out x n_in`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Layer {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            biases: vec![0.0; n_out],
        }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_out)
            .map(|o| {
                let row = &self.weights[o * self.n_in..(o + 1) * self.n_in];
                self.biases[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub layers: Vec<Layer>,
}

/// Bottleneck shape `[d, ceil(d/2), max(2, ceil(d/4)), ceil(d/2), d]`.
pub fn default_shape(d: usize) -> Vec<usize> {
    let half = d.div_ceil(2);
    let quarter = d.div_ceil(4).max(2);
    vec![d, half, quarter, half, d]
}

impl Autoencoder {
    /// Xavier-uniform weights drawn from `seed`, zero biases.
    pub fn new(sizes: &[usize], seed: u64) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output layers");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let mut l = Layer::zeros(w[0], w[1]);
                let a = (6.0 / (w[0] + w[1]) as f64).sqrt();
                for x in &mut l.weights {
                    *x = rng.random_range(-a..=a);
                }
                l
            })
            .collect();
        Autoencoder { layers }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        Autoencoder {
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].n_in];
        s.extend(self.layers.iter().map(|l| l.n_out));
        s
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Activations of every layer, input first.
    fn forward_all(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = l.affine(acts.last().unwrap());
            if i < last {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
        }
        acts
    }

    pub fn reconstruct(&self, x: &[f64]) -> Vec<f64> {
        self.forward_all(x).pop().unwrap()
    }

    /// Mean squared reconstruction error of one row.
    pub fn row_error(&self, x: &[f64]) -> f64 {
        let y = self.reconstruct(x);
        y.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / x.len() as f64
    }

    /// Mean of squared errors over every entry of every row.
    pub fn loss(&self, data: &[Vec<f64>]) -> f64 {
        data.iter().map(|x| self.row_error(x)).sum::<f64>() / data.len() as f64
    }

    /// Loss and its gradient with respect to every parameter.
    pub fn gradients(&self, data: &[Vec<f64>]) -> (f64, Autoencoder) {
        let mut grad = Autoencoder::zeros(&self.sizes());
        let d = self.layers.last().unwrap().n_out;
        let scale = 1.0 / (data.len() * d) as f64;
        let mut loss = 0.0;
        for x in data {
            let acts = self.forward_all(x);
            let y = acts.last().unwrap();
            let mut delta: Vec<f64> = y
                .iter()
                .zip(x)
                .map(|(a, b)| {
                    loss += (a - b).powi(2) * scale;
                    2.0 * (a - b) * scale
                })
                .collect();
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input = &acts[li];
                let g = &mut grad.layers[li];
                for o in 0..layer.n_out {
                    g.biases[o] += delta[o];
                    let row = &mut g.weights[o * layer.n_in..(o + 1) * layer.n_in];
                    for (gw, v) in row.iter_mut().zip(input) {
                        *gw += delta[o] * v;
                    }
                }
                if li == 0 {
                    break;
                }
                delta = (0..layer.n_in)
                    .map(|i| {
                        let back: f64 = (0..layer.n_out)
                            .map(|o| layer.weights[o * layer.n_in + i] * delta[o])
                            .sum();
                        back * (1.0 - input[i] * input[i])
                    })
                    .collect();
            }
        }
        (loss, grad)
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()))
    }

    /// Full-batch Adam. Returns the loss measured before each update.
    pub fn fit(&mut self, data: &[Vec<f64>], epochs: usize, lr: f64) -> Result<Vec<f64>, f64> {
        let n = self.n_params();
        let mut m = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut history = Vec::with_capacity(epochs);
        for epoch in 1..=epochs {
            let (loss, grad) = self.gradients(data);
            if !loss.is_finite() {
                return Err(loss);
            }
            history.push(loss);
            let b1 = 1.0 - BETA1.powi(epoch as i32);
            let b2 = 1.0 - BETA2.powi(epoch as i32);
            for (((p, g), m), v) in self.params_mut().zip(grad.params()).zip(&mut m).zip(&mut v) {
                *m = BETA1 * *m + (1.0 - BETA1) * g;
                *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                *p -= lr * (*m / b1) / ((*v / b2).sqrt() + ADAM_EPS);
            }
        }
        Ok(history)
    }
}

/// Largest relative gap between analytic and central-difference gradients
/// on random inputs for a randomly initialised network.
pub fn gradient_check(sizes: &[usize], seed: u64) -> f64 {
    gradient_check_with_step(sizes, seed, GRADIENT_CHECK_STEP)
}

pub fn gradient_check_with_step(sizes: &[usize], seed: u64, step: f64) -> f64 {
    let net = Autoencoder::new(sizes, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let data: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    max_relative_error(&net, &data, step)
}

pub fn max_relative_error(net: &Autoencoder, data: &[Vec<f64>], step: f64) -> f64 {
    let (_, grad) = net.gradients(data);
    let analytic: Vec<f64> = grad.params().copied().collect();
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = *probe.params().nth(i).unwrap();
        *probe.params_mut().nth(i).unwrap() = orig + step;
        let up = probe.loss(data);
        *probe.params_mut().nth(i).unwrap() = orig - step;
        let down = probe.loss(data);
        *probe.params_mut().nth(i).unwrap() = orig;
        let numeric = (up - down) / (2.0 * step);
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}
