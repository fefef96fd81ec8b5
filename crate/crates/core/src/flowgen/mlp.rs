//! Dense two-hidden-layer perceptron with hand-written backpropagation.
//!
//! The network is small enough that explicit loops beat any linear-algebra
//! dependency, and owning the backward pass keeps every gradient in this
//! codebase checkable against finite differences.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::{derive_seed, rng_from};

/// Fully-connected net: input -> tanh(hidden) -> tanh(hidden) -> linear out.
///
/// Parameters live in one flat vector with fixed layout
/// `[W1, b1, W2, b2, W3, b3]`, each weight matrix row-major with one row per
/// output unit. The layout is part of the checkpoint format and must not
/// change without a version bump.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub params: Vec<f64>,
}

/// Forward activations retained for the backward pass.
pub struct MlpCache {
    x: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
}

impl Mlp {
    /// Weight entries are drawn from N(0, 1/fan_in); biases start at zero.
    pub fn new(input: usize, hidden: usize, output: usize, seed: u64) -> Mlp {
        assert!(input > 0 && hidden > 0 && output > 0);
        let mut rng = rng_from(derive_seed(seed, &[0x6d6c70]));
        let mut params = vec![0.0; Self::param_count_for(input, hidden, output)];
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, p: &mut Vec<f64>| {
            let scale = (1.0 / fan_in as f64).sqrt();
            for w in &mut p[range] {
                *w = scale * rng.sample::<f64, _>(StandardNormal);
            }
        };
        let (w1, _b1, w2, _b2, w3, _b3) = Self::offsets_for(input, hidden, output);
        fill(w1.0..w1.1, input, &mut params);
        fill(w2.0..w2.1, hidden, &mut params);
        fill(w3.0..w3.1, hidden, &mut params);
        Mlp { input, hidden, output, params }
    }

    /// Rebuild from a stored parameter vector; the length must match the
    /// declared dimensions exactly.
    pub fn from_params(input: usize, hidden: usize, output: usize, params: Vec<f64>) -> Option<Mlp> {
        if params.len() != Self::param_count_for(input, hidden, output) {
            return None;
        }
        Some(Mlp { input, hidden, output, params })
    }

    pub fn param_count(&self) -> usize {
        Self::param_count_for(self.input, self.hidden, self.output)
    }

    pub fn param_count_for(input: usize, hidden: usize, output: usize) -> usize {
        hidden * (input + 1) + hidden * (hidden + 1) + output * (hidden + 1)
    }

    /// Start offsets of the six parameter blocks, as (start, end) pairs.
    fn offsets_for(
        input: usize,
        hidden: usize,
        output: usize,
    ) -> ((usize, usize), (usize, usize), (usize, usize), (usize, usize), (usize, usize), (usize, usize))
    {
        let w1 = (0, hidden * input);
        let b1 = (w1.1, w1.1 + hidden);
        let w2 = (b1.1, b1.1 + hidden * hidden);
        let b2 = (w2.1, w2.1 + hidden);
        let w3 = (b2.1, b2.1 + output * hidden);
        let b3 = (w3.1, w3.1 + output);
        (w1, b1, w2, b2, w3, b3)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).0
    }

    pub fn forward_cached(&self, x: &[f64]) -> (Vec<f64>, MlpCache) {
        assert_eq!(x.len(), self.input, "input width mismatch");
        let (w1, b1, w2, b2, w3, b3) = Self::offsets_for(self.input, self.hidden, self.output);
        let p = &self.params;

        let mut a1 = vec![0.0; self.hidden];
        for (j, a) in a1.iter_mut().enumerate() {
            let row = &p[w1.0 + j * self.input..w1.0 + (j + 1) * self.input];
            let z: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + p[b1.0 + j];
            *a = z.tanh();
        }
        let mut a2 = vec![0.0; self.hidden];
        for (j, a) in a2.iter_mut().enumerate() {
            let row = &p[w2.0 + j * self.hidden..w2.0 + (j + 1) * self.hidden];
            let z: f64 = row.iter().zip(&a1).map(|(w, ai)| w * ai).sum::<f64>() + p[b2.0 + j];
            *a = z.tanh();
        }
        let mut y = vec![0.0; self.output];
        for (j, out) in y.iter_mut().enumerate() {
            let row = &p[w3.0 + j * self.hidden..w3.0 + (j + 1) * self.hidden];
            *out = row.iter().zip(&a2).map(|(w, ai)| w * ai).sum::<f64>() + p[b3.0 + j];
        }
        (y, MlpCache { x: x.to_vec(), a1, a2 })
    }

    /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
    /// `grad` must have `param_count()` entries; existing content is added to,
    /// so one buffer can accumulate a whole batch.
    pub fn backward(&self, cache: &MlpCache, gy: &[f64], grad: &mut [f64]) {
        assert_eq!(gy.len(), self.output);
        assert_eq!(grad.len(), self.param_count());
        let (w1, b1, w2, b2, w3, b3) = Self::offsets_for(self.input, self.hidden, self.output);
        let p = &self.params;

        // Output layer: linear, so gz3 = gy.
        let mut ga2 = vec![0.0; self.hidden];
        for (j, gyj) in gy.iter().enumerate() {
            grad[b3.0 + j] += gyj;
            let wrow = &p[w3.0 + j * self.hidden..w3.0 + (j + 1) * self.hidden];
            let grow = &mut grad[w3.0 + j * self.hidden..w3.0 + (j + 1) * self.hidden];
            for k in 0..self.hidden {
                grow[k] += gyj * cache.a2[k];
                ga2[k] += gyj * wrow[k];
            }
        }
        // Second hidden layer: tanh, d tanh(z) = 1 - a^2.
        let mut ga1 = vec![0.0; self.hidden];
        for j in 0..self.hidden {
            let gz = ga2[j] * (1.0 - cache.a2[j] * cache.a2[j]);
            grad[b2.0 + j] += gz;
            let wrow = &p[w2.0 + j * self.hidden..w2.0 + (j + 1) * self.hidden];
            let grow = &mut grad[w2.0 + j * self.hidden..w2.0 + (j + 1) * self.hidden];
            for k in 0..self.hidden {
                grow[k] += gz * cache.a1[k];
                ga1[k] += gz * wrow[k];
            }
        }
        // First hidden layer.
        for j in 0..self.hidden {
            let gz = ga1[j] * (1.0 - cache.a1[j] * cache.a1[j]);
            grad[b1.0 + j] += gz;
            let grow = &mut grad[w1.0 + j * self.input..w1.0 + (j + 1) * self.input];
            for k in 0..self.input {
                grow[k] += gz * cache.x[k];
            }
        }
    }
}

/// Adam optimizer over a flat parameter vector. `step` moves parameters
/// against the supplied gradient (descent); callers maximizing an objective
/// pass the negated gradient.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(lr: f64, dim: usize) -> Adam {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; dim], v: vec![0.0; dim], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mhat = self.m[i] / c1;
            let vhat = self.v[i] / c2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_loss(mlp: &Mlp, x: &[f64], c: &[f64]) -> f64 {
        mlp.forward(x).iter().zip(c).map(|(y, ci)| y * ci).sum()
    }

    #[test]
    fn parameter_layout_is_stable() {
        let mlp = Mlp::new(3, 4, 2, 0);
        assert_eq!(mlp.param_count(), 4 * 4 + 4 * 5 + 2 * 5);
        assert_eq!(mlp.params.len(), mlp.param_count());
        // Biases initialize to zero: b1 sits right after W1.
        assert_eq!(&mlp.params[12..16], &[0.0; 4]);
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        assert_eq!(Mlp::new(5, 8, 3, 42).params, Mlp::new(5, 8, 3, 42).params);
        assert_ne!(Mlp::new(5, 8, 3, 42).params, Mlp::new(5, 8, 3, 43).params);
    }

    #[test]
    fn backward_matches_central_differences() {
        let mut rng = rng_from(11);
        for _ in 0..5 {
            let mut mlp = Mlp::new(3, 5, 2, rng.gen());
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();

            let (_, cache) = mlp.forward_cached(&x);
            let mut analytic = vec![0.0; mlp.param_count()];
            mlp.backward(&cache, &c, &mut analytic);

            let h = 1e-6;
            for i in 0..mlp.param_count() {
                let orig = mlp.params[i];
                mlp.params[i] = orig + h;
                let hi = scalar_loss(&mlp, &x, &c);
                mlp.params[i] = orig - h;
                let lo = scalar_loss(&mlp, &x, &c);
                mlp.params[i] = orig;
                let numeric = (hi - lo) / (2.0 * h);
                let denom = numeric.abs().max(analytic[i].abs()).max(1e-8);
                assert!(
                    (numeric - analytic[i]).abs() / denom < 1e-5,
                    "param {i}: analytic {} vs numeric {numeric}",
                    analytic[i]
                );
            }
        }
    }

    #[test]
    fn backward_accumulates_across_calls() {
        let mlp = Mlp::new(2, 3, 1, 5);
        let (_, cache) = mlp.forward_cached(&[0.3, -0.7]);
        let mut once = vec![0.0; mlp.param_count()];
        mlp.backward(&cache, &[1.0], &mut once);
        let mut twice = vec![0.0; mlp.param_count()];
        mlp.backward(&cache, &[1.0], &mut twice);
        mlp.backward(&cache, &[1.0], &mut twice);
        for (a, b) in once.iter().zip(&twice) {
            assert!((2.0 * a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn adam_descends_a_quadratic() {
        // Minimize (p - 3)^2 elementwise from zero.
        let mut params = vec![0.0; 4];
        let mut opt = Adam::new(0.05, 4);
        for _ in 0..2000 {
            let grad: Vec<f64> = params.iter().map(|p| 2.0 * (p - 3.0)).collect();
            opt.step(&mut params, &grad);
        }
        for p in &params {
            assert!((p - 3.0).abs() < 1e-3, "converged to {p}");
        }
    }

    #[test]
    fn from_params_validates_length() {
        assert!(Mlp::from_params(3, 4, 2, vec![0.0; 10]).is_none());
        let n = Mlp::param_count_for(3, 4, 2);
        assert!(Mlp::from_params(3, 4, 2, vec![0.0; n]).is_some());
    }
}
