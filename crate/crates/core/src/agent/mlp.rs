//! Dense policy/value networks in `f64` with explicit reverse-mode gradients.
//!
//! Layer order in [`MlpParams::layers`]:
//! - shared torso: `torso..., policy_head, value_head`
//! - separate torsos: `policy_torso..., policy_head, value_torso..., value_head`
//!
//! Hidden layers use ReLU; heads are linear. Weights are row-major `(out, in)`.

use matrixmultiply::dgemm;

use crate::error::{Error, Result};
use crate::rng::RngKey;

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub input: usize,
    pub output: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self { input, output, weights: vec![0.0; input * output], bias: vec![0.0; output] }
    }

    /// Weights uniform in `±scale * sqrt(6 / (in + out))`, zero bias.
    pub fn init(key: RngKey, input: usize, output: usize, scale: f64) -> Self {
        let lim = scale * (6.0 / (input + output) as f64).sqrt();
        let mut s = key.stream();
        let weights = (0..input * output).map(|_| lim * (2.0 * s.unit() - 1.0)).collect();
        Self { input, output, weights, bias: vec![0.0; output] }
    }

    /// `y = x W^T + b` for `n` rows.
    pub fn forward(&self, x: &[f64], n: usize, y: &mut Vec<f64>) {
        assert!(x.len() >= n * self.input);
        y.clear();
        y.reserve(n * self.output);
        for _ in 0..n {
            y.extend_from_slice(&self.bias);
        }
        let (m, k, o) = (n, self.input, self.output);
        // SAFETY: all three buffers are at least as large as the strides imply.
        unsafe {
            dgemm(
                m, k, o, 1.0,
                x.as_ptr(), k as isize, 1,
                self.weights.as_ptr(), 1, k as isize,
                1.0, y.as_mut_ptr(), o as isize, 1,
            );
        }
    }

    /// Accumulates parameter gradients into `grad`; writes `dx` if requested.
    pub fn backward(&self, x: &[f64], dy: &[f64], n: usize, grad: &mut Dense, dx: Option<&mut Vec<f64>>) {
        let (k, o) = (self.input, self.output);
        assert!(x.len() >= n * k && dy.len() >= n * o);
        for row in dy.chunks_exact(o).take(n) {
            for (b, g) in grad.bias.iter_mut().zip(row) {
                *b += g;
            }
        }
        // SAFETY: as in `forward`.
        unsafe {
            dgemm(
                o, n, k, 1.0,
                dy.as_ptr(), 1, o as isize,
                x.as_ptr(), k as isize, 1,
                1.0, grad.weights.as_mut_ptr(), k as isize, 1,
            );
        }
        if let Some(dx) = dx {
            dx.clear();
            dx.resize(n * k, 0.0);
            unsafe {
                dgemm(
                    n, o, k, 1.0,
                    dy.as_ptr(), o as isize, 1,
                    self.weights.as_ptr(), k as isize, 1,
                    0.0, dx.as_mut_ptr(), k as isize, 1,
                );
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub obs_dim: usize,
    pub num_actions: usize,
    pub hidden: Vec<usize>,
    pub shared: bool,
    pub layers: Vec<Dense>,
}

/// Activations kept for the backward pass.
#[derive(Clone, Debug, Default)]
pub struct Forward {
    pub n: usize,
    /// `(n, num_actions)`
    pub logits: Vec<f64>,
    /// `(n,)`
    pub values: Vec<f64>,
    policy_acts: Vec<Vec<f64>>,
    value_acts: Vec<Vec<f64>>,
}

fn relu(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

impl MlpParams {
    pub fn new(key: RngKey, obs_dim: usize, num_actions: usize, hidden: &[usize], shared: bool) -> Result<Self> {
        if obs_dim == 0 || num_actions == 0 || hidden.contains(&0) {
            return Err(Error::invalid_arg("layer sizes must be >= 1"));
        }
        let mut p = Self::zeros(obs_dim, num_actions, hidden, shared);
        for (i, layer) in p.layers.iter_mut().enumerate() {
            *layer = Dense::init(key.child(i as u64), layer.input, layer.output, 1.0);
        }
        // Small heads: near-uniform initial policy, near-zero initial values.
        let (ph, vh) = (p.policy_head_index(), p.value_head_index());
        for idx in [ph, vh] {
            for w in p.layers[idx].weights.iter_mut() {
                *w *= 0.01;
            }
        }
        Ok(p)
    }

    pub fn zeros(obs_dim: usize, num_actions: usize, hidden: &[usize], shared: bool) -> Self {
        let torso = |layers: &mut Vec<Dense>| {
            let mut prev = obs_dim;
            for &h in hidden {
                layers.push(Dense::zeros(prev, h));
                prev = h;
            }
            prev
        };
        let mut layers = Vec::new();
        let top = torso(&mut layers);
        layers.push(Dense::zeros(top, num_actions));
        if shared {
            layers.push(Dense::zeros(top, 1));
        } else {
            let top = torso(&mut layers);
            layers.push(Dense::zeros(top, 1));
        }
        Self { obs_dim, num_actions, hidden: hidden.to_vec(), shared, layers }
    }

    /// Same architecture, all zeros.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.obs_dim, self.num_actions, &self.hidden, self.shared)
    }

    pub fn policy_head_index(&self) -> usize {
        self.hidden.len()
    }

    pub fn value_head_index(&self) -> usize {
        self.layers.len() - 1
    }

    fn value_torso_start(&self) -> usize {
        if self.shared {
            0
        } else {
            self.hidden.len() + 1
        }
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            v.extend_from_slice(&l.weights);
            v.extend_from_slice(&l.bias);
        }
        v
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(&mut f);
        }
    }

    pub fn param_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            if index < l.weights.len() {
                return &mut l.weights[index];
            }
            index -= l.weights.len();
            if index < l.bias.len() {
                return &mut l.bias[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// `self += alpha * other` over all parameters.
    pub fn axpy(&mut self, alpha: f64, other: &MlpParams) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += alpha * y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += alpha * y;
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.flat().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|x| x.is_finite()))
    }

    fn run_torso(&self, start: usize, obs: &[f64], n: usize) -> Vec<Vec<f64>> {
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.hidden.len());
        for k in 0..self.hidden.len() {
            let input: &[f64] = if k == 0 { obs } else { &acts[k - 1] };
            let mut y = Vec::new();
            self.layers[start + k].forward(input, n, &mut y);
            relu(&mut y);
            acts.push(y);
        }
        acts
    }

    /// Logits and values for `n` observation rows.
    pub fn forward(&self, obs: &[f64], n: usize) -> Result<Forward> {
        if obs.len() != n * self.obs_dim {
            return Err(Error::invalid_arg(format!(
                "expected {n} x {} observation values, got {}",
                self.obs_dim,
                obs.len()
            )));
        }
        let policy_acts = self.run_torso(0, obs, n);
        let ptop: &[f64] = policy_acts.last().map_or(obs, |v| v);
        let mut logits = Vec::new();
        self.layers[self.policy_head_index()].forward(ptop, n, &mut logits);
        let value_acts = if self.shared { Vec::new() } else { self.run_torso(self.value_torso_start(), obs, n) };
        let vtop: &[f64] = if self.shared { ptop } else { value_acts.last().map_or(obs, |v| v) };
        let mut values = Vec::new();
        self.layers[self.value_head_index()].forward(vtop, n, &mut values);
        Ok(Forward { n, logits, values, policy_acts, value_acts })
    }

    fn back_torso(&self, start: usize, obs: &[f64], acts: &[Vec<f64>], mut d_top: Vec<f64>, n: usize, grad: &mut MlpParams) {
        for k in (0..self.hidden.len()).rev() {
            for (d, &a) in d_top.iter_mut().zip(&acts[k]) {
                if a <= 0.0 {
                    *d = 0.0;
                }
            }
            let input: &[f64] = if k == 0 { obs } else { &acts[k - 1] };
            let mut dx = Vec::new();
            self.layers[start + k].backward(input, &d_top, n, &mut grad.layers[start + k], (k > 0).then_some(&mut dx));
            d_top = dx;
        }
    }

    /// Gradients given upstream gradients of the logits `(n, A)` and values `(n,)`.
    pub fn backward(&self, obs: &[f64], fwd: &Forward, d_logits: &[f64], d_values: &[f64]) -> MlpParams {
        let n = fwd.n;
        let mut grad = self.zeros_like();
        let ptop: &[f64] = fwd.policy_acts.last().map_or(obs, |v| v);
        let (ph, vh) = (self.policy_head_index(), self.value_head_index());
        let want_dx = !self.hidden.is_empty();
        let mut d_ptop = Vec::new();
        self.layers[ph].backward(ptop, d_logits, n, &mut grad.layers[ph], want_dx.then_some(&mut d_ptop));
        let vtop: &[f64] = if self.shared { ptop } else { fwd.value_acts.last().map_or(obs, |v| v) };
        let mut d_vtop = Vec::new();
        self.layers[vh].backward(vtop, d_values, n, &mut grad.layers[vh], want_dx.then_some(&mut d_vtop));
        if !want_dx {
            return grad;
        }
        if self.shared {
            for (a, b) in d_ptop.iter_mut().zip(&d_vtop) {
                *a += b;
            }
            self.back_torso(0, obs, &fwd.policy_acts, d_ptop, n, &mut grad);
        } else {
            self.back_torso(0, obs, &fwd.policy_acts, d_ptop, n, &mut grad);
            self.back_torso(self.value_torso_start(), obs, &fwd.value_acts, d_vtop, n, &mut grad);
        }
        grad
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_zero_outputs() {
        let p = MlpParams::zeros(5, 3, &[4, 4], false);
        let f = p.forward(&[0.3; 10], 2).unwrap();
        assert!(f.logits.iter().chain(&f.values).all(|&v| v == 0.0));
        assert!(p.forward(&[0.3; 9], 2).is_err());
    }

    #[test]
    fn identical_rows_give_identical_outputs() {
        let p = MlpParams::new(RngKey::from_seed(1), 4, 3, &[8], true).unwrap();
        let row = [0.1, -0.5, 0.7, 0.2];
        let obs: Vec<f64> = row.iter().cycle().take(12).copied().collect();
        let f = p.forward(&obs, 3).unwrap();
        assert_eq!(f.logits[0..3], f.logits[3..6]);
        assert_eq!(f.logits[0..3], f.logits[6..9]);
        assert_eq!(f.values[0], f.values[2]);
    }

    #[test]
    fn matches_reference_matrix_arithmetic() {
        let p = MlpParams::new(RngKey::from_seed(2), 3, 2, &[5], false).unwrap();
        let x = [0.4, -1.0, 0.25];
        let f = p.forward(&x, 1).unwrap();
        let dense = |l: &Dense, v: &[f64]| -> Vec<f64> {
            (0..l.output).map(|o| l.bias[o] + (0..l.input).map(|i| l.weights[o * l.input + i] * v[i]).sum::<f64>()).collect()
        };
        let h: Vec<f64> = dense(&p.layers[0], &x).into_iter().map(|v| v.max(0.0)).collect();
        let logits = dense(&p.layers[1], &h);
        let hv: Vec<f64> = dense(&p.layers[2], &x).into_iter().map(|v| v.max(0.0)).collect();
        let value = dense(&p.layers[3], &hv)[0];
        for (a, b) in f.logits.iter().zip(&logits) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert!((f.values[0] - value).abs() <= 1e-12);
    }
}
