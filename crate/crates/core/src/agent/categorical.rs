//! Masked categorical distributions.
//!
//! Masked-out entries get probability exactly zero; the remaining entries are a
//! softmax of their logits. Multi-dimensional actions use one independent
//! distribution per dimension over consecutive logit segments, so log-probs and
//! entropies add across dimensions.

use crate::error::{Error, Result};
use crate::rng::{KeyStream, RngKey};

/// Writes masked softmax probabilities into `probs`; returns the log-normalizer
/// such that `log p_j = logits[j] - log_z` for legal `j`.
pub fn masked_softmax(logits: &[f64], mask: &[bool], probs: &mut [f64]) -> Result<f64> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&z, _)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::ContractViolation("action mask has no legal entry".into()));
    }
    let mut sum = 0.0;
    for ((p, &z), &m) in probs.iter_mut().zip(logits).zip(mask) {
        *p = if m { (z - max).exp() } else { 0.0 };
        sum += *p;
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
    Ok(max + sum.ln())
}

/// Entropy over the support of `probs`.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

fn draw(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = j;
            if u < acc {
                return j;
            }
        }
    }
    last
}

/// Samples one action; returns `(action, log_prob, entropy)`.
pub fn masked_categorical(logits: &[f64], mask: &[bool], key: RngKey) -> Result<(usize, f64, f64)> {
    let mut probs = vec![0.0; logits.len()];
    let log_z = masked_softmax(logits, mask, &mut probs)?;
    let a = draw(&probs, key.stream().unit());
    Ok((a, logits[a] - log_z, entropy(&probs)))
}

/// Per-dimension masked categoricals over concatenated logit segments.
#[derive(Clone, Debug)]
pub struct Factorized {
    dims: Vec<usize>,
    probs: Vec<f64>,
}

impl Factorized {
    pub fn new(dims: Vec<usize>) -> Self {
        let width = dims.iter().sum();
        Self { dims, probs: vec![0.0; width] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn width(&self) -> usize {
        self.probs.len()
    }

    /// Fills the probabilities and per-dimension log-normalizers for one row;
    /// returns the summed entropy.
    fn load(&mut self, logits: &[f64], mask: &[bool], log_z: &mut [f64]) -> Result<f64> {
        let mut off = 0;
        let mut ent = 0.0;
        for (d, &n) in self.dims.iter().enumerate() {
            let seg = off..off + n;
            log_z[d] = masked_softmax(&logits[seg.clone()], &mask[seg.clone()], &mut self.probs[seg.clone()])?;
            ent += entropy(&self.probs[seg]);
            off += n;
        }
        Ok(ent)
    }

    fn with_log_z<T>(&mut self, f: impl FnOnce(&mut Self, &mut [f64]) -> Result<T>) -> Result<T> {
        let mut small = [0.0; 8];
        let mut heap;
        let log_z: &mut [f64] = if self.dims.len() <= 8 {
            &mut small[..self.dims.len()]
        } else {
            heap = vec![0.0; self.dims.len()];
            &mut heap
        };
        f(self, log_z)
    }

    /// Samples into `out`; returns `(log_prob, entropy)`.
    pub fn sample(&mut self, logits: &[f64], mask: &[bool], stream: &mut KeyStream, out: &mut [i64]) -> Result<(f64, f64)> {
        self.with_log_z(|s, log_z| {
            let ent = s.load(logits, mask, log_z)?;
            let mut lp = 0.0;
            let mut off = 0;
            for (d, &n) in s.dims.iter().enumerate() {
                let j = draw(&s.probs[off..off + n], stream.unit());
                out[d] = j as i64;
                lp += logits[off + j] - log_z[d];
                off += n;
            }
            Ok((lp, ent))
        })
    }

    /// Most likely legal choice per dimension (lowest index on ties).
    pub fn greedy(&mut self, logits: &[f64], mask: &[bool], out: &mut [i64]) -> Result<()> {
        let mut off = 0;
        for (d, &n) in self.dims.iter().enumerate() {
            let best = (off..off + n)
                .filter(|&j| mask[j])
                .fold(None, |best: Option<usize>, j| match best {
                    Some(b) if logits[b] >= logits[j] => Some(b),
                    _ => Some(j),
                })
                .ok_or_else(|| Error::ContractViolation(format!("no legal choice in action dimension {d}")))?;
            out[d] = (best - off) as i64;
            off += n;
        }
        Ok(())
    }

    /// `(log_prob(action), entropy)` for one row.
    pub fn evaluate(&mut self, logits: &[f64], mask: &[bool], action: &[i64]) -> Result<(f64, f64)> {
        self.with_log_z(|s, log_z| {
            let ent = s.load(logits, mask, log_z)?;
            let mut lp = 0.0;
            let mut off = 0;
            for (d, &n) in s.dims.iter().enumerate() {
                let j = action[d] as usize;
                if !mask[off + j] {
                    return Err(Error::invalid_action(format!("action {j} in dimension {d} is masked out")));
                }
                lp += logits[off + j] - log_z[d];
                off += n;
            }
            Ok((lp, ent))
        })
    }

    /// Gradient of `coef_lp * log_prob(action) + coef_ent * entropy` with
    /// respect to the logits of one row, written into `grad`.
    pub fn grad(
        &mut self,
        logits: &[f64],
        mask: &[bool],
        action: &[i64],
        coef_lp: f64,
        coef_ent: f64,
        grad: &mut [f64],
    ) -> Result<(f64, f64)> {
        self.with_log_z(|s, log_z| {
            s.load(logits, mask, log_z)?;
            let mut off = 0;
            let mut lp = 0.0;
            let mut ent = 0.0;
            for (d, &n) in s.dims.iter().enumerate() {
                let seg = off..off + n;
                let h = entropy(&s.probs[seg.clone()]);
                ent += h;
                let a = off + action[d] as usize;
                if !mask[a] {
                    return Err(Error::invalid_action(format!("action {} in dimension {d} is masked out", action[d])));
                }
                lp += logits[a] - log_z[d];
                for j in seg {
                    let p = s.probs[j];
                    grad[j] = if p > 0.0 {
                        let dlp = (j == a) as u8 as f64 - p;
                        let dent = -p * ((logits[j] - log_z[d]) + h);
                        coef_lp * dlp + coef_ent * dent
                    } else {
                        0.0
                    };
                }
                off += n;
            }
            Ok((lp, ent))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_legal_action_is_certain() {
        let (a, lp, h) = masked_categorical(&[3.0, -1.0, 7.0], &[false, true, false], RngKey::from_seed(0)).unwrap();
        assert_eq!((a, lp, h), (1, 0.0, 0.0));
    }

    #[test]
    fn uniform_logits_have_log_k_entropy() {
        let mask = [true, false, true, true, false];
        let (_, lp, h) = masked_categorical(&[0.5; 5], &mask, RngKey::from_seed(1)).unwrap();
        assert!((h - 3f64.ln()).abs() < 1e-15);
        assert!((lp + 3f64.ln()).abs() < 1e-15);
        assert!(masked_categorical(&[0.0; 2], &[false, false], RngKey::from_seed(1)).is_err());
    }

    #[test]
    fn sample_frequencies_match_softmax() {
        let logits = [0.3, -1.2, 1.1, 0.0];
        let mask = [true, true, true, false];
        let z: f64 = logits[..3].iter().map(|v: &f64| v.exp()).sum();
        let mut counts = [0usize; 4];
        let key = RngKey::from_seed(7);
        let n = 100_000;
        for i in 0..n {
            counts[masked_categorical(&logits, &mask, key.fold_in(i)).unwrap().0] += 1;
        }
        assert_eq!(counts[3], 0);
        for j in 0..3 {
            let p = logits[j].exp() / z;
            assert!((counts[j] as f64 / n as f64 - p).abs() < 0.01, "{j}");
        }
    }

    #[test]
    fn logit_gradient_matches_finite_differences() {
        let dims = vec![3, 4];
        let mut f = Factorized::new(dims);
        let logits = [0.2, -0.4, 1.0, 0.5, 0.1, -0.3, 0.9];
        let mask = [true, true, false, true, false, true, true];
        let action = [1i64, 3];
        let (c_lp, c_ent) = (0.7, -0.3);
        let mut g = [0.0; 7];
        f.grad(&logits, &mask, &action, c_lp, c_ent, &mut g).unwrap();
        let h = 1e-6;
        for j in 0..7 {
            let mut up = logits;
            let mut dn = logits;
            up[j] += h;
            dn[j] -= h;
            let obj = |z: &[f64], f: &mut Factorized| {
                let (lp, ent) = f.evaluate(z, &mask, &action).unwrap();
                c_lp * lp + c_ent * ent
            };
            let fd = (obj(&up, &mut f) - obj(&dn, &mut f)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-8, "{j}: {fd} vs {}", g[j]);
        }
    }
}
