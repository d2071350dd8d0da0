//! Advantage actor-critic loss and its gradient.

use crate::batch::{Policy, Trajectory};
use crate::env::StepType;
use crate::error::{Error, Result};
use crate::rng::RngKey;

use super::categorical::Factorized;
use super::mlp::{Forward, MlpParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub c_pg: f64,
    pub c_v: f64,
    pub c_ent: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { c_pg: 1.0, c_v: 0.5, c_ent: 0.01 }
    }
}

/// Per-term means. `entropy` is the mean entropy, entering the loss negated.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossTerms {
    pub total: f64,
    pub pg: f64,
    pub v: f64,
    pub entropy: f64,
}

/// Generalized advantages over time-major `(n, B)` arrays.
///
/// `discounts` are the per-step continuation flags `d_t`; `values[t]` is the
/// value of the observation acted on at `t` and `bootstrap` the value after
/// the last step. Returns `(advantages, value_targets)`.
pub fn compute_advantages(
    rewards: &[f64],
    discounts: &[f64],
    values: &[f64],
    bootstrap: &[f64],
    n: usize,
    batch: usize,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let len = n * batch;
    if rewards.len() != len || discounts.len() != len || values.len() != len || bootstrap.len() != batch {
        return Err(Error::invalid_arg(format!(
            "advantage inputs must be ({n}, {batch}) with a ({batch},) bootstrap; got {}, {}, {}, {}",
            rewards.len(),
            discounts.len(),
            values.len(),
            bootstrap.len()
        )));
    }
    let mut adv = vec![0.0; len];
    let mut next_adv = vec![0.0; batch];
    let mut next_value = bootstrap.to_vec();
    for t in (0..n).rev() {
        for b in 0..batch {
            let i = t * batch + b;
            let d = discounts[i];
            let delta = rewards[i] + gamma * d * next_value[b] - values[i];
            let a = delta + gamma * lambda * d * next_adv[b];
            adv[i] = a;
            next_adv[b] = a;
            next_value[b] = values[i];
        }
    }
    let targets = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, targets))
}

/// Continuation flags for the learner: the env discount, except that every
/// LAST step is cut. After an auto-reset the next stored observation belongs
/// to a new episode, so a truncated episode cannot bootstrap from it.
pub fn learner_discounts(traj: &Trajectory) -> Vec<f64> {
    traj.discounts
        .iter()
        .zip(&traj.step_types)
        .map(|(&d, &st)| if st == StepType::Last { 0.0 } else { d })
        .collect()
}

fn check_samples(params: &MlpParams, dist: &Factorized, traj: &Trajectory, adv: &[f64], targets: &[f64]) -> Result<usize> {
    let n = traj.num_steps * traj.batch_size;
    if traj.obs_dim != params.obs_dim || dist.width() != params.num_actions || traj.mask_len != params.num_actions {
        return Err(Error::invalid_arg("trajectory, distribution and network sizes disagree"));
    }
    if adv.len() != n || targets.len() != n {
        return Err(Error::invalid_arg(format!("expected {n} advantages and targets")));
    }
    Ok(n)
}

/// The three-term loss with advantages and targets held constant.
pub fn a2c_loss(
    params: &MlpParams,
    dist: &mut Factorized,
    traj: &Trajectory,
    advantages: &[f64],
    targets: &[f64],
    w: LossWeights,
) -> Result<LossTerms> {
    let n = check_samples(params, dist, traj, advantages, targets)?;
    let fwd = params.forward(&traj.observations, n)?;
    let (a, ml, al) = (params.num_actions, traj.mask_len, traj.action_len);
    let mut terms = LossTerms::default();
    for i in 0..n {
        let (lp, h) = dist.evaluate(&fwd.logits[i * a..(i + 1) * a], &traj.masks[i * ml..(i + 1) * ml], &traj.actions[i * al..(i + 1) * al])?;
        terms.pg -= advantages[i] * lp;
        terms.v += (fwd.values[i] - targets[i]).powi(2);
        terms.entropy += h;
    }
    finish(&mut terms, n, w);
    Ok(terms)
}

fn finish(terms: &mut LossTerms, n: usize, w: LossWeights) {
    let inv = 1.0 / n.max(1) as f64;
    terms.pg *= inv;
    terms.v *= inv;
    terms.entropy *= inv;
    terms.total = w.c_pg * terms.pg + w.c_v * terms.v - w.c_ent * terms.entropy;
}

/// Loss and its exact gradient with respect to every parameter.
pub fn a2c_backward(
    params: &MlpParams,
    dist: &mut Factorized,
    traj: &Trajectory,
    advantages: &[f64],
    targets: &[f64],
    w: LossWeights,
) -> Result<(LossTerms, MlpParams)> {
    let n = traj.num_steps * traj.batch_size;
    let fwd = params.forward(&traj.observations, n)?;
    a2c_backward_with(params, dist, traj, &fwd, advantages, targets, w)
}

/// [`a2c_backward`] reusing a forward pass over `traj.observations`.
pub fn a2c_backward_with(
    params: &MlpParams,
    dist: &mut Factorized,
    traj: &Trajectory,
    fwd: &Forward,
    advantages: &[f64],
    targets: &[f64],
    w: LossWeights,
) -> Result<(LossTerms, MlpParams)> {
    let n = check_samples(params, dist, traj, advantages, targets)?;
    if fwd.n != n {
        return Err(Error::invalid_arg("forward pass does not cover the trajectory"));
    }
    let (a, ml, al) = (params.num_actions, traj.mask_len, traj.action_len);
    let inv = 1.0 / n.max(1) as f64;
    let mut d_logits = vec![0.0; n * a];
    let mut d_values = vec![0.0; n];
    let mut terms = LossTerms::default();
    for i in 0..n {
        let (lp, h) = dist.grad(
            &fwd.logits[i * a..(i + 1) * a],
            &traj.masks[i * ml..(i + 1) * ml],
            &traj.actions[i * al..(i + 1) * al],
            -w.c_pg * advantages[i] * inv,
            -w.c_ent * inv,
            &mut d_logits[i * a..(i + 1) * a],
        )?;
        let err = fwd.values[i] - targets[i];
        d_values[i] = w.c_v * 2.0 * err * inv;
        terms.pg -= advantages[i] * lp;
        terms.v += err * err;
        terms.entropy += h;
    }
    finish(&mut terms, n, w);
    let grad = params.backward(&traj.observations, fwd, &d_logits, &d_values);
    Ok((terms, grad))
}

/// Greedy or sampled actions from a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionSelection {
    Greedy,
    Stochastic,
}

impl std::str::FromStr for ActionSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Self::Greedy),
            "stochastic" => Ok(Self::Stochastic),
            _ => Err(Error::invalid_arg(format!("action selection must be `greedy` or `stochastic`, got `{s}`"))),
        }
    }
}

impl std::fmt::Display for ActionSelection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Greedy => "greedy",
            Self::Stochastic => "stochastic",
        })
    }
}

/// A batch policy backed by network logits. Sampling at step `t` uses
/// `key.fold_in(t)`.
pub struct NetPolicy<'a> {
    params: &'a MlpParams,
    dist: Factorized,
    key: RngKey,
    selection: ActionSelection,
}

impl<'a> NetPolicy<'a> {
    pub fn new(params: &'a MlpParams, dims: Vec<usize>, key: RngKey, selection: ActionSelection) -> Result<Self> {
        let dist = Factorized::new(dims);
        if dist.width() != params.num_actions {
            return Err(Error::invalid_arg(format!(
                "network has {} logits but the action mask has {}",
                params.num_actions,
                dist.width()
            )));
        }
        Ok(Self { params, dist, key, selection })
    }
}

impl Policy for NetPolicy<'_> {
    fn act(&mut self, step: usize, observations: &[f64], masks: &[bool], batch: usize, out: &mut [i64]) -> Result<()> {
        let fwd = self.params.forward(observations, batch)?;
        let a = self.params.num_actions;
        let al = self.dist.dims().len();
        let mut stream = self.key.fold_in(step as u64).stream();
        for i in 0..batch {
            let logits = &fwd.logits[i * a..(i + 1) * a];
            let mask = &masks[i * a..(i + 1) * a];
            let row = &mut out[i * al..(i + 1) * al];
            match self.selection {
                ActionSelection::Greedy => self.dist.greedy(logits, mask, row)?,
                ActionSelection::Stochastic => {
                    self.dist.sample(logits, mask, &mut stream, row)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_zero_gives_one_step_td_errors() {
        let r = [1.0, 0.5, -0.2, 0.0];
        let d = [1.0, 0.0, 1.0, 1.0];
        let v = [0.3, 0.1, 0.7, -0.4];
        let boot = [2.0, 1.5];
        let g = 0.9;
        let (adv, tgt) = compute_advantages(&r, &d, &v, &boot, 2, 2, g, 0.0).unwrap();
        let expect = [
            r[0] + g * d[0] * v[2] - v[0],
            r[1] + g * d[1] * v[3] - v[1],
            r[2] + g * d[2] * boot[0] - v[2],
            r[3] + g * d[3] * boot[1] - v[3],
        ];
        for i in 0..4 {
            assert!((adv[i] - expect[i]).abs() < 1e-15);
            assert!((tgt[i] - (expect[i] + v[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn gamma_zero_gives_reward_minus_value() {
        let r = [1.0, 2.0, 3.0];
        let v = [0.5, -1.0, 4.0];
        let (adv, _) = compute_advantages(&r, &[1.0; 3], &v, &[9.0], 3, 1, 0.0, 0.95).unwrap();
        assert_eq!(adv, vec![0.5, 3.0, -1.0]);
    }

    #[test]
    fn three_step_hand_unroll() {
        let (r, d, v, boot, g, l) = ([1.0, -1.0, 2.0], [1.0, 1.0, 0.0], [0.5, 0.25, 1.0], 3.0, 0.9, 0.8);
        let d2 = r[2] + g * d[2] * boot - v[2];
        let d1 = r[1] + g * d[1] * v[2] - v[1];
        let d0 = r[0] + g * d[0] * v[1] - v[0];
        let a2 = d2;
        let a1 = d1 + g * l * d[1] * a2;
        let a0 = d0 + g * l * d[0] * a1;
        let (adv, _) = compute_advantages(&r, &d, &v, &[boot], 3, 1, g, l).unwrap();
        for (x, y) in adv.iter().zip([a0, a1, a2]) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!(compute_advantages(&r, &d, &v, &[boot, 1.0], 3, 1, g, l).is_err());
    }

    fn tiny_traj(obs_dim: usize, steps: usize, batch: usize, key: RngKey) -> Trajectory {
        let n = steps * batch;
        let mut s = key.stream();
        let masks: Vec<bool> = (0..n).flat_map(|i| [true, i % 2 == 0, true, i % 3 != 0, true]).collect();
        let actions: Vec<i64> = (0..n).flat_map(|i| [if i % 2 == 0 { 1 } else { 2 }, if i % 3 == 0 { 1 } else { 0 }]).collect();
        Trajectory {
            num_steps: steps,
            batch_size: batch,
            obs_dim,
            mask_len: 5,
            action_len: 2,
            observations: (0..n * obs_dim).map(|_| s.uniform(-1.0, 1.0)).collect(),
            masks,
            actions,
            rewards: vec![0.0; n],
            discounts: vec![1.0; n],
            step_types: vec![StepType::Mid; n],
        }
    }

    #[test]
    fn zero_weights_give_zero_loss() {
        let p = MlpParams::new(RngKey::from_seed(3), 4, 5, &[8], true).unwrap();
        let traj = tiny_traj(4, 3, 2, RngKey::from_seed(4));
        let mut dist = Factorized::new(vec![3, 2]);
        let zero = LossWeights { c_pg: 0.0, c_v: 0.0, c_ent: 0.0 };
        let t = a2c_loss(&p, &mut dist, &traj, &[1.0; 6], &[0.5; 6], zero).unwrap();
        assert_eq!(t.total, 0.0);
    }

    #[test]
    fn value_bias_gradient_has_closed_form() {
        let p = MlpParams::new(RngKey::from_seed(5), 4, 5, &[8, 8], false).unwrap();
        let traj = tiny_traj(4, 3, 2, RngKey::from_seed(6));
        let mut dist = Factorized::new(vec![3, 2]);
        let targets = [0.3, -0.2, 1.0, 0.0, 0.5, 0.7];
        let w = LossWeights { c_pg: 0.0, c_v: 1.0, c_ent: 0.0 };
        let (_, g) = a2c_backward(&p, &mut dist, &traj, &[0.0; 6], &targets, w).unwrap();
        let v = p.forward(&traj.observations, 6).unwrap().values;
        let expect = 2.0 * v.iter().zip(&targets).map(|(a, b)| a - b).sum::<f64>() / 6.0;
        let vb = g.layers[p.value_head_index()].bias[0];
        assert!((vb - expect).abs() < 1e-14);
        // No policy-term signal reaches the policy head.
        assert!(g.layers[p.policy_head_index()].weights.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gradients_match_central_differences() {
        for shared in [true, false] {
            let mut p = MlpParams::new(RngKey::from_seed(7), 4, 5, &[8, 8], shared).unwrap();
            // Larger heads so every term contributes visibly.
            let (ph, vh) = (p.policy_head_index(), p.value_head_index());
            for idx in [ph, vh] {
                p.layers[idx].weights.iter_mut().for_each(|w| *w *= 50.0);
            }
            let traj = tiny_traj(4, 3, 2, RngKey::from_seed(8));
            let mut dist = Factorized::new(vec![3, 2]);
            let adv = [0.7, -1.2, 0.4, 2.0, -0.5, 1.1];
            let targets = [0.3, -0.2, 1.0, 0.0, 0.5, 0.7];
            let w = LossWeights { c_pg: 1.0, c_v: 0.5, c_ent: 0.3 };
            let (_, g) = a2c_backward(&p, &mut dist, &traj, &adv, &targets, w).unwrap();
            let flat = g.flat();
            let h = 1e-5;
            for k in 0..p.num_params() {
                let mut up = p.clone();
                *up.param_mut(k) += h;
                let mut dn = p.clone();
                *dn.param_mut(k) -= h;
                let lu = a2c_loss(&up, &mut dist, &traj, &adv, &targets, w).unwrap().total;
                let ld = a2c_loss(&dn, &mut dist, &traj, &adv, &targets, w).unwrap().total;
                let fd = (lu - ld) / (2.0 * h);
                let err = (fd - flat[k]).abs() / fd.abs().max(flat[k].abs()).max(1e-6);
                assert!(err < 1e-4, "shared={shared} param {k}: fd {fd} vs {}", flat[k]);
            }
        }
    }
}
