//! Single-process actor-critic training and policy evaluation.

use std::fmt::Write as _;

use crate::batch::{BatchEngine, Executor, Policy, RandomPolicy, ResetMode};
use crate::env::Environment;
use crate::error::Result;
use crate::registry::standard_registry;
use crate::rng::RngKey;

use super::a2c::{a2c_backward_with, compute_advantages, learner_discounts, ActionSelection, LossTerms, NetPolicy};
use super::categorical::Factorized;
use super::config::TrainConfig;
use super::mlp::MlpParams;

pub const CURVE_CSV_HEADER: &str = "epoch,env_steps,mean_return,stderr,pg_loss,v_loss,entropy";

/// Undiscounted episode returns of one evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub returns: Vec<f64>,
    pub mean_return: f64,
    pub stderr: f64,
}

impl EvalResult {
    pub fn from_returns(returns: Vec<f64>) -> Self {
        let n = returns.len() as f64;
        let mean = returns.iter().sum::<f64>() / n;
        let stderr = if returns.len() > 1 {
            let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self { returns, mean_return: mean, stderr }
    }

    /// Share of episodes with a positive return (the success rate for Maze).
    pub fn success_rate(&self) -> f64 {
        self.returns.iter().filter(|&&r| r > 0.0).count() as f64 / self.returns.len() as f64
    }
}

/// Runs `episodes` episodes in one frozen batch, reset from `key`, until all
/// finish or `max_steps` elapse.
pub fn evaluate<E: Environment, P: Policy + ?Sized>(
    engine: &BatchEngine<'_, E>,
    policy: &mut P,
    key: RngKey,
    episodes: usize,
    max_steps: usize,
) -> Result<EvalResult> {
    let mut slab = engine.reset(key, episodes)?;
    let al = engine.env().action_dims().len();
    let ml = slab.mask_len();
    let mut returns = vec![0.0; episodes];
    let mut actions = vec![0i64; episodes * al];
    let mut masks = vec![true; episodes * ml];
    for t in 0..max_steps {
        if slab.done_flags().iter().all(|&d| d) {
            break;
        }
        // Finished rows may have empty masks; give the policy something legal
        // to look at. Their actions are ignored.
        masks.copy_from_slice(slab.masks());
        for (i, &d) in slab.done_flags().iter().enumerate() {
            if d {
                masks[i * ml..(i + 1) * ml].fill(true);
            }
        }
        let live: Vec<bool> = slab.done_flags().iter().map(|&d| !d).collect();
        policy.act(t, slab.observations(), &masks, episodes, &mut actions)?;
        engine.step_with(&mut slab, &actions, ResetMode::Freeze)?;
        for (i, &l) in live.iter().enumerate() {
            if l {
                returns[i] += slab.rewards()[i];
            }
        }
    }
    Ok(EvalResult::from_returns(returns))
}

/// Uniform-over-legal-actions policy evaluated on `episodes` episodes.
pub fn random_baseline<E: Environment>(env: &E, episodes: usize, key: RngKey, max_steps: usize) -> Result<EvalResult> {
    let exec = Executor::new(1)?;
    let engine = BatchEngine::new(env, "", &exec);
    let (reset_key, act_key) = key.split2();
    let mut policy = RandomPolicy::new(act_key, env.action_dims());
    evaluate(&engine, &mut policy, reset_key, episodes, max_steps)
}

/// One learning-curve row: the evaluation at the start of `epoch` and the mean
/// losses of that epoch's learner steps (NaN when there were none).
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub epoch: usize,
    pub env_steps: u64,
    pub mean_return: f64,
    pub stderr: f64,
    pub pg_loss: f64,
    pub v_loss: f64,
    pub entropy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochEval {
    pub greedy: EvalResult,
    pub stochastic: EvalResult,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: MlpParams,
    /// `epochs + 1` rows; the last is the final evaluation.
    pub curve: Vec<CurveRow>,
    pub evals: Vec<EpochEval>,
    /// Every learner step, in order.
    pub losses: Vec<LossTerms>,
}

impl TrainOutcome {
    pub fn final_eval(&self) -> &EpochEval {
        self.evals.last().expect("at least one evaluation")
    }
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut s = String::from(CURVE_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.epoch, r.env_steps, r.mean_return, r.stderr, r.pg_loss, r.v_loss, r.entropy
        );
    }
    s
}

struct Keys {
    init: RngKey,
    eval_reset: RngKey,
    eval_sample: RngKey,
    rollout_reset: RngKey,
    rollout_sample: RngKey,
}

impl Keys {
    fn new(seed: u64) -> Self {
        let root = RngKey::from_seed(seed);
        Self {
            init: root.child(0),
            eval_reset: root.child(1),
            eval_sample: root.child(2),
            rollout_reset: root.child(3),
            rollout_sample: root.child(4),
        }
    }
}

/// Builds the configured environment from the standard registry and trains on it.
pub fn train(config: &TrainConfig, exec: &Executor) -> Result<TrainOutcome> {
    config.validate()?;
    let env = standard_registry().make_from_strs(&config.env, &config.env_params)?;
    train_env(&env, &config.env, config, exec)
}

pub fn train_env<E: Environment>(env: &E, env_id: &str, config: &TrainConfig, exec: &Executor) -> Result<TrainOutcome> {
    train_env_from(env, env_id, config, exec, None)
}

/// As [`train_env`], optionally starting from existing parameters.
pub fn train_env_from<E: Environment>(
    env: &E,
    env_id: &str,
    config: &TrainConfig,
    exec: &Executor,
    initial: Option<MlpParams>,
) -> Result<TrainOutcome> {
    config.validate()?;
    let keys = Keys::new(config.seed);
    let dims = env.action_dims();
    let mut params = match initial {
        Some(p) => p,
        None => MlpParams::new(keys.init, env.obs_dim(), env.mask_len(), &config.hidden, config.shared_torso)?,
    };
    let engine = BatchEngine::new(env, env_id, exec);
    let mut dist = Factorized::new(dims.clone());
    let (b, n) = (config.batch_size, config.rollout_length);
    let mut slab = engine.reset(keys.rollout_reset, b)?;
    let mut curve = Vec::with_capacity(config.epochs + 1);
    let mut evals = Vec::with_capacity(config.epochs + 1);
    let mut losses = Vec::new();
    let mut env_steps = 0u64;
    let mut learner_step = 0u64;

    let run_eval = |params: &MlpParams, epoch: usize| -> Result<EpochEval> {
        let mut greedy = NetPolicy::new(params, dims.clone(), keys.eval_sample, ActionSelection::Greedy)?;
        let greedy = evaluate(&engine, &mut greedy, keys.eval_reset, config.eval_episodes, config.eval_max_steps)?;
        let sample_key = keys.eval_sample.fold_in(epoch as u64);
        let mut stochastic = NetPolicy::new(params, dims.clone(), sample_key, ActionSelection::Stochastic)?;
        let stochastic = evaluate(&engine, &mut stochastic, keys.eval_reset, config.eval_episodes, config.eval_max_steps)?;
        Ok(EpochEval { greedy, stochastic })
    };
    let row = |epoch: usize, env_steps: u64, ev: &EpochEval, epoch_losses: &[LossTerms]| {
        let shown = match config.eval_policy {
            ActionSelection::Greedy => &ev.greedy,
            ActionSelection::Stochastic => &ev.stochastic,
        };
        let k = epoch_losses.len() as f64;
        let mean = |f: fn(&LossTerms) -> f64| {
            if epoch_losses.is_empty() {
                f64::NAN
            } else {
                epoch_losses.iter().map(f).sum::<f64>() / k
            }
        };
        CurveRow {
            epoch,
            env_steps,
            mean_return: shown.mean_return,
            stderr: shown.stderr,
            pg_loss: mean(|l| l.pg),
            v_loss: mean(|l| l.v),
            entropy: mean(|l| l.entropy),
        }
    };

    for epoch in 0..config.epochs {
        let ev = run_eval(&params, epoch)?;
        let start = losses.len();
        for _ in 0..config.learner_steps_per_epoch {
            let mut policy = NetPolicy::new(
                &params,
                dims.clone(),
                keys.rollout_sample.fold_in(learner_step),
                ActionSelection::Stochastic,
            )?;
            let traj = engine.rollout(&mut slab, &mut policy, n)?;
            let fwd = params.forward(&traj.observations, n * b)?;
            let bootstrap = params.forward(slab.observations(), b)?.values;
            let discounts = learner_discounts(&traj);
            let (adv, targets) = compute_advantages(
                &traj.rewards,
                &discounts,
                &fwd.values,
                &bootstrap,
                n,
                b,
                config.discount,
                config.gae_lambda,
            )?;
            let (terms, grad) = a2c_backward_with(&params, &mut dist, &traj, &fwd, &adv, &targets, config.loss)?;
            let mut scale = config.learning_rate;
            if config.max_grad_norm > 0.0 {
                let norm = grad.norm();
                if norm > config.max_grad_norm {
                    scale *= config.max_grad_norm / norm;
                }
            }
            params.axpy(-scale, &grad);
            losses.push(terms);
            learner_step += 1;
        }
        curve.push(row(epoch, env_steps, &ev, &losses[start..]));
        evals.push(ev);
        env_steps += config.env_steps_per_epoch();
    }
    let ev = run_eval(&params, config.epochs)?;
    curve.push(row(config.epochs, env_steps, &ev, &[]));
    evals.push(ev);
    Ok(TrainOutcome { params, curve, evals, losses })
}
