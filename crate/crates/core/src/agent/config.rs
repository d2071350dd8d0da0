//! Training configuration in a flat `key = value` text format.
//!
//! Blank lines and `#` comments are ignored. Keys prefixed `env.` are passed
//! to the registry as environment parameter overrides.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::a2c::{ActionSelection, LossWeights};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub env: String,
    pub env_params: Vec<(String, String)>,
    pub seed: u64,
    pub batch_size: usize,
    pub rollout_length: usize,
    pub discount: f64,
    pub gae_lambda: f64,
    pub learning_rate: f64,
    pub loss: LossWeights,
    pub epochs: usize,
    pub learner_steps_per_epoch: usize,
    pub eval_episodes: usize,
    /// Cap on evaluation episode length; unfinished episodes count as they stand.
    pub eval_max_steps: usize,
    pub eval_policy: ActionSelection,
    pub hidden: Vec<usize>,
    pub shared_torso: bool,
    /// Global gradient-norm clip; `0` disables it.
    pub max_grad_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            env: "Maze-v0".into(),
            env_params: Vec::new(),
            seed: 0,
            batch_size: 64,
            rollout_length: 20,
            discount: 1.0,
            gae_lambda: 0.95,
            learning_rate: 2e-4,
            loss: LossWeights::default(),
            epochs: 10,
            learner_steps_per_epoch: 100,
            eval_episodes: 100,
            eval_max_steps: 10_000,
            eval_policy: ActionSelection::Greedy,
            hidden: vec![128, 128],
            shared_torso: false,
            max_grad_norm: 0.0,
        }
    }
}

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse { line, message: format!("`{key}`: cannot parse `{value}`") })
}

impl TrainConfig {
    /// Environment samples consumed by one epoch of learner steps.
    pub fn env_steps_per_epoch(&self) -> u64 {
        (self.learner_steps_per_epoch * self.rollout_length * self.batch_size) as u64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(Error::invalid_arg(format!("`{key}` {why}")));
        if self.batch_size == 0 {
            return bad("batch_size", "must be >= 1");
        }
        if self.rollout_length == 0 {
            return bad("rollout_length", "must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return bad("discount", "must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda", "must lie in [0, 1]");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", "must be positive");
        }
        for (key, v) in [("c_pg", self.loss.c_pg), ("c_v", self.loss.c_v), ("c_ent", self.loss.c_ent)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(key, "must be >= 0");
            }
        }
        if self.eval_episodes == 0 {
            return bad("eval_episodes", "must be >= 1");
        }
        if self.eval_max_steps == 0 {
            return bad("eval_max_steps", "must be >= 1");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden", "must list one or more positive widths");
        }
        if !(self.max_grad_norm >= 0.0) {
            return bad("max_grad_norm", "must be >= 0");
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Parse { line, message: format!("expected `key = value`, got `{body}`") })?;
            if let Some(param) = key.strip_prefix("env.") {
                c.env_params.push((param.to_string(), value.to_string()));
                continue;
            }
            match key {
                "env" => c.env = value.to_string(),
                "seed" => c.seed = parse(line, key, value)?,
                "batch_size" => c.batch_size = parse(line, key, value)?,
                "rollout_length" => c.rollout_length = parse(line, key, value)?,
                "discount" => c.discount = parse(line, key, value)?,
                "gae_lambda" => c.gae_lambda = parse(line, key, value)?,
                "learning_rate" => c.learning_rate = parse(line, key, value)?,
                "c_pg" => c.loss.c_pg = parse(line, key, value)?,
                "c_v" => c.loss.c_v = parse(line, key, value)?,
                "c_ent" => c.loss.c_ent = parse(line, key, value)?,
                "epochs" => c.epochs = parse(line, key, value)?,
                "learner_steps_per_epoch" => c.learner_steps_per_epoch = parse(line, key, value)?,
                "eval_episodes" => c.eval_episodes = parse(line, key, value)?,
                "eval_max_steps" => c.eval_max_steps = parse(line, key, value)?,
                "eval_policy" => c.eval_policy = parse(line, key, value)?,
                "shared_torso" => c.shared_torso = parse(line, key, value)?,
                "max_grad_norm" => c.max_grad_norm = parse(line, key, value)?,
                "hidden" => {
                    c.hidden = value
                        .split(',')
                        .map(|w| parse::<usize>(line, key, w.trim()))
                        .collect::<Result<_>>()?
                }
                _ => return Err(Error::Parse { line, message: format!("unknown key `{key}`") }),
            }
        }
        c.validate().map_err(|e| match e {
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("config {m}")),
            e => e,
        })?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Text form accepted by [`TrainConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let hidden: Vec<String> = self.hidden.iter().map(|h| h.to_string()).collect();
        let _ = writeln!(s, "env = {}", self.env);
        for (k, v) in &self.env_params {
            let _ = writeln!(s, "env.{k} = {v}");
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "rollout_length = {}", self.rollout_length);
        let _ = writeln!(s, "discount = {}", self.discount);
        let _ = writeln!(s, "gae_lambda = {}", self.gae_lambda);
        let _ = writeln!(s, "learning_rate = {}", self.learning_rate);
        let _ = writeln!(s, "c_pg = {}", self.loss.c_pg);
        let _ = writeln!(s, "c_v = {}", self.loss.c_v);
        let _ = writeln!(s, "c_ent = {}", self.loss.c_ent);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "learner_steps_per_epoch = {}", self.learner_steps_per_epoch);
        let _ = writeln!(s, "eval_episodes = {}", self.eval_episodes);
        let _ = writeln!(s, "eval_max_steps = {}", self.eval_max_steps);
        let _ = writeln!(s, "eval_policy = {}", self.eval_policy);
        let _ = writeln!(s, "hidden = {}", hidden.join(","));
        let _ = writeln!(s, "shared_torso = {}", self.shared_torso);
        let _ = writeln!(s, "max_grad_norm = {}", self.max_grad_norm);
        s
    }
}
