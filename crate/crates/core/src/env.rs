//! The environment contract: pure `reset`/`step` over explicit state values.
//!
//! Implementors supply the transition split into a side-effect-free validity
//! check ([`Environment::check_action`]) and an in-place update
//! ([`Environment::apply`]). The provided [`Environment::reset`] and
//! [`Environment::step`] wrap those into the functional form; the batch engine
//! calls the split form directly on its own storage.

use std::collections::BTreeMap;
use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::rng::RngKey;
use crate::spec::{Spec, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepType {
    First,
    Mid,
    Last,
}

impl StepType {
    pub fn as_i64(self) -> i64 {
        match self {
            StepType::First => 0,
            StepType::Mid => 1,
            StepType::Last => 2,
        }
    }
}

/// Metrics emitted alongside a step, invisible to the agent.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Extras(Vec<(&'static str, f64)>);

impl Extras {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn with(mut self, name: &'static str, value: f64) -> Self {
        self.0.push((name, value));
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(k, _)| *k == name).map(|(_, v)| *v)
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.0.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

/// Outcome of one transition, without the observation.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub step_type: StepType,
    pub reward: f64,
    pub discount: f64,
    pub extras: Extras,
}

impl Transition {
    pub fn mid(reward: f64) -> Self {
        Self { step_type: StepType::Mid, reward, discount: 1.0, extras: Extras::new() }
    }

    pub fn termination(reward: f64) -> Self {
        Self { step_type: StepType::Last, reward, discount: 0.0, extras: Extras::new() }
    }

    pub fn truncation(reward: f64) -> Self {
        Self { step_type: StepType::Last, reward, discount: 1.0, extras: Extras::new() }
    }

    /// Terminates, truncates at `limit`, or continues.
    pub fn resolve(reward: f64, terminated: bool, step_count: u32, limit: u32) -> Self {
        if terminated {
            Self::termination(reward)
        } else if step_count >= limit {
            Self::truncation(reward)
        } else {
            Self::mid(reward)
        }
    }

    pub fn with_extras(mut self, extras: Extras) -> Self {
        self.extras = extras;
        self
    }

    pub fn is_last(&self) -> bool {
        self.step_type == StepType::Last
    }
}

/// The agent-visible record of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeStep {
    pub step_type: StepType,
    pub reward: f64,
    pub discount: f64,
    pub observation: Value,
    pub extras: BTreeMap<String, f64>,
}

impl TimeStep {
    pub fn first(observation: Value) -> Self {
        Self { step_type: StepType::First, reward: 0.0, discount: 1.0, observation, extras: BTreeMap::new() }
    }

    pub fn from_transition(t: &Transition, observation: Value) -> Self {
        Self {
            step_type: t.step_type,
            reward: t.reward,
            discount: t.discount,
            observation,
            extras: t.extras.to_map(),
        }
    }

    pub fn first_step(&self) -> bool {
        self.step_type == StepType::First
    }

    pub fn mid(&self) -> bool {
        self.step_type == StepType::Mid
    }

    pub fn last(&self) -> bool {
        self.step_type == StepType::Last
    }
}

/// An MDP with discrete (possibly multi-dimensional) actions.
///
/// Actions are integer slices with one entry per action dimension. The action
/// mask is the concatenation of one boolean segment per dimension; a joint
/// action is legal iff every component is marked legal in its segment.
pub trait Environment: Send + Sync {
    type State: Clone + Debug + PartialEq + Send + Sync;

    fn name(&self) -> &str;

    /// Samples an initial state. The state keeps a child of `key`, never `key` itself.
    fn init(&self, key: RngKey) -> Self::State;

    /// Side-effect-free validity check of `action` against the current mask.
    fn check_action(&self, state: &Self::State, action: &[i64]) -> Result<()>;

    /// Applies a previously checked action in place.
    fn apply(&self, state: &mut Self::State, action: &[i64]) -> Transition;

    /// True once the state has emitted a LAST step.
    fn is_done(&self, state: &Self::State) -> bool;

    fn state_key(&self, state: &Self::State) -> RngKey;

    /// Cardinality of each action dimension.
    fn action_dims(&self) -> Vec<usize>;

    /// Writes the concatenated per-dimension mask; `mask.len() == sum(action_dims)`.
    fn action_mask(&self, state: &Self::State, mask: &mut [bool]);

    fn observation_spec(&self) -> Spec;

    fn observe(&self, state: &Self::State) -> Value;

    /// Length of the flat numeric observation encoding.
    fn obs_dim(&self) -> usize;

    /// Flat encoding used by batched learners; `out.len() == obs_dim()`.
    fn encode(&self, state: &Self::State, out: &mut [f64]);

    fn action_spec(&self) -> Spec {
        let dims = self.action_dims();
        if dims.len() == 1 {
            Spec::discrete(dims[0] as u64).expect("action dimensions are non-empty")
        } else {
            Spec::multi_discrete(dims.iter().map(|&d| d as u64).collect()).expect("action dimensions are non-empty")
        }
    }

    fn mask_len(&self) -> usize {
        self.action_dims().iter().sum()
    }

    fn mask_vec(&self, state: &Self::State) -> Vec<bool> {
        let mut m = vec![false; self.mask_len()];
        self.action_mask(state, &mut m);
        m
    }

    /// Rejects stepping a finished episode, then checks the action.
    fn validate_step(&self, state: &Self::State, action: &[i64]) -> Result<()> {
        if self.is_done(state) {
            return Err(Error::ContractViolation("step called on a terminal state; reset first".into()));
        }
        self.check_action(state, action)
    }

    fn reset(&self, key: RngKey) -> (Self::State, TimeStep) {
        let state = self.init(key);
        let ts = TimeStep::first(self.observe(&state));
        (state, ts)
    }

    fn step(&self, state: &Self::State, action: &[i64]) -> Result<(Self::State, TimeStep)> {
        self.validate_step(state, action)?;
        let mut next = state.clone();
        let t = self.apply(&mut next, action);
        let ts = TimeStep::from_transition(&t, self.observe(&next));
        Ok((next, ts))
    }

    /// Step with an action given as a spec-shaped value.
    fn step_value(&self, state: &Self::State, action: &Value) -> Result<(Self::State, TimeStep)> {
        self.action_spec().validate(action).map_err(|e| Error::invalid_action(e.to_string()))?;
        let ints = action.to_ints().ok_or_else(|| Error::invalid_action("action must be an integer array"))?;
        self.step(state, &ints)
    }
}

/// Checks a discrete action index against `0..n` and a mask.
pub(crate) fn check_discrete(action: &[i64], n: usize, valid: impl FnOnce(usize) -> bool) -> Result<usize> {
    if action.len() != 1 {
        return Err(Error::invalid_action(format!("expected 1 action component, got {}", action.len())));
    }
    let a = action[0];
    if a < 0 || a as usize >= n {
        return Err(Error::invalid_action(format!("action {a} outside 0..{n}")));
    }
    let a = a as usize;
    if !valid(a) {
        return Err(Error::invalid_action(format!("action {a} is masked out")));
    }
    Ok(a)
}

/// Key used to restart an episode after `state_key` reached a terminal state.
pub fn auto_reset_key(state_key: RngKey) -> RngKey {
    state_key.child(1)
}

/// Restarts the inner environment whenever it emits LAST.
///
/// The emitted record keeps the terminal step type, reward and discount, but
/// carries the observation of the fresh episode; the returned state is that
/// fresh state, so the next call continues without an explicit reset.
#[derive(Clone, Debug)]
pub struct AutoReset<E> {
    inner: E,
}

impl<E: Environment> AutoReset<E> {
    pub fn new(inner: E) -> Self {
        Self { inner }
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

/// Wraps `env` with per-episode auto-reset.
pub fn auto_reset_wrap<E: Environment>(env: E) -> AutoReset<E> {
    AutoReset::new(env)
}

impl<E: Environment> Environment for AutoReset<E> {
    type State = E::State;

    fn name(&self) -> &str {
        self.inner.name()
    }

    fn init(&self, key: RngKey) -> Self::State {
        self.inner.init(key)
    }

    fn check_action(&self, state: &Self::State, action: &[i64]) -> Result<()> {
        self.inner.check_action(state, action)
    }

    fn apply(&self, state: &mut Self::State, action: &[i64]) -> Transition {
        let t = self.inner.apply(state, action);
        if t.is_last() {
            *state = self.inner.init(auto_reset_key(self.inner.state_key(state)));
        }
        t
    }

    fn is_done(&self, state: &Self::State) -> bool {
        self.inner.is_done(state)
    }

    fn state_key(&self, state: &Self::State) -> RngKey {
        self.inner.state_key(state)
    }

    fn action_dims(&self) -> Vec<usize> {
        self.inner.action_dims()
    }

    fn action_mask(&self, state: &Self::State, mask: &mut [bool]) {
        self.inner.action_mask(state, mask)
    }

    fn observation_spec(&self) -> Spec {
        self.inner.observation_spec()
    }

    fn observe(&self, state: &Self::State) -> Value {
        self.inner.observe(state)
    }

    fn obs_dim(&self) -> usize {
        self.inner.obs_dim()
    }

    fn encode(&self, state: &Self::State, out: &mut [f64]) {
        self.inner.encode(state, out)
    }

    fn action_spec(&self) -> Spec {
        self.inner.action_spec()
    }
}

/// Index of the first legal choice in each action dimension.
pub fn first_valid_action(dims: &[usize], mask: &[bool], out: &mut [i64]) -> Result<()> {
    let mut offset = 0;
    for (d, &n) in dims.iter().enumerate() {
        let seg = &mask[offset..offset + n];
        out[d] = seg
            .iter()
            .position(|&m| m)
            .ok_or_else(|| Error::ContractViolation(format!("no legal choice in action dimension {d}")))?
            as i64;
        offset += n;
    }
    Ok(())
}
