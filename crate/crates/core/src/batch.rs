//! Batched stepping over many environment instances.
//!
//! A [`BatchSlab`] owns `B` states plus the batch outputs, each output field a
//! flat array over the batch. [`BatchEngine::step`] validates every action,
//! advances all entries on the worker pool (contiguous chunks, one state per
//! entry), then resets only the entries that just emitted LAST, one at a time on
//! the driving thread. Entry `i` only ever touches row `i`, so results do not
//! depend on the number of threads or on chunk boundaries.

use std::env as std_env;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::env::{auto_reset_key, first_valid_action, Environment, StepType};
use crate::error::{Error, Result};
use crate::rng::RngKey;

/// Environment variable overriding the worker-thread count.
pub const THREADS_ENV: &str = "PURENV_NUM_THREADS";

/// A fixed-size worker pool.
pub struct Executor {
    pool: rayon::ThreadPool,
    threads: usize,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor").field("threads", &self.threads).finish()
    }
}

impl Executor {
    pub fn new(threads: usize) -> Result<Self> {
        if threads == 0 {
            return Err(Error::invalid_arg("thread count must be >= 1"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .thread_name(|i| format!("purenv-worker-{i}"))
            .build()
            .map_err(|e| Error::invalid_arg(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool, threads })
    }

    /// Reads [`THREADS_ENV`], defaulting to the number of hardware threads.
    pub fn from_env() -> Result<Self> {
        Self::new(default_threads()?)
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    fn chunk_len(&self, n: usize) -> usize {
        n.div_ceil(self.threads * 4).max(1)
    }
}

pub fn hardware_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

pub fn default_threads() -> Result<usize> {
    match std_env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::invalid_arg(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(hardware_threads()),
    }
}

/// Batch storage: one state per entry, outputs as flat per-field arrays.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchSlab<S> {
    pub env_id: String,
    states: Vec<S>,
    keys: Vec<RngKey>,
    done: Vec<bool>,
    obs: Vec<f64>,
    masks: Vec<bool>,
    rewards: Vec<f64>,
    discounts: Vec<f64>,
    step_types: Vec<StepType>,
    obs_dim: usize,
    mask_len: usize,
    reset_calls: u64,
    last_step_resets: usize,
}

impl<S> BatchSlab<S> {
    pub fn batch_size(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &S {
        &self.states[i]
    }

    /// The keys each entry was first reset with.
    pub fn keys(&self) -> &[RngKey] {
        &self.keys
    }

    /// Entries that are terminal and have not been reset.
    pub fn done_flags(&self) -> &[bool] {
        &self.done
    }

    /// Row-major `(B, obs_dim)`.
    pub fn observations(&self) -> &[f64] {
        &self.obs
    }

    pub fn observation(&self, i: usize) -> &[f64] {
        &self.obs[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    /// Row-major `(B, mask_len)`.
    pub fn masks(&self) -> &[bool] {
        &self.masks
    }

    pub fn mask(&self, i: usize) -> &[bool] {
        &self.masks[i * self.mask_len..(i + 1) * self.mask_len]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn discounts(&self) -> &[f64] {
        &self.discounts
    }

    pub fn step_types(&self) -> &[StepType] {
        &self.step_types
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn mask_len(&self) -> usize {
        self.mask_len
    }

    /// Total per-entry resets performed by `step` since the slab was created.
    pub fn reset_calls(&self) -> u64 {
        self.reset_calls
    }

    /// Resets performed by the most recent `step`.
    pub fn last_step_resets(&self) -> usize {
        self.last_step_resets
    }
}

/// What happens to entries that emit LAST.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResetMode {
    /// Reset them individually after the parallel step.
    Auto,
    /// Leave them terminal; later steps skip them.
    Freeze,
}

struct Entry<'a, S> {
    state: &'a mut S,
    done: &'a mut bool,
    obs: &'a mut [f64],
    mask: &'a mut [bool],
    reward: &'a mut f64,
    discount: &'a mut f64,
    step_type: &'a mut StepType,
}

struct Lanes<'a, S> {
    start: usize,
    states: &'a mut [S],
    done: &'a mut [bool],
    obs: &'a mut [f64],
    masks: &'a mut [bool],
    rewards: &'a mut [f64],
    discounts: &'a mut [f64],
    step_types: &'a mut [StepType],
}

impl<'a, S> Lanes<'a, S> {
    fn split(self, n: usize, obs_dim: usize, mask_len: usize) -> (Self, Self) {
        let (s0, s1) = self.states.split_at_mut(n);
        let (d0, d1) = self.done.split_at_mut(n);
        let (o0, o1) = self.obs.split_at_mut(n * obs_dim);
        let (m0, m1) = self.masks.split_at_mut(n * mask_len);
        let (r0, r1) = self.rewards.split_at_mut(n);
        let (c0, c1) = self.discounts.split_at_mut(n);
        let (t0, t1) = self.step_types.split_at_mut(n);
        (
            Lanes { start: self.start, states: s0, done: d0, obs: o0, masks: m0, rewards: r0, discounts: c0, step_types: t0 },
            Lanes {
                start: self.start + n,
                states: s1,
                done: d1,
                obs: o1,
                masks: m1,
                rewards: r1,
                discounts: c1,
                step_types: t1,
            },
        )
    }

    fn run(self, obs_dim: usize, mask_len: usize, f: &(impl Fn(usize, Entry<'_, S>) + Sync)) {
        let obs_rows = self.obs.chunks_mut(obs_dim.max(1));
        let mask_rows = self.masks.chunks_mut(mask_len.max(1));
        let rows = self
            .states
            .iter_mut()
            .zip(self.done.iter_mut())
            .zip(obs_rows)
            .zip(mask_rows)
            .zip(self.rewards.iter_mut())
            .zip(self.discounts.iter_mut())
            .zip(self.step_types.iter_mut());
        for (k, ((((((state, done), obs), mask), reward), discount), step_type)) in rows.enumerate() {
            f(self.start + k, Entry { state, done, obs, mask, reward, discount, step_type });
        }
    }
}

/// Batched driver for one environment.
#[derive(Debug)]
pub struct BatchEngine<'x, E> {
    env: E,
    env_id: String,
    exec: &'x Executor,
}

impl<'x, E: Environment> BatchEngine<'x, E> {
    pub fn new(env: E, env_id: impl Into<String>, exec: &'x Executor) -> Self {
        Self { env, env_id: env_id.into(), exec }
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    pub fn executor(&self) -> &Executor {
        self.exec
    }

    fn par_entries(&self, slab: &mut BatchSlab<E::State>, f: impl Fn(usize, Entry<'_, E::State>) + Sync) {
        let (obs_dim, mask_len) = (slab.obs_dim, slab.mask_len);
        let all = Lanes {
            start: 0,
            states: &mut slab.states,
            done: &mut slab.done,
            obs: &mut slab.obs,
            masks: &mut slab.masks,
            rewards: &mut slab.rewards,
            discounts: &mut slab.discounts,
            step_types: &mut slab.step_types,
        };
        let n = all.states.len();
        if self.exec.threads == 1 || n <= 1 {
            all.run(obs_dim, mask_len, &f);
            return;
        }
        let len = self.exec.chunk_len(n);
        let mut chunks = Vec::with_capacity(n.div_ceil(len));
        let mut rest = all;
        while rest.states.len() > len {
            let (head, tail) = rest.split(len, obs_dim, mask_len);
            chunks.push(head);
            rest = tail;
        }
        chunks.push(rest);
        self.exec.pool.install(|| chunks.into_par_iter().for_each(|c| c.run(obs_dim, mask_len, &f)));
    }

    /// `B` fresh episodes; entry `i` is reset with `key.split(B)[i]`.
    pub fn reset(&self, key: RngKey, batch_size: usize) -> Result<BatchSlab<E::State>> {
        let keys = key.split(batch_size)?;
        let (obs_dim, mask_len) = (self.env.obs_dim(), self.env.mask_len());
        let states = if self.exec.threads == 1 {
            keys.iter().map(|&k| self.env.init(k)).collect()
        } else {
            self.exec.pool.install(|| keys.par_iter().map(|&k| self.env.init(k)).collect())
        };
        let mut slab = BatchSlab {
            env_id: self.env_id.clone(),
            states,
            keys,
            done: vec![false; batch_size],
            obs: vec![0.0; batch_size * obs_dim],
            masks: vec![false; batch_size * mask_len],
            rewards: vec![0.0; batch_size],
            discounts: vec![1.0; batch_size],
            step_types: vec![StepType::First; batch_size],
            obs_dim,
            mask_len,
            reset_calls: 0,
            last_step_resets: 0,
        };
        let env = &self.env;
        self.par_entries(&mut slab, |_, e| {
            env.encode(e.state, e.obs);
            env.action_mask(e.state, e.mask);
        });
        Ok(slab)
    }

    fn action_len(&self) -> usize {
        self.env.action_dims().len()
    }

    /// Index of the lowest entry whose action is rejected, with its error.
    fn validate(&self, slab: &BatchSlab<E::State>, actions: &[i64], mode: ResetMode) -> Result<()> {
        let al = self.action_len();
        let n = slab.batch_size();
        if actions.len() != n * al {
            return Err(Error::invalid_action(format!(
                "expected {} action entries ({n} x {al}), got {}",
                n * al,
                actions.len()
            )));
        }
        let check = |i: usize| -> Result<()> {
            if mode == ResetMode::Freeze && slab.done[i] {
                return Ok(());
            }
            self.env.validate_step(&slab.states[i], &actions[i * al..(i + 1) * al])
        };
        let bad = if self.exec.threads == 1 {
            (0..n).find(|&i| check(i).is_err())
        } else {
            self.exec.pool.install(|| (0..n).into_par_iter().find_first(|&i| check(i).is_err()))
        };
        match bad {
            Some(index) => Err(Error::InvalidBatchAction { index, source: Box::new(check(index).unwrap_err()) }),
            None => Ok(()),
        }
    }

    /// One step of every entry, resetting finished entries individually.
    pub fn step(&self, slab: &mut BatchSlab<E::State>, actions: &[i64]) -> Result<()> {
        self.step_with(slab, actions, ResetMode::Auto)
    }

    pub fn step_with(&self, slab: &mut BatchSlab<E::State>, actions: &[i64], mode: ResetMode) -> Result<()> {
        self.validate(slab, actions, mode)?;
        let al = self.action_len();
        let env = &self.env;
        self.par_entries(slab, |i, e| {
            if *e.done {
                return;
            }
            let t = env.apply(e.state, &actions[i * al..(i + 1) * al]);
            *e.reward = t.reward;
            *e.discount = t.discount;
            *e.step_type = t.step_type;
            *e.done = t.is_last();
            if !*e.done || mode == ResetMode::Freeze {
                env.encode(e.state, e.obs);
                env.action_mask(e.state, e.mask);
            }
        });
        slab.last_step_resets = 0;
        if mode == ResetMode::Auto {
            self.reset_finished(slab);
        }
        Ok(())
    }

    fn reset_finished(&self, slab: &mut BatchSlab<E::State>) {
        let (od, ml) = (slab.obs_dim, slab.mask_len);
        for i in 0..slab.batch_size() {
            if !slab.done[i] {
                continue;
            }
            let fresh = self.env.init(auto_reset_key(self.env.state_key(&slab.states[i])));
            self.env.encode(&fresh, &mut slab.obs[i * od..(i + 1) * od]);
            self.env.action_mask(&fresh, &mut slab.masks[i * ml..(i + 1) * ml]);
            slab.states[i] = fresh;
            slab.done[i] = false;
            slab.reset_calls += 1;
            slab.last_step_resets += 1;
        }
    }

    /// One benchmark step: every entry takes its first legal action.
    ///
    /// An entry that emits LAST is frozen on its pre-terminal state and mask.
    /// Later calls repeat that final transition on a copy and discard it, so
    /// every entry pays for a step on every call and nothing is reset.
    pub fn step_first_valid(&self, slab: &mut BatchSlab<E::State>) -> Result<()> {
        let dims = self.env.action_dims();
        let env = &self.env;
        let failed = std::sync::atomic::AtomicBool::new(false);
        self.par_entries(slab, |_, e| {
            let mut action = [0i64; 8];
            let mut heap;
            let a: &mut [i64] = if dims.len() <= 8 {
                &mut action[..dims.len()]
            } else {
                heap = vec![0i64; dims.len()];
                &mut heap
            };
            if first_valid_action(&dims, e.mask, a).is_err() || env.validate_step(e.state, a).is_err() {
                failed.store(true, std::sync::atomic::Ordering::Relaxed);
                return;
            }
            let mut next = e.state.clone();
            let t = env.apply(&mut next, a);
            env.encode(&next, e.obs);
            if *e.done {
                return;
            }
            *e.reward = t.reward;
            *e.discount = t.discount;
            *e.step_type = t.step_type;
            *e.done = t.is_last();
            if !*e.done {
                env.action_mask(&next, e.mask);
                *e.state = next;
            }
        });
        slab.last_step_resets = 0;
        if failed.into_inner() {
            return Err(Error::ContractViolation("an entry had no legal action".into()));
        }
        Ok(())
    }

    /// Auto-resetting rollout of `num_steps` steps driven by `policy`.
    pub fn rollout<P: Policy + ?Sized>(
        &self,
        slab: &mut BatchSlab<E::State>,
        policy: &mut P,
        num_steps: usize,
    ) -> Result<Trajectory> {
        let b = slab.batch_size();
        let al = self.action_len();
        let mut traj = Trajectory::with_capacity(num_steps, b, slab.obs_dim, slab.mask_len, al);
        let mut actions = vec![0i64; b * al];
        for t in 0..num_steps {
            policy.act(t, slab.observations(), slab.masks(), b, &mut actions)?;
            traj.observations.extend_from_slice(slab.observations());
            traj.masks.extend_from_slice(slab.masks());
            traj.actions.extend_from_slice(&actions);
            self.step(slab, &actions)?;
            traj.rewards.extend_from_slice(slab.rewards());
            traj.discounts.extend_from_slice(slab.discounts());
            traj.step_types.extend_from_slice(slab.step_types());
            traj.num_steps += 1;
        }
        Ok(traj)
    }
}

/// Chooses a batch of actions from the current observations and masks.
pub trait Policy {
    /// `out` is row-major `(batch, action_dims.len())`.
    fn act(&mut self, step: usize, observations: &[f64], masks: &[bool], batch: usize, out: &mut [i64]) -> Result<()>;
}

/// Uniform over the legal choices of each action dimension.
#[derive(Clone, Debug)]
pub struct RandomPolicy {
    key: RngKey,
    dims: Vec<usize>,
}

impl RandomPolicy {
    pub fn new(key: RngKey, dims: Vec<usize>) -> Self {
        Self { key, dims }
    }

    pub fn sample_into(dims: &[usize], mask: &[bool], stream: &mut crate::rng::KeyStream, out: &mut [i64]) -> Result<()> {
        let mut offset = 0;
        for (d, &n) in dims.iter().enumerate() {
            let seg = &mask[offset..offset + n];
            let legal = seg.iter().filter(|&&m| m).count();
            if legal == 0 {
                return Err(Error::ContractViolation(format!("no legal choice in action dimension {d}")));
            }
            let pick = stream.index(legal);
            out[d] = seg.iter().enumerate().filter(|(_, &m)| m).nth(pick).expect("pick < legal").0 as i64;
            offset += n;
        }
        Ok(())
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, step: usize, _obs: &[f64], masks: &[bool], batch: usize, out: &mut [i64]) -> Result<()> {
        let ml: usize = self.dims.iter().sum();
        let al = self.dims.len();
        let mut s = self.key.fold_in(step as u64).stream();
        for i in 0..batch {
            Self::sample_into(&self.dims, &masks[i * ml..(i + 1) * ml], &mut s, &mut out[i * al..(i + 1) * al])?;
        }
        Ok(())
    }
}

/// First legal choice in every dimension.
#[derive(Clone, Debug)]
pub struct FirstValidPolicy {
    dims: Vec<usize>,
}

impl FirstValidPolicy {
    pub fn new(dims: Vec<usize>) -> Self {
        Self { dims }
    }
}

impl Policy for FirstValidPolicy {
    fn act(&mut self, _step: usize, _obs: &[f64], masks: &[bool], batch: usize, out: &mut [i64]) -> Result<()> {
        let ml: usize = self.dims.iter().sum();
        let al = self.dims.len();
        for i in 0..batch {
            first_valid_action(&self.dims, &masks[i * ml..(i + 1) * ml], &mut out[i * al..(i + 1) * al])?;
        }
        Ok(())
    }
}

/// Time-major rollout record. Observations and masks are those the actions
/// were chosen from; rewards, discounts and step types are the step outputs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub num_steps: usize,
    pub batch_size: usize,
    pub obs_dim: usize,
    pub mask_len: usize,
    pub action_len: usize,
    /// `(T, B, obs_dim)`
    pub observations: Vec<f64>,
    /// `(T, B, mask_len)`
    pub masks: Vec<bool>,
    /// `(T, B, action_len)`
    pub actions: Vec<i64>,
    /// `(T, B)`
    pub rewards: Vec<f64>,
    pub discounts: Vec<f64>,
    pub step_types: Vec<StepType>,
}

impl Trajectory {
    fn with_capacity(t: usize, b: usize, obs_dim: usize, mask_len: usize, action_len: usize) -> Self {
        Self {
            num_steps: 0,
            batch_size: b,
            obs_dim,
            mask_len,
            action_len,
            observations: Vec::with_capacity(t * b * obs_dim),
            masks: Vec::with_capacity(t * b * mask_len),
            actions: Vec::with_capacity(t * b * action_len),
            rewards: Vec::with_capacity(t * b),
            discounts: Vec::with_capacity(t * b),
            step_types: Vec::with_capacity(t * b),
        }
    }
}

/// Free-function form of [`BatchEngine::reset`].
pub fn batch_reset<E: Environment>(env: &E, key: RngKey, batch_size: usize, exec: &Executor) -> Result<BatchSlab<E::State>> {
    BatchEngine::new(env, env.name().to_string(), exec).reset(key, batch_size)
}

/// Free-function form of [`BatchEngine::step`].
pub fn batch_step<E: Environment>(env: &E, slab: &mut BatchSlab<E::State>, actions: &[i64], exec: &Executor) -> Result<()> {
    BatchEngine::new(env, slab.env_id.clone(), exec).step(slab, actions)
}

impl<E: Environment> Environment for &E {
    type State = E::State;

    fn name(&self) -> &str {
        (**self).name()
    }
    fn init(&self, key: RngKey) -> Self::State {
        (**self).init(key)
    }
    fn check_action(&self, state: &Self::State, action: &[i64]) -> Result<()> {
        (**self).check_action(state, action)
    }
    fn apply(&self, state: &mut Self::State, action: &[i64]) -> crate::env::Transition {
        (**self).apply(state, action)
    }
    fn is_done(&self, state: &Self::State) -> bool {
        (**self).is_done(state)
    }
    fn state_key(&self, state: &Self::State) -> RngKey {
        (**self).state_key(state)
    }
    fn action_dims(&self) -> Vec<usize> {
        (**self).action_dims()
    }
    fn action_mask(&self, state: &Self::State, mask: &mut [bool]) {
        (**self).action_mask(state, mask)
    }
    fn observation_spec(&self) -> crate::spec::Spec {
        (**self).observation_spec()
    }
    fn observe(&self, state: &Self::State) -> crate::spec::Value {
        (**self).observe(state)
    }
    fn obs_dim(&self) -> usize {
        (**self).obs_dim()
    }
    fn encode(&self, state: &Self::State, out: &mut [f64]) {
        (**self).encode(state, out)
    }
    fn validate_step(&self, state: &Self::State, action: &[i64]) -> Result<()> {
        (**self).validate_step(state, action)
    }
}

/// Timing of one benchmark configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ThroughputReport {
    pub env_id: String,
    pub batch_size: usize,
    pub steps_per_second: f64,
    pub epoch_wall_time: f64,
    pub warmup_excluded: bool,
    pub steps_per_block: usize,
    pub blocks: usize,
    /// Entry steps taken before their episode ended; the rest repeat a frozen final transition.
    pub live_steps: u64,
}

impl ThroughputReport {
    pub fn total_steps(&self) -> u64 {
        (self.steps_per_block * self.blocks * self.batch_size) as u64
    }
}

pub const THROUGHPUT_CSV_HEADER: &str = "env_id,batch_size,steps_per_sec,wall_time_s";

pub fn throughput_csv(reports: &[ThroughputReport]) -> String {
    let mut s = String::from(THROUGHPUT_CSV_HEADER);
    s.push('\n');
    for r in reports {
        let _ = writeln!(s, "{},{},{:.3},{:.6}", r.env_id, r.batch_size, r.steps_per_second, r.epoch_wall_time);
    }
    s
}

/// One line per report, `key=value` pairs, for machine consumption.
pub fn throughput_records(reports: &[ThroughputReport]) -> String {
    let mut s = String::new();
    for r in reports {
        let _ = writeln!(
            s,
            "env_id={} batch_size={} steps_per_block={} blocks={} total_steps={} live_steps={} wall_time_s={:.6} steps_per_sec={:.3} warmup_excluded={}",
            r.env_id,
            r.batch_size,
            r.steps_per_block,
            r.blocks,
            r.total_steps(),
            r.live_steps,
            r.epoch_wall_time,
            r.steps_per_second,
            r.warmup_excluded
        );
    }
    s
}

/// One epoch: per block, a fresh untimed batch reset and `steps_per_block`
/// timed [`BatchEngine::step_first_valid`] calls.
fn throughput_epoch<E: Environment>(
    engine: &BatchEngine<'_, E>,
    key: RngKey,
    batch_size: usize,
    steps_per_block: usize,
    blocks: usize,
) -> Result<(f64, u64)> {
    let mut elapsed = 0.0;
    let mut live = 0u64;
    for block in 0..blocks {
        let mut slab = engine.reset(key.fold_in(block as u64), batch_size)?;
        let start = Instant::now();
        for _ in 0..steps_per_block {
            live += slab.done.iter().filter(|&&d| !d).count() as u64;
            engine.step_first_valid(&mut slab)?;
        }
        elapsed += start.elapsed().as_secs_f64();
    }
    Ok((elapsed, live))
}

/// Warm-up epoch, then a timed epoch of `blocks x steps_per_block` batch steps.
pub fn run_throughput_epoch<E: Environment>(
    env: &E,
    env_id: &str,
    batch_size: usize,
    steps_per_block: usize,
    blocks: usize,
    exec: &Executor,
) -> Result<ThroughputReport> {
    if batch_size == 0 || steps_per_block == 0 || blocks == 0 {
        return Err(Error::invalid_arg("batch size, steps per block and blocks must be >= 1"));
    }
    let engine = BatchEngine::new(env, env_id, exec);
    let key = RngKey::from_seed(0);
    throughput_epoch(&engine, key.child(0), batch_size, steps_per_block, blocks)?;
    let (wall, live_steps) = throughput_epoch(&engine, key.child(1), batch_size, steps_per_block, blocks)?;
    let total = (steps_per_block * blocks * batch_size) as f64;
    Ok(ThroughputReport {
        env_id: env_id.to_string(),
        batch_size,
        steps_per_second: total / wall.max(f64::MIN_POSITIVE),
        epoch_wall_time: wall,
        warmup_excluded: true,
        steps_per_block,
        blocks,
        live_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::AutoReset;
    use crate::envs::{Maze, Snake};

    #[test]
    fn batch_of_one_matches_single_reset() {
        let exec = Executor::new(1).unwrap();
        let env = Maze::new(6, 6).unwrap();
        let key = RngKey::from_seed(3);
        let slab = batch_reset(&env, key, 1, &exec).unwrap();
        assert_eq!(slab.state(0), &env.reset(key.split(1).unwrap()[0]).0);
    }

    #[test]
    fn batch_of_one_matches_auto_reset_wrapper() {
        let exec = Executor::new(2).unwrap();
        let env = Snake::new(5, 30).unwrap();
        let key = RngKey::from_seed(11);
        let engine = BatchEngine::new(&env, "Snake", &exec);
        let mut slab = engine.reset(key, 1).unwrap();
        let wrapped = AutoReset::new(env.clone());
        let mut state = wrapped.init(key.split(1).unwrap()[0]);
        let mut policy = RandomPolicy::new(RngKey::from_seed(5), vec![4]);
        let mut action = [0i64];
        let mut obs = vec![0.0; env.obs_dim()];
        for t in 0..300 {
            policy.act(t, slab.observations(), slab.masks(), 1, &mut action).unwrap();
            let (next, ts) = wrapped.step(&state, &action).unwrap();
            engine.step(&mut slab, &action).unwrap();
            state = next;
            wrapped.encode(&state, &mut obs);
            assert_eq!(slab.state(0), &state);
            assert_eq!(slab.observation(0), &obs[..]);
            assert_eq!((slab.rewards()[0], slab.discounts()[0], slab.step_types()[0]), (ts.reward, ts.discount, ts.step_type));
        }
    }

    #[test]
    fn invalid_action_names_lowest_index() {
        let exec = Executor::new(2).unwrap();
        let env = Maze::new(6, 6).unwrap();
        let engine = BatchEngine::new(&env, "Maze", &exec);
        let mut slab = engine.reset(RngKey::from_seed(1), 16).unwrap();
        let mut actions = vec![0i64; 16];
        FirstValidPolicy::new(vec![4]).act(0, slab.observations(), slab.masks(), 16, &mut actions).unwrap();
        actions[9] = 7;
        actions[12] = -1;
        match engine.step(&mut slab, &actions).unwrap_err() {
            Error::InvalidBatchAction { index, .. } => assert_eq!(index, 9),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let env = Snake::new(6, 50).unwrap();
        let run = |threads: usize| {
            let exec = Executor::new(threads).unwrap();
            let engine = BatchEngine::new(&env, "Snake", &exec);
            let mut slab = engine.reset(RngKey::from_seed(2), 37).unwrap();
            let mut policy = RandomPolicy::new(RngKey::from_seed(4), vec![4]);
            let traj = engine.rollout(&mut slab, &mut policy, 60).unwrap();
            (traj, slab)
        };
        let (t1, s1) = run(1);
        for threads in [2, 3, 8] {
            let (t, s) = run(threads);
            assert_eq!(t, t1);
            assert_eq!(s, s1);
        }
    }

    #[test]
    fn report_identity_holds() {
        let exec = Executor::new(1).unwrap();
        let env = Maze::new(5, 5).unwrap();
        let r = run_throughput_epoch(&env, "Maze", 4, 5, 3, &exec).unwrap();
        let implied = r.steps_per_second * r.epoch_wall_time;
        assert!((implied - 60.0).abs() < 1e-6 * 60.0);
        assert!(throughput_csv(&[r]).starts_with(THROUGHPUT_CSV_HEADER));
    }
}
