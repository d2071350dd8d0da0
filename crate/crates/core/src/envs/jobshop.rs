//! Job-shop scheduling.
//!
//! A job is an ordered list of operations, each needing one machine for a
//! number of time units. The action holds one entry per machine: a job id to
//! start on that machine, or `num_jobs` for no-op. Job `j` may start on machine
//! `m` iff `m` is idle, `j` is not running, and `j`'s next operation needs `m`.
//! After the assignments every busy machine advances one unit, so an operation
//! of duration `d` occupies `d` consecutive steps. Each step pays -1 and the
//! episode terminates once every operation has finished, so the return is
//! minus the makespan.
//!
//! Instance text format: one job per line, as whitespace-separated
//! `machine duration` pairs. Blank lines and `#` comments are skipped.

use std::fmt::Write as _;

use crate::env::{Environment, Transition};
use crate::error::{Error, Result};
use crate::rng::RngKey;
use crate::spec::{ArrayValue, DType, Spec, Value};

/// `(machine, duration)` per operation, per job.
pub type Instance = Vec<Vec<(usize, u32)>>;

pub fn instance_to_text(instance: &Instance) -> String {
    let mut s = String::new();
    for job in instance {
        let fields: Vec<String> = job.iter().map(|(m, d)| format!("{m} {d}")).collect();
        let _ = writeln!(s, "{}", fields.join(" "));
    }
    s
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut jobs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums = line
            .split_whitespace()
            .map(|t| t.parse::<u64>().map_err(|_| Error::Parse { line: i + 1, message: format!("invalid integer `{t}`") }))
            .collect::<Result<Vec<_>>>()?;
        if nums.len() % 2 != 0 {
            return Err(Error::Parse { line: i + 1, message: "expected `machine duration` pairs".into() });
        }
        let mut ops = Vec::with_capacity(nums.len() / 2);
        for pair in nums.chunks_exact(2) {
            if pair[1] == 0 || pair[1] > u32::MAX as u64 {
                return Err(Error::Parse { line: i + 1, message: format!("invalid duration {}", pair[1]) });
            }
            ops.push((pair[0] as usize, pair[1] as u32));
        }
        jobs.push(ops);
    }
    if jobs.is_empty() {
        return Err(Error::Parse { line: text.lines().count().max(1), message: "no jobs found".into() });
    }
    Ok(jobs)
}

#[derive(Clone, Debug, PartialEq)]
pub struct JobShopState {
    /// Per job, per operation.
    pub machines_required: Vec<Vec<usize>>,
    pub durations: Vec<Vec<u32>>,
    pub op_index: Vec<usize>,
    /// Remaining processing units per machine; 0 when idle.
    pub machine_busy_until: Vec<u32>,
    pub machine_job: Vec<Option<usize>>,
    pub step_count: u32,
    pub key: RngKey,
    pub done: bool,
}

impl JobShopState {
    pub fn job_running(&self, job: usize) -> bool {
        self.machine_job.contains(&Some(job))
    }

    pub fn next_machine(&self, job: usize) -> Option<usize> {
        self.machines_required[job].get(self.op_index[job]).copied()
    }

    pub fn all_finished(&self) -> bool {
        self.op_index.iter().zip(&self.durations).all(|(&k, d)| k == d.len())
    }
}

#[derive(Clone, Debug)]
pub struct JobShop {
    num_jobs: usize,
    num_machines: usize,
    max_ops: usize,
    max_duration: u32,
    time_limit: u32,
    fixed: Option<Instance>,
}

impl JobShop {
    pub fn new(num_jobs: usize, num_machines: usize, max_ops: usize, max_duration: u32) -> Result<Self> {
        if num_jobs == 0 || num_machines == 0 || max_ops == 0 || max_duration == 0 {
            return Err(Error::invalid_arg("job-shop parameters must all be >= 1"));
        }
        let time_limit = (max_ops * num_jobs) as u32 * max_duration;
        Ok(Self { num_jobs, num_machines, max_ops, max_duration, time_limit, fixed: None })
    }

    /// Always resets to `instance`.
    pub fn with_instance(instance: Instance, num_machines: usize) -> Result<Self> {
        if instance.is_empty() || instance.iter().any(|j| j.is_empty()) {
            return Err(Error::invalid_arg("every job needs at least one operation"));
        }
        if let Some(&(m, _)) = instance.iter().flatten().find(|(m, _)| *m >= num_machines) {
            return Err(Error::invalid_arg(format!("machine {m} outside 0..{num_machines}")));
        }
        if instance.iter().flatten().any(|&(_, d)| d == 0) {
            return Err(Error::invalid_arg("durations must be >= 1"));
        }
        let max_ops = instance.iter().map(Vec::len).max().unwrap_or(1);
        let max_duration = instance.iter().flatten().map(|&(_, d)| d).max().unwrap_or(1);
        let mut env = Self::new(instance.len(), num_machines, max_ops, max_duration)?;
        env.time_limit = env.time_limit.max(instance.iter().flatten().map(|&(_, d)| d).sum());
        env.fixed = Some(instance);
        Ok(env)
    }

    pub fn with_time_limit(mut self, time_limit: u32) -> Result<Self> {
        if time_limit == 0 {
            return Err(Error::invalid_arg("time_limit must be >= 1"));
        }
        self.time_limit = time_limit;
        Ok(self)
    }

    pub fn num_jobs(&self) -> usize {
        self.num_jobs
    }

    pub fn num_machines(&self) -> usize {
        self.num_machines
    }

    pub fn max_ops(&self) -> usize {
        self.max_ops
    }

    pub fn max_duration(&self) -> u32 {
        self.max_duration
    }

    pub fn time_limit(&self) -> u32 {
        self.time_limit
    }

    /// The no-op action entry.
    pub fn no_op(&self) -> i64 {
        self.num_jobs as i64
    }

    pub fn generate_instance(&self, key: RngKey) -> Instance {
        let mut s = key.stream();
        (0..self.num_jobs)
            .map(|_| {
                let ops = 1 + s.index(self.max_ops);
                (0..ops)
                    .map(|_| (s.index(self.num_machines), 1 + s.index(self.max_duration as usize) as u32))
                    .collect()
            })
            .collect()
    }

    pub fn state_from_instance(&self, instance: &Instance, key: RngKey) -> Result<JobShopState> {
        if instance.len() != self.num_jobs {
            return Err(Error::invalid_arg("instance job count does not match the environment"));
        }
        for job in instance {
            if job.is_empty() || job.len() > self.max_ops {
                return Err(Error::invalid_arg(format!("jobs need 1..={} operations", self.max_ops)));
            }
            if job.iter().any(|&(m, d)| m >= self.num_machines || d == 0 || d > self.max_duration) {
                return Err(Error::invalid_arg("operation outside the machine or duration range"));
            }
        }
        Ok(JobShopState {
            machines_required: instance.iter().map(|j| j.iter().map(|o| o.0).collect()).collect(),
            durations: instance.iter().map(|j| j.iter().map(|o| o.1).collect()).collect(),
            op_index: vec![0; self.num_jobs],
            machine_busy_until: vec![0; self.num_machines],
            machine_job: vec![None; self.num_machines],
            step_count: 0,
            key,
            done: false,
        })
    }

    pub fn instance_of(state: &JobShopState) -> Instance {
        state
            .machines_required
            .iter()
            .zip(&state.durations)
            .map(|(ms, ds)| ms.iter().copied().zip(ds.iter().copied()).collect())
            .collect()
    }

    fn can_start(&self, s: &JobShopState, machine: usize, job: usize) -> bool {
        s.machine_job[machine].is_none() && !s.job_running(job) && s.next_machine(job) == Some(machine)
    }
}

impl Environment for JobShop {
    type State = JobShopState;

    fn name(&self) -> &str {
        "JobShop"
    }

    fn init(&self, key: RngKey) -> JobShopState {
        let (gen, own) = key.split2();
        let instance = match &self.fixed {
            Some(inst) => inst.clone(),
            None => self.generate_instance(gen),
        };
        self.state_from_instance(&instance, own).expect("instance fits the environment")
    }

    fn check_action(&self, state: &JobShopState, action: &[i64]) -> Result<()> {
        if action.len() != self.num_machines {
            return Err(Error::invalid_action(format!(
                "expected {} action components, got {}",
                self.num_machines,
                action.len()
            )));
        }
        let mut used = vec![false; self.num_jobs];
        for (m, &a) in action.iter().enumerate() {
            if a < 0 || a > self.no_op() {
                return Err(Error::invalid_action(format!("machine {m}: job {a} outside 0..={}", self.num_jobs)));
            }
            if a == self.no_op() {
                continue;
            }
            let j = a as usize;
            if std::mem::replace(&mut used[j], true) {
                return Err(Error::invalid_action(format!("job {j} assigned to more than one machine")));
            }
            if !self.can_start(state, m, j) {
                return Err(Error::invalid_action(format!("job {j} cannot start on machine {m}")));
            }
        }
        Ok(())
    }

    fn apply(&self, state: &mut JobShopState, action: &[i64]) -> Transition {
        for (m, &a) in action.iter().enumerate() {
            if a != self.no_op() {
                let j = a as usize;
                state.machine_job[m] = Some(j);
                state.machine_busy_until[m] = state.durations[j][state.op_index[j]];
            }
        }
        for m in 0..self.num_machines {
            if let Some(j) = state.machine_job[m] {
                state.machine_busy_until[m] -= 1;
                if state.machine_busy_until[m] == 0 {
                    state.machine_job[m] = None;
                    state.op_index[j] += 1;
                }
            }
        }
        state.step_count += 1;
        let t = Transition::resolve(-1.0, state.all_finished(), state.step_count, self.time_limit);
        state.done = t.is_last();
        t
    }

    fn is_done(&self, state: &JobShopState) -> bool {
        state.done
    }

    fn state_key(&self, state: &JobShopState) -> RngKey {
        state.key
    }

    fn action_dims(&self) -> Vec<usize> {
        vec![self.num_jobs + 1; self.num_machines]
    }

    fn action_mask(&self, state: &JobShopState, mask: &mut [bool]) {
        for (m, seg) in mask.chunks_exact_mut(self.num_jobs + 1).enumerate() {
            for (j, slot) in seg[..self.num_jobs].iter_mut().enumerate() {
                *slot = self.can_start(state, m, j);
            }
            seg[self.num_jobs] = true;
        }
    }

    fn observation_spec(&self) -> Spec {
        let (j, m, k) = (self.num_jobs, self.num_machines, self.max_ops);
        let dur = self.max_duration as f64;
        Spec::composite([
            ("ops_machine_ids", Spec::bounded(vec![j, k], DType::Int, vec![-1.0], vec![(m - 1) as f64]).expect("static")),
            ("ops_durations", Spec::bounded(vec![j, k], DType::Int, vec![0.0], vec![dur]).expect("static")),
            ("ops_mask", Spec::array(vec![j, k], DType::Bool)),
            ("machines_job_ids", Spec::bounded(vec![m], DType::Int, vec![0.0], vec![j as f64]).expect("static")),
            ("machines_remaining_times", Spec::bounded(vec![m], DType::Int, vec![0.0], vec![dur]).expect("static")),
            ("action_mask", Spec::array(vec![m, j + 1], DType::Bool)),
        ])
        .expect("static spec")
    }

    fn observe(&self, state: &JobShopState) -> Value {
        let (j, m, k) = (self.num_jobs, self.num_machines, self.max_ops);
        let mut ids = vec![-1i64; j * k];
        let mut durs = vec![0i64; j * k];
        let mut pending = vec![false; j * k];
        for job in 0..j {
            for (op, (&mach, &d)) in state.machines_required[job].iter().zip(&state.durations[job]).enumerate() {
                ids[job * k + op] = mach as i64;
                durs[job * k + op] = d as i64;
                pending[job * k + op] = op >= state.op_index[job];
            }
        }
        Value::composite([
            ("ops_machine_ids", ArrayValue::ints(vec![j, k], ids).into()),
            ("ops_durations", ArrayValue::ints(vec![j, k], durs).into()),
            ("ops_mask", ArrayValue::bools(vec![j, k], pending).into()),
            ("machines_job_ids", Value::from(state.machine_job.iter().map(|o| o.unwrap_or(j) as i64).collect::<Vec<_>>())),
            (
                "machines_remaining_times",
                Value::from(state.machine_busy_until.iter().map(|&r| r as i64).collect::<Vec<_>>()),
            ),
            ("action_mask", ArrayValue::bools(vec![m, j + 1], self.mask_vec(state)).into()),
        ])
    }

    fn obs_dim(&self) -> usize {
        let (j, m, k) = (self.num_jobs, self.num_machines, self.max_ops);
        3 * j * k + m * (j + 2) + m * (j + 1) + 1
    }

    /// Per op slot: `machine / M`, `duration / max_duration`, pending. Per
    /// machine: one-hot of the running job (last slot idle) and remaining time.
    /// Then the mask and `step_count / time_limit`.
    fn encode(&self, state: &JobShopState, out: &mut [f64]) {
        let (j, m, k) = (self.num_jobs, self.num_machines, self.max_ops);
        let dur = self.max_duration as f64;
        out.fill(0.0);
        for job in 0..j {
            for (op, (&mach, &d)) in state.machines_required[job].iter().zip(&state.durations[job]).enumerate() {
                let base = 3 * (job * k + op);
                out[base] = (mach + 1) as f64 / m as f64;
                out[base + 1] = d as f64 / dur;
                out[base + 2] = (op >= state.op_index[job]) as u8 as f64;
            }
        }
        let mut i = 3 * j * k;
        for mach in 0..m {
            out[i + state.machine_job[mach].unwrap_or(j)] = 1.0;
            out[i + j + 1] = state.machine_busy_until[mach] as f64 / dur;
            i += j + 2;
        }
        let mask = self.mask_vec(state);
        for (o, b) in out[i..i + mask.len()].iter_mut().zip(mask) {
            *o = b as u8 as f64;
        }
        out[i + m * (j + 1)] = state.step_count as f64 / self.time_limit as f64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_operation_takes_its_duration() {
        let env = JobShop::with_instance(vec![vec![(0, 3)]], 1).unwrap();
        let (s, _) = env.reset(RngKey::from_seed(0));
        let (s, ts) = env.step(&s, &[0]).unwrap();
        assert_eq!((ts.reward, ts.mid()), (-1.0, true));
        assert_eq!(env.mask_vec(&s), vec![false, true]);
        let (s, _) = env.step(&s, &[1]).unwrap();
        let (_, ts) = env.step(&s, &[1]).unwrap();
        assert!(ts.last());
        assert_eq!(ts.discount, 0.0);
    }

    #[test]
    fn shared_machine_serializes() {
        let env = JobShop::with_instance(vec![vec![(0, 2)], vec![(0, 2)]], 1).unwrap();
        let (mut s, _) = env.reset(RngKey::from_seed(0));
        let mut ret = 0.0;
        for a in [0, 2, 1, 2] {
            let (next, ts) = env.step(&s, &[a]).unwrap();
            ret += ts.reward;
            s = next;
        }
        assert!(env.is_done(&s));
        assert_eq!(ret, -4.0);
    }

    #[test]
    fn rejects_duplicates_and_busy_machines() {
        let env = JobShop::with_instance(vec![vec![(0, 2), (1, 1)], vec![(1, 1)]], 2).unwrap();
        let (s, _) = env.reset(RngKey::from_seed(0));
        assert_eq!(env.mask_vec(&s), vec![true, false, true, false, true, true]);
        assert!(env.step(&s, &[1, 2]).is_err());
        assert!(env.step(&s, &[0, 0]).is_err());
        assert!(env.step(&s, &[0, 3]).is_err());
        assert!(env.step(&s, &[0]).is_err());
        let (s, _) = env.step(&s, &[0, 1]).unwrap();
        // Job 0 still on machine 0; its next op on machine 1 must wait.
        assert_eq!(env.mask_vec(&s), vec![false, false, true, false, false, true]);
    }

    #[test]
    fn generated_instances_respect_bounds() {
        let env = JobShop::new(5, 4, 4, 6).unwrap();
        for seed in 0..30 {
            let (s, ts) = env.reset(RngKey::from_seed(seed));
            for job in 0..5 {
                assert!((1..=4).contains(&s.durations[job].len()));
                assert!(s.durations[job].iter().all(|d| (1..=6).contains(d)));
                assert!(s.machines_required[job].iter().all(|&m| m < 4));
            }
            assert!(env.observation_spec().validate(&ts.observation).is_ok());
            let mut out = vec![f64::NAN; env.obs_dim()];
            env.encode(&s, &mut out);
            assert!(out.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn text_round_trip() {
        let inst: Instance = vec![vec![(0, 3), (1, 2)], vec![(1, 4)]];
        let text = instance_to_text(&inst);
        assert_eq!(text, "0 3 1 2\n1 4\n");
        assert_eq!(parse_instance(&format!("# two jobs\n{text}\n")).unwrap(), inst);
        assert!(matches!(parse_instance("0 3\n1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_instance("0 0\n"), Err(Error::Parse { line: 1, .. })));
    }
}
