//! Determinism and batching equivalences, checked for every registered env.

use purenv::batch::{BatchEngine, Executor, RandomPolicy, ResetMode, Trajectory};
use purenv::env::{auto_reset_wrap, Environment};
use purenv::registry::standard_registry;
use purenv::{RngKey, StepType};

fn envs() -> Vec<(String, purenv::AnyEnv)> {
    let r = standard_registry();
    r.ids().into_iter().map(|id| (id.to_string(), purenv::registry::make(id).unwrap())).collect()
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn assert_same(a: &Trajectory, b: &Trajectory, id: &str) {
    assert_eq!(bits(&a.observations), bits(&b.observations), "{id}");
    assert_eq!(bits(&a.rewards), bits(&b.rewards), "{id}");
    assert_eq!(bits(&a.discounts), bits(&b.discounts), "{id}");
    assert_eq!(a.masks, b.masks, "{id}");
    assert_eq!(a.actions, b.actions, "{id}");
    assert_eq!(a.step_types, b.step_types, "{id}");
}

struct Record {
    states: Vec<purenv::envs::AnyState>,
    obs: Vec<u64>,
    rewards: Vec<u64>,
    types: Vec<StepType>,
}

fn single_env_run(env: &purenv::AnyEnv, key: RngKey, steps: usize) -> Record {
    let env = auto_reset_wrap(env);
    let dims = env.action_dims();
    let (init_key, action_key) = key.split2();
    let mut s = env.init(init_key);
    let mut stream = action_key.stream();
    let mut a = vec![0i64; dims.len()];
    let mut obs = vec![0.0; env.obs_dim()];
    let mut rec = Record { states: Vec::new(), obs: Vec::new(), rewards: Vec::new(), types: Vec::new() };
    for _ in 0..steps {
        RandomPolicy::sample_into(&dims, &env.mask_vec(&s), &mut stream, &mut a).unwrap();
        let t = env.apply(&mut s, &a);
        env.encode(&s, &mut obs);
        rec.states.push(s.clone());
        rec.obs.extend(bits(&obs));
        rec.rewards.push(t.reward.to_bits());
        rec.types.push(t.step_type);
    }
    rec
}

#[test]
fn same_key_gives_identical_500_step_trajectories() {
    let exec = Executor::new(1).unwrap();
    for (id, env) in envs() {
        let a = single_env_run(&env, RngKey::from_seed(9), 500);
        let b = single_env_run(&env, RngKey::from_seed(9), 500);
        assert_eq!(a.states, b.states, "{id}");
        assert_eq!(a.obs, b.obs, "{id}");
        assert_eq!(a.rewards, b.rewards, "{id}");
        assert_eq!(a.types, b.types, "{id}");
        let engine = BatchEngine::new(&env, id.clone(), &exec);
        let run = || {
            let mut slab = engine.reset(RngKey::from_seed(3), 4).unwrap();
            let mut p = RandomPolicy::new(RngKey::from_seed(4), env.action_dims());
            let t = engine.rollout(&mut slab, &mut p, 500).unwrap();
            (t, slab.states().to_vec())
        };
        let (t1, s1) = run();
        let (t2, s2) = run();
        assert_same(&t1, &t2, &id);
        assert_eq!(s1, s2, "{id}");
    }
}

#[test]
fn batch_of_one_matches_the_auto_reset_wrapper() {
    let exec = Executor::new(1).unwrap();
    for (id, env) in envs() {
        let key = RngKey::from_seed(21);
        let engine = BatchEngine::new(&env, id.clone(), &exec);
        let mut slab = engine.reset(key, 1).unwrap();
        let wrapped = auto_reset_wrap(&env);
        let mut s = wrapped.init(key.child(0));
        let dims = env.action_dims();
        let mut stream = RngKey::from_seed(22).stream();
        let mut a = vec![0i64; dims.len()];
        let mut obs = vec![0.0; env.obs_dim()];
        let mut lasts = 0;
        for step in 0..500 {
            assert_eq!(slab.state(0), &s, "{id} step {step}");
            wrapped.encode(&s, &mut obs);
            assert_eq!(bits(slab.observation(0)), bits(&obs), "{id} step {step}");
            assert_eq!(slab.mask(0), wrapped.mask_vec(&s).as_slice(), "{id} step {step}");
            RandomPolicy::sample_into(&dims, slab.mask(0), &mut stream, &mut a).unwrap();
            engine.step(&mut slab, &a).unwrap();
            let t = wrapped.apply(&mut s, &a);
            assert_eq!(slab.rewards()[0].to_bits(), t.reward.to_bits(), "{id} step {step}");
            assert_eq!(slab.discounts()[0].to_bits(), t.discount.to_bits(), "{id} step {step}");
            assert_eq!(slab.step_types()[0], t.step_type, "{id} step {step}");
            lasts += t.is_last() as usize;
        }
        assert_eq!(slab.state(0), &s, "{id}");
        assert_eq!(slab.reset_calls(), lasts as u64, "{id}");
    }
}

#[test]
fn rollouts_are_identical_across_thread_counts() {
    let pools: Vec<Executor> = [1, 2, 8].into_iter().map(|n| Executor::new(n).unwrap()).collect();
    for (id, env) in envs() {
        let runs: Vec<(Trajectory, Vec<purenv::envs::AnyState>)> = pools
            .iter()
            .map(|exec| {
                let engine = BatchEngine::new(&env, id.clone(), exec);
                let mut slab = engine.reset(RngKey::from_seed(5), 64).unwrap();
                let mut p = RandomPolicy::new(RngKey::from_seed(6), env.action_dims());
                let t = engine.rollout(&mut slab, &mut p, 100).unwrap();
                (t, slab.states().to_vec())
            })
            .collect();
        for r in &runs[1..] {
            assert_same(&runs[0].0, &r.0, &id);
            assert_eq!(runs[0].1, r.1, "{id}");
        }
    }
}

#[test]
fn resets_happen_only_for_finished_entries() {
    let exec = Executor::new(2).unwrap();
    let (mut quiet, mut busy) = (0, 0);
    for (id, env) in envs() {
        let engine = BatchEngine::new(&env, id.clone(), &exec);
        let mut slab = engine.reset(RngKey::from_seed(8), 32).unwrap();
        let dims = env.action_dims();
        let al = dims.len();
        let mut stream = RngKey::from_seed(9).stream();
        let mut actions = vec![0i64; 32 * al];
        for _ in 0..300 {
            for i in 0..32 {
                RandomPolicy::sample_into(&dims, slab.mask(i), &mut stream, &mut actions[i * al..(i + 1) * al]).unwrap();
            }
            let before = slab.reset_calls();
            engine.step_with(&mut slab, &actions, ResetMode::Auto).unwrap();
            let lasts = slab.step_types().iter().filter(|&&t| t == StepType::Last).count();
            assert_eq!(slab.last_step_resets(), lasts, "{id}");
            assert_eq!(slab.reset_calls() - before, lasts as u64, "{id}");
            if lasts == 0 {
                quiet += 1;
            } else {
                busy += 1;
            }
        }
    }
    assert!(quiet > 0 && busy > 0, "quiet {quiet} busy {busy}");
}

#[test]
fn freeze_mode_never_resets() {
    let exec = Executor::new(1).unwrap();
    let env = purenv::registry::make("Snake-v1").unwrap();
    let engine = BatchEngine::new(&env, "Snake-v1", &exec);
    let mut slab = engine.reset(RngKey::from_seed(1), 16).unwrap();
    for _ in 0..200 {
        engine.step_first_valid(&mut slab).unwrap();
    }
    assert_eq!(slab.reset_calls(), 0);
    assert!(slab.done_flags().iter().any(|&d| d));
}
