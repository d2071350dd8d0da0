//! Randomized invariants of the environment contract and per-env dynamics.

use proptest::prelude::*;
use purenv::batch::RandomPolicy;
use purenv::envs::*;
use purenv::registry::{make, standard_registry};
use purenv::{Environment, RngKey, StepType, TimeStep};

fn ids() -> Vec<&'static str> {
    standard_registry().ids()
}

fn check_timestep(id: &str, env: &AnyEnv, ts: &TimeStep) {
    env.observation_spec().validate(&ts.observation).unwrap_or_else(|e| panic!("{id}: {e}"));
    match ts.step_type {
        StepType::First => assert_eq!((ts.reward, ts.discount), (0.0, 1.0), "{id}"),
        StepType::Mid => assert_eq!(ts.discount, 1.0, "{id}"),
        StepType::Last => assert!(ts.discount == 0.0 || ts.discount == 1.0, "{id}"),
    }
}

/// Random play with explicit resets; every emitted step is checked.
fn play(id: &str, env: &AnyEnv, seed: u64, steps: usize) {
    let dims = env.action_dims();
    let mut stream = RngKey::from_seed(seed).fold_in(1).stream();
    let (mut s, ts) = env.reset(RngKey::from_seed(seed));
    check_timestep(id, env, &ts);
    let mut a = vec![0i64; dims.len()];
    for _ in 0..steps {
        RandomPolicy::sample_into(&dims, &env.mask_vec(&s), &mut stream, &mut a).unwrap();
        let (next, ts) = env.step(&s, &a).unwrap_or_else(|e| panic!("{id}: {e}"));
        check_timestep(id, env, &ts);
        s = if ts.step_type == StepType::Last {
            assert!(env.step(&next, &a).is_err(), "{id}: stepping a finished episode");
            let (fresh, first) = env.reset(env.state_key(&next).child(7));
            check_timestep(id, env, &first);
            fresh
        } else {
            next
        };
    }
}

#[test]
fn observations_conform_to_specs_over_1000_steps() {
    for id in ids() {
        play(id, &make(id).unwrap(), 0, 1000);
    }
}

/// An action is accepted iff every component is marked legal.
fn mask_soundness(id: &str, env: &AnyEnv, seed: u64, steps: usize) {
    let dims = env.action_dims();
    let mut stream = RngKey::from_seed(seed).stream();
    let mut s = env.init(RngKey::from_seed(seed).fold_in(2));
    let mut a = vec![0i64; dims.len()];
    for _ in 0..steps {
        let mask = env.mask_vec(&s);
        for _ in 0..4 {
            let probe: Vec<i64> = dims.iter().map(|&n| stream.index(n) as i64).collect();
            let mut off = 0;
            let legal = dims.iter().zip(&probe).all(|(&n, &p)| {
                let ok = mask[off + p as usize];
                off += n;
                ok
            });
            let before = s.clone();
            assert_eq!(env.step(&s, &probe).is_ok(), legal, "{id}: {probe:?}");
            assert_eq!(s, before, "{id}: step mutated its input");
        }
        assert!(env.step(&s, &vec![-1; dims.len()]).is_err(), "{id}");
        assert!(env.step(&s, &dims.iter().map(|&n| n as i64).collect::<Vec<_>>()).is_err(), "{id}");
        RandomPolicy::sample_into(&dims, &mask, &mut stream, &mut a).unwrap();
        let (next, ts) = env.step(&s, &a).unwrap();
        s = if ts.step_type == StepType::Last { env.init(env.state_key(&next).child(3)) } else { next };
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_play_respects_the_step_contract(env_idx in 0usize..10, seed in any::<u64>()) {
        let id = ids()[env_idx];
        play(id, &make(id).unwrap(), seed, 200);
    }

    #[test]
    fn masks_are_sound_and_complete(env_idx in 0usize..10, seed in any::<u64>()) {
        let id = ids()[env_idx];
        mask_soundness(id, &make(id).unwrap(), seed, 60);
    }

    #[test]
    fn tsp_return_is_invariant_to_relabelling(seed in any::<u64>(), n in 3usize..12) {
        let env = Tsp::new(n).unwrap();
        let s = env.init(RngKey::from_seed(seed));
        let order = RngKey::from_seed(seed).fold_in(1).permutation(n);
        let relabel = RngKey::from_seed(seed).fold_in(2).permutation(n);
        let mut coords = vec![[0.0; 2]; n];
        for (i, &p) in relabel.iter().enumerate() {
            coords[p] = s.coordinates[i];
        }
        let t = env.state_from_coordinates(coords, RngKey::from_seed(0)).unwrap();
        let total = |mut st: TspState, actions: Vec<usize>| {
            actions.into_iter().map(|c| env.apply(&mut st, &[c as i64]).reward).sum::<f64>()
        };
        let a = total(s.clone(), order.clone());
        let b = total(t, order.iter().map(|&c| relabel[c]).collect());
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn knapsack_never_exceeds_capacity(seed in any::<u64>(), n in 1usize..30, cap in 0.5f64..8.0) {
        if cap < 1.0 {
            prop_assert!(Knapsack::new(n, cap).is_err());
            return Ok(());
        }
        let env = Knapsack::new(n, cap).unwrap();
        let mut s = env.init(RngKey::from_seed(seed));
        let mut stream = RngKey::from_seed(seed).fold_in(1).stream();
        let mut total = 0.0;
        let mut a = [0i64];
        loop {
            RandomPolicy::sample_into(&env.action_dims(), &env.mask_vec(&s), &mut stream, &mut a).unwrap();
            let t = env.apply(&mut s, &a);
            total += t.reward;
            prop_assert!(s.packed_weight() <= cap);
            if t.is_last() {
                break;
            }
        }
        prop_assert!((total - s.packed_value()).abs() <= 1e-12 * s.packed_value().max(1.0));
    }

    #[test]
    fn jobshop_schedules_are_feasible(seed in any::<u64>(), jobs in 1usize..6, machines in 1usize..4) {
        let env = JobShop::new(jobs, machines, 3, 4).unwrap();
        let mut s = env.init(RngKey::from_seed(seed));
        let mut stream = RngKey::from_seed(seed).fold_in(1).stream();
        let mut a = vec![0i64; machines];
        let (mut ret, mut steps) = (0.0, 0);
        loop {
            let before = s.clone();
            RandomPolicy::sample_into(&env.action_dims(), &env.mask_vec(&s), &mut stream, &mut a).unwrap();
            let t = env.apply(&mut s, &a);
            ret += t.reward;
            steps += 1;
            let mut seen = vec![false; jobs];
            for (m, j) in s.machine_job.iter().enumerate() {
                if let Some(j) = *j {
                    prop_assert!(!std::mem::replace(&mut seen[j], true), "job {} on two machines", j);
                    prop_assert_eq!(s.machines_required[j][s.op_index[j]], m);
                }
            }
            // Completed-operation counts only grow, one at a time, so op k runs only after op k-1.
            for j in 0..jobs {
                prop_assert!(s.op_index[j] >= before.op_index[j] && s.op_index[j] <= before.op_index[j] + 1);
            }
            if t.is_last() {
                prop_assert!(s.all_finished() || t.discount == 1.0);
                if s.all_finished() {
                    prop_assert_eq!(ret, -(steps as f64));
                }
                break;
            }
        }
    }

    #[test]
    fn sliding_tile_rewards_telescope(seed in any::<u64>()) {
        let env = SlidingTilePuzzle::new(3, 30, 60).unwrap();
        let mut s = env.init(RngKey::from_seed(seed));
        let start = env.correct_tiles(&s.tiles) as f64;
        let mut stream = RngKey::from_seed(seed).fold_in(1).stream();
        let (mut total, mut a) = (0.0, [0i64]);
        loop {
            RandomPolicy::sample_into(&env.action_dims(), &env.mask_vec(&s), &mut stream, &mut a).unwrap();
            let t = env.apply(&mut s, &a);
            total += t.reward;
            if t.is_last() {
                break;
            }
        }
        prop_assert_eq!(total, env.correct_tiles(&s.tiles) as f64 - start);
    }

    #[test]
    fn snake_length_tracks_fruit(seed in any::<u64>(), g in 3usize..9) {
        let env = Snake::new(g, 500).unwrap();
        let mut s = env.init(RngKey::from_seed(seed));
        let mut stream = RngKey::from_seed(seed).fold_in(1).stream();
        let (mut total, mut a) = (0.0, [0i64]);
        loop {
            RandomPolicy::sample_into(&env.action_dims(), &env.mask_vec(&s), &mut stream, &mut a).unwrap();
            let t = env.apply(&mut s, &a);
            total += t.reward;
            prop_assert_eq!(s.body.len(), 1 + s.fruits_eaten as usize);
            if t.is_last() {
                break;
            }
        }
        prop_assert_eq!(total, s.fruits_eaten as f64);
    }

    #[test]
    fn maze_returns_are_zero_or_one(seed in any::<u64>()) {
        let env = Maze::new(6, 6).unwrap();
        let mut s = env.init(RngKey::from_seed(seed));
        let mut stream = RngKey::from_seed(seed).fold_in(1).stream();
        let (mut total, mut a) = (0.0, [0i64]);
        loop {
            RandomPolicy::sample_into(&env.action_dims(), &env.mask_vec(&s), &mut stream, &mut a).unwrap();
            let t = env.apply(&mut s, &a);
            total += t.reward;
            if t.is_last() {
                break;
            }
        }
        prop_assert!(total == 0.0 || total == 1.0);
    }
}
