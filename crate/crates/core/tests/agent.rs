//! Actor-critic loss, gradient and baseline behaviour through the public API.

use purenv::agent::categorical::{entropy, masked_softmax};
use purenv::agent::*;
use purenv::batch::{Executor, Trajectory};
use purenv::envs::snake::{direction_between, hamiltonian_successor};
use purenv::envs::{Maze, Snake};
use purenv::{Environment, RngKey, StepType};

fn one_step(obs: Vec<f64>, mask: Vec<bool>, action: i64) -> Trajectory {
    Trajectory {
        num_steps: 1,
        batch_size: 1,
        obs_dim: obs.len(),
        mask_len: mask.len(),
        action_len: 1,
        observations: obs,
        masks: mask,
        actions: vec![action],
        rewards: vec![1.0],
        discounts: vec![0.0],
        step_types: vec![StepType::Last],
    }
}

#[test]
fn single_legal_action_has_zero_policy_term() {
    let p = MlpParams::new(RngKey::from_seed(0), 3, 4, &[8], false).unwrap();
    let traj = one_step(vec![0.3, -1.0, 2.0], vec![false, false, true, false], 2);
    let mut dist = Factorized::new(vec![4]);
    let terms = a2c_loss(&p, &mut dist, &traj, &[1.0], &[0.0], LossWeights::default()).unwrap();
    assert!(terms.pg.abs() < 1e-15, "{}", terms.pg);
    assert_eq!(terms.entropy, 0.0);
}

#[test]
fn zero_advantage_without_entropy_leaves_the_policy_head_alone() {
    for shared in [false, true] {
        let p = MlpParams::new(RngKey::from_seed(1), 3, 4, &[8, 8], shared).unwrap();
        let traj = one_step(vec![0.3, -1.0, 2.0], vec![true, true, false, true], 1);
        let mut dist = Factorized::new(vec![4]);
        let w = LossWeights { c_pg: 1.0, c_v: 0.5, c_ent: 0.0 };
        let (_, g) = a2c_backward(&p, &mut dist, &traj, &[0.0], &[0.7], w).unwrap();
        let head = &g.layers[g.policy_head_index()];
        assert!(head.weights.iter().chain(&head.bias).all(|&v| v == 0.0));
        let vhead = &g.layers[g.value_head_index()];
        assert!(vhead.bias[0] != 0.0);
    }
}

#[test]
fn entropy_peaks_at_uniform_logits() {
    let mask = [true, false, true, true, false];
    let mut probs = [0.0; 5];
    masked_softmax(&[0.4; 5], &mask, &mut probs).unwrap();
    let max = 3f64.ln();
    assert!((entropy(&probs) - max).abs() < 1e-12);
    let mut s = RngKey::from_seed(2).stream();
    for _ in 0..1000 {
        let logits: Vec<f64> = (0..5).map(|_| s.uniform(-3.0, 3.0)).collect();
        masked_softmax(&logits, &mask, &mut probs).unwrap();
        assert!(entropy(&probs) < max);
    }
}

#[test]
fn random_baseline_stays_within_reward_bounds() {
    let maze = Maze::new(6, 6).unwrap();
    let r = random_baseline(&maze, 300, RngKey::from_seed(3), 10_000).unwrap();
    assert!(r.returns.iter().all(|&v| v == 0.0 || v == 1.0));
    assert!(r.success_rate() > 0.0 && r.success_rate() < 1.0);
    let snake = Snake::new(6, 200).unwrap();
    let r = random_baseline(&snake, 300, RngKey::from_seed(4), 10_000).unwrap();
    assert!(r.returns.iter().all(|&v| (0.0..=35.0).contains(&v)));
    assert!(r.stderr > 0.0);
}

#[test]
fn maze_with_adjacent_target_is_solvable_in_one_step() {
    let env = Maze::new(4, 4).unwrap();
    let s = env.state_from_layout(vec![false; 16], (1, 1), (1, 2), RngKey::from_seed(0)).unwrap();
    let mut rewards = Vec::new();
    for a in 0..4 {
        let (_, ts) = env.step(&s, &[a]).unwrap();
        rewards.push(ts.reward);
    }
    rewards.sort_by(f64::total_cmp);
    assert_eq!(rewards, [0.0, 0.0, 0.0, 1.0]);
}

#[test]
fn scripted_snake_beats_random_play_on_4x4() {
    let env = Snake::new(4, 1000).unwrap();
    let random = random_baseline(&env, 500, RngKey::from_seed(5), 10_000).unwrap();
    let mut s = env.init(RngKey::from_seed(6));
    let mut scripted = 0.0;
    loop {
        let head = s.head() as usize;
        let (next, ts) = env.step(&s, &[direction_between(4, head, hamiltonian_successor(4, head)) as i64]).unwrap();
        scripted += ts.reward;
        s = next;
        if ts.step_type == StepType::Last {
            break;
        }
    }
    assert_eq!(scripted, 15.0);
    assert!(random.mean_return < scripted);
}

fn tiny_config() -> TrainConfig {
    TrainConfig::parse(
        "env = Snake-v1\nenv.grid_size = 5\nbatch_size = 8\nrollout_length = 5\nepochs = 2\n\
         learner_steps_per_epoch = 10\neval_episodes = 8\neval_max_steps = 50\nhidden = 16\nlearning_rate = 0.1\n",
    )
    .unwrap()
}

#[test]
fn identical_configs_give_identical_loss_sequences() {
    let exec = Executor::new(1).unwrap();
    let a = train(&tiny_config(), &exec).unwrap();
    let b = train(&tiny_config(), &exec).unwrap();
    assert_eq!(a.losses.len(), 20);
    let bits = |o: &TrainOutcome| -> Vec<[u64; 4]> {
        o.losses.iter().map(|l| [l.total.to_bits(), l.pg.to_bits(), l.v.to_bits(), l.entropy.to_bits()]).collect()
    };
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.params, b.params);
    assert_eq!(curve_csv(&a.curve), curve_csv(&b.curve));
    assert_eq!(a.curve.last().unwrap().env_steps, 2 * 10 * 5 * 8);
}
