//! Step a batch of environments in parallel with per-entry auto-reset.
//!
//! ```text
//! PURENV_NUM_THREADS=4 cargo run --release --example batched_rollout
//! ```

use purenv::batch::{BatchEngine, Executor, RandomPolicy};
use purenv::envs::Maze;
use purenv::{Environment, RngKey, StepType};

fn main() -> purenv::Result<()> {
    let exec = Executor::from_env()?;
    let env = Maze::new(6, 6)?;
    let engine = BatchEngine::new(&env, "Maze-v0", &exec);

    let mut slab = engine.reset(RngKey::from_seed(0), 256)?;
    let mut policy = RandomPolicy::new(RngKey::from_seed(1), env.action_dims());
    let traj = engine.rollout(&mut slab, &mut policy, 100)?;

    let finished = traj.step_types.iter().filter(|&&t| t == StepType::Last).count();
    let solved = traj.rewards.iter().filter(|&&r| r > 0.0).count();
    println!("{} threads, {} envs x {} steps", exec.threads(), traj.batch_size, traj.num_steps);
    println!("episodes finished: {finished}, reached the target: {solved}");
    // Only finished entries are reset; the rest keep running.
    println!("reset calls: {}", slab.reset_calls());
    println!("observation tensor: ({}, {}, {})", traj.num_steps, traj.batch_size, traj.obs_dim);

    // The same keys give the same rollout regardless of thread count.
    let single = Executor::new(1)?;
    let engine1 = BatchEngine::new(&env, "Maze-v0", &single);
    let mut slab1 = engine1.reset(RngKey::from_seed(0), 256)?;
    let mut policy1 = RandomPolicy::new(RngKey::from_seed(1), env.action_dims());
    assert_eq!(engine1.rollout(&mut slab1, &mut policy1, 100)?, traj);
    println!("identical on 1 thread");
    Ok(())
}
