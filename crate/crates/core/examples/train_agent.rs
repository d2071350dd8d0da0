//! Trains the actor-critic agent from a config file and prints the learning
//! curve next to a random-policy baseline.
//!
//! ```text
//! cargo run --release --example train_agent -- configs/maze_6x6.cfg
//! ```

use std::path::PathBuf;
use std::time::Instant;

use purenv::agent::{curve_csv, random_baseline, train, TrainConfig};
use purenv::batch::Executor;
use purenv::registry::standard_registry;
use purenv::RngKey;

fn main() -> purenv::Result<()> {
    let path: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "configs/maze_6x6.cfg".into()).into();
    let config = TrainConfig::load(&path)?;
    let env = standard_registry().make_from_strs(&config.env, &config.env_params)?;
    let baseline = random_baseline(&env, config.eval_episodes, RngKey::from_seed(config.seed).child(9), config.eval_max_steps)?;
    println!(
        "random policy: mean return {:.4} +- {:.4}, success {:.3}",
        baseline.mean_return,
        baseline.stderr,
        baseline.success_rate()
    );

    let start = Instant::now();
    let out = train(&config, &Executor::from_env()?)?;
    print!("{}", curve_csv(&out.curve));
    let last = out.final_eval();
    println!(
        "trained greedy: mean return {:.4}, success {:.3}; stochastic: {:.4}; {:.1}s",
        last.greedy.mean_return,
        last.greedy.success_rate(),
        last.stochastic.mean_return,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
