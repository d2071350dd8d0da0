//! Reset an environment, step it with random legal actions, and print each
//! time step.
//!
//! ```text
//! cargo run --example quickstart
//! ```

use purenv::batch::RandomPolicy;
use purenv::envs::Snake;
use purenv::{Environment, RngKey, StepType};

fn main() -> purenv::Result<()> {
    let env = Snake::new(6, 200)?;
    let (reset_key, action_key) = RngKey::from_seed(0).split2();
    let (mut state, ts) = env.reset(reset_key);
    println!("{:?} reward {} discount {}", ts.step_type, ts.reward, ts.discount);

    // Environments are pure: `step` returns a new state and leaves the old one alone.
    let mut stream = action_key.stream();
    let mut action = [0i64];
    let mut total = 0.0;
    loop {
        RandomPolicy::sample_into(&env.action_dims(), &env.mask_vec(&state), &mut stream, &mut action)?;
        let (next, ts) = env.step(&state, &action)?;
        total += ts.reward;
        if ts.reward != 0.0 || ts.step_type == StepType::Last {
            println!("step {:3}: {:?} reward {} discount {}", next.step_count, ts.step_type, ts.reward, ts.discount);
        }
        state = next;
        if ts.step_type == StepType::Last {
            break;
        }
    }
    println!("return {total}, snake length {}", state.body.len());

    // Stepping a finished episode is an error, not a silent reset.
    assert!(env.step(&state, &action).is_err());
    Ok(())
}
