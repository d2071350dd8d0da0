//! Schedule a small job-shop instance with a shortest-operation-first rule and
//! compare against the makespan lower bound.
//!
//! ```text
//! cargo run --example jobshop
//! ```

use purenv::envs::jobshop::parse_instance;
use purenv::envs::JobShop;
use purenv::render::Render;
use purenv::{Environment, RngKey, StepType};

const INSTANCE: &str = "\
# machine duration pairs, one job per line
0 3 1 2 2 2
0 2 2 1 1 4
1 4 2 3
";

fn main() -> purenv::Result<()> {
    let instance = parse_instance(INSTANCE)?;
    let env = JobShop::with_instance(instance.clone(), 3)?;
    let mut state = env.init(RngKey::from_seed(0));
    let mut makespan = 0;
    loop {
        // Each idle machine takes the startable job with the shortest next operation.
        let mut action = vec![env.no_op(); env.num_machines()];
        for (m, a) in action.iter_mut().enumerate() {
            let candidate = (0..env.num_jobs())
                .filter(|&j| env.check_action(&state, &single(&env, m, j)).is_ok())
                .min_by_key(|&j| state.durations[j][state.op_index[j]]);
            if let Some(j) = candidate {
                *a = j as i64;
            }
        }
        let (next, ts) = env.step(&state, &action)?;
        state = next;
        makespan += 1;
        if ts.step_type == StepType::Last {
            break;
        }
    }
    let machine_load = (0..3).map(|m| instance.iter().flatten().filter(|op| op.0 == m).map(|op| op.1).sum::<u32>());
    let job_length = instance.iter().map(|job| job.iter().map(|op| op.1).sum::<u32>());
    let bound = machine_load.chain(job_length).max().unwrap();
    println!("makespan {makespan}, lower bound {bound}");
    env.render(&state).save("jobshop".as_ref(), "final")?;
    Ok(())
}

fn single(env: &JobShop, machine: usize, job: usize) -> Vec<i64> {
    let mut a = vec![env.no_op(); env.num_machines()];
    a[machine] = job as i64;
    a
}
