//! Batched step throughput across batch sizes.
//!
//! ```text
//! cargo run --release --example throughput -- Snake-v1
//! ```

use purenv::batch::{run_throughput_epoch, throughput_csv, Executor};
use purenv::registry::make;

fn main() -> purenv::Result<()> {
    let id = std::env::args().nth(1).unwrap_or_else(|| "Snake-v1".into());
    let env = make(&id)?;
    let exec = Executor::from_env()?;
    let mut reports = Vec::new();
    for b in [1, 8, 64, 512] {
        // Roughly constant work per batch size.
        let blocks = (4000 / b).clamp(4, 100);
        reports.push(run_throughput_epoch(&env, &id, b, 50, blocks, &exec)?);
    }
    print!("{}", throughput_csv(&reports));
    Ok(())
}
