//! Browse the environment registry and build environments by id.
//!
//! ```text
//! cargo run --example registry
//! ```

use purenv::registry::{standard_registry, Params};
use purenv::{Environment, RngKey};

fn main() -> purenv::Result<()> {
    let registry = standard_registry();
    for d in registry.descriptors() {
        println!("{:32} {:14} {}", d.id, d.category, d.default_params);
    }

    // Overrides are checked against the defaults' types.
    let maze = registry.make("Maze-v0", &Params::new().with("num_rows", 8).with("num_cols", 8))?;
    let (state, ts) = maze.reset(RngKey::from_seed(1));
    println!("\n{}: obs_dim {}, actions {:?}", maze.name(), maze.obs_dim(), maze.action_dims());
    println!("observation spec: {:?}", maze.observation_spec());
    maze.observation_spec().validate(&ts.observation).expect("reset observation matches its spec");
    println!("legal actions at reset: {:?}", maze.mask_vec(&state));

    // Typos get suggestions.
    if let Err(e) = registry.make("Snak-v1", &Params::new()) {
        println!("\n{e}");
    }
    Ok(())
}
