//! Render the reset state of every registered environment to an image file.
//!
//! ```text
//! cargo run --example render -- /tmp/renders
//! ```

use purenv::registry::{make, standard_registry};
use purenv::render::Render;
use purenv::{Environment, RngKey};

fn main() -> purenv::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "renders".into());
    for id in standard_registry().ids() {
        let env = make(id)?;
        let state = env.init(RngKey::from_seed(0));
        let path = env.render(&state).save(dir.as_ref(), id)?;
        println!("{}", path.display());
    }
    Ok(())
}
