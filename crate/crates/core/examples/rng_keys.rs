//! Splittable counter-based keys: every random choice is a pure function of a
//! key, so runs are reproducible however work is scheduled.
//!
//! ```text
//! cargo run --example rng_keys
//! ```

use purenv::RngKey;

fn main() -> purenv::Result<()> {
    let root = RngKey::from_seed(42);
    let keys = root.split(3)?;
    for (i, k) in keys.iter().enumerate() {
        println!("split[{i}] = {k:?}");
    }
    // `child(i)` is `split(n)[i]` for any n > i.
    assert_eq!(root.child(2), keys[2]);

    // Fold in a counter to derive per-step keys without splitting ahead of time.
    for step in 0..3 {
        println!("step {step}: randint {}", root.fold_in(step).randint(0, 100)?);
    }

    println!("uniform: {:?}", root.uniform(3, 0.0, 1.0)?);
    println!("permutation: {:?}", root.permutation(8));

    // A stream draws many words from one key; cloning forks it.
    let mut s = root.stream();
    let mut fork = s.clone();
    assert_eq!(s.next_u64(), fork.next_u64());
    Ok(())
}
