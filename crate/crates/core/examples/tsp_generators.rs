//! Routing instance generators: built-in distributions, mixtures, and
//! TSPLIB-style instance files.
//!
//! ```text
//! cargo run --example tsp_generators
//! ```

use purenv::generators::{write_instances, CoordinateGenerator};
use purenv::envs::Tsp;
use purenv::{Environment, RngKey};

fn spread(points: &[[f64; 2]]) -> f64 {
    let n = points.len() as f64;
    let c = points.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0] / n, a[1] + p[1] / n]);
    points.iter().map(|p| (p[0] - c[0]).hypot(p[1] - c[1])).sum::<f64>() / n
}

fn main() -> purenv::Result<()> {
    let generators = [
        CoordinateGenerator::Uniform,
        CoordinateGenerator::cluster_default(),
        CoordinateGenerator::compression_default(),
        CoordinateGenerator::explosion_default(),
        CoordinateGenerator::four_way_mixture(),
    ];
    for g in generators {
        let env = Tsp::with_generator(20, g.clone())?;
        let s = env.init(RngKey::from_seed(3));
        println!("{:12} mean distance to centroid {:.3}", g.kind(), spread(&s.coordinates));
    }

    // Instances can also come from a file; each reset picks one and subsamples it.
    let dir = std::env::temp_dir().join("purenv-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("square.tsp");
    let square: Vec<[f64; 2]> = (0..16).map(|i| [(i % 4) as f64, (i / 4) as f64]).collect();
    write_instances(&path, &[square])?;
    let env = Tsp::with_generator(6, CoordinateGenerator::from_file(&path)?)?;
    let s = env.init(RngKey::from_seed(0));
    println!("\nfrom {}: {:?}", path.display(), s.coordinates);
    Ok(())
}
