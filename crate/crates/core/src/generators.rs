//! Initial-state distributions for routing instances.
//!
//! A [`CoordinateGenerator`] maps a key to city coordinates in the unit square.
//! Routing environments hold one and call it from `init`; the transition code is
//! the same whichever generator produced the instance.
//!
//! Instance files use a small TSPLIB subset:
//!
//! ```text
//! NAME: example
//! DIMENSION: 3
//! NODE_COORD_SECTION
//! 1 0.0 0.0
//! 2 4.0 0.0
//! 3 4.0 3.0
//! EOF
//! ```
//!
//! Keys are case-insensitive, unknown header lines are ignored, and several
//! instances may follow each other in one file.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::{KeyStream, RngKey};

pub type Point = [f64; 2];

pub const DEFAULT_CLUSTER_RADIUS: f64 = 0.15;
pub const DEFAULT_COMPRESSION_THICKNESS: f64 = 0.02;
pub const DEFAULT_EXPLOSION_PUSH: f64 = 0.3;

fn clip(p: Point) -> Point {
    [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)]
}

fn check_point(name: &str, p: Point) -> Result<()> {
    if p.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid_arg(format!("{name} must be finite")))
    }
}

/// Uniform points in `[0, 1)^2`.
pub fn uniform_generate(key: RngKey, n: usize) -> Vec<Point> {
    let mut s = key.stream();
    (0..n).map(|_| [s.unit(), s.unit()]).collect()
}

fn disk_offset(s: &mut KeyStream) -> Point {
    loop {
        let (u, v) = (2.0 * s.unit() - 1.0, 2.0 * s.unit() - 1.0);
        if u * u + v * v <= 1.0 {
            return [u, v];
        }
    }
}

/// Points uniform over the disk of `radius` around `center`, then clipped.
pub fn cluster_generate(key: RngKey, n: usize, center: Point, radius: f64) -> Result<Vec<Point>> {
    check_point("center", center)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid_arg("cluster radius must be positive"));
    }
    Ok(cluster_unclipped(key, n, center, radius).into_iter().map(clip).collect())
}

/// The cluster draw before clipping; exposed for geometry checks.
pub fn cluster_unclipped(key: RngKey, n: usize, center: Point, radius: f64) -> Vec<Point> {
    let mut s = key.stream();
    (0..n)
        .map(|_| {
            let [u, v] = disk_offset(&mut s);
            [center[0] + radius * u, center[1] + radius * v]
        })
        .collect()
}

/// Points spread along a segment with a uniform perpendicular jitter, clipped.
pub fn compression_generate(key: RngKey, n: usize, line: (Point, Point), thickness: f64) -> Result<Vec<Point>> {
    let (a, b) = line;
    check_point("line start", a)?;
    check_point("line end", b)?;
    if !(thickness >= 0.0 && thickness.is_finite()) {
        return Err(Error::invalid_arg("thickness must be >= 0"));
    }
    let d = [b[0] - a[0], b[1] - a[1]];
    let len = d[0].hypot(d[1]);
    if len == 0.0 {
        return Err(Error::invalid_arg("compression line endpoints must differ"));
    }
    let perp = [-d[1] / len, d[0] / len];
    let mut s = key.stream();
    Ok((0..n)
        .map(|_| {
            let t = s.unit();
            let off = thickness * (2.0 * s.unit() - 1.0);
            clip([a[0] + t * d[0] + off * perp[0], a[1] + t * d[1] + off * perp[1]])
        })
        .collect())
}

/// Uniform points pushed radially away from `reference` by `min_push`, clipped.
pub fn explosion_generate(key: RngKey, n: usize, reference: Point, min_push: f64) -> Result<Vec<Point>> {
    check_point("reference", reference)?;
    if !(min_push >= 0.0 && min_push.is_finite()) {
        return Err(Error::invalid_arg("min_push must be >= 0"));
    }
    Ok(uniform_generate(key, n)
        .into_iter()
        .map(|p| {
            if min_push == 0.0 {
                return p;
            }
            let d = [p[0] - reference[0], p[1] - reference[1]];
            let r = d[0].hypot(d[1]);
            let dir = if r > 0.0 { [d[0] / r, d[1] / r] } else { [1.0, 0.0] };
            clip([p[0] + min_push * dir[0], p[1] + min_push * dir[1]])
        })
        .collect())
}

/// Min-max scales each axis to `[0, 1]`; a degenerate axis maps to 0.
pub fn normalize(points: &[Point]) -> Vec<Point> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    points
        .iter()
        .map(|p| {
            std::array::from_fn(|k| if hi[k] > lo[k] { (p[k] - lo[k]) / (hi[k] - lo[k]) } else { 0.0 })
        })
        .collect()
}

/// `k` distinct cities chosen by key, in their original order.
pub fn subsample(key: RngKey, points: &[Point], k: usize) -> Result<Vec<Point>> {
    if k > points.len() {
        return Err(Error::invalid_arg(format!("cannot take {k} cities from an instance of {}", points.len())));
    }
    let mut chosen = key.permutation(points.len());
    chosen.truncate(k);
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| points[i]).collect())
}

/// Parses raw (unnormalized) instances.
pub fn parse_instances(text: &str) -> Result<Vec<Vec<Point>>> {
    let mut out = Vec::new();
    let mut dimension: Option<usize> = None;
    let mut coords: Option<Vec<Point>> = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let upper = line.to_ascii_uppercase();
        if upper == "EOF" {
            let pts = coords.take().ok_or(Error::Parse { line: line_no, message: "EOF before NODE_COORD_SECTION".into() })?;
            if let Some(d) = dimension.take() {
                if d != pts.len() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("DIMENSION {d} but {} coordinates", pts.len()),
                    });
                }
            }
            out.push(pts);
            continue;
        }
        if let Some(pts) = coords.as_mut() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse { line: line_no, message: format!("expected `<index> <x> <y>`, got `{line}`") });
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse { line: line_no, message: format!("invalid number `{s}`") })
            };
            fields[0]
                .parse::<i64>()
                .map_err(|_| Error::Parse { line: line_no, message: format!("invalid index `{}`", fields[0]) })?;
            pts.push([parse(fields[1])?, parse(fields[2])?]);
            continue;
        }
        if upper == "NODE_COORD_SECTION" {
            coords = Some(Vec::new());
            continue;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.trim().eq_ignore_ascii_case("DIMENSION") {
                let d = v.trim().parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid DIMENSION `{}`", v.trim()),
                })?;
                dimension = Some(d);
            }
            continue;
        }
        return Err(Error::Parse { line: line_no, message: format!("unrecognized line `{line}`") });
    }
    if coords.is_some() {
        return Err(Error::Parse { line: last_line, message: "missing EOF".into() });
    }
    if out.is_empty() {
        return Err(Error::Parse { line: last_line.max(1), message: "no instances found".into() });
    }
    Ok(out)
}

/// Reads every instance in `path`, min-max normalized per instance.
pub fn load_instances(path: impl AsRef<Path>) -> Result<Vec<Vec<Point>>> {
    let text = fs::read_to_string(path)?;
    Ok(parse_instances(&text)?.iter().map(|p| normalize(p)).collect())
}

pub fn format_instances(instances: &[Vec<Point>]) -> String {
    let mut s = String::new();
    for (i, inst) in instances.iter().enumerate() {
        let _ = writeln!(s, "NAME: instance_{i}");
        let _ = writeln!(s, "DIMENSION: {}", inst.len());
        s.push_str("NODE_COORD_SECTION\n");
        for (j, p) in inst.iter().enumerate() {
            let _ = writeln!(s, "{} {:?} {:?}", j + 1, p[0], p[1]);
        }
        s.push_str("EOF\n");
    }
    s
}

pub fn write_instances(path: impl AsRef<Path>, instances: &[Vec<Point>]) -> Result<()> {
    crate::io::write_atomic(path.as_ref(), format_instances(instances).as_bytes())
}

/// Which generator family, with its parameters.
#[derive(Clone, Debug, Default)]
pub enum CoordinateGenerator {
    #[default]
    Uniform,
    Cluster { center: Point, radius: f64 },
    Compression { start: Point, end: Point, thickness: f64 },
    Explosion { reference: Point, min_push: f64 },
    FromFile { instances: Arc<Vec<Vec<Point>>> },
    Mixture { components: Vec<CoordinateGenerator>, weights: Vec<f64> },
}

impl CoordinateGenerator {
    pub fn cluster_default() -> Self {
        CoordinateGenerator::Cluster { center: [0.5, 0.5], radius: DEFAULT_CLUSTER_RADIUS }
    }

    pub fn compression_default() -> Self {
        CoordinateGenerator::Compression { start: [0.1, 0.1], end: [0.9, 0.9], thickness: DEFAULT_COMPRESSION_THICKNESS }
    }

    pub fn explosion_default() -> Self {
        CoordinateGenerator::Explosion { reference: [0.5, 0.5], min_push: DEFAULT_EXPLOSION_PUSH }
    }

    /// Uniform, cluster, compression and explosion with equal weights.
    pub fn four_way_mixture() -> Self {
        CoordinateGenerator::Mixture {
            components: vec![
                CoordinateGenerator::Uniform,
                Self::cluster_default(),
                Self::compression_default(),
                Self::explosion_default(),
            ],
            weights: vec![1.0; 4],
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Ok(CoordinateGenerator::FromFile { instances: Arc::new(load_instances(path)?) })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CoordinateGenerator::Uniform => "uniform",
            CoordinateGenerator::Cluster { .. } => "cluster",
            CoordinateGenerator::Compression { .. } => "compression",
            CoordinateGenerator::Explosion { .. } => "explosion",
            CoordinateGenerator::FromFile { .. } => "from_file",
            CoordinateGenerator::Mixture { .. } => "mixture",
        }
    }

    /// Checks parameters for instances of `n` cities.
    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::invalid_arg("instances need at least 2 cities"));
        }
        let probe = RngKey::from_seed(0);
        match self {
            CoordinateGenerator::Uniform => Ok(()),
            CoordinateGenerator::Cluster { center, radius } => cluster_generate(probe, 0, *center, *radius).map(|_| ()),
            CoordinateGenerator::Compression { start, end, thickness } => {
                compression_generate(probe, 0, (*start, *end), *thickness).map(|_| ())
            }
            CoordinateGenerator::Explosion { reference, min_push } => {
                explosion_generate(probe, 0, *reference, *min_push).map(|_| ())
            }
            CoordinateGenerator::FromFile { instances } => {
                if instances.is_empty() {
                    return Err(Error::invalid_arg("instance file holds no instances"));
                }
                if let Some(small) = instances.iter().find(|i| i.len() < n) {
                    return Err(Error::invalid_arg(format!(
                        "file instance with {} cities cannot provide {n}",
                        small.len()
                    )));
                }
                Ok(())
            }
            CoordinateGenerator::Mixture { components, weights } => {
                check_weights(components.len(), weights)?;
                components.iter().try_for_each(|c| c.validate(n))
            }
        }
    }

    /// Coordinates for `n` cities. Parameters must have passed [`Self::validate`].
    pub fn generate(&self, key: RngKey, n: usize) -> Vec<Point> {
        match self {
            CoordinateGenerator::Uniform => uniform_generate(key, n),
            CoordinateGenerator::Cluster { center, radius } => {
                cluster_generate(key, n, *center, *radius).expect("validated parameters")
            }
            CoordinateGenerator::Compression { start, end, thickness } => {
                compression_generate(key, n, (*start, *end), *thickness).expect("validated parameters")
            }
            CoordinateGenerator::Explosion { reference, min_push } => {
                explosion_generate(key, n, *reference, *min_push).expect("validated parameters")
            }
            CoordinateGenerator::FromFile { instances } => {
                let (pick, sample) = key.split2();
                let inst = &instances[pick.stream().index(instances.len())];
                subsample(sample, inst, n).expect("validated instance size")
            }
            CoordinateGenerator::Mixture { components, weights } => {
                let (i, gen_key) = select_component(key, weights);
                components[i].generate(gen_key, n)
            }
        }
    }
}

fn check_weights(len: usize, weights: &[f64]) -> Result<()> {
    if len == 0 || len != weights.len() {
        return Err(Error::invalid_arg(format!("mixture has {len} generators and {} weights", weights.len())));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::invalid_arg("mixture weights must be positive and finite"));
    }
    Ok(())
}

/// Picks a mixture component with probability proportional to its weight.
/// The selection uses the first key of `key.split2()`, generation the second.
pub fn select_component(key: RngKey, weights: &[f64]) -> (usize, RngKey) {
    let (select, gen) = key.split2();
    let total: f64 = weights.iter().sum();
    let u = select.stream().unit() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return (i, gen);
        }
    }
    (weights.len() - 1, gen)
}

/// One instance from a weighted mixture of generators.
pub fn mixture_reset(
    key: RngKey,
    generators: &[CoordinateGenerator],
    weights: &[f64],
    n: usize,
) -> Result<Vec<Point>> {
    check_weights(generators.len(), weights)?;
    let (i, gen_key) = select_component(key, weights);
    generators[i].validate(n)?;
    Ok(generators[i].generate(gen_key, n))
}
