//! Versioned environment registry.
//!
//! Ids have the form `<Name>-v<N>`. Each descriptor carries a builder and a
//! typed default parameter list; `make` applies overrides on top of the defaults,
//! rejecting unknown keys and values of the wrong type.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::envs::{AnyEnv, Cvrp, Game2048, JobShop, Knapsack, Maze, RubiksCube, SlidingTilePuzzle, Snake, Tsp};
use crate::error::{Error, Result};
use crate::generators::CoordinateGenerator;

#[derive(Clone, Debug, PartialEq)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl ParamValue {
    fn type_name(&self) -> &'static str {
        match self {
            ParamValue::Int(_) => "integer",
            ParamValue::Float(_) => "float",
            ParamValue::Bool(_) => "bool",
            ParamValue::Str(_) => "string",
        }
    }

    /// Parses `text` as the same type as `self`.
    pub fn parse_like(&self, key: &str, text: &str) -> Result<ParamValue> {
        let bad = || Error::invalid_arg(format!("parameter `{key}` expects {}, got `{text}`", self.type_name()));
        Ok(match self {
            ParamValue::Int(_) => ParamValue::Int(text.trim().parse().map_err(|_| bad())?),
            ParamValue::Float(_) => ParamValue::Float(text.trim().parse().map_err(|_| bad())?),
            ParamValue::Bool(_) => ParamValue::Bool(text.trim().parse().map_err(|_| bad())?),
            ParamValue::Str(_) => ParamValue::Str(text.to_string()),
        })
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Bool(v) => write!(f, "{v}"),
            ParamValue::Str(v) => write!(f, "{v:?}"),
        }
    }
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Float(v)
    }
}

impl From<bool> for ParamValue {
    fn from(v: bool) -> Self {
        ParamValue::Bool(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Str(v.to_string())
    }
}

/// Named parameters in declaration order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params(Vec<(String, ParamValue)>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<ParamValue>) -> Self {
        self.set(key, value);
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<ParamValue>) {
        let value = value.into();
        match self.0.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.0.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&ParamValue> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ParamValue)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn int(&self, key: &str) -> Result<i64> {
        match self.get(key) {
            Some(ParamValue::Int(v)) => Ok(*v),
            _ => Err(Error::invalid_arg(format!("missing integer parameter `{key}`"))),
        }
    }

    /// A non-negative integer that fits `T`.
    pub fn count<T: TryFrom<i64>>(&self, key: &str) -> Result<T> {
        let v = self.int(key)?;
        T::try_from(v).map_err(|_| Error::invalid_arg(format!("parameter `{key}` out of range: {v}")))
    }

    pub fn float(&self, key: &str) -> Result<f64> {
        match self.get(key) {
            Some(ParamValue::Float(v)) => Ok(*v),
            Some(ParamValue::Int(v)) => Ok(*v as f64),
            _ => Err(Error::invalid_arg(format!("missing float parameter `{key}`"))),
        }
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            Some(ParamValue::Bool(v)) => Ok(*v),
            _ => Err(Error::invalid_arg(format!("missing bool parameter `{key}`"))),
        }
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        match self.get(key) {
            Some(ParamValue::Str(v)) => Ok(v),
            _ => Err(Error::invalid_arg(format!("missing string parameter `{key}`"))),
        }
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("-");
        }
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

pub type Builder = Arc<dyn Fn(&Params) -> Result<AnyEnv> + Send + Sync>;

#[derive(Clone)]
pub struct EnvDescriptor {
    pub id: String,
    pub category: String,
    pub objective: String,
    pub default_params: Params,
    pub builder: Builder,
}

impl fmt::Debug for EnvDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnvDescriptor")
            .field("id", &self.id)
            .field("category", &self.category)
            .field("default_params", &self.default_params)
            .finish_non_exhaustive()
    }
}

impl EnvDescriptor {
    pub fn new(
        id: &str,
        category: &str,
        objective: &str,
        default_params: Params,
        builder: impl Fn(&Params) -> Result<AnyEnv> + Send + Sync + 'static,
    ) -> Self {
        Self {
            id: id.to_string(),
            category: category.to_string(),
            objective: objective.to_string(),
            default_params,
            builder: Arc::new(builder),
        }
    }

    /// Defaults with `overrides` applied; unknown keys and wrong types are errors.
    pub fn resolve(&self, overrides: &Params) -> Result<Params> {
        let mut params = self.default_params.clone();
        for (k, v) in overrides.iter() {
            let default = self.default_params.get(k).ok_or_else(|| {
                let known: Vec<&str> = self.default_params.iter().map(|(k, _)| k).collect();
                Error::invalid_arg(format!("unknown parameter `{k}` for {} (known: {})", self.id, known.join(", ")))
            })?;
            let v = match (default, v) {
                (ParamValue::Float(_), ParamValue::Int(i)) => ParamValue::Float(*i as f64),
                (d, ParamValue::Str(s)) if !matches!(d, ParamValue::Str(_)) => d.parse_like(k, s)?,
                (d, v) if std::mem::discriminant(d) == std::mem::discriminant(v) => v.clone(),
                (d, v) => {
                    return Err(Error::invalid_arg(format!(
                        "parameter `{k}` expects {}, got {}",
                        d.type_name(),
                        v.type_name()
                    )))
                }
            };
            params.set(k, v);
        }
        Ok(params)
    }
}

/// Splits `Name-vN` into the name and version.
pub fn parse_id(id: &str) -> Result<(&str, u32)> {
    let bad = || Error::invalid_arg(format!("environment id `{id}` must end in -v<N>"));
    let (name, version) = id.rsplit_once("-v").ok_or_else(bad)?;
    if name.is_empty() || version.is_empty() || !version.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    Ok((name, version.parse().map_err(|_| bad())?))
}

#[derive(Clone, Debug, Default)]
pub struct Registry {
    entries: Vec<EnvDescriptor>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The ten built-in environments.
    pub fn standard() -> Self {
        let mut r = Self::new();
        for d in standard_descriptors() {
            r.register(d).expect("built-in ids are unique");
        }
        r
    }

    pub fn register(&mut self, desc: EnvDescriptor) -> Result<()> {
        parse_id(&desc.id)?;
        if self.get(&desc.id).is_some() {
            return Err(Error::Conflict(format!("environment `{}` is already registered", desc.id)));
        }
        self.entries.push(desc);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&EnvDescriptor> {
        self.entries.iter().find(|d| d.id == id)
    }

    pub fn descriptors(&self) -> &[EnvDescriptor] {
        &self.entries
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|d| d.id.as_str()).collect()
    }

    pub fn describe(&self, id: &str) -> Result<&EnvDescriptor> {
        parse_id(id)?;
        self.get(id).ok_or_else(|| Error::NotFound { id: id.to_string(), suggestions: self.suggest(id) })
    }

    pub fn make(&self, id: &str, overrides: &Params) -> Result<AnyEnv> {
        let desc = self.describe(id)?;
        (desc.builder)(&desc.resolve(overrides)?)
    }

    /// Applies `key=value` overrides given as text.
    pub fn make_from_strs(&self, id: &str, overrides: &[(String, String)]) -> Result<AnyEnv> {
        let mut params = Params::new();
        for (k, v) in overrides {
            params.set(k, ParamValue::Str(v.clone()));
        }
        self.make(id, &params)
    }

    /// Up to three registered ids closest to `id`; same-name ids first.
    pub fn suggest(&self, id: &str) -> Vec<String> {
        let name = parse_id(id).map(|(n, _)| n).unwrap_or(id);
        let mut scored: Vec<(usize, &str)> = self
            .entries
            .iter()
            .map(|d| {
                let same_name = parse_id(&d.id).map(|(n, _)| n == name).unwrap_or(false);
                let dist = strsim::levenshtein(&id.to_ascii_lowercase(), &d.id.to_ascii_lowercase());
                (if same_name { 0 } else { 1 + dist }, d.id.as_str())
            })
            .filter(|&(score, other)| score == 0 || score - 1 <= other.len().max(id.len()) / 2)
            .collect();
        scored.sort();
        scored.into_iter().take(3).map(|(_, s)| s.to_string()).collect()
    }
}

fn global() -> &'static Registry {
    static REGISTRY: OnceLock<Registry> = OnceLock::new();
    REGISTRY.get_or_init(Registry::standard)
}

/// Builds a built-in environment with its default parameters.
pub fn make(id: &str) -> Result<AnyEnv> {
    global().make(id, &Params::new())
}

pub fn make_with(id: &str, overrides: &Params) -> Result<AnyEnv> {
    global().make(id, overrides)
}

pub fn standard_registry() -> &'static Registry {
    global()
}

/// Resolves the routing generator parameters `generator` and `instances`.
fn coordinate_generator(p: &Params) -> Result<CoordinateGenerator> {
    let path = p.str("instances")?;
    if !path.is_empty() {
        return CoordinateGenerator::from_file(path);
    }
    match p.str("generator")? {
        "uniform" => Ok(CoordinateGenerator::Uniform),
        "cluster" => Ok(CoordinateGenerator::cluster_default()),
        "compression" => Ok(CoordinateGenerator::compression_default()),
        "explosion" => Ok(CoordinateGenerator::explosion_default()),
        "mixture" => Ok(CoordinateGenerator::four_way_mixture()),
        other => Err(Error::invalid_arg(format!(
            "unknown generator `{other}` (expected uniform, cluster, compression, explosion or mixture)"
        ))),
    }
}

fn cube(p: &Params) -> Result<AnyEnv> {
    Ok(RubiksCube::new(p.count("cube_size")?, p.count("num_scrambles")?, p.count("time_limit")?)?.into())
}

fn standard_descriptors() -> Vec<EnvDescriptor> {
    vec![
        EnvDescriptor::new(
            "Game2048-v1",
            "logic",
            "Merge equal tiles on a 4x4 board to maximize the summed merge values",
            Params::new(),
            |_| Ok(Game2048::new().into()),
        ),
        EnvDescriptor::new(
            "RubiksCube-v0",
            "logic",
            "Return a scrambled cube to one colour per face",
            Params::new().with("cube_size", 3).with("num_scrambles", 100).with("time_limit", 200),
            cube,
        ),
        EnvDescriptor::new(
            "RubiksCube-partly-scrambled-v0",
            "logic",
            "Solve a cube scrambled by only a few moves",
            Params::new().with("cube_size", 3).with("num_scrambles", 3).with("time_limit", 20),
            cube,
        ),
        EnvDescriptor::new(
            "SlidingTilePuzzle-v0",
            "logic",
            "Slide tiles into the blank until the grid is sorted",
            Params::new().with("grid_size", 5).with("num_shuffle_moves", 200).with("time_limit", 500),
            |p| {
                Ok(SlidingTilePuzzle::new(p.count("grid_size")?, p.count("num_shuffle_moves")?, p.count("time_limit")?)?
                    .into())
            },
        ),
        EnvDescriptor::new(
            "Maze-v0",
            "routing",
            "Walk from the start cell to the target through a randomly carved maze",
            Params::new().with("num_rows", 10).with("num_cols", 10).with("time_limit", 0),
            |p| {
                let (rows, cols): (usize, usize) = (p.count("num_rows")?, p.count("num_cols")?);
                let limit: u32 = p.count("time_limit")?;
                let maze = if limit == 0 { Maze::new(rows, cols)? } else { Maze::with_time_limit(rows, cols, limit)? };
                Ok(maze.into())
            },
        ),
        EnvDescriptor::new(
            "Snake-v1",
            "routing",
            "Steer the snake to eat fruit without hitting walls or itself",
            Params::new().with("grid_size", 12).with("time_limit", 4000),
            |p| Ok(Snake::new(p.count("grid_size")?, p.count("time_limit")?)?.into()),
        ),
        EnvDescriptor::new(
            "TSP-v1",
            "routing",
            "Visit every city once and return to the start along the shortest tour",
            Params::new()
                .with("num_cities", 20)
                .with("dense_reward", false)
                .with("generator", "uniform")
                .with("instances", ""),
            |p| {
                let n = p.count("num_cities")?;
                Ok(Tsp::with_generator(n, coordinate_generator(p)?)?.dense(p.bool("dense_reward")?).into())
            },
        ),
        EnvDescriptor::new(
            "CVRP-v1",
            "routing",
            "Serve every customer's demand with one capacitated vehicle on the shortest route",
            Params::new()
                .with("num_customers", 20)
                .with("capacity", 0)
                .with("dense_reward", false)
                .with("generator", "uniform")
                .with("instances", ""),
            |p| {
                let n: usize = p.count("num_customers")?;
                let cap: u32 = p.count("capacity")?;
                let cap = if cap == 0 { crate::envs::cvrp::default_capacity(n) } else { cap };
                Ok(Cvrp::with_generator(n, cap, coordinate_generator(p)?)?.dense(p.bool("dense_reward")?).into())
            },
        ),
        EnvDescriptor::new(
            "Knapsack-v1",
            "packing",
            "Pack the most valuable subset of items within the weight budget",
            Params::new().with("num_items", 50).with("total_budget", 12.5),
            |p| Ok(Knapsack::new(p.count("num_items")?, p.float("total_budget")?)?.into()),
        ),
        EnvDescriptor::new(
            "JobShop-v0",
            "packing",
            "Schedule every job's operations on the machines to minimize the makespan",
            Params::new()
                .with("num_jobs", 5)
                .with("num_machines", 4)
                .with("max_num_ops", 4)
                .with("max_op_duration", 6)
                .with("instance", ""),
            |p| {
                let machines = p.count("num_machines")?;
                let path = p.str("instance")?;
                if !path.is_empty() {
                    let inst = crate::envs::jobshop::parse_instance(&std::fs::read_to_string(path)?)?;
                    return Ok(JobShop::with_instance(inst, machines)?.into());
                }
                Ok(JobShop::new(p.count("num_jobs")?, machines, p.count("max_num_ops")?, p.count("max_op_duration")?)?
                    .into())
            },
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Environment;

    #[test]
    fn snake_defaults_to_twelve() {
        let env = make("Snake-v1").unwrap();
        assert_eq!(env.name(), "Snake");
        assert_eq!(env.action_dims(), vec![4]);
        match env {
            AnyEnv::Snake(s) => assert_eq!(s.grid_size(), 12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_version_suggests_siblings() {
        match make("Snake-v9").unwrap_err() {
            Error::NotFound { id, suggestions } => {
                assert_eq!(id, "Snake-v9");
                assert_eq!(suggestions[0], "Snake-v1");
            }
            e => panic!("{e}"),
        }
        let msg = make("Snak-v1").unwrap_err().to_string();
        assert!(msg.contains("Snake-v1"), "{msg}");
        assert!(make("Snake").is_err());
    }

    #[test]
    fn duplicate_register_conflicts() {
        let mut r = Registry::standard();
        let d = r.get("Maze-v0").unwrap().clone();
        assert!(matches!(r.register(d), Err(Error::Conflict(_))));
        assert_eq!(r.ids().len(), 10);
    }

    #[test]
    fn overrides_are_typed() {
        let r = Registry::standard();
        let env = r.make_from_strs("Maze-v0", &[("num_rows".into(), "6".into()), ("num_cols".into(), "6".into())]).unwrap();
        match env {
            AnyEnv::Maze(m) => assert_eq!((m.rows(), m.cols(), m.time_limit()), (6, 6, 36)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(r.make_from_strs("Maze-v0", &[("rows".into(), "6".into())]).is_err());
        assert!(r.make_from_strs("Maze-v0", &[("num_rows".into(), "six".into())]).is_err());
        assert!(r.make("Maze-v0", &Params::new().with("num_rows", true)).is_err());
        assert!(r.make("TSP-v1", &Params::new().with("generator", "spiral")).is_err());
    }

    #[test]
    fn id_parsing() {
        assert_eq!(parse_id("RubiksCube-partly-scrambled-v0").unwrap(), ("RubiksCube-partly-scrambled", 0));
        assert!(parse_id("Maze-vx").is_err());
        assert!(parse_id("-v1").is_err());
    }
}
