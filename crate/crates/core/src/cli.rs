//! The `purenv` command line.
//!
//! Exit codes: 0 on success, 2 for usage errors (bad flags, unknown ids,
//! unreadable configs), 3 for failures while running.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::agent::{checkpoint, curve_csv, train, ActionSelection, MlpParams, NetPolicy, TrainConfig};
use crate::batch::{run_throughput_epoch, throughput_csv, throughput_records, BatchEngine, Executor, Policy, RandomPolicy};
use crate::env::{Environment, StepType};
use crate::envs::AnyEnv;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::registry::{standard_registry, Registry};
use crate::render::Render;
use crate::rng::RngKey;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

pub const DEFAULT_BATCH_SIZES: [usize; 5] = [1, 8, 64, 512, 4096];

#[derive(Debug, Parser)]
#[command(name = "purenv", version, about = "Batched, deterministic RL environments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List registered environments.
    List,
    /// Measure batched step throughput.
    Bench(BenchArgs),
    /// Roll out a random or checkpointed policy on one environment.
    Rollout(RolloutArgs),
    /// Train an actor-critic agent from a config file.
    Train(TrainArgs),
    /// Render one reset state to an image file.
    RenderDemo(RenderArgs),
}

#[derive(Debug, Args)]
pub struct EnvArgs {
    /// Registered environment id.
    #[arg(long = "env")]
    pub env: String,
    /// Environment parameter override, `key=value`; repeatable.
    #[arg(long = "param", value_parser = parse_kv)]
    pub params: Vec<(String, String)>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Environment ids; repeatable.
    #[arg(long = "env", required = true)]
    pub envs: Vec<String>,
    /// Comma-separated batch sizes.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_BATCH_SIZES)]
    pub batch_sizes: Vec<usize>,
    /// Steps per block, each block starting from a fresh batch reset.
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    #[arg(long, default_value_t = 500)]
    pub blocks: usize,
    /// CSV output file.
    #[arg(long)]
    pub output: PathBuf,
    /// Optional `key=value` records file.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RolloutArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    /// Greedy policy from a checkpoint; uniform random when absent.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for one image per step (`frame_00000` is the reset state).
    #[arg(long)]
    pub frames: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Receives `curve.csv` and `params.ckpt`.
    #[arg(long)]
    pub output_dir: PathBuf,
    /// Overrides the config's `env`.
    #[arg(long)]
    pub env: Option<String>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; the file is named after the environment id.
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

fn parse_kv(s: &str) -> std::result::Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}

/// Errors raised before any work starts.
struct Usage(Error);

enum Failure {
    Usage(Error),
    Runtime(Error),
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage<T>(r: Result<T>) -> std::result::Result<T, Usage> {
    r.map_err(Usage)
}

/// Parses arguments, runs the command, prints output and errors, and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut out = String::new();
    let result = execute(cli.command, &mut out);
    print!("{out}");
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn execute(cmd: Command, out: &mut String) -> std::result::Result<(), Failure> {
    let registry = standard_registry();
    match cmd {
        Command::List => {
            out.push_str(&list_table(registry));
            Ok(())
        }
        Command::Bench(a) => bench(registry, a, out),
        Command::Rollout(a) => rollout(registry, a, out),
        Command::Train(a) => train_cmd(a, out),
        Command::RenderDemo(a) => render_demo(registry, a, out),
    }
}

/// Tab-separated rows: id, category, default parameters, objective.
pub fn list_table(registry: &Registry) -> String {
    let mut s = String::from("id\tcategory\tdefaults\tobjective\n");
    for d in registry.descriptors() {
        let _ = writeln!(s, "{}\t{}\t{}\t{}", d.id, d.category, d.default_params, d.objective);
    }
    s
}

fn make(registry: &Registry, env: &EnvArgs) -> std::result::Result<AnyEnv, Usage> {
    usage(registry.make_from_strs(&env.env, &env.params))
}

fn bench(registry: &Registry, a: BenchArgs, out: &mut String) -> std::result::Result<(), Failure> {
    if a.batch_sizes.is_empty() || a.batch_sizes.contains(&0) {
        return Err(Failure::Usage(Error::InvalidArgument("batch sizes must be >= 1".into())));
    }
    if a.steps == 0 || a.blocks == 0 {
        return Err(Failure::Usage(Error::InvalidArgument("--steps and --blocks must be >= 1".into())));
    }
    let envs = a
        .envs
        .iter()
        .map(|id| usage(registry.make(id, &Default::default())).map(|e| (id.clone(), e)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let exec = usage(Executor::from_env())?;
    let mut reports = Vec::new();
    for (id, env) in &envs {
        for &b in &a.batch_sizes {
            reports.push(run_throughput_epoch(env, id, b, a.steps, a.blocks, &exec)?);
        }
    }
    let csv = throughput_csv(&reports);
    write_atomic(&a.output, csv.as_bytes())?;
    if let Some(path) = &a.records {
        write_atomic(path, throughput_records(&reports).as_bytes())?;
    }
    out.push_str(&csv);
    Ok(())
}

fn check_params_fit(params: &MlpParams, env: &AnyEnv) -> Result<()> {
    if params.obs_dim != env.obs_dim() || params.num_actions != env.mask_len() {
        return Err(Error::Checkpoint(format!(
            "network expects {} observation values and {} logits; environment has {} and {}",
            params.obs_dim,
            params.num_actions,
            env.obs_dim(),
            env.mask_len()
        )));
    }
    Ok(())
}

/// Steps one environment with auto-reset, writing the summary to `out`.
pub fn rollout_summary(
    env: &AnyEnv,
    params: Option<&MlpParams>,
    steps: usize,
    seed: u64,
    frames: Option<&Path>,
    out: &mut String,
) -> Result<()> {
    let exec = Executor::new(1)?;
    let engine = BatchEngine::new(env, env.name(), &exec);
    let (reset_key, act_key) = RngKey::from_seed(seed).split2();
    let mut slab = engine.reset(reset_key, 1)?;
    let mut policy: Box<dyn Policy + '_> = match params {
        Some(p) => Box::new(NetPolicy::new(p, env.action_dims(), act_key, ActionSelection::Greedy)?),
        None => Box::new(RandomPolicy::new(act_key, env.action_dims())),
    };
    if let Some(dir) = frames {
        std::fs::create_dir_all(dir)?;
        env.render(slab.state(0)).save(dir, "frame_00000")?;
    }
    let mut action = vec![0i64; env.action_dims().len()];
    let (mut ret, mut len, mut episodes) = (0.0, 0usize, Vec::new());
    for t in 0..steps {
        policy.act(t, slab.observations(), slab.masks(), 1, &mut action)?;
        let before = slab.state(0).clone();
        engine.step(&mut slab, &action)?;
        ret += slab.rewards()[0];
        len += 1;
        if let Some(dir) = frames {
            // A finished episode is drawn in its final state, not the fresh one.
            let shown = if slab.step_types()[0] == StepType::Last {
                let mut s = before;
                env.apply(&mut s, &action);
                s
            } else {
                slab.state(0).clone()
            };
            env.render(&shown).save(dir, &format!("frame_{:05}", t + 1))?;
        }
        if slab.step_types()[0] == StepType::Last {
            episodes.push((ret, len));
            (ret, len) = (0.0, 0);
        }
    }
    for (i, (r, l)) in episodes.iter().enumerate() {
        let _ = writeln!(out, "episode {i}: return {r} length {l}");
    }
    let mean = if episodes.is_empty() { f64::NAN } else { episodes.iter().map(|e| e.0).sum::<f64>() / episodes.len() as f64 };
    let _ = writeln!(
        out,
        "steps {steps} episodes {} mean_return {mean} unfinished_return {ret} unfinished_length {len}",
        episodes.len()
    );
    Ok(())
}

fn rollout(registry: &Registry, a: RolloutArgs, out: &mut String) -> std::result::Result<(), Failure> {
    let env = make(registry, &a.env)?;
    let params = match &a.checkpoint {
        Some(path) => {
            let p = checkpoint::load(path)?;
            check_params_fit(&p, &env)?;
            Some(p)
        }
        None => None,
    };
    rollout_summary(&env, params.as_ref(), a.steps, a.seed, a.frames.as_deref(), out)?;
    Ok(())
}

fn train_cmd(a: TrainArgs, out: &mut String) -> std::result::Result<(), Failure> {
    let mut config = usage(TrainConfig::load(&a.config))?;
    if let Some(env) = a.env {
        config.env = env;
    }
    usage(standard_registry().make_from_strs(&config.env, &config.env_params))?;
    let exec = usage(Executor::from_env())?;
    let outcome = train(&config, &exec)?;
    std::fs::create_dir_all(&a.output_dir).map_err(Error::from)?;
    let csv = curve_csv(&outcome.curve);
    write_atomic(&a.output_dir.join("curve.csv"), csv.as_bytes())?;
    checkpoint::save(&outcome.params, &a.output_dir.join("params.ckpt"))?;
    out.push_str(&csv);
    let last = outcome.final_eval();
    let _ = writeln!(
        out,
        "final greedy mean_return {} success {}; stochastic mean_return {} success {}",
        last.greedy.mean_return,
        last.greedy.success_rate(),
        last.stochastic.mean_return,
        last.stochastic.success_rate()
    );
    Ok(())
}

fn render_demo(registry: &Registry, a: RenderArgs, out: &mut String) -> std::result::Result<(), Failure> {
    let env = make(registry, &a.env)?;
    let state = env.init(RngKey::from_seed(a.seed));
    std::fs::create_dir_all(&a.output_dir).map_err(Error::from)?;
    let path = env.render(&state).save(&a.output_dir, &a.env.env)?;
    let _ = writeln!(out, "{}", path.display());
    Ok(())
}
