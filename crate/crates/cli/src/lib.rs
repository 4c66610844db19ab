//! Command implementations behind the `tactile-nav` binary.
//!
//! Every command returns a process exit code: 0 on success, 1 on a runtime
//! failure, 2 on a configuration or precondition error.

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use tactile_nav::bench::{self, log as eplog, PlannerVariant, Policy};
use tactile_nav::nav::OccupancyGrid;
use tactile_nav::policy::checkpoint::{load_checked, save_checkpoint};
use tactile_nav::policy::NetShape;
use tactile_nav::scenarios;
use tactile_nav::sensors::{lidar_scan, Normalization};
use tactile_nav::sim::{ScenarioSpec, World};
use tactile_nav::train::{self, curve_csv, TrainConfig, CURVE_HEADER};

pub const LOG_ENV: &str = "TACTILE_NAV_LOG_LEVEL";

#[derive(Debug, Parser)]
#[command(name = "tactile-nav", version, about = "Tactile-aware navigation: training, evaluation, benchmarking and export")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the velocity-optimizer policy with PPO over the curriculum.
    Train {
        /// JSON training config; omitted fields take their defaults.
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Field override such as `ppo.total_timesteps=10000`; repeatable.
        #[arg(long = "set", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
    },
    /// Run deterministic-policy episodes on one scenario.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Built-in scenario name or path to a scenario JSON file.
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 5)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "astar-eband-rl")]
        variant: String,
    },
    /// Compare planner variants over scenarios and seeded trials.
    Bench {
        /// Built-in names or JSON paths, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        scenarios: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "astar-eband-rl,astar-eband-apf,astar-eband,astar-dwa")]
        variants: Vec<String>,
        #[arg(long, default_value_t = 6)]
        trials: usize,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Convert logs into plot-ready files.
    Export {
        /// Episode log CSV, or a learning curve CSV for `--what curve`.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, value_enum)]
        what: ExportKind,
        /// Scenario whose static geometry the map is built from.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportKind {
    Trajectory,
    Map,
    Curve,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Train {
            config,
            seed,
            out,
            overrides,
        } => cmd_train(config.as_deref(), seed, &out, &overrides),
        Command::Eval {
            checkpoint,
            scenario,
            episodes,
            seed,
            variant,
        } => cmd_eval(&checkpoint, &scenario, episodes, seed, &variant),
        Command::Bench {
            scenarios,
            variants,
            trials,
            checkpoint,
            out,
            seed,
            jobs,
        } => cmd_bench(&scenarios, &variants, trials, checkpoint.as_deref(), &out, seed, jobs),
        Command::Export {
            log,
            what,
            scenario,
            out,
        } => cmd_export(log.as_deref(), what, scenario.as_deref(), &out),
    }
}

/// A training run as frozen to disk: the seed plus every config field.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    pub seed: u64,
    pub config: TrainConfig,
}

impl TrainRun {
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(&self.config).expect("config serializes");
        v.as_object_mut()
            .expect("config is an object")
            .insert("seed".into(), Value::from(self.seed));
        serde_json::to_string_pretty(&v).expect("value serializes")
    }
}

/// Field path of a serde error such as "unknown field `gama`", or the
/// whole message when none is quoted.
fn offending_field(msg: &str) -> String {
    msg.split('`').nth(1).map_or_else(|| msg.to_string(), str::to_string)
}

fn apply_override(root: &mut Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not PATH=VALUE")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, k) in keys.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("invalid config field `{path}`")))?;
        if !obj.contains_key(*k) {
            return Err(CliError::Config(format!("invalid config field `{path}`")));
        }
        if i + 1 == keys.len() {
            obj.insert((*k).to_string(), value);
            return Ok(());
        }
        node = obj.get_mut(*k).expect("checked above");
    }
    Ok(())
}

/// Merges `patch` into `base`, recursing into objects.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

/// Defaults, then the config file, then `--set` overrides, then `--seed`.
pub fn resolve_train_config(file: Option<&Path>, seed: Option<u64>, overrides: &[String]) -> Result<TrainRun, CliError> {
    let mut root = serde_json::to_value(TrainConfig::default()).expect("config serializes");
    let mut file_seed = None;
    if let Some(path) = file {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut v: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(obj) = v.as_object_mut() {
            if let Some(s) = obj.remove("seed") {
                file_seed = Some(
                    s.as_u64()
                        .ok_or_else(|| CliError::Config("invalid config field `seed`".into()))?,
                );
            }
        }
        // Curriculum lists replace the default list wholesale.
        merge(&mut root, v);
    }
    for o in overrides {
        apply_override(&mut root, o)?;
    }
    let config: TrainConfig = serde_json::from_value(root)
        .map_err(|e| CliError::Config(format!("invalid config field `{}`", offending_field(&e.to_string()))))?;
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(TrainRun {
        seed: seed.or(file_seed).unwrap_or(0),
        config,
    })
}

pub fn cmd_train(config: Option<&Path>, seed: Option<u64>, out: &Path, overrides: &[String]) -> Result<(), CliError> {
    let run = resolve_train_config(config, seed, overrides)?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let frozen = out.join("config.json");
    fs::write(&frozen, run.to_json()).map_err(io_err(&frozen))?;
    let outcome = train::train(&run.config, run.seed, None).map_err(runtime)?;
    let ckpt = out.join("policy.ckpt");
    save_checkpoint(&ckpt, &outcome.best, &Normalization::default()).map_err(runtime)?;
    let curve = out.join("curve.csv");
    fs::write(&curve, curve_csv(&outcome.curve)).map_err(io_err(&curve))?;
    log::info!(
        "trained {} updates ({} skipped), final stage {}",
        outcome.updates.len(),
        outcome.skipped_updates,
        run.config.curriculum[outcome.final_stage].id
    );
    Ok(())
}

/// Built-in scenario name or JSON file path.
pub fn load_scenario(name: &str) -> Result<ScenarioSpec, CliError> {
    if let Some(s) = scenarios::builtin(name) {
        return Ok(s);
    }
    ScenarioSpec::load(name).map_err(|e| CliError::Runtime(format!("scenario `{name}`: {e}")))
}

fn load_policy(path: &Path) -> Result<Policy, CliError> {
    let (weights, norm) =
        load_checked(path, &NetShape::standard()).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(Policy { weights, norm })
}

fn parse_variant(name: &str) -> Result<PlannerVariant, CliError> {
    name.parse().map_err(CliError::Config)
}

pub fn cmd_eval(checkpoint: &Path, scenario: &str, episodes: usize, seed: u64, variant: &str) -> Result<(), CliError> {
    let variant = parse_variant(variant)?;
    let policy = load_policy(checkpoint)?;
    let scenario = load_scenario(scenario)?;
    let mut successes = 0usize;
    let mut reward = 0.0;
    let mut collisions = 0usize;
    for i in 0..episodes {
        let log = bench::run_episode(&scenario, variant, Some(&policy), bench::trial_seed(seed, i)).map_err(runtime)?;
        successes += usize::from(log.success());
        reward += log.rows.iter().map(|r| r.reward).sum::<f64>();
        collisions += log.collision_steps();
    }
    let n = episodes.max(1) as f64;
    println!("success_rate {}", successes as f64 / n);
    println!("mean_reward {}", reward / n);
    println!("mean_collision_steps {}", collisions as f64 / n);
    Ok(())
}

pub fn log_file_name(scenario: &str, variant: PlannerVariant, trial: usize) -> String {
    format!("{scenario}__{}__{trial}.csv", variant.name())
}

pub fn cmd_bench(
    scenario_names: &[String],
    variant_names: &[String],
    trials: usize,
    checkpoint: Option<&Path>,
    out: &Path,
    seed: u64,
    jobs: usize,
) -> Result<(), CliError> {
    let variants = variant_names
        .iter()
        .map(|v| parse_variant(v))
        .collect::<Result<Vec<_>, _>>()?;
    let policy = match checkpoint {
        Some(p) => Some(load_policy(p)?),
        None => {
            if let Some(v) = variants.iter().find(|v| v.needs_policy()) {
                return Err(CliError::Config(format!("variant {} needs --checkpoint", v.name())));
            }
            None
        }
    };
    let specs = scenario_names
        .iter()
        .map(|s| load_scenario(s))
        .collect::<Result<Vec<_>, _>>()?;
    let cmp = bench::compare_variants(&specs, &variants, trials, seed, policy.as_ref(), jobs).map_err(runtime)?;

    let logs = out.join("logs");
    fs::create_dir_all(&logs).map_err(io_err(&logs))?;
    for e in &cmp.episodes {
        let p = logs.join(log_file_name(&e.scenario, e.variant, e.trial));
        fs::write(&p, eplog::to_csv(&e.log)).map_err(io_err(&p))?;
    }
    let report = out.join("report.csv");
    fs::write(&report, bench::report_csv(&cmp.rows)).map_err(io_err(&report))?;
    let plot = out.join("plot.json");
    let json = serde_json::to_string_pretty(&bench::plot_json(&cmp.rows)).expect("value serializes");
    fs::write(&plot, json).map_err(io_err(&plot))?;
    for r in &cmp.rows {
        log::info!(
            "{} {}: success {:.2}, collisions {:.1}, mean speed {:.3}",
            r.scenario,
            r.variant.name(),
            r.metrics.success_rate,
            r.metrics.collision_instances,
            r.metrics.mean_speed
        );
    }
    Ok(())
}

fn read_log(path: &Path) -> Result<eplog::EpisodeLog, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    eplog::from_csv(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Static map of `scenario`; when a log is given, only what the robot's
/// LiDAR saw along the logged poses.
pub fn export_map(scenario: &ScenarioSpec, log: Option<&eplog::EpisodeLog>) -> Result<OccupancyGrid, CliError> {
    let Some(log) = log else {
        return Ok(bench::static_map(scenario));
    };
    let mut statics = scenario.clone();
    statics.obstacles.clear();
    let world = World::new(&statics, 0).map_err(runtime)?;
    let mut grid = OccupancyGrid::covering(&scenario.bounds);
    for r in &log.rows {
        grid.update_occupancy(&r.pose, &lidar_scan(&world, &r.pose));
    }
    Ok(grid)
}

pub fn cmd_export(log: Option<&Path>, what: ExportKind, scenario: Option<&str>, out: &Path) -> Result<(), CliError> {
    match what {
        ExportKind::Trajectory => {
            let path = log.ok_or_else(|| CliError::Config("--log is required for trajectory export".into()))?;
            let ep = read_log(path)?;
            let mut s = String::from("t,x,y\n");
            for r in &ep.rows {
                s.push_str(&format!("{},{},{}\n", r.t, r.pose.x, r.pose.y));
            }
            fs::write(out, s).map_err(io_err(out))
        }
        ExportKind::Curve => {
            let path = log.ok_or_else(|| CliError::Config("--log is required for curve export".into()))?;
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            let header = text.lines().next().unwrap_or("");
            let got: Vec<&str> = header.split(',').collect();
            let want: Vec<&str> = CURVE_HEADER.split(',').collect();
            if let Some(i) = (0..want.len().max(got.len())).find(|&i| want.get(i) != got.get(i)) {
                let col = want.get(i).or(got.get(i)).copied().unwrap_or("");
                return Err(CliError::Config(format!("{}: unexpected header, first bad column `{col}`", path.display())));
            }
            fs::write(out, text).map_err(io_err(out))
        }
        ExportKind::Map => {
            let name = scenario.ok_or_else(|| CliError::Config("--scenario is required for map export".into()))?;
            let spec = load_scenario(name)?;
            let ep = log.map(read_log).transpose()?;
            let grid = export_map(&spec, ep.as_ref())?;
            grid.write_pgm(out).map_err(io_err(out))?;
            let image = out.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
            let meta = out.with_extension("yaml");
            fs::write(&meta, grid.metadata_yaml(&image)).map_err(io_err(&meta))
        }
    }
}
