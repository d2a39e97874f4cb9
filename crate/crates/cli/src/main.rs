mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::CliError;
use config::{ClassCount, PleMode, RunConfig, SceneSource};
use densify::placement::Algorithm;
use densify::power::StationClassName;
use densify::scene::{SyntheticKind, SyntheticParams};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "densify", version, about = "Coverage maps, small-cell placement and densification power models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; every section is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (a file path for `scene generate`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every available core. Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Coverage map of the configured transmitter.
    Coverage,
    /// Station placement against the macro reference.
    Optimize {
        #[arg(long)]
        algorithm: Option<Algorithm>,
    },
    /// Analytic densification power sweeps and class totals.
    Power {
        #[arg(long)]
        n_max: Option<u32>,
        /// Densification interface-power fractions to sweep (repeatable).
        #[arg(long = "s")]
        s_values: Vec<f64>,
        /// Class count such as `femto=30` (repeatable).
        #[arg(long = "count", value_parser = parse_count)]
        counts: Vec<ClassCount>,
    },
    /// Uplink power of users under two networks.
    Ue,
    /// Path-loss exponent fit or heatmap.
    Ple {
        #[arg(long, value_enum)]
        mode: Option<PleMode>,
    },
    /// Scene file utilities.
    Scene {
        #[command(subcommand)]
        action: SceneAction,
    },
}

#[derive(Subcommand)]
enum SceneAction {
    /// Parse and rasterize a scene file.
    Validate { path: PathBuf },
    /// Write a seeded synthetic scene.
    Generate {
        #[arg(long)]
        kind: SyntheticKind,
        #[arg(long)]
        width: Option<f64>,
        #[arg(long)]
        height: Option<f64>,
        #[arg(long)]
        density: Option<f64>,
    },
}

fn parse_count(s: &str) -> Result<ClassCount, String> {
    let (class, count) = s.split_once('=').ok_or_else(|| format!("expected CLASS=COUNT, got `{s}`"))?;
    let class: StationClassName = class.parse().map_err(|e| format!("{e}"))?;
    let count = count.parse().map_err(|e| format!("bad count `{count}`: {e}"))?;
    Ok(ClassCount { class, count })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(CliError::Config)?,
        None => RunConfig::default(),
    };
    cfg.resolve_seed(cli.seed);
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    match cli.command {
        Command::Coverage => commands::coverage(&cfg, &out),
        Command::Optimize { algorithm } => {
            if let Some(a) = algorithm {
                cfg.placement.algorithm = a;
            }
            commands::optimize(&cfg, &out)
        }
        Command::Power { n_max, s_values, counts } => {
            if let Some(n) = n_max {
                cfg.power.n_max = n;
            }
            if !s_values.is_empty() {
                cfg.power.s_values = s_values;
            }
            if !counts.is_empty() {
                cfg.power.class_counts = counts;
            }
            commands::power(&cfg, &out)
        }
        Command::Ue => commands::ue(&cfg, &out),
        Command::Ple { mode } => {
            let mode = mode.unwrap_or(cfg.ple.mode);
            cfg.ple.mode = mode;
            commands::ple(&cfg, mode, &out)
        }
        Command::Scene { action: SceneAction::Validate { path } } => commands::scene_validate(&path, &cfg.grid),
        Command::Scene { action: SceneAction::Generate { kind, width, height, density } } => {
            let (mut params, seed) = match &cfg.scene {
                Some(SceneSource::Synthetic(s)) => (s.params.clone(), s.seed),
                _ => (SyntheticParams::default(), 0),
            };
            params.width_m = width.unwrap_or(params.width_m);
            params.height_m = height.unwrap_or(params.height_m);
            params.density = density.unwrap_or(params.density);
            let out = cli.out.unwrap_or_else(|| PathBuf::from("scene.json"));
            commands::scene_generate(kind, &params, cli.seed.unwrap_or(seed), &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    // Built by hand so no environment variable can change behaviour.
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    let threads = match cli.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {threads} worker threads: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
