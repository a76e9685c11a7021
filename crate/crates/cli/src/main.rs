mod config;
mod experiments;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::Parser;

use config::Experiment;
use output::Manifest;

/// Run a reservoir-computing experiment from a JSON config and write CSV plus a manifest.
#[derive(Debug, Parser)]
#[command(name = "qrc-lab", version)]
struct Cli {
    /// Experiment to run.
    experiment: Experiment,
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Added to every seed in the config.
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(errors) => {
            if errors > 0 {
                log::warn!("{errors} grid points failed; see the status column");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<usize> {
    let cfg = config::load(&cli.config, cli.experiment, cli.seed_base)?;
    let jobs = cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;

    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let outcome = pool.install(|| experiments::run(&cfg));
    let wall = clock.elapsed().as_secs_f64();

    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let file = cfg.output_path.clone().unwrap_or_else(|| format!("{}.csv", cfg.experiment));
    let csv_path = cli.out.join(&file);
    let config_json = serde_json::to_value(&cfg)?;
    let meta = vec![
        ("experiment".to_string(), cfg.experiment.to_string()),
        ("qrc_lab".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("config".to_string(), serde_json::to_string(&config_json)?),
    ];
    outcome.table.write_csv_file(&csv_path, &meta).with_context(|| format!("writing {}", csv_path.display()))?;
    let errors = outcome.table.error_rows();
    write_manifest(&csv_path, &cfg, cli, &outcome.table, &config_json, started_unix, wall, jobs)?;

    if let Some(summary) = &outcome.summary {
        let path = sibling(&csv_path, "_summary.csv");
        summary.write_csv_file(&path, &meta).with_context(|| format!("writing {}", path.display()))?;
        write_manifest(&path, &cfg, cli, summary, &config_json, started_unix, wall, jobs)?;
    }
    println!("{}", csv_path.display());
    Ok(errors)
}

/// `dir/name.csv` → `dir/name{suffix}`.
fn sibling(csv: &Path, suffix: &str) -> PathBuf {
    let stem = csv.file_stem().map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
    csv.with_file_name(format!("{stem}{suffix}"))
}

#[allow(clippy::too_many_arguments)]
fn write_manifest(
    csv_path: &Path,
    cfg: &config::ExperimentConfig,
    cli: &Cli,
    table: &output::Table,
    config_json: &serde_json::Value,
    started_unix: u64,
    wall: f64,
    jobs: usize,
) -> anyhow::Result<()> {
    let manifest = Manifest {
        experiment: cfg.experiment.name(),
        csv: csv_path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        columns: &table.columns,
        rows: table.rows.len(),
        error_rows: table.error_rows(),
        seeds: &cfg.seeds,
        seed_base: cli.seed_base,
        config: config_json.clone(),
        version: env!("CARGO_PKG_VERSION"),
        git_describe: env!("QRC_GIT_DESCRIBE"),
        started_unix,
        wall_clock_seconds: wall,
        jobs,
    };
    let path = sibling(csv_path, ".manifest.json");
    manifest.write_file(&path).with_context(|| format!("writing {}", path.display()))
}
