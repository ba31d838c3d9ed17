//! `spopo` — config-driven front end for the SPOPO quantum-noise lab.
//!
//! Every run reads one JSON configuration, executes one task and leaves a
//! `manifest.json` beside the outputs; re-running the same configuration and
//! seed reproduces the numeric payloads byte for byte.
//!
//! Exit codes: 0 success, 2 configuration error, 3 physics-precondition
//! error, 4 measured-vs-predicted comparison failure.

mod config;
mod manifest;
mod tasks;

use clap::{Parser, Subcommand};
use config::RunConfig;
use manifest::{config_hash, OutputTracker, RunManifest};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "spopo", version, about = "Quantum-noise lab for a synchronously pumped OPO above threshold")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: config `output_dir`, else `spopo-out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: RAYON_NUM_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Task name, as an alternative to a subcommand.
    #[arg(long, global = true)]
    task: Option<String>,
    #[command(subcommand)]
    command: Option<TaskCommand>,
}

#[derive(Subcommand)]
enum TaskCommand {
    /// Threshold flux, stationary fluxes and effective fluctuation rates.
    SteadyState,
    /// Analytic correlation combs, optionally with Monte Carlo estimates.
    Combs,
    /// Closed-form homodyne noise spectrum on a frequency grid.
    Spectrum,
    /// Monte Carlo pulse-train records (CSV dumps).
    Simulate,
    /// Virtual balanced homodyne measurement and comparison report.
    Homodyne,
    /// Delay scan of the zero-frequency signal noise for gaussian pulses.
    Fig4,
    /// Small-fluctuation validity margin and verdict.
    Validity,
}

impl TaskCommand {
    fn name(&self) -> &'static str {
        match self {
            TaskCommand::SteadyState => "steady-state",
            TaskCommand::Combs => "combs",
            TaskCommand::Spectrum => "spectrum",
            TaskCommand::Simulate => "simulate",
            TaskCommand::Homodyne => "homodyne",
            TaskCommand::Fig4 => "fig4",
            TaskCommand::Validity => "validity",
        }
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_PHYSICS: u8 = 3;
const EXIT_COMPARISON: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            // Physics preconditions surface as core errors anywhere in the
            // chain; everything else at this level is a configuration problem.
            let physics = e.chain().any(|c| c.is::<spopo_core::Error>())
                && !e.to_string().contains("config parse error");
            ExitCode::from(if physics { EXIT_PHYSICS } else { EXIT_CONFIG })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }

    let config_path = cli
        .config
        .ok_or_else(|| anyhow::anyhow!("--config <path> is required"))?;
    let mut cfg = RunConfig::load(&config_path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    let seed = cfg.seed.unwrap_or(0);

    let task = cli
        .command
        .map(|c| c.name().to_string())
        .or(cli.task)
        .or_else(|| cfg.task.clone())
        .ok_or_else(|| anyhow::anyhow!("no task given (subcommand, --task, or config `task`)"))?;

    let out_dir = cli
        .out
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("spopo-out"));

    let started = chrono::Utc::now().to_rfc3339();
    let mut tracker = OutputTracker::new(&out_dir)?;
    let result = tasks::run_task(&task, &cfg, seed, &mut tracker)?;
    tracker.commit();

    // Effective config (seed resolved) is what the hash covers.
    let mut effective = cfg.clone();
    effective.seed = Some(seed);
    effective.task = Some(task.clone());
    let manifest = RunManifest {
        config_hash: config_hash(&effective.to_json()),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        task: task.clone(),
        started_utc: started,
        finished_utc: chrono::Utc::now().to_rfc3339(),
        outputs: tracker.files(),
        validity: tasks::validity_for_manifest(&cfg),
        notes: result.notes.clone(),
        effective_config: effective,
    };
    let manifest_path = manifest.write(tracker.dir())?;
    println!(
        "task `{task}` done; {} output file(s) + {}",
        tracker.files().len(),
        manifest_path.display()
    );
    for note in &result.notes {
        println!("note: {note}");
    }

    Ok(match result.comparison_pass {
        Some(false) => {
            eprintln!("comparison FAILED");
            ExitCode::from(EXIT_COMPARISON)
        }
        _ => ExitCode::SUCCESS,
    })
}
