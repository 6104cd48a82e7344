//! `inls`: ground states, runs, classification and sweeps from JSON configs.
//!
//! Exit codes: 0 ok, 2 validation, 3 output conflict, 4 runtime guard,
//! 5 solver failure. Failures print one JSON line with a stable `reason`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use inls::cli::{self, ExperimentConfig, GroundReport, InitialData, OutDir};
use inls::{Error, Result};

#[derive(Parser)]
#[command(name = "inls", version, about = "Focusing inhomogeneous NLS laboratory")]
struct Cli {
    /// Output directory; defaults to the config's `outputs`, else `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    /// Parallel sweep rows.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for Q; write gs.json, q.field and thresholds.csv.
    Ground {
        #[arg(long)]
        config: PathBuf,
    },
    /// Integrate the configured datum; write diag.csv, final.field and fate.json.
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the verdict for the configured datum as JSON.
    Classify {
        #[arg(long)]
        config: PathBuf,
        /// Thresholds from an earlier `ground` run instead of a fresh solve.
        #[arg(long)]
        ground: Option<PathBuf>,
        /// Binary field replacing the configured initial data.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run a JSON array of configs; write fate_map.csv.
    Sweep {
        #[arg(long)]
        configs: PathBuf,
    },
    /// Summarize the outputs in --out as report.md.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log_level).init();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", json!({"status": "error", "reason": e.reason(), "message": e.to_string()}));
            ExitCode::from(e.exit_code())
        }
    }
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> OutDir {
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.outputs.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    OutDir::new(dir, cli.force)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn execute(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Ground { config } => {
            let cfg = ExperimentConfig::load(config)?;
            let report = cli::cmd_ground(&cfg, &out_dir(cli, Some(&cfg)))?;
            print!("{}", report.threshold_table());
            Ok(0)
        }
        Command::Evolve { config } => {
            let cfg = ExperimentConfig::load(config)?;
            let report = cli::cmd_evolve(&cfg, &out_dir(cli, Some(&cfg)))?;
            println!("{}", json!({"status": "ok", "fate": report.fate.label(), "t_stop": report.t_stop}));
            Ok(0)
        }
        Command::Classify { config, ground, data } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if let Some(path) = data {
                cfg.initial = Some(InitialData::File { path: path.clone() });
            }
            let summary = ground.as_deref().map(GroundReport::load).transpose()?.map(|g| g.summary);
            let c = cli::cmd_classify(&cfg, summary.as_ref())?;
            println!("{}", serde_json::to_string_pretty(&c).expect("verdict serializes"));
            if cli.out.is_some() {
                let out = out_dir(cli, Some(&cfg));
                out.claim(&[cli::VERDICT_JSON])?;
                let text = serde_json::to_string_pretty(&c).expect("verdict serializes") + "\n";
                std::fs::write(out.path(cli::VERDICT_JSON), text).map_err(|e| Error::Io(e.to_string()))?;
            }
            Ok(0)
        }
        Command::Sweep { configs } => {
            let rows = cli::parse_sweep(&read(configs)?)?;
            let done = cli::cmd_sweep(rows, &out_dir(cli, None), cli.jobs)?;
            let worst = done.iter().filter_map(|r| r.outcome.as_ref().err()).map(|e| e.exit_code()).max();
            let failed = done.iter().filter(|r| r.outcome.is_err()).count();
            println!("{}", json!({"status": if failed == 0 { "ok" } else { "partial" }, "rows": done.len(), "failed": failed}));
            Ok(worst.unwrap_or(0))
        }
        Command::Report => {
            print!("{}", cli::cmd_report(&out_dir(cli, None))?);
            Ok(0)
        }
    }
}
