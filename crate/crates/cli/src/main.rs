//! `growgap`: runs the experiment pipelines described by a config file.

mod config;
mod pipelines;
mod pool;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{ConfigError, ExperimentConfig};
use pipelines::{build_graph, contrasts, plan, Context, SweepRow, Task};

#[derive(Parser)]
#[command(
    name = "growgap",
    version,
    about = "Glauber dynamics experiments on growing graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweep cells.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Replaces `run.seed`.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build the configured graph and write it as text.
    GenerateGraph,
    /// Growth parameter, tiling structure and Cheeger constants.
    VerifyGeometry,
    /// Peierls inequalities over standard regions.
    PeierlsAudit,
    /// Connected-set counts against the lattice-animal bound.
    KestenAudit,
    /// Exact Gibbs tables with binary dumps.
    ExactGibbs,
    /// Influence of a boundary spin against graph distance.
    Correlation,
    /// Droplet probabilities under minus outside the region.
    Claim32,
    /// Spectral gap sweep with bounds and mixing times.
    Gap,
    /// Mixing time reports.
    Mixing,
    /// Gap sweep under plus and free boundary side by side.
    FreeVsPlus,
}

impl Command {
    fn task(self) -> Task {
        match self {
            Command::GenerateGraph => Task::GenerateGraph,
            Command::VerifyGeometry => Task::VerifyGeometry,
            Command::PeierlsAudit => Task::PeierlsAudit,
            Command::KestenAudit => Task::KestenAudit,
            Command::ExactGibbs => Task::ExactGibbs,
            Command::Correlation => Task::Correlation,
            Command::Claim32 => Task::Claim32,
            Command::Gap => Task::Gap,
            Command::Mixing => Task::Mixing,
            Command::FreeVsPlus => Task::FreeVsPlus,
        }
    }
}

enum Failure {
    Config(ConfigError),
    Setup(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn io(path: &Path, e: std::io::Error) -> Failure {
    Failure::Setup(format!("{}: {e}", path.display()))
}

/// Runs the task and returns the number of failed cells.
fn execute(cli: &Cli) -> Result<usize, Failure> {
    let task = cli.command.task();
    let path = cli.config.as_ref().ok_or_else(|| ConfigError {
        line: None,
        field: None,
        message: "no --config given".into(),
    })?;
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        line: None,
        field: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(seed) = cli.seed_override {
        cfg.seed = seed;
    }
    if cli.threads == 0 {
        return Err(ConfigError {
            line: None,
            field: Some("--threads".into()),
            message: "needs at least one thread".into(),
        }
        .into());
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| ConfigError {
            line: None,
            field: Some("output.dir".into()),
            message: "no output directory (set output.dir or pass --out)".into(),
        })?;
    let cells = plan(task, &cfg)?;

    let started = Instant::now();
    std::fs::create_dir_all(&out).map_err(|e| io(&out, e))?;
    let built = build_graph(&cfg.graph)
        .map_err(|e| Failure::Setup(format!("graph construction failed: {e}")))?;
    let ctx = Context {
        cfg: &cfg,
        built: &built,
        out: &out,
    };

    let jsonl_path = out.join(format!("{}.jsonl", task.name()));
    let mut jsonl = BufWriter::new(File::create(&jsonl_path).map_err(|e| io(&jsonl_path, e))?);
    let mut rows: Vec<SweepRow> = Vec::new();
    let mut failures = 0;
    let mut write_error = None;
    pool::run_ordered(
        &cells,
        cli.threads,
        |cell| ctx.run(task, cell),
        |k, result| {
            let mut rec = json!({
                "op": task.name(),
                "config_hash": cfg.hash,
                "seed": cfg.seed,
                "cell": cells[k].to_json(),
            });
            match result {
                Ok(o) => {
                    rec["result"] = o.result;
                    rows.extend(o.row);
                }
                Err(e) => {
                    failures += 1;
                    eprintln!("cell {k} ({}) failed: {e}", cells[k].to_json());
                    rec["error"] = json!(e);
                }
            }
            if let Err(e) = writeln!(jsonl, "{rec}") {
                write_error.get_or_insert(e);
            }
        },
    );
    if task == Task::FreeVsPlus {
        for c in contrasts(&rows) {
            let rec = json!({
                "op": "free-vs-plus-contrast",
                "config_hash": cfg.hash,
                "seed": cfg.seed,
                "result": c,
            });
            if let Err(e) = writeln!(jsonl, "{rec}") {
                write_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = write_error {
        return Err(io(&jsonl_path, e));
    }
    jsonl.flush().map_err(|e| io(&jsonl_path, e))?;

    if task.has_table() {
        let csv_path = out.join(format!("{}.csv", task.name()));
        let mut w = csv::Writer::from_path(&csv_path)
            .map_err(|e| Failure::Setup(format!("{}: {e}", csv_path.display())))?;
        for r in &rows {
            w.serialize(r)
                .map_err(|e| Failure::Setup(format!("{}: {e}", csv_path.display())))?;
        }
        w.flush().map_err(|e| io(&csv_path, e))?;
    }

    let manifest = json!({
        "op": task.name(),
        "config_hash": cfg.hash,
        "seed": cfg.seed,
        "cells": cells.len(),
        "failures": failures,
        "threads": cli.threads,
        "prng": "ChaCha8",
        "versions": { "growgap-cli": env!("CARGO_PKG_VERSION") },
        "started_unix": SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "wall_clock_seconds": started.elapsed().as_secs_f64(),
    });
    let manifest_path = out.join(format!("{}.manifest.json", task.name()));
    std::fs::write(&manifest_path, format!("{manifest:#}\n")).map_err(|e| io(&manifest_path, e))?;
    Ok(failures)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("{n} cell(s) failed; see the JSONL records");
            ExitCode::from(2)
        }
        Err(Failure::Config(e)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(Failure::Setup(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
