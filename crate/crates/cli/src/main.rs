use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hybrid_consensus::experiment::{
    parse_p_range, run_failure_sweep, score, write_records_csv, write_sweep_csv, RunManifest,
    ScenarioConfig, Simulation,
};

/// Run the hybrid CI/MHMC consensus filter experiments.
#[derive(Parser)]
#[command(name = "hcf", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write per-step records.
    Run {
        config: PathBuf,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write every hybrid-filter message delivery as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Repeat a regular-graph scenario over link-failure probabilities.
    Sweep {
        config: PathBuf,
        /// `start:stop:step` (inclusive) or a single value.
        #[arg(long = "p", value_name = "RANGE")]
        p: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a config file and report the first problem found.
    Validate { config: PathBuf },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut cfg =
        ScenarioConfig::from_file(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate()
        .with_context(|| format!("invalid config {}", path.display()))?;
    Ok(cfg)
}

fn write_manifest(
    out: &Path,
    command: &str,
    cfg: &ScenarioConfig,
    outputs: Vec<String>,
) -> Result<()> {
    let manifest = RunManifest::new(command, cfg, outputs);
    let path = out.join("manifest.json");
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &manifest)?;
    Ok(())
}

fn run(config: &Path, seed: Option<u64>, out: &Path, trace: Option<&Path>) -> Result<()> {
    let cfg = load(config, seed)?;
    let sim = Simulation::from_config(&cfg)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut trace_writer = match trace {
        Some(path) => Some(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => None,
    };
    let mut trace_error = None;
    let mut records = Vec::new();
    sim.run_traced(
        |report| {
            records.extend(score(report)?);
            Ok(())
        },
        &mut |k, msg| {
            let Some(w) = trace_writer.as_mut() else {
                return;
            };
            if trace_error.is_some() {
                return;
            }
            let line = serde_json::json!({ "step": k, "message": msg });
            if let Err(e) = writeln!(w, "{line}") {
                trace_error = Some(e);
            }
        },
    )?;
    if let Some(e) = trace_error {
        return Err(e).context("writing trace");
    }
    if let Some(mut w) = trace_writer {
        w.flush()?;
    }

    let csv = out.join("records.csv");
    let mut w =
        BufWriter::new(File::create(&csv).with_context(|| format!("creating {}", csv.display()))?);
    write_records_csv(&mut w, &records)?;
    w.flush()?;
    let mut outputs = vec!["records.csv".to_string()];
    if let Some(path) = trace {
        outputs.push(path.display().to_string());
    }
    write_manifest(out, "run", &cfg, outputs)?;
    println!("wrote {} records to {}", records.len(), csv.display());
    Ok(())
}

fn sweep(config: &Path, p: &str, seed: Option<u64>, out: &Path) -> Result<()> {
    let cfg = load(config, seed)?;
    let ps = parse_p_range(p)?;
    let rows = run_failure_sweep(&cfg, &ps)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let csv = out.join("sweep.csv");
    let mut w =
        BufWriter::new(File::create(&csv).with_context(|| format!("creating {}", csv.display()))?);
    write_sweep_csv(&mut w, &rows)?;
    w.flush()?;
    write_manifest(out, "sweep", &cfg, vec!["sweep.csv".to_string()])?;
    println!("wrote {} rows to {}", rows.len(), csv.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            out,
            trace,
        } => run(&config, seed, &out, trace.as_deref()),
        Command::Sweep {
            config,
            p,
            seed,
            out,
        } => sweep(&config, &p, seed, &out),
        Command::Validate { config } => {
            let cfg = load(&config, None)?;
            println!(
                "{}: ok ({} agents, {} states, {} steps)",
                config.display(),
                cfg.n_agents(),
                cfg.grid.n_cells(),
                cfg.horizon
            );
            Ok(())
        }
    }
}
