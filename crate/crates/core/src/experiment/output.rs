use std::io::Write;

use serde::Serialize;

use super::config::ScenarioConfig;
use super::sim::RunRecord;
use super::sweep::SweepRow;

pub const RECORDS_HEADER: &str =
    "step,agent,estimator,affinity,det_ratio,rmse,n_cg,iters,logdet_cov";
pub const SWEEP_HEADER: &str = "p,estimator,mean_affinity,mean_det_ratio,mean_rmse";

/// Shortest decimal that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v}")
}

pub fn write_records_csv<W: Write>(mut w: W, records: &[RunRecord]) -> std::io::Result<()> {
    writeln!(w, "{RECORDS_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.step,
            r.agent,
            r.estimator,
            format_float(r.metrics.bhattacharyya_affinity),
            format_float(r.metrics.det_ratio),
            format_float(r.metrics.rmse),
            r.n_cg,
            r.iterations,
            format_float(r.logdet_cov),
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            format_float(r.p),
            r.estimator,
            format_float(r.mean_affinity),
            format_float(r.mean_det_ratio),
            format_float(r.mean_rmse),
        )?;
    }
    Ok(())
}

/// Provenance written next to every output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub seed: u64,
    pub tool_version: &'static str,
    pub config: ScenarioConfig,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &ScenarioConfig, outputs: Vec<String>) -> Self {
        Self {
            command: command.to_string(),
            seed: config.seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            config: config.clone(),
            outputs,
        }
    }
}
