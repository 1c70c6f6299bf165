//! Scenario configuration, the simulation harness that runs every estimator
//! on one shared truth and observation sequence, and machine-readable output.

mod config;
mod output;
mod sim;
mod sweep;

pub use config::{
    DispersionConfig, Estimator, GraphSpec, NamedGraph, PhaseConfig, ReceptorConfig,
    ScenarioConfig, SourceConfig, TopologyConfig, EXPERIMENT1_TOML, EXPERIMENT2_TOML,
};
pub use output::{
    format_float, write_records_csv, write_sweep_csv, RunManifest, RECORDS_HEADER, SWEEP_HEADER,
};
pub use sim::{run_scenario, score, Plant, RunRecord, Simulation, StepReport, TruthInit};
pub use sweep::{parse_p_range, run_failure_sweep, SweepRow};

pub(crate) const STREAM_TRUTH: u64 = 1;
pub(crate) const STREAM_OBSERVATION: u64 = 2;
pub(crate) const STREAM_TOPOLOGY: u64 = 3;
pub(crate) const STREAM_INITIAL: u64 = 4;

/// Independent per-purpose seed from a run seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
