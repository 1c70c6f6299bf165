//! Scenario files: TOML with nested sections. Agent (receptor) numbers in
//! topology definitions are 1-based; grid cells are 0-based `[ix, iy, iz]`.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_model::{build_model, Diffusivity, DispersionParams, FieldModel, GridSpec};
use crate::hybrid_filter::ConsensusConfig;
use crate::info_filter::{ObservationModel, WEAK_PRIOR_INFO};
use crate::network::{GraphSnapshot, TopologySchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Centralized,
    Hybrid,
    PureCi,
    MhmcOnly,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Centralized => "centralized",
            Estimator::Hybrid => "hybrid",
            Estimator::PureCi => "pure_ci",
            Estimator::MhmcOnly => "mhmc_only",
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    pub wind_speed: f64,
    #[serde(default)]
    pub wind_angle: f64,
    #[serde(default)]
    pub k_y: Diffusivity,
    #[serde(default)]
    pub k_z: Diffusivity,
    #[serde(default)]
    pub process_noise_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub cell: [usize; 3],
    /// Variance of the source's zero-mean emission rate.
    pub emission_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceptorConfig {
    pub cell: [usize; 3],
    /// Measurement noise standard deviation.
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedGraph {
    Complete,
    Path,
    Ring,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSpec {
    Named(NamedGraph),
    Edges { edges: Vec<[usize; 2]> },
}

impl GraphSpec {
    pub fn build(&self, n_agents: usize) -> Result<GraphSnapshot> {
        match self {
            GraphSpec::Named(NamedGraph::Complete) => Ok(GraphSnapshot::complete(n_agents)),
            GraphSpec::Named(NamedGraph::Path) => Ok(GraphSnapshot::path(n_agents)),
            GraphSpec::Named(NamedGraph::Empty) => Ok(GraphSnapshot::empty(n_agents)),
            GraphSpec::Named(NamedGraph::Ring) => {
                let mut edges: Vec<(usize, usize)> = (1..n_agents).map(|b| (b - 1, b)).collect();
                if n_agents > 2 {
                    edges.push((n_agents - 1, 0));
                }
                GraphSnapshot::new(n_agents, edges)
            }
            GraphSpec::Edges { edges } => {
                let mut zero_based = Vec::with_capacity(edges.len());
                for &[a, b] in edges {
                    if a == 0 || b == 0 {
                        return Err(Error::Config(format!(
                            "topology edge [{a}, {b}]: agents are numbered from 1"
                        )));
                    }
                    zero_based.push((a - 1, b - 1));
                }
                GraphSnapshot::new(n_agents, zero_based)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    /// First and last step of the phase, inclusive.
    pub from: usize,
    pub to: usize,
    pub graph: GraphSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologyConfig {
    /// `base` applies to every step not covered by a phase.
    Scripted {
        base: GraphSpec,
        #[serde(default)]
        phases: Vec<PhaseConfig>,
    },
    RegularWithFailures {
        degree: usize,
        p_fail: f64,
    },
}

fn default_estimators() -> Vec<Estimator> {
    vec![Estimator::Centralized, Estimator::Hybrid, Estimator::PureCi]
}

fn default_prior_info() -> f64 {
    WEAK_PRIOR_INFO
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    pub horizon: usize,
    /// Optional cross-check against the receptor count.
    #[serde(default)]
    pub n_agents: Option<usize>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<Estimator>,
    /// Diagonal of the initial information matrix shared by every agent.
    #[serde(default = "default_prior_info")]
    pub prior_info: f64,
    pub grid: GridSpec,
    pub dispersion: DispersionConfig,
    #[serde(default)]
    pub sources: Vec<SourceConfig>,
    pub receptors: Vec<ReceptorConfig>,
    #[serde(default)]
    pub consensus: ConsensusConfig,
    pub topology: TopologyConfig,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn n_agents(&self) -> usize {
        self.receptors.len()
    }

    /// Field-level validation; building the plant also checks stability.
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Config("horizon: must be at least 1".into()));
        }
        if self.receptors.is_empty() {
            return Err(Error::Config(
                "receptors: at least one receptor is required".into(),
            ));
        }
        if let Some(n) = self.n_agents {
            if n != self.receptors.len() {
                return Err(Error::Config(format!(
                    "n_agents: {n} does not match the {} receptors",
                    self.receptors.len()
                )));
            }
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("estimators: nothing to run".into()));
        }
        if !(self.prior_info > 0.0 && self.prior_info.is_finite()) {
            return Err(Error::Config("prior_info: must be positive".into()));
        }
        for (i, r) in self.receptors.iter().enumerate() {
            if !self.grid.contains(r.cell) {
                return Err(Error::Config(format!(
                    "receptors[{i}].cell: {:?} outside grid",
                    r.cell
                )));
            }
            if !(r.sigma > 0.0 && r.sigma.is_finite()) {
                return Err(Error::Config(format!(
                    "receptors[{i}].sigma: must be positive"
                )));
            }
        }
        for (i, s) in self.sources.iter().enumerate() {
            if !self.grid.contains(s.cell) {
                return Err(Error::Config(format!(
                    "sources[{i}].cell: {:?} outside grid",
                    s.cell
                )));
            }
            if !(s.emission_var >= 0.0) {
                return Err(Error::Config(format!(
                    "sources[{i}].emission_var: must be non-negative"
                )));
            }
        }
        self.consensus
            .validate()
            .map_err(|e| Error::Config(format!("consensus: {e}")))?;
        if let TopologyConfig::Scripted { phases, .. } = &self.topology {
            for (i, p) in phases.iter().enumerate() {
                if p.from < 1 || p.to < p.from {
                    return Err(Error::Config(format!(
                        "topology.phases[{i}]: invalid step range {}..={}",
                        p.from, p.to
                    )));
                }
            }
        }
        self.schedule()?;
        self.plant_model()?;
        Ok(())
    }

    pub fn dispersion_params(&self) -> DispersionParams {
        let variances: Vec<f64> = self.sources.iter().map(|s| s.emission_var).collect();
        DispersionParams {
            wind_speed: self.dispersion.wind_speed,
            wind_angle: self.dispersion.wind_angle,
            k_y: self.dispersion.k_y,
            k_z: self.dispersion.k_z,
            sources: self.sources.iter().map(|s| s.cell).collect(),
            emission_cov: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(variances)),
            process_noise_var: self.dispersion.process_noise_var,
        }
    }

    pub fn plant_model(&self) -> Result<FieldModel> {
        build_model(&self.grid, &self.dispersion_params())
    }

    /// One-hot observation of each receptor's cell.
    pub fn observation_models(&self) -> Result<Vec<ObservationModel>> {
        let n = self.grid.n_cells();
        self.receptors
            .iter()
            .map(|r| {
                let [ix, iy, iz] = r.cell;
                ObservationModel::point(n, self.grid.index(ix, iy, iz), r.sigma * r.sigma)
            })
            .collect()
    }

    pub fn schedule(&self) -> Result<TopologySchedule> {
        let n = self.n_agents();
        let schedule = match &self.topology {
            TopologyConfig::Scripted { base, phases } => {
                let base = base
                    .build(n)
                    .map_err(|e| Error::Config(format!("topology.base: {e}")))?;
                let mut steps: BTreeMap<usize, GraphSnapshot> =
                    (1..=self.horizon).map(|k| (k, base.clone())).collect();
                for (i, phase) in phases.iter().enumerate() {
                    let g = phase
                        .graph
                        .build(n)
                        .map_err(|e| Error::Config(format!("topology.phases[{i}].graph: {e}")))?;
                    for k in phase.from..=phase.to.min(self.horizon) {
                        steps.insert(k, g.clone());
                    }
                }
                TopologySchedule::Scripted { n_agents: n, steps }
            }
            TopologyConfig::RegularWithFailures { degree, p_fail } => {
                TopologySchedule::regular_with_failures(
                    n,
                    *degree,
                    *p_fail,
                    topology_seed(self.seed),
                )
                .map_err(|e| Error::Config(format!("topology: {e}")))?
            }
        };
        schedule.validate(self.horizon)?;
        Ok(schedule)
    }
}

fn topology_seed(seed: u64) -> u64 {
    super::derive_seed(seed, super::STREAM_TOPOLOGY, 0)
}

pub const EXPERIMENT1_TOML: &str = include_str!("../../configs/experiment1.toml");
pub const EXPERIMENT2_TOML: &str = include_str!("../../configs/experiment2.toml");

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::components;

    #[test]
    fn bundled_configs_parse() {
        let e1 = ScenarioConfig::from_toml_str(EXPERIMENT1_TOML).unwrap();
        assert_eq!(e1.n_agents(), 9);
        assert_eq!(e1.grid.n_cells(), 80);
        assert_eq!(e1.sources.len(), 10);
        let e2 = ScenarioConfig::from_toml_str(EXPERIMENT2_TOML).unwrap();
        assert!(matches!(
            e2.topology,
            TopologyConfig::RegularWithFailures { degree: 4, .. }
        ));
        assert_eq!(e2.horizon, 50);
    }

    #[test]
    fn experiment1_disconnection_script() {
        let cfg = ScenarioConfig::from_toml_str(EXPERIMENT1_TOML).unwrap();
        let schedule = cfg.schedule().unwrap();
        let isolated =
            |k: usize| (3..=5).contains(&k) || (17..=20).contains(&k) || (23..=30).contains(&k);
        for k in 1..=cfg.horizon {
            let comps = components(&schedule.snapshot_at(k).unwrap());
            if isolated(k) {
                assert_eq!(
                    comps,
                    vec![vec![0, 1, 2, 3, 4, 5], vec![6, 7, 8]],
                    "step {k}"
                );
            } else {
                assert_eq!(comps.len(), 1, "step {k}");
            }
        }
    }

    #[test]
    fn field_level_errors() {
        let mut cfg = ScenarioConfig::from_toml_str(EXPERIMENT1_TOML).unwrap();
        cfg.receptors[2].cell = [9, 0, 0];
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("receptors[2].cell"), "{err}");

        let mut cfg = ScenarioConfig::from_toml_str(EXPERIMENT1_TOML).unwrap();
        cfg.horizon = 0;
        assert!(cfg.validate().unwrap_err().to_string().contains("horizon"));

        let mut cfg = ScenarioConfig::from_toml_str(EXPERIMENT1_TOML).unwrap();
        cfg.n_agents = Some(4);
        assert!(cfg.validate().unwrap_err().to_string().contains("n_agents"));

        let mut cfg = ScenarioConfig::from_toml_str(EXPERIMENT1_TOML).unwrap();
        cfg.dispersion.wind_speed = 1e3;
        assert!(matches!(cfg.validate(), Err(Error::Unstable { .. })));

        assert!(ScenarioConfig::from_toml_str("seed = 1").is_err());
    }

    #[test]
    fn edges_are_one_based() {
        let g = GraphSpec::Edges {
            edges: vec![[1, 2], [2, 3]],
        }
        .build(3)
        .unwrap();
        assert!(g.edges().contains(&(0, 1)));
        assert!(GraphSpec::Edges {
            edges: vec![[0, 1]]
        }
        .build(3)
        .is_err());
        assert_eq!(
            GraphSpec::Named(NamedGraph::Ring)
                .build(4)
                .unwrap()
                .edges()
                .len(),
            4
        );
    }
}
