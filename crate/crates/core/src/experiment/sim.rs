use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::config::{Estimator, ScenarioConfig};
use super::{derive_seed, STREAM_INITIAL, STREAM_OBSERVATION, STREAM_TRUTH};
use crate::error::{Error, Result};
use crate::field_model::{step_truth, FieldModel, FieldState};
use crate::gaussian::{GaussianInfo, GaussianMoments};
use crate::hybrid_filter::{
    hybrid_step_traced, mhmc_only_step, pure_ci_step, AgentState, ConsensusConfig, Measurement,
    MessageRecord, StepOutcome,
};
use crate::info_filter::{centralized_update, predict, InfoIncrement, ObservationModel};
use crate::linalg;
use crate::metrics::{self, StepMetrics};
use crate::network::TopologySchedule;

/// Plant dynamics plus one sensor per agent.
#[derive(Debug, Clone)]
pub struct Plant {
    pub model: FieldModel,
    pub sensors: Vec<ObservationModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TruthInit {
    Fixed(DVector<f64>),
    /// Drawn from the agents' common initial belief.
    SampledFromPrior,
}

/// One row of the run output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub step: usize,
    /// 1-based agent number.
    pub agent: usize,
    pub estimator: Estimator,
    pub metrics: StepMetrics,
    pub n_cg: usize,
    pub iterations: usize,
    pub logdet_cov: f64,
    pub mean: Vec<f64>,
}

/// Everything produced at one time step, handed to the run observer.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub k: usize,
    pub truth: DVector<f64>,
    pub centralized: GaussianInfo,
    pub outcomes: Vec<(Estimator, StepOutcome)>,
}

impl StepReport {
    pub fn outcome(&self, estimator: Estimator) -> Option<&StepOutcome> {
        self.outcomes
            .iter()
            .find(|(e, _)| *e == estimator)
            .map(|(_, o)| o)
    }
}

pub struct Simulation {
    pub plant: Plant,
    pub schedule: TopologySchedule,
    pub horizon: usize,
    pub consensus: ConsensusConfig,
    pub estimators: Vec<Estimator>,
    pub seed: u64,
    pub initial_belief: GaussianMoments,
    pub truth_init: TruthInit,
}

impl Simulation {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let model = cfg.plant_model()?;
        let n = model.dim();
        Ok(Self {
            plant: Plant {
                sensors: cfg.observation_models()?,
                model,
            },
            schedule: cfg.schedule()?,
            horizon: cfg.horizon,
            consensus: cfg.consensus,
            estimators: cfg.estimators.clone(),
            seed: cfg.seed,
            initial_belief: GaussianMoments {
                mean: DVector::zeros(n),
                cov: nalgebra::DMatrix::identity(n, n) / cfg.prior_info,
            },
            truth_init: TruthInit::Fixed(DVector::zeros(n)),
        })
    }

    pub fn n_agents(&self) -> usize {
        self.plant.sensors.len()
    }

    fn check(&self) -> Result<()> {
        let n = self.plant.model.dim();
        if self.schedule.n_agents() != self.n_agents() {
            return Err(Error::dims(
                "schedule agents",
                self.n_agents(),
                self.schedule.n_agents(),
            ));
        }
        for s in &self.plant.sensors {
            if s.state_dim() != n {
                return Err(Error::dims("sensor state dimension", n, s.state_dim()));
            }
        }
        if self.initial_belief.dim() != n {
            return Err(Error::dims("initial belief", n, self.initial_belief.dim()));
        }
        self.schedule.validate(self.horizon)?;
        self.consensus.validate()
    }

    fn initial_truth(&self) -> Result<DVector<f64>> {
        match &self.truth_init {
            TruthInit::Fixed(x) => {
                if x.len() != self.plant.model.dim() {
                    return Err(Error::dims(
                        "initial truth",
                        self.plant.model.dim(),
                        x.len(),
                    ));
                }
                Ok(x.clone())
            }
            TruthInit::SampledFromPrior => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, STREAM_INITIAL, 0));
                let n = self.plant.model.dim();
                let xi = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                Ok(&self.initial_belief.mean + linalg::psd_factor(&self.initial_belief.cov) * xi)
            }
        }
    }

    fn measure(&self, truth: &DVector<f64>, k: usize) -> Vec<Option<Measurement>> {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(self.seed, STREAM_OBSERVATION, k as u64));
        self.plant
            .sensors
            .iter()
            .map(|sensor| {
                let noise_factor = linalg::psd_factor(sensor.r());
                let xi = DVector::from_fn(sensor.obs_dim(), |_, _| StandardNormal.sample(&mut rng));
                Some(Measurement {
                    model: sensor.clone(),
                    z: sensor.h() * truth + noise_factor * xi,
                })
            })
            .collect()
    }

    /// Runs the scenario, calling `observer` after every step.
    pub fn run(&self, observer: impl FnMut(&StepReport) -> Result<()>) -> Result<()> {
        self.run_traced(observer, &mut |_, _| {})
    }

    /// [`Simulation::run`] that also streams the hybrid filter's message
    /// deliveries, tagged with the time step.
    pub fn run_traced(
        &self,
        mut observer: impl FnMut(&StepReport) -> Result<()>,
        trace: &mut dyn FnMut(usize, &MessageRecord<'_>),
    ) -> Result<()> {
        self.check()?;
        let n_agents = self.n_agents();
        let prior = self.initial_belief.to_info()?;

        let mut truth = FieldState {
            x: self.initial_truth()?,
            k: 0,
        };
        let mut central = prior.clone();
        let mut hybrid: Vec<AgentState> = (0..n_agents)
            .map(|i| AgentState::new(i, prior.clone()))
            .collect();
        let mut pure_ci = vec![prior.clone(); n_agents];
        let mut mhmc = vec![prior.clone(); n_agents];

        for k in 1..=self.horizon {
            truth = step_truth(
                &self.plant.model,
                &truth,
                derive_seed(self.seed, STREAM_TRUTH, k as u64),
            )?;
            let observations = self.measure(&truth.x, k);
            let rounds = [self.schedule.snapshot_at(k)?];

            let incs: Vec<InfoIncrement> = observations
                .iter()
                .flatten()
                .map(Measurement::increment)
                .collect::<Result<_>>()?;
            central = centralized_update(&predict(&central, &self.plant.model)?, &incs)?;

            let mut outcomes = Vec::with_capacity(self.estimators.len());
            for &estimator in &self.estimators {
                let outcome = match estimator {
                    Estimator::Centralized => StepOutcome {
                        posteriors: vec![central.clone(); n_agents],
                        n_cg: vec![n_agents; n_agents],
                        iterations: 0,
                    },
                    Estimator::Hybrid => hybrid_step_traced(
                        &mut hybrid,
                        &self.plant.model,
                        &observations,
                        &rounds,
                        &self.consensus,
                        &mut |m| trace(k, m),
                    )?,
                    Estimator::PureCi => pure_ci_step(
                        &mut pure_ci,
                        &self.plant.model,
                        &observations,
                        &rounds,
                        &self.consensus,
                    )?,
                    Estimator::MhmcOnly => mhmc_only_step(
                        &mut mhmc,
                        &self.plant.model,
                        &observations,
                        &rounds,
                        &self.consensus,
                    )?,
                };
                outcomes.push((estimator, outcome));
            }
            observer(&StepReport {
                k,
                truth: truth.x.clone(),
                centralized: central.clone(),
                outcomes,
            })?;
        }
        Ok(())
    }

    /// Runs the scenario and scores every (step, agent, estimator).
    pub fn records(&self) -> Result<Vec<RunRecord>> {
        let mut out = Vec::new();
        self.run(|report| {
            out.extend(score(report)?);
            Ok(())
        })?;
        Ok(out)
    }
}

/// Moment form through a Cholesky inverse.
fn moments(g: &GaussianInfo) -> Result<GaussianMoments> {
    let cov = linalg::spd_inverse(&g.info_mat, "posterior covariance")?;
    let mean = &cov * &g.info_vec;
    Ok(GaussianMoments { mean, cov })
}

/// Metrics for every agent and estimator in one step report.
pub fn score(report: &StepReport) -> Result<Vec<RunRecord>> {
    let central = moments(&report.centralized)?;
    let mut out = Vec::new();
    for (estimator, outcome) in &report.outcomes {
        for (i, post) in outcome.posteriors.iter().enumerate() {
            let m = moments(post)?;
            let logdet_cov =
                -linalg::logdet_spd(&post.info_mat).ok_or(Error::NotPositiveDefinite {
                    context: "posterior information",
                })?;
            out.push(RunRecord {
                step: report.k,
                agent: i + 1,
                estimator: *estimator,
                metrics: metrics::step_metrics(&m, &central, &report.truth)?,
                n_cg: outcome.n_cg[i],
                iterations: outcome.iterations,
                logdet_cov,
                mean: m.mean.iter().copied().collect(),
            });
        }
    }
    Ok(out)
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<RunRecord>> {
    Simulation::from_config(cfg)?.records()
}
