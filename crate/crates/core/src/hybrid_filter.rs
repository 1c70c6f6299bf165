//! One filter time step for a network of agents.
//!
//! Every agent predicts its own prior and turns its measurement into an
//! information increment. The network then iterates synchronous consensus
//! rounds: iterative CI on the (possibly correlated) priors, Metropolis-Hastings
//! averaging on the (independent) increments, and an ID flood that tells each
//! agent how many peers are in its connected group. The posterior is
//! `Y = 𝓨 + n_CG·δ̄I`, `y = 𝓎 + n_CG·δ̄i`.
//!
//! [`pure_ci_step`] and [`mhmc_only_step`] are the two single-mechanism
//! baselines on the same harness.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::consensus_mhmc::{mh_average_round, mh_weights};
use crate::error::{Error, Result};
use crate::field_model::FieldModel;
use crate::fusion_ci::{ici_round_on_graph, CiObjective};
use crate::gaussian::GaussianInfo;
use crate::info_filter::{
    centralized_update, local_increment, predict, InfoIncrement, ObservationModel,
};
use crate::linalg;
use crate::network::{flood_ids, GraphSnapshot, IdSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsensusConfig {
    pub max_iters: usize,
    /// Threshold on the largest relative Frobenius change of any consensus
    /// variable over one iteration.
    pub tol: f64,
    pub objective: CiObjective,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-8,
            objective: CiObjective::LogDet,
        }
    }
}

impl ConsensusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config(
                "consensus max_iters must be at least 1".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("consensus tol must be positive".into()));
        }
        Ok(())
    }
}

/// A measurement taken by one agent at the current step.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub model: ObservationModel,
    pub z: DVector<f64>,
}

impl Measurement {
    pub fn increment(&self) -> Result<InfoIncrement> {
        local_increment(&self.model, &self.z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub prior: GaussianInfo,
    pub consensus_prior: GaussianInfo,
    pub consensus_inc: InfoIncrement,
    pub ids: IdSet,
}

impl AgentState {
    pub fn new(id: usize, prior: GaussianInfo) -> Self {
        let n = prior.dim();
        Self {
            id,
            consensus_prior: prior.clone(),
            consensus_inc: InfoIncrement::zero(n),
            ids: IdSet::singleton(id),
            prior,
        }
    }
}

/// What one directed delivery carries in a consensus iteration.
#[derive(Debug, Clone, Serialize)]
pub struct MessageRecord<'a> {
    pub iteration: usize,
    pub from: usize,
    pub to: usize,
    pub prior_vec: &'a DVector<f64>,
    pub prior_mat: &'a DMatrix<f64>,
    pub inc_vec: &'a DVector<f64>,
    pub inc_mat: &'a DMatrix<f64>,
    pub ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub posteriors: Vec<GaussianInfo>,
    /// Group size each agent scaled its averaged increment by; 0 where the
    /// estimator does not use one.
    pub n_cg: Vec<usize>,
    /// Consensus iterations executed.
    pub iterations: usize,
}

fn check_inputs(
    n_agents: usize,
    observations: &[Option<Measurement>],
    topology_rounds: &[GraphSnapshot],
) -> Result<()> {
    if observations.len() != n_agents {
        return Err(Error::dims(
            "observations per agent",
            n_agents,
            observations.len(),
        ));
    }
    if topology_rounds.is_empty() {
        return Err(Error::Contract(
            "no topology supplied for the consensus phase".into(),
        ));
    }
    for g in topology_rounds {
        if g.n_agents() != n_agents {
            return Err(Error::dims("topology agents", n_agents, g.n_agents()));
        }
    }
    Ok(())
}

fn graph_for(rounds: &[GraphSnapshot], iteration: usize) -> &GraphSnapshot {
    &rounds[iteration.min(rounds.len() - 1)]
}

fn increments(observations: &[Option<Measurement>], dim: usize) -> Result<Vec<InfoIncrement>> {
    observations
        .iter()
        .map(|obs| match obs {
            Some(m) => {
                let inc = m.increment()?;
                if inc.dim() != dim {
                    return Err(Error::dims("measurement state dimension", dim, inc.dim()));
                }
                Ok(inc)
            }
            None => Ok(InfoIncrement::zero(dim)),
        })
        .collect()
}

/// Largest change of `new` relative to `max(‖old‖, ‖initial‖)` over agents.
fn max_change_mat<'a>(
    new: impl Iterator<Item = &'a DMatrix<f64>>,
    old: impl Iterator<Item = &'a DMatrix<f64>>,
    initial: impl Iterator<Item = &'a DMatrix<f64>>,
) -> f64 {
    new.zip(old)
        .zip(initial)
        .map(|((n, o), i)| relative((n - o).norm(), o.norm().max(i.norm())))
        .fold(0.0, f64::max)
}

fn max_change_vec<'a>(
    new: impl Iterator<Item = &'a DVector<f64>>,
    old: impl Iterator<Item = &'a DVector<f64>>,
    initial: impl Iterator<Item = &'a DVector<f64>>,
) -> f64 {
    new.zip(old)
        .zip(initial)
        .map(|((n, o), i)| relative((n - o).norm(), o.norm().max(i.norm())))
        .fold(0.0, f64::max)
}

fn relative(diff: f64, scale: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / scale.max(f64::MIN_POSITIVE)
    }
}

fn assert_posterior(info_mat: &DMatrix<f64>, agent: usize) {
    assert!(
        linalg::is_psd(info_mat, 1e-9),
        "posterior information matrix of agent {agent} is not PSD"
    );
}

/// Hybrid step on every agent; see the module docs.
///
/// `topology_rounds[l]` is the graph used at consensus iteration `l`; the last
/// entry stays in force for later iterations, so a single snapshot means a
/// fixed graph for the whole step. Each agent's `prior` is replaced by its
/// posterior.
pub fn hybrid_step(
    agents: &mut [AgentState],
    model: &FieldModel,
    observations: &[Option<Measurement>],
    topology_rounds: &[GraphSnapshot],
    cfg: &ConsensusConfig,
) -> Result<StepOutcome> {
    hybrid_step_traced(
        agents,
        model,
        observations,
        topology_rounds,
        cfg,
        &mut |_| {},
    )
}

/// [`hybrid_step`] that reports every directed message delivery to `sink`.
pub fn hybrid_step_traced(
    agents: &mut [AgentState],
    model: &FieldModel,
    observations: &[Option<Measurement>],
    topology_rounds: &[GraphSnapshot],
    cfg: &ConsensusConfig,
    sink: &mut dyn FnMut(&MessageRecord<'_>),
) -> Result<StepOutcome> {
    cfg.validate()?;
    let n_agents = agents.len();
    check_inputs(n_agents, observations, topology_rounds)?;
    let dim = model.dim();

    // local prediction and increments, then consensus initialization
    let incs = increments(observations, dim)?;
    for (agent, inc) in agents.iter_mut().zip(incs) {
        agent.consensus_prior = predict(&agent.prior, model)?;
        agent.consensus_inc = inc;
        agent.ids = IdSet::singleton(agent.id);
    }
    let initial_priors: Vec<GaussianInfo> =
        agents.iter().map(|a| a.consensus_prior.clone()).collect();
    let initial_incs: Vec<InfoIncrement> = agents.iter().map(|a| a.consensus_inc.clone()).collect();

    let mut iterations = 0;
    for l in 0..cfg.max_iters {
        let graph = graph_for(topology_rounds, l);

        for to in 0..n_agents {
            for &from in graph.neighbors(to) {
                let a = &agents[from];
                sink(&MessageRecord {
                    iteration: l,
                    from: a.id,
                    to: agents[to].id,
                    prior_vec: &a.consensus_prior.info_vec,
                    prior_mat: &a.consensus_prior.info_mat,
                    inc_vec: &a.consensus_inc.di,
                    inc_mat: &a.consensus_inc.d_info,
                    ids: a.ids.seen().iter().copied().collect(),
                });
            }
        }

        let priors: Vec<GaussianInfo> = agents.iter().map(|a| a.consensus_prior.clone()).collect();
        let incs: Vec<InfoIncrement> = agents.iter().map(|a| a.consensus_inc.clone()).collect();
        let ids: Vec<IdSet> = agents.iter().map(|a| a.ids.clone()).collect();

        let new_priors = ici_round_on_graph(&priors, None, graph, cfg.objective)?;
        let new_incs = mh_average_round(&incs, &mh_weights(graph))?;
        let new_ids = flood_ids(&ids, graph)?;

        let change = [
            max_change_mat(
                new_priors.iter().map(|g| &g.info_mat),
                priors.iter().map(|g| &g.info_mat),
                initial_priors.iter().map(|g| &g.info_mat),
            ),
            max_change_vec(
                new_priors.iter().map(|g| &g.info_vec),
                priors.iter().map(|g| &g.info_vec),
                initial_priors.iter().map(|g| &g.info_vec),
            ),
            max_change_mat(
                new_incs.iter().map(|g| &g.d_info),
                incs.iter().map(|g| &g.d_info),
                initial_incs.iter().map(|g| &g.d_info),
            ),
            max_change_vec(
                new_incs.iter().map(|g| &g.di),
                incs.iter().map(|g| &g.di),
                initial_incs.iter().map(|g| &g.di),
            ),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        let ids_stable = new_ids == ids;

        for (((agent, p), inc), id) in agents.iter_mut().zip(new_priors).zip(new_incs).zip(new_ids)
        {
            debug_assert!(p.info_mat == p.info_mat.transpose());
            debug_assert!(inc.d_info == inc.d_info.transpose());
            agent.consensus_prior = p;
            agent.consensus_inc = inc;
            agent.ids = id;
        }
        iterations = l + 1;
        if change < cfg.tol && ids_stable {
            break;
        }
    }

    let mut posteriors = Vec::with_capacity(n_agents);
    let mut n_cg = Vec::with_capacity(n_agents);
    for agent in agents.iter_mut() {
        let group = agent.ids.n_cg();
        let scale = group as f64;
        let mut post = agent.consensus_prior.clone();
        post.info_vec.axpy(scale, &agent.consensus_inc.di, 1.0);
        linalg::add_scaled(&mut post.info_mat, scale, &agent.consensus_inc.d_info);
        assert_posterior(&post.info_mat, agent.id);
        agent.prior = post.clone();
        posteriors.push(post);
        n_cg.push(group);
    }
    Ok(StepOutcome {
        posteriors,
        n_cg,
        iterations,
    })
}

/// Pure iterative-CI baseline: each agent folds its increment into its
/// predicted prior once, then the bundles are fused by iterative CI until
/// they stop changing.
pub fn pure_ci_step(
    priors: &mut [GaussianInfo],
    model: &FieldModel,
    observations: &[Option<Measurement>],
    topology_rounds: &[GraphSnapshot],
    cfg: &ConsensusConfig,
) -> Result<StepOutcome> {
    cfg.validate()?;
    let n_agents = priors.len();
    check_inputs(n_agents, observations, topology_rounds)?;
    let incs = increments(observations, model.dim())?;
    let predicted: Vec<GaussianInfo> = priors
        .iter()
        .map(|p| predict(p, model))
        .collect::<Result<_>>()?;

    let mut iterations = 0;
    let mut current = ici_round_on_graph(
        &predicted,
        Some(&incs),
        graph_for(topology_rounds, 0),
        cfg.objective,
    )?;
    let initial = current.clone();
    iterations += 1;
    for l in 1..cfg.max_iters {
        let next =
            ici_round_on_graph(&current, None, graph_for(topology_rounds, l), cfg.objective)?;
        let change = max_change_mat(
            next.iter().map(|g| &g.info_mat),
            current.iter().map(|g| &g.info_mat),
            initial.iter().map(|g| &g.info_mat),
        )
        .max(max_change_vec(
            next.iter().map(|g| &g.info_vec),
            current.iter().map(|g| &g.info_vec),
            initial.iter().map(|g| &g.info_vec),
        ));
        current = next;
        iterations = l + 1;
        if change < cfg.tol {
            break;
        }
    }
    for (i, (prior, post)) in priors.iter_mut().zip(&current).enumerate() {
        assert_posterior(&post.info_mat, i);
        *prior = post.clone();
    }
    Ok(StepOutcome {
        posteriors: current,
        n_cg: vec![0; n_agents],
        iterations,
    })
}

/// Relative Frobenius distance within which priors count as equal for the
/// averaging-only baseline.
pub const EQUAL_PRIOR_TOL: f64 = 1e-6;

/// Averaging-only baseline, defined only when every agent holds the same
/// prior: increments are averaged by MHMC and scaled by the group size.
pub fn mhmc_only_step(
    priors: &mut [GaussianInfo],
    model: &FieldModel,
    observations: &[Option<Measurement>],
    topology_rounds: &[GraphSnapshot],
    cfg: &ConsensusConfig,
) -> Result<StepOutcome> {
    cfg.validate()?;
    let n_agents = priors.len();
    check_inputs(n_agents, observations, topology_rounds)?;
    if let Some(first) = priors.first() {
        for (i, p) in priors.iter().enumerate().skip(1) {
            let dm = linalg::rel_frobenius(&p.info_mat, &first.info_mat);
            let dv = linalg::rel_distance(&p.info_vec, &first.info_vec);
            if dm > EQUAL_PRIOR_TOL || dv > EQUAL_PRIOR_TOL {
                return Err(Error::Contract(format!(
                    "averaging-only consensus needs equal priors; agent {i} differs from agent 0 \
                     (relative distance {:.3e})",
                    dm.max(dv)
                )));
            }
        }
    }
    let initial = increments(observations, model.dim())?;
    let mut incs = initial.clone();
    let mut ids: Vec<IdSet> = (0..n_agents).map(IdSet::singleton).collect();
    let mut iterations = 0;
    for l in 0..cfg.max_iters {
        let graph = graph_for(topology_rounds, l);
        let next = mh_average_round(&incs, &mh_weights(graph))?;
        let next_ids = flood_ids(&ids, graph)?;
        let change = max_change_mat(
            next.iter().map(|g| &g.d_info),
            incs.iter().map(|g| &g.d_info),
            initial.iter().map(|g| &g.d_info),
        )
        .max(max_change_vec(
            next.iter().map(|g| &g.di),
            incs.iter().map(|g| &g.di),
            initial.iter().map(|g| &g.di),
        ));
        let stable = next_ids == ids;
        incs = next;
        ids = next_ids;
        iterations = l + 1;
        if change < cfg.tol && stable {
            break;
        }
    }
    let mut posteriors = Vec::with_capacity(n_agents);
    let mut n_cg = Vec::with_capacity(n_agents);
    for (i, prior) in priors.iter_mut().enumerate() {
        let group = ids[i].n_cg();
        let pred = predict(prior, model)?;
        let post = centralized_update(&pred, &[incs[i].scaled(group as f64)])?;
        assert_posterior(&post.info_mat, i);
        *prior = post.clone();
        posteriors.push(post);
        n_cg.push(group);
    }
    Ok(StepOutcome {
        posteriors,
        n_cg,
        iterations,
    })
}
