use hybrid_consensus::experiment::{
    write_records_csv, Estimator, GraphSpec, NamedGraph, PhaseConfig, ReceptorConfig,
    ScenarioConfig, Simulation, TopologyConfig, TruthInit, EXPERIMENT1_TOML,
};
use hybrid_consensus::field_model::GridSpec;
use hybrid_consensus::GaussianMoments;
use nalgebra::{DMatrix, DVector};

fn small() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::from_toml_str(EXPERIMENT1_TOML).unwrap();
    cfg.grid = GridSpec {
        nx: 3,
        ny: 2,
        nz: 2,
        ..cfg.grid
    };
    cfg.sources.retain(|s| cfg.grid.contains(s.cell));
    cfg.receptors = vec![
        ReceptorConfig {
            cell: [1, 0, 0],
            sigma: 0.1,
        },
        ReceptorConfig {
            cell: [1, 1, 0],
            sigma: 0.2,
        },
        ReceptorConfig {
            cell: [2, 0, 1],
            sigma: 0.1,
        },
        ReceptorConfig {
            cell: [2, 1, 0],
            sigma: 0.3,
        },
    ];
    cfg.n_agents = None;
    cfg.horizon = 12;
    cfg.topology = TopologyConfig::Scripted {
        base: GraphSpec::Named(NamedGraph::Path),
        phases: vec![],
    };
    cfg
}

fn csv(cfg: &ScenarioConfig) -> Vec<u8> {
    let records = Simulation::from_config(cfg).unwrap().records().unwrap();
    let mut buf = Vec::new();
    write_records_csv(&mut buf, &records).unwrap();
    buf
}

#[test]
fn single_agent_single_step_estimators_agree() {
    let mut cfg = small();
    cfg.horizon = 1;
    cfg.receptors.truncate(1);
    cfg.estimators = vec![
        Estimator::Centralized,
        Estimator::Hybrid,
        Estimator::PureCi,
        Estimator::MhmcOnly,
    ];
    cfg.topology = TopologyConfig::Scripted {
        base: GraphSpec::Named(NamedGraph::Empty),
        phases: vec![],
    };
    Simulation::from_config(&cfg)
        .unwrap()
        .run(|r| {
            for (_, outcome) in &r.outcomes {
                let post = &outcome.posteriors[0];
                assert!(
                    (&post.info_mat - &r.centralized.info_mat).norm()
                        <= 1e-12 * r.centralized.info_mat.norm()
                );
                assert!(
                    (&post.info_vec - &r.centralized.info_vec).norm()
                        <= 1e-12 * r.centralized.info_vec.norm().max(1.0)
                );
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn identical_config_gives_identical_bytes() {
    let cfg = small();
    assert_eq!(csv(&cfg), csv(&cfg));
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(csv(&cfg), csv(&other));
}

#[test]
fn centralized_records_ignore_topology() {
    let mut a = small();
    a.estimators = vec![Estimator::Centralized, Estimator::Hybrid];
    let mut b = a.clone();
    b.topology = TopologyConfig::Scripted {
        base: GraphSpec::Named(NamedGraph::Empty),
        phases: vec![],
    };
    let central = |cfg: &ScenarioConfig| {
        Simulation::from_config(cfg)
            .unwrap()
            .records()
            .unwrap()
            .into_iter()
            .filter(|r| r.estimator == Estimator::Centralized)
            .collect::<Vec<_>>()
    };
    assert_eq!(central(&a), central(&b));
}

#[test]
fn averaging_only_matches_centralized_on_complete_graph() {
    let mut cfg = small();
    cfg.estimators = vec![Estimator::Centralized, Estimator::MhmcOnly];
    cfg.topology = TopologyConfig::Scripted {
        base: GraphSpec::Named(NamedGraph::Complete),
        phases: vec![],
    };
    Simulation::from_config(&cfg)
        .unwrap()
        .run(|r| {
            for post in &r.outcome(Estimator::MhmcOnly).unwrap().posteriors {
                let err = (&post.info_mat - &r.centralized.info_mat).norm()
                    / r.centralized.info_mat.norm();
                assert!(err < 1e-10, "step {}: {err}", r.k);
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn averaging_only_rejects_diverged_priors() {
    let mut cfg = small();
    cfg.estimators = vec![Estimator::MhmcOnly];
    cfg.topology = TopologyConfig::Scripted {
        base: GraphSpec::Named(NamedGraph::Empty),
        phases: vec![],
    };
    assert!(Simulation::from_config(&cfg).unwrap().records().is_err());
}

#[test]
fn isolated_agents_run_local_filters() {
    let mut cfg = small();
    cfg.topology = TopologyConfig::Scripted {
        base: GraphSpec::Named(NamedGraph::Empty),
        phases: vec![],
    };
    let records = Simulation::from_config(&cfg).unwrap().records().unwrap();
    let pick = |e: Estimator| {
        records
            .iter()
            .filter(|r| r.estimator == e)
            .map(|r| (r.step, r.agent, r.logdet_cov, r.mean.clone()))
            .collect::<Vec<_>>()
    };
    let (hybrid, pure) = (pick(Estimator::Hybrid), pick(Estimator::PureCi));
    for (h, p) in hybrid.iter().zip(&pure) {
        assert_eq!((h.0, h.1), (p.0, p.1));
        assert!((h.2 - p.2).abs() < 1e-9 * h.2.abs().max(1.0));
        let diff: f64 =
            h.3.iter()
                .zip(&p.3)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
        assert!(diff < 1e-8);
    }
    assert!(records
        .iter()
        .filter(|r| r.estimator == Estimator::Hybrid)
        .all(|r| r.n_cg == 1));
}

#[test]
fn hybrid_is_at_least_as_close_to_centralized_as_pure_ci() {
    let mut cfg = small();
    cfg.topology = TopologyConfig::Scripted {
        base: GraphSpec::Named(NamedGraph::Path),
        phases: vec![PhaseConfig {
            from: 3,
            to: 6,
            graph: GraphSpec::Edges {
                edges: vec![[1, 2], [3, 4]],
            },
        }],
    };
    let records = Simulation::from_config(&cfg).unwrap().records().unwrap();
    let mean_affinity = |e: Estimator| {
        let v: Vec<f64> = records
            .iter()
            .filter(|r| r.estimator == e)
            .map(|r| r.metrics.bhattacharyya_affinity)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean_affinity(Estimator::Hybrid) >= mean_affinity(Estimator::PureCi));
    assert!(records
        .iter()
        .filter(|r| r.estimator == Estimator::Centralized)
        .all(|r| r.metrics.bhattacharyya_affinity == 1.0 && r.metrics.det_ratio == 1.0));
}

/// Normalized estimation error squared, averaged over independent runs, must
/// not exceed the state dimension for a conservative estimator.
#[test]
fn decentralized_estimates_are_conservative() {
    let mut cfg = small();
    cfg.horizon = 8;
    cfg.topology = TopologyConfig::Scripted {
        base: GraphSpec::Named(NamedGraph::Path),
        phases: vec![PhaseConfig {
            from: 2,
            to: 5,
            graph: GraphSpec::Edges {
                edges: vec![[1, 2], [3, 4]],
            },
        }],
    };
    let n = cfg.grid.n_cells();
    let runs = 300;
    let mut nees = [0.0f64; 3];
    for run in 0..runs {
        let mut sim = Simulation::from_config(&cfg).unwrap();
        sim.seed = 10_000 + run;
        sim.initial_belief =
            GaussianMoments::new(DVector::zeros(n), DMatrix::identity(n, n)).unwrap();
        sim.truth_init = TruthInit::SampledFromPrior;
        sim.run(|r| {
            if r.k != cfg.horizon {
                return Ok(());
            }
            let posts = [
                &r.centralized,
                &r.outcome(Estimator::Hybrid).unwrap().posteriors[0],
                &r.outcome(Estimator::PureCi).unwrap().posteriors[0],
            ];
            for (slot, post) in posts.into_iter().enumerate() {
                let err = post.mean().unwrap() - &r.truth;
                nees[slot] += (err.transpose() * &post.info_mat * &err)[0];
            }
            Ok(())
        })
        .unwrap();
    }
    // chi-square mean n, sd sqrt(2n / runs)
    let limit = n as f64 + 3.0 * (2.0 * n as f64 / runs as f64).sqrt();
    for (name, total) in ["centralized", "hybrid", "pure_ci"].iter().zip(nees) {
        let mean = total / runs as f64;
        assert!(mean <= limit, "{name}: mean NEES {mean} above {limit}");
    }
}
