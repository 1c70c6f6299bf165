use hybrid_consensus::experiment::{ScenarioConfig, EXPERIMENT1_TOML};
use hybrid_consensus::field_model::{step_truth, FieldState};
use nalgebra::{DMatrix, DVector};

#[test]
fn one_step_noise_covariance_matches_q_eff() {
    let cfg = ScenarioConfig::from_toml_str(EXPERIMENT1_TOML).unwrap();
    let model = cfg.plant_model().unwrap();
    let n = model.dim();
    let start = FieldState::zeros(n);
    let draws = 10_000;
    let mut second = DMatrix::zeros(n, n);
    let mut first = DVector::zeros(n);
    for seed in 0..draws {
        let x = step_truth(&model, &start, seed).unwrap().x;
        first += &x;
        second += &x * x.transpose();
    }
    let mean = first / draws as f64;
    let cov = second / draws as f64 - &mean * mean.transpose();
    let q = model.q_eff();
    for i in 0..n {
        for j in 0..n {
            let se = ((q[(i, i)] * q[(j, j)] + q[(i, j)].powi(2)) / draws as f64).sqrt();
            let dev = (cov[(i, j)] - q[(i, j)]).abs();
            assert!(
                dev <= 5.0 * se + 1e-12,
                "entry ({i},{j}): {} vs {}",
                cov[(i, j)],
                q[(i, j)]
            );
        }
    }
}

#[test]
fn bundled_plant_is_monotone_and_deterministic() {
    let cfg = ScenarioConfig::from_toml_str(EXPERIMENT1_TOML).unwrap();
    let model = cfg.plant_model().unwrap();
    let n = model.dim();
    let a = model.a();
    for i in 0..n {
        let col: f64 = a.column(i).iter().sum();
        assert!(col <= 1.0 + 1e-12, "column {i} creates mass: {col}");
        assert!(a.column(i).iter().all(|&v| v >= 0.0));
    }
    let state = FieldState {
        x: DVector::from_fn(n, |i, _| i as f64),
        k: 4,
    };
    let next = step_truth(&model, &state, 1).unwrap();
    assert_eq!(next.k, 5);
    let again = step_truth(&model, &state, 1).unwrap();
    assert_eq!(next, again);
}
