use hybrid_consensus::consensus_mhmc::{mh_average_round, mh_weights};
use hybrid_consensus::fusion_ci::{
    ci_fuse, ici_round_on_graph, network_lyapunov, optimize_weights, CiObjective,
};
use hybrid_consensus::linalg::logdet_spd;
use hybrid_consensus::network::GraphSnapshot;
use hybrid_consensus::GaussianInfo;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    &m * m.transpose() / n as f64 + DMatrix::identity(n, n) * 0.05
}

fn neg_logdet(m: &DMatrix<f64>) -> f64 {
    -logdet_spd(m).unwrap()
}

#[test]
fn pair_weights_match_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..200 {
        let (a, b) = (spd(&mut rng, 3), spd(&mut rng, 3));
        let w = optimize_weights(&[&a, &b], CiObjective::LogDet).unwrap();
        let ours = neg_logdet(&(&a * w.as_slice()[0] + &b * w.as_slice()[1]));
        let grid = (0..=1000)
            .map(|k| {
                let t = k as f64 / 1000.0;
                neg_logdet(&(&a * t + &b * (1.0 - t)))
            })
            .fold(f64::INFINITY, f64::min);
        assert!(ours <= grid + 1e-12, "{ours} vs grid {grid}");
    }
}

#[test]
fn many_input_weights_match_simplex_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..30 {
        let mats: Vec<DMatrix<f64>> = (0..3).map(|_| spd(&mut rng, 4)).collect();
        let refs: Vec<&DMatrix<f64>> = mats.iter().collect();
        let w = optimize_weights(&refs, CiObjective::LogDet).unwrap();
        let combine =
            |w: &[f64]| neg_logdet(&(&mats[0] * w[0] + &mats[1] * w[1] + &mats[2] * w[2]));
        let ours = combine(w.as_slice());
        let steps = 200;
        let mut grid = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=steps - i {
                let (a, b) = (i as f64 / steps as f64, j as f64 / steps as f64);
                grid = grid.min(combine(&[a, b, 1.0 - a - b]));
            }
        }
        assert!(ours <= grid + 1e-9, "{ours} vs grid {grid}");
    }
}

#[test]
fn weights_follow_input_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..20 {
        let mats: Vec<DMatrix<f64>> = (0..4).map(|_| spd(&mut rng, 3)).collect();
        let w = optimize_weights(&mats.iter().collect::<Vec<_>>(), CiObjective::LogDet).unwrap();
        let order = [2, 0, 3, 1];
        let permuted: Vec<&DMatrix<f64>> = order.iter().map(|&i| &mats[i]).collect();
        let wp = optimize_weights(&permuted, CiObjective::LogDet).unwrap();
        let f = |w: &[f64], m: &[&DMatrix<f64>]| {
            neg_logdet(
                &m.iter()
                    .zip(w)
                    .fold(DMatrix::zeros(3, 3), |acc, (m, w)| acc + *m * *w),
            )
        };
        let original = f(w.as_slice(), &mats.iter().collect::<Vec<_>>());
        assert!((original - f(wp.as_slice(), &permuted)).abs() < 1e-9);
    }
}

#[test]
fn ci_fusion_is_conservative_for_correlated_errors() {
    // two estimates sharing a common error component; CI's covariance must
    // bound the true error covariance for any weight
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let n = 2;
    let shared = DMatrix::from_row_slice(n, n, &[1.0, 0.3, 0.3, 0.5]);
    let own = [
        DMatrix::from_row_slice(n, n, &[0.2, 0.0, 0.0, 1.0]),
        DMatrix::from_row_slice(n, n, &[1.5, -0.2, -0.2, 0.3]),
    ];
    let covs: Vec<DMatrix<f64>> = own.iter().map(|o| &shared + o).collect();
    let infos: Vec<DMatrix<f64>> = covs
        .iter()
        .map(|c| c.clone().try_inverse().unwrap())
        .collect();
    let w = optimize_weights(&[&infos[0], &infos[1]], CiObjective::LogDet).unwrap();
    let factor = |m: &DMatrix<f64>| m.clone().cholesky().unwrap().l();
    let (ls, l0, l1) = (factor(&shared), factor(&own[0]), factor(&own[1]));

    let truth = DVector::from_vec(vec![1.0, -2.0]);
    let mut scatter = DMatrix::zeros(n, n);
    let draws = 20_000;
    for _ in 0..draws {
        let mut noise = || DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let common = &ls * noise();
        let e0 = &common + &l0 * noise();
        let e1 = &common + &l1 * noise();
        let est: Vec<GaussianInfo> = [e0, e1]
            .iter()
            .zip(&infos)
            .map(|(e, y)| GaussianInfo::new(y * (&truth + e), y.clone()).unwrap())
            .collect();
        let fused = ci_fuse(&[&est[0], &est[1]], &w).unwrap();
        let err = fused.mean().unwrap() - &truth;
        scatter += &err * err.transpose();
    }
    let empirical = scatter / draws as f64;
    let fused_cov = (&infos[0] * w.as_slice()[0] + &infos[1] * w.as_slice()[1])
        .try_inverse()
        .unwrap();
    let gap = (&fused_cov - &empirical)
        .symmetric_eigen()
        .eigenvalues
        .min();
    assert!(gap > -0.02, "CI covariance does not bound the error: {gap}");
}

#[test]
fn ici_lyapunov_decreases_on_a_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let graph = GraphSnapshot::path(6);
    let mut est: Vec<GaussianInfo> = (0..6)
        .map(|_| {
            let y = spd(&mut rng, 3);
            GaussianInfo::new(DVector::from_fn(3, |i, _| i as f64), y).unwrap()
        })
        .collect();
    let mut v = network_lyapunov(&est, CiObjective::LogDet);
    for _ in 0..100 {
        est = ici_round_on_graph(&est, None, &graph, CiObjective::LogDet).unwrap();
        let next = network_lyapunov(&est, CiObjective::LogDet);
        assert!(next <= v + 1e-10);
        v = next;
    }
    let spread = est
        .iter()
        .map(|e| (&e.info_mat - &est[0].info_mat).norm())
        .fold(0.0, f64::max);
    assert!(spread < 1e-6, "no agreement after 100 rounds: {spread}");
}

#[test]
fn mh_rounds_reach_the_average_on_a_connected_graph() {
    let edges = [
        (0, 1),
        (1, 2),
        (3, 4),
        (4, 5),
        (6, 7),
        (7, 8),
        (0, 3),
        (1, 4),
        (2, 5),
        (3, 6),
        (4, 7),
        (5, 8),
    ];
    let graph = GraphSnapshot::new(9, edges).unwrap();
    let weights = mh_weights(&graph);
    let mut values: Vec<f64> = (0..9).map(|i| (i * i) as f64).collect();
    let mean = values.iter().sum::<f64>() / 9.0;
    for _ in 0..300 {
        values = mh_average_round(&values, &weights).unwrap();
    }
    assert!(
        values.iter().all(|v| (v - mean).abs() < 1e-10),
        "{values:?}"
    );
}

proptest! {
    #[test]
    fn mh_weights_are_symmetric_and_doubly_stochastic(
        n in 2usize..10,
        bits in prop::collection::vec(any::<bool>(), 45),
    ) {
        let mut edges = Vec::new();
        let mut k = 0;
        for a in 0..n {
            for b in a + 1..n {
                if bits[k] {
                    edges.push((a, b));
                }
                k += 1;
            }
        }
        let w = mh_weights(&GraphSnapshot::new(n, edges).unwrap()).to_dense();
        prop_assert!((&w - w.transpose()).norm() < 1e-15);
        for i in 0..n {
            prop_assert!((w.row(i).sum() - 1.0).abs() < 1e-12);
            prop_assert!(w.row(i).iter().all(|&v| v >= 0.0));
        }
    }
}
