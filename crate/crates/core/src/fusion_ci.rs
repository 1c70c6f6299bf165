//! Covariance Intersection: simplex-constrained weight optimization, convex
//! fusion of information-form estimates, and one synchronous round of
//! iterative CI over a graph.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianInfo;
use crate::info_filter::InfoIncrement;
use crate::linalg;
use crate::network::GraphSnapshot;

/// Objective applied to the fused covariance `(Σ w_j 𝓘_j)⁻¹`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiObjective {
    /// `ln det`; the only choice with the ICI convergence guarantee.
    #[default]
    LogDet,
    Trace,
}

const WEIGHT_SUM_TOL: f64 = 1e-12;
const IMPROVEMENT_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 200;
const GOLDEN_TOL: f64 = 1e-10;
/// Inputs closer than this (relative Frobenius) are treated as identical.
const IDENTICAL_TOL: f64 = 1e-12;
const EXACT_QP_MAX: usize = 10;

/// Fusion weights on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiWeights(Vec<f64>);

impl CiWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Contract("empty weight vector".into()));
        }
        if w.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::Contract(format!("negative fusion weight in {w:?}")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Contract(format!("fusion weights sum to {sum}")));
        }
        Ok(Self(w))
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn vertex(k: usize, j: usize) -> Self {
        let mut w = vec![0.0; k];
        w[j] = 1.0;
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

struct Problem<'a> {
    mats: &'a [&'a DMatrix<f64>],
    objective: CiObjective,
}

impl Problem<'_> {
    fn combine(&self, w: &[f64]) -> DMatrix<f64> {
        let n = self.mats[0].nrows();
        let mut s = DMatrix::zeros(n, n);
        for (m, &wj) in self.mats.iter().zip(w) {
            if wj != 0.0 {
                linalg::add_scaled(&mut s, wj, m);
            }
        }
        s
    }

    /// `J((Σ w_j M_j)⁻¹)`, `+∞` when the combination is singular.
    fn value(&self, w: &[f64]) -> f64 {
        let s = self.combine(w);
        match self.objective {
            CiObjective::LogDet => linalg::logdet_spd(&s).map_or(f64::INFINITY, |ld| -ld),
            CiObjective::Trace => s.cholesky().map_or(f64::INFINITY, |c| c.inverse().trace()),
        }
    }

    fn gradient(&self, w: &[f64]) -> Option<Vec<f64>> {
        let s_inv = self.combine(w).cholesky()?.inverse();
        let g = match self.objective {
            // ∂/∂w_j (−ln det S) = −tr(S⁻¹ M_j)
            CiObjective::LogDet => self
                .mats
                .iter()
                .map(|m| -linalg::trace_of_product(&s_inv, m))
                .collect(),
            // ∂/∂w_j tr(S⁻¹) = −tr(S⁻² M_j)
            CiObjective::Trace => {
                let s_inv2 = &s_inv * &s_inv;
                self.mats
                    .iter()
                    .map(|m| -linalg::trace_of_product(&s_inv2, m))
                    .collect()
            }
        };
        Some(g)
    }

    fn golden_section(&self) -> (Vec<f64>, f64) {
        let phi = |t: f64| self.value(&[t, 1.0 - t]);
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut c = hi - ratio * (hi - lo);
        let mut d = lo + ratio * (hi - lo);
        let (mut fc, mut fd) = (phi(c), phi(d));
        while hi - lo > GOLDEN_TOL {
            if fc <= fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - ratio * (hi - lo);
                fc = phi(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + ratio * (hi - lo);
                fd = phi(d);
            }
        }
        let t = 0.5 * (lo + hi);
        (vec![t, 1.0 - t], phi(t))
    }

    /// Projected Newton for the log-det objective, started at uniform.
    ///
    /// With `S = Σ w_j M_j`, the gradient is `−tr(S⁻¹M_j)` and the Hessian
    /// `tr(S⁻¹M_i S⁻¹M_j)`; each step solves the quadratic model over
    /// the simplex and backtracks on the true objective.
    fn projected_newton(&self) -> (Vec<f64>, f64) {
        let k = self.mats.len();
        let mut w = vec![1.0 / k as f64; k];
        let mut f = self.value(&w);
        if !f.is_finite() {
            return (w, f);
        }
        for _ in 0..MAX_ITERS {
            let Some(chol) = self.combine(&w).cholesky() else {
                break;
            };
            let s_inv = chol.inverse();
            let products: Vec<DMatrix<f64>> = self.mats.iter().map(|m| &s_inv * *m).collect();
            let g: Vec<f64> = products.iter().map(|p| -p.trace()).collect();
            let mut h = DMatrix::zeros(k, k);
            for i in 0..k {
                for j in 0..=i {
                    let v = linalg::trace_of_product(&products[i], &products[j]);
                    h[(i, j)] = v;
                    h[(j, i)] = v;
                }
            }
            let target = simplex_qp(&w, &g, &h);
            let d: Vec<f64> = target.iter().zip(&w).map(|(t, wi)| t - wi).collect();
            let decrement: f64 = -g.iter().zip(&d).map(|(gi, di)| gi * di).sum::<f64>();
            if !(decrement > IMPROVEMENT_TOL) {
                break;
            }
            let mut t = 1.0;
            let mut accepted = None;
            while t > 1e-12 {
                let trial: Vec<f64> = w.iter().zip(&d).map(|(wi, di)| wi + t * di).collect();
                let f_trial = self.value(&trial);
                if f_trial <= f - 0.25 * t * decrement {
                    accepted = Some((trial, f_trial));
                    break;
                }
                t *= 0.5;
            }
            let Some((trial, f_trial)) = accepted else {
                break;
            };
            let improvement = f - f_trial;
            w = trial;
            f = f_trial;
            if improvement < IMPROVEMENT_TOL * 1e-2 {
                break;
            }
        }
        (w, f)
    }

    /// Projected gradient descent with backtracking, started at uniform.
    fn projected_gradient(&self) -> (Vec<f64>, f64) {
        let k = self.mats.len();
        let mut w = vec![1.0 / k as f64; k];
        let mut f = self.value(&w);
        if !f.is_finite() {
            return (w, f);
        }
        let mut step = f64::NAN;
        for _ in 0..MAX_ITERS {
            let Some(g) = self.gradient(&w) else { break };
            if step.is_nan() {
                let gmax = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                if gmax == 0.0 {
                    break;
                }
                step = 1.0 / gmax;
            }
            let mut accepted = None;
            while step > 1e-300 {
                let trial: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - step * gi).collect();
                let trial = project_simplex(&trial);
                let f_trial = self.value(&trial);
                let mut lin = 0.0;
                let mut quad = 0.0;
                for ((t, wi), gi) in trial.iter().zip(&w).zip(&g) {
                    lin += gi * (t - wi);
                    quad += (t - wi) * (t - wi);
                }
                if f_trial <= f + lin + quad / (2.0 * step) {
                    accepted = Some((trial, f_trial));
                    break;
                }
                step *= 0.5;
            }
            let Some((trial, f_trial)) = accepted else {
                break;
            };
            let improvement = f - f_trial;
            if improvement >= 0.0 {
                w = trial;
                f = f_trial;
            }
            if !(improvement >= IMPROVEMENT_TOL) {
                break;
            }
            step *= 2.0;
        }
        (w, f)
    }
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    let sum: f64 = w.iter().sum();
    for x in &mut w {
        *x /= sum;
    }
    w
}

/// Minimizer of `gᵀ(v − w) + ½ (v − w)ᵀ H (v − w)` over the simplex.
///
/// Small problems are solved exactly: the optimum is the stationary point of
/// the equality-constrained problem on some support, so every support is
/// tried. Larger ones fall back to accelerated projected gradient.
fn simplex_qp(w: &[f64], g: &[f64], h: &DMatrix<f64>) -> Vec<f64> {
    let k = w.len();
    if k > EXACT_QP_MAX {
        return simplex_qp_iterative(w, g, h);
    }
    // q(v) = cᵀv + ½ vᵀHv up to a constant
    let hw = h * DVector::from_column_slice(w);
    let c: Vec<f64> = (0..k).map(|i| g[i] - hw[i]).collect();
    let q = |v: &[f64]| -> f64 {
        (0..k)
            .map(|i| v[i] * (c[i] + 0.5 * (0..k).map(|j| h[(i, j)] * v[j]).sum::<f64>()))
            .sum()
    };
    let mut best = w.to_vec();
    let mut best_q = q(w);
    for mask in 1u32..(1 << k) {
        let support: Vec<usize> = (0..k).filter(|&i| mask & (1 << i) != 0).collect();
        let m = support.len();
        // [H_SS 1; 1ᵀ 0] [v_S; μ] = [−c_S; 1]
        let mut kkt = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                kkt[(a, b)] = h[(i, j)];
            }
            kkt[(a, m)] = 1.0;
            kkt[(m, a)] = 1.0;
            rhs[a] = -c[i];
        }
        rhs[m] = 1.0;
        let Ok(sol) = kkt.svd(true, true).solve(&rhs, 1e-13) else {
            continue;
        };
        if support.iter().enumerate().any(|(a, _)| !(sol[a] >= 0.0)) {
            continue;
        }
        let mut v = vec![0.0; k];
        for (a, &i) in support.iter().enumerate() {
            v[i] = sol[a];
        }
        let sum: f64 = v.iter().sum();
        if !((sum - 1.0).abs() < 1e-9) {
            continue;
        }
        for x in &mut v {
            *x /= sum;
        }
        let qv = q(&v);
        if qv < best_q {
            best_q = qv;
            best = v;
        }
    }
    best
}

fn simplex_qp_iterative(w: &[f64], g: &[f64], h: &DMatrix<f64>) -> Vec<f64> {
    let lipschitz = h.trace();
    if !(lipschitz > 0.0) {
        return w.to_vec();
    }
    let k = w.len();
    let grad = |v: &[f64]| -> Vec<f64> {
        (0..k)
            .map(|i| g[i] + (0..k).map(|j| h[(i, j)] * (v[j] - w[j])).sum::<f64>())
            .collect()
    };
    let mut v = w.to_vec();
    let mut y = v.clone();
    let mut momentum = 1.0f64;
    for _ in 0..2000 {
        let gy = grad(&y);
        let stepped: Vec<f64> = y
            .iter()
            .zip(&gy)
            .map(|(yi, gi)| yi - gi / lipschitz)
            .collect();
        let next = project_simplex(&stepped);
        let next_momentum = (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0;
        let beta = (momentum - 1.0) / next_momentum;
        let moved = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        y = next
            .iter()
            .zip(&v)
            .map(|(n, o)| n + beta * (n - o))
            .collect();
        v = next;
        momentum = next_momentum;
        if moved < 1e-15 {
            break;
        }
    }
    v
}

fn all_identical(mats: &[&DMatrix<f64>]) -> bool {
    let first = mats[0];
    let scale = first.norm();
    mats[1..]
        .iter()
        .all(|m| *m == first || (*m - first).norm() <= IDENTICAL_TOL * scale)
}

/// Weights minimizing `J((Σ w_j 𝓘_j)⁻¹)` over the simplex.
///
/// Two inputs use golden-section search on the scalar weight; more use
/// projected Newton (log-det) or projected gradient descent (trace). The simplex vertices are always candidates, so
/// the result is never worse than the best single input. When the uniform
/// weights are as good as the optimum, they are returned.
pub fn optimize_weights(infos: &[&DMatrix<f64>], objective: CiObjective) -> Result<CiWeights> {
    let k = infos.len();
    if k == 0 {
        return Err(Error::Contract(
            "optimize_weights needs at least one matrix".into(),
        ));
    }
    let n = infos[0].nrows();
    for m in infos {
        if m.shape() != (n, n) {
            return Err(Error::dims("optimize_weights", n, m.nrows()));
        }
    }
    if k == 1 {
        return Ok(CiWeights::uniform(1));
    }
    if all_identical(infos) {
        return Ok(CiWeights::uniform(k));
    }

    let problem = Problem {
        mats: infos,
        objective,
    };
    let (mut best_w, mut best_f) = match (k, objective) {
        (2, _) => problem.golden_section(),
        (_, CiObjective::LogDet) => problem.projected_newton(),
        (_, CiObjective::Trace) => problem.projected_gradient(),
    };
    for j in 0..k {
        let vertex = CiWeights::vertex(k, j).0;
        let f = problem.value(&vertex);
        if f < best_f {
            best_w = vertex;
            best_f = f;
        }
    }
    if !best_f.is_finite() {
        return Err(Error::Infeasible);
    }
    let uniform = CiWeights::uniform(k).0;
    let f_uniform = problem.value(&uniform);
    if f_uniform <= best_f + 1e-12 * best_f.abs().max(1.0) {
        best_w = uniform;
    }
    CiWeights::new(renormalize(best_w))
}

fn renormalize(mut w: Vec<f64>) -> Vec<f64> {
    for x in &mut w {
        *x = x.max(0.0);
    }
    let sum: f64 = w.iter().sum();
    for x in &mut w {
        *x /= sum;
    }
    w
}

/// `y' = Σ w_j y_j`, `Y' = Σ w_j Y_j`.
pub fn ci_fuse(estimates: &[&GaussianInfo], weights: &CiWeights) -> Result<GaussianInfo> {
    if estimates.is_empty() || estimates.len() != weights.len() {
        return Err(Error::dims(
            "ci_fuse weights",
            estimates.len(),
            weights.len(),
        ));
    }
    let n = estimates[0].dim();
    let mut out = GaussianInfo::zero(n);
    for (est, &w) in estimates.iter().zip(weights.as_slice()) {
        if est.dim() != n || est.info_mat.shape() != (n, n) {
            return Err(Error::dims("ci_fuse", n, est.dim()));
        }
        if w == 0.0 {
            continue;
        }
        out.info_vec.axpy(w, &est.info_vec, 1.0);
        linalg::add_scaled(&mut out.info_mat, w, &est.info_mat);
    }
    Ok(out)
}

/// One neighbor's contribution to an iterative-CI round.
#[derive(Debug, Clone, Copy)]
pub struct CiInput<'a> {
    pub estimate: &'a GaussianInfo,
    /// New information folded in before fusion (`𝓘 = Y + δI`).
    pub increment: Option<&'a InfoIncrement>,
}

/// One synchronous round of iterative CI. Each agent's list must contain its
/// own estimate.
pub fn ici_round(
    neighborhoods: &[Vec<CiInput<'_>>],
    objective: CiObjective,
) -> Result<Vec<GaussianInfo>> {
    neighborhoods
        .iter()
        .map(|inputs| fuse_neighborhood(inputs, objective))
        .collect()
}

fn fuse_neighborhood(inputs: &[CiInput<'_>], objective: CiObjective) -> Result<GaussianInfo> {
    if inputs.is_empty() {
        return Err(Error::Contract(
            "iterative CI neighborhood is empty; it must include the agent itself".into(),
        ));
    }
    let bundled: Vec<std::borrow::Cow<'_, GaussianInfo>> = inputs
        .iter()
        .map(|input| match input.increment {
            None => std::borrow::Cow::Borrowed(input.estimate),
            Some(inc) => {
                let mut g = input.estimate.clone();
                g.info_vec += &inc.di;
                g.info_mat += &inc.d_info;
                std::borrow::Cow::Owned(g)
            }
        })
        .collect();
    let refs: Vec<&GaussianInfo> = bundled.iter().map(|c| c.as_ref()).collect();
    let mats: Vec<&DMatrix<f64>> = refs.iter().map(|g| &g.info_mat).collect();
    let weights = optimize_weights(&mats, objective)?;
    ci_fuse(&refs, &weights)
}

/// Iterative-CI round on `graph`: agent `i` fuses itself with its current
/// neighbors, listed self first and then in ascending order.
pub fn ici_round_on_graph(
    estimates: &[GaussianInfo],
    increments: Option<&[InfoIncrement]>,
    graph: &GraphSnapshot,
    objective: CiObjective,
) -> Result<Vec<GaussianInfo>> {
    if estimates.len() != graph.n_agents() {
        return Err(Error::dims(
            "ici_round agents",
            graph.n_agents(),
            estimates.len(),
        ));
    }
    if let Some(incs) = increments {
        if incs.len() != estimates.len() {
            return Err(Error::dims(
                "ici_round increments",
                estimates.len(),
                incs.len(),
            ));
        }
    }
    let neighborhoods: Vec<Vec<CiInput<'_>>> = (0..estimates.len())
        .map(|i| {
            graph
                .closed_neighborhood(i)
                .map(|j| CiInput {
                    estimate: &estimates[j],
                    increment: increments.map(|incs| &incs[j]),
                })
                .collect()
        })
        .collect();
    ici_round(&neighborhoods, objective)
}

/// Network Lyapunov function `Σ_i J(Y_i⁻¹)`.
pub fn network_lyapunov(estimates: &[GaussianInfo], objective: CiObjective) -> f64 {
    estimates
        .iter()
        .map(|g| {
            let p = Problem {
                mats: &[&g.info_mat],
                objective,
            };
            p.value(&[1.0])
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn identical_inputs_tie_break_to_uniform() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let w = optimize_weights(&[&m, &m], CiObjective::LogDet).unwrap();
        assert_eq!(w.as_slice(), &[0.5, 0.5]);
        let w = optimize_weights(&[&m, &m, &m], CiObjective::Trace).unwrap();
        assert_eq!(w.as_slice(), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn scalar_weight_goes_to_more_informative() {
        let (a, b) = (scalar(4.0), scalar(1.0));
        let w = optimize_weights(&[&a, &b], CiObjective::LogDet).unwrap();
        // 1-D grid oracle at 1e-4 resolution
        let best = (0..=10_000)
            .map(|i| i as f64 * 1e-4)
            .map(|t| (t, -(4.0 * t + (1.0 - t)).ln()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        assert_eq!(best.0, 1.0);
        assert_eq!(w.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn weights_are_feasible() {
        let a = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.2]);
        let b = DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, 3.0]);
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        for obj in [CiObjective::LogDet, CiObjective::Trace] {
            let w = optimize_weights(&[&a, &b, &c], obj).unwrap();
            assert!(w.as_slice().iter().all(|&x| x >= 0.0));
            assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn all_singular_is_infeasible() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        assert_eq!(
            optimize_weights(&[&a, &b], CiObjective::LogDet),
            Err(Error::Infeasible)
        );
    }

    #[test]
    fn complementary_singular_pair_is_feasible() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let w = optimize_weights(&[&a, &b], CiObjective::LogDet).unwrap();
        assert!((w.as_slice()[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn invalid_weights_rejected() {
        assert!(CiWeights::new(vec![0.5, 0.6]).is_err());
        assert!(CiWeights::new(vec![1.5, -0.5]).is_err());
        assert!(CiWeights::new(vec![]).is_err());
    }

    #[test]
    fn fuse_identities() {
        let a = GaussianInfo::new(DVector::from_element(1, 1.0), scalar(2.0)).unwrap();
        let b = GaussianInfo::new(DVector::from_element(1, 3.0), scalar(6.0)).unwrap();
        assert_eq!(ci_fuse(&[&a, &b], &CiWeights::vertex(2, 0)).unwrap(), a);
        let half = ci_fuse(&[&a, &b], &CiWeights::uniform(2)).unwrap();
        assert_eq!(half.info_mat[(0, 0)], 4.0);
        let same = ci_fuse(&[&a, &a], &CiWeights::new(vec![0.3, 0.7]).unwrap()).unwrap();
        assert!((same.info_mat[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((same.info_vec[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn isolated_agent_round_is_identity() {
        let a = GaussianInfo::new(
            DVector::from_vec(vec![1.0, 2.0]),
            DMatrix::identity(2, 2) * 3.0,
        )
        .unwrap();
        let graph = GraphSnapshot::empty(1);
        let out = ici_round_on_graph(std::slice::from_ref(&a), None, &graph, CiObjective::LogDet)
            .unwrap();
        assert_eq!(out[0], a);
    }

    #[test]
    fn empty_neighborhood_is_contract_error() {
        let r = ici_round(&[vec![]], CiObjective::LogDet);
        assert!(matches!(r, Err(Error::Contract(_))));
    }

    #[test]
    fn identical_connected_agents_stay_put() {
        let a =
            GaussianInfo::new(DVector::from_vec(vec![1.0, -1.0]), DMatrix::identity(2, 2)).unwrap();
        let est = vec![a.clone(), a.clone(), a.clone()];
        let out = ici_round_on_graph(&est, None, &GraphSnapshot::complete(3), CiObjective::LogDet)
            .unwrap();
        for o in out {
            assert!((o.info_mat.clone() - &a.info_mat).norm() < 1e-15);
            assert!((o.info_vec.clone() - &a.info_vec).norm() < 1e-15);
        }
    }

    #[test]
    fn simplex_projection() {
        assert_eq!(project_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }
}
