//! Similarity and accuracy measures for comparing a decentralized estimate
//! with the centralized one and with the truth.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianMoments;
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    /// `exp(−D_Bhattacharyya)` to the centralized estimate; 1 means identical.
    pub bhattacharyya_affinity: f64,
    /// `(det P_cen / det P)^(1/n)`.
    pub det_ratio: f64,
    pub rmse: f64,
}

fn logdet(m: &DMatrix<f64>, context: &'static str) -> Result<f64> {
    linalg::logdet_spd(m).ok_or(Error::NotPositiveDefinite { context })
}

/// Bhattacharyya divergence between two Gaussians.
pub fn bhattacharyya_divergence(p1: &GaussianMoments, p2: &GaussianMoments) -> Result<f64> {
    let n = p1.dim();
    if p2.dim() != n || p1.cov.shape() != (n, n) || p2.cov.shape() != (n, n) {
        return Err(Error::dims("bhattacharyya", n, p2.dim()));
    }
    let sigma = (&p1.cov + &p2.cov) * 0.5;
    let chol = sigma.clone().cholesky().ok_or(Error::Singular {
        context: "bhattacharyya: averaged covariance",
        eigenvalue: linalg::min_eigenvalue(&sigma),
        threshold: 0.0,
    })?;
    let diff = &p1.mean - &p2.mean;
    let mahalanobis = diff.dot(&chol.solve(&diff));
    let ld = logdet(&sigma, "bhattacharyya: averaged covariance")?;
    let ld1 = logdet(&p1.cov, "bhattacharyya: first covariance")?;
    let ld2 = logdet(&p2.cov, "bhattacharyya: second covariance")?;
    let d = mahalanobis / 8.0 + 0.5 * (ld - 0.5 * (ld1 + ld2));
    // ln det of the average is never below the average ln det; clamp round-off
    Ok(d.max(0.0))
}

/// `exp(−D)`, in `[0, 1]`.
pub fn bhattacharyya(p1: &GaussianMoments, p2: &GaussianMoments) -> Result<f64> {
    Ok((-bhattacharyya_divergence(p1, p2)?).exp())
}

/// `(det P_cen / det P_dec)^(1/n_d)` evaluated through log-determinants.
pub fn det_ratio(p_cen: &DMatrix<f64>, p_dec: &DMatrix<f64>) -> Result<f64> {
    let n = p_cen.nrows();
    if p_dec.shape() != (n, n) || p_cen.ncols() != n {
        return Err(Error::dims("det_ratio", n, p_dec.nrows()));
    }
    let lc = logdet(p_cen, "det_ratio: centralized covariance")?;
    let ld = logdet(p_dec, "det_ratio: decentralized covariance")?;
    Ok(((lc - ld) / n as f64).exp())
}

pub fn rmse(estimate: &DVector<f64>, truth: &DVector<f64>) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::dims("rmse", truth.len(), estimate.len()));
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    Ok(((estimate - truth).norm_squared() / truth.len() as f64).sqrt())
}

pub fn step_metrics(
    estimate: &GaussianMoments,
    centralized: &GaussianMoments,
    truth: &DVector<f64>,
) -> Result<StepMetrics> {
    Ok(StepMetrics {
        bhattacharyya_affinity: bhattacharyya(estimate, centralized)?,
        det_ratio: det_ratio(&centralized.cov, &estimate.cov)?,
        rmse: rmse(&estimate.mean, truth)?,
    })
}
