//! Moment-form and information-form Gaussian beliefs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Relative eigenvalue floor below which a covariance or information matrix
/// is treated as singular.
pub const SINGULAR_FLOOR: f64 = 1e-12;

/// Relative tolerance for PSD checks on covariances and information matrices.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Information-form belief: `info_vec = P⁻¹ x̂`, `info_mat = P⁻¹`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianInfo {
    pub info_vec: DVector<f64>,
    pub info_mat: DMatrix<f64>,
}

impl GaussianMoments {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        check_square(&cov, mean.len(), "GaussianMoments")?;
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `Y = cov⁻¹`, `y = cov⁻¹ · mean`.
    pub fn to_info(&self) -> Result<GaussianInfo> {
        check_square(&self.cov, self.mean.len(), "to_info")?;
        let info_mat = linalg::spd_inverse_checked(&self.cov, SINGULAR_FLOOR, "to_info")?;
        let info_vec = &info_mat * &self.mean;
        Ok(GaussianInfo { info_vec, info_mat })
    }
}

impl GaussianInfo {
    pub fn new(info_vec: DVector<f64>, info_mat: DMatrix<f64>) -> Result<Self> {
        check_square(&info_mat, info_vec.len(), "GaussianInfo")?;
        Ok(Self { info_vec, info_mat })
    }

    /// Diagonal prior `Y = ε·I` with zero mean.
    pub fn weak_prior(dim: usize, epsilon: f64) -> Self {
        Self {
            info_vec: DVector::zeros(dim),
            info_mat: DMatrix::identity(dim, dim) * epsilon,
        }
    }

    /// Zero information (infinite covariance).
    pub fn zero(dim: usize) -> Self {
        Self {
            info_vec: DVector::zeros(dim),
            info_mat: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.info_vec.len()
    }

    /// `cov = Y⁻¹`, `mean = Y⁻¹ · y`.
    pub fn to_moments(&self) -> Result<GaussianMoments> {
        check_square(&self.info_mat, self.info_vec.len(), "to_moments")?;
        let cov = linalg::spd_inverse_checked(&self.info_mat, SINGULAR_FLOOR, "to_moments")?;
        let mean = &cov * &self.info_vec;
        Ok(GaussianMoments { mean, cov })
    }

    /// Mean recovered by a Cholesky solve, skipping the eigenvalue check.
    pub fn mean(&self) -> Result<DVector<f64>> {
        let chol = self
            .info_mat
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite { context: "mean" })?;
        Ok(chol.solve(&self.info_vec))
    }
}

fn check_square(m: &DMatrix<f64>, dim: usize, context: &'static str) -> Result<()> {
    if m.nrows() != dim {
        return Err(Error::dims(context, dim, m.nrows()));
    }
    if m.ncols() != dim {
        return Err(Error::dims(context, dim, m.ncols()));
    }
    Ok(())
}
