//! Information-form prediction and measurement update. The centralized filter
//! built from these is the reference every decentralized estimator is scored
//! against.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_model::FieldModel;
use crate::gaussian::GaussianInfo;
use crate::linalg;

/// Default weak prior `Y(0) = ε·I`.
pub const WEAK_PRIOR_INFO: f64 = 1e-4;

/// Information contributed by one measurement: `δi = HᵀR⁻¹z`, `δI = HᵀR⁻¹H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoIncrement {
    pub di: DVector<f64>,
    pub d_info: DMatrix<f64>,
}

impl InfoIncrement {
    pub fn zero(dim: usize) -> Self {
        Self {
            di: DVector::zeros(dim),
            d_info: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.di.len()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            di: &self.di * factor,
            d_info: &self.d_info * factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    h: DMatrix<f64>,
    r: DMatrix<f64>,
    r_inv: DMatrix<f64>,
}

impl ObservationModel {
    pub fn new(h: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        let nz = h.nrows();
        if r.shape() != (nz, nz) {
            return Err(Error::dims("observation noise R", nz, r.nrows()));
        }
        if r != r.transpose() {
            return Err(Error::NotPositiveDefinite {
                context: "observation noise R (asymmetric)",
            });
        }
        let r_inv = linalg::spd_inverse(&r, "observation noise R").map_err(|_| {
            Error::NotPositiveDefinite {
                context: "observation noise R",
            }
        })?;
        Ok(Self { h, r, r_inv })
    }

    /// One-hot observation of state component `index` with variance `variance`.
    pub fn point(dim: usize, index: usize, variance: f64) -> Result<Self> {
        if index >= dim {
            return Err(Error::dims("point observation index", dim, index));
        }
        let mut h = DMatrix::zeros(1, dim);
        h[(0, index)] = 1.0;
        Self::new(h, DMatrix::from_element(1, 1, variance))
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn state_dim(&self) -> usize {
        self.h.ncols()
    }

    pub fn obs_dim(&self) -> usize {
        self.h.nrows()
    }
}

/// Information-form prediction through `model`.
///
/// Propagates in moment form, `P⁻ = A P Aᵀ + Q_eff`, and re-inverts, which does
/// not need `A` to be invertible. A prior with zero information predicts to
/// `Q_eff⁻¹` with zero information vector.
pub fn predict(prior: &GaussianInfo, model: &FieldModel) -> Result<GaussianInfo> {
    let n = model.dim();
    if prior.dim() != n || prior.info_mat.shape() != (n, n) {
        return Err(Error::dims("predict", n, prior.dim()));
    }
    let q = model.q_eff();
    if prior.info_mat.iter().all(|&v| v == 0.0) {
        if prior.info_vec.iter().any(|&v| v != 0.0) {
            return Err(Error::Contract(
                "zero information matrix with non-zero information vector".into(),
            ));
        }
        let info_mat = linalg::spd_inverse(q, "predict: Q_eff for infinite-covariance prior")?;
        return Ok(GaussianInfo {
            info_vec: DVector::zeros(n),
            info_mat,
        });
    }

    let chol = prior
        .info_mat
        .clone()
        .cholesky()
        .ok_or_else(|| singular_prior(&prior.info_mat))?;
    let cov = linalg::symmetrized(chol.inverse());
    let mean = chol.solve(&prior.info_vec);

    let a = model.a();
    let cov_pred = linalg::symmetrized(a * &cov * a.transpose() + q);
    let mean_pred = a * mean;
    let info_mat = linalg::spd_inverse(&cov_pred, "predict: predicted covariance")?;
    let info_vec = &info_mat * mean_pred;
    Ok(GaussianInfo { info_vec, info_mat })
}

fn singular_prior(m: &DMatrix<f64>) -> Error {
    Error::Singular {
        context: "predict: prior information matrix",
        eigenvalue: linalg::min_eigenvalue(m),
        threshold: 0.0,
    }
}

pub fn local_increment(obs: &ObservationModel, z: &DVector<f64>) -> Result<InfoIncrement> {
    if z.len() != obs.obs_dim() {
        return Err(Error::dims("local_increment z", obs.obs_dim(), z.len()));
    }
    let ht_rinv = obs.h.transpose() * &obs.r_inv;
    let di = &ht_rinv * z;
    let d_info = linalg::symmetrized(&ht_rinv * &obs.h);
    Ok(InfoIncrement { di, d_info })
}

/// Adds every increment to the prediction: `y = y⁻ + Σδi`, `Y = Y⁻ + ΣδI`.
pub fn centralized_update(pred: &GaussianInfo, incs: &[InfoIncrement]) -> Result<GaussianInfo> {
    let n = pred.dim();
    let mut out = pred.clone();
    for inc in incs {
        if inc.dim() != n || inc.d_info.shape() != (n, n) {
            return Err(Error::dims("centralized_update", n, inc.dim()));
        }
        out.info_vec += &inc.di;
        out.info_mat += &inc.d_info;
    }
    Ok(out)
}

/// Posterior of a single agent using only its own measurement.
pub fn local_step(
    prior: &GaussianInfo,
    model: &FieldModel,
    inc: &InfoIncrement,
) -> Result<GaussianInfo> {
    let pred = predict(prior, model)?;
    centralized_update(&pred, std::slice::from_ref(inc))
}
