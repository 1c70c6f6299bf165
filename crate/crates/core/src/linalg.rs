//! Dense symmetric-matrix helpers shared by the filters and metrics.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `dst += a * src` without allocating.
pub fn add_scaled(dst: &mut DMatrix<f64>, a: f64, src: &DMatrix<f64>) {
    dst.zip_apply(src, |d, s| *d += a * s);
}

/// Replaces `m` with `(m + mᵀ) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn symmetrized(mut m: DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&mut m);
    m
}

/// Largest absolute eigenvalue proxy used to scale relative tolerances.
pub fn scale(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let eig = m.clone().symmetric_eigen();
    eig.eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Inverse of a symmetric positive-definite matrix via Cholesky, symmetrized.
///
/// Only a failed factorization is reported; use [`spd_inverse_checked`] when
/// the relative eigenvalue floor must be enforced.
pub fn spd_inverse(m: &DMatrix<f64>, context: &'static str) -> Result<DMatrix<f64>> {
    match m.clone().cholesky() {
        Some(chol) => Ok(symmetrized(chol.inverse())),
        None => Err(singular(m, 0.0, context)),
    }
}

/// Like [`spd_inverse`], but first requires the smallest eigenvalue to exceed
/// `rel_floor * ‖m‖`.
pub fn spd_inverse_checked(
    m: &DMatrix<f64>,
    rel_floor: f64,
    context: &'static str,
) -> Result<DMatrix<f64>> {
    check_invertible(m, rel_floor, context)?;
    spd_inverse(m, context)
}

/// Eigenvalue-based invertibility check with a relative floor.
pub fn check_invertible(m: &DMatrix<f64>, rel_floor: f64, context: &'static str) -> Result<()> {
    let lambda = min_eigenvalue(m);
    let threshold = rel_floor * scale(m);
    if lambda > threshold && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::Singular {
            context,
            eigenvalue: lambda,
            threshold,
        })
    }
}

fn singular(m: &DMatrix<f64>, rel_floor: f64, context: &'static str) -> Error {
    Error::Singular {
        context,
        eigenvalue: min_eigenvalue(m),
        threshold: rel_floor * scale(m),
    }
}

/// `ln det m` for SPD `m`; `None` when the Cholesky factorization fails.
pub fn logdet_spd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) {
            return None;
        }
        acc += d.ln();
    }
    Some(2.0 * acc)
}

/// PSD test with a relative eigenvalue tolerance: min eig ≥ −rel_tol·‖m‖.
pub fn is_psd(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if !m.iter().all(|v| v.is_finite()) {
        return false;
    }
    let n = m.nrows();
    let shift = rel_tol * scale(m).max(f64::MIN_POSITIVE);
    let shifted = m + DMatrix::identity(n, n) * shift;
    shifted.cholesky().is_some() || min_eigenvalue(m) >= -shift
}

/// Symmetric square root factor `S` with `S Sᵀ = m` for PSD `m`; negative
/// eigenvalues from round-off are clamped to zero.
pub fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = symmetrized(m.clone()).symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let mut factor = eig.eigenvectors;
    for (j, r) in roots.iter().enumerate() {
        factor.column_mut(j).scale_mut(*r);
    }
    factor
}

/// Relative Frobenius distance `‖a − b‖ / max(‖b‖, tiny)`.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let denom = b.norm().max(1e-300);
    (a - b).norm() / denom
}

pub fn rel_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let denom = b.norm().max(1e-300);
    (a - b).norm() / denom
}

/// Trace of `a * b` without forming the product (both square, same size).
pub fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    // tr(AB) = Σ_ij A_ij B_ji
    a.iter().zip(b.transpose().iter()).map(|(x, y)| x * y).sum()
}
