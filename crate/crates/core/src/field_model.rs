//! Advection-diffusion plant: explicit finite-difference discretization of the
//! 3-D transport equation into a linear time-invariant state equation, plus a
//! seeded ground-truth simulator.
//!
//! Cells are stored with `ix` fastest: `index = (iz * ny + iy) * nx + ix`.
//! Cell `ix` sits at downwind distance `(ix + 1) * dx`, so the `x = 0` inflow
//! plane is a zero-valued ghost layer. The remaining far boundaries are zero
//! ghosts as well, and the ground (`iz = 0`) mirrors its own value into the
//! ghost below it, which makes the vertical flux through `z = 0` vanish.
//! Diffusion along `x` is not modelled.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Cell sizes in metres.
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    /// Time step in seconds.
    pub dt: f64,
}

impl GridSpec {
    /// 5×4×4 grid, 80 cells.
    pub fn default_80(dx: f64, dy: f64, dz: f64, dt: f64) -> Self {
        Self {
            nx: 5,
            ny: 4,
            nz: 4,
            dx,
            dy,
            dz,
            dt,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.ny + iy) * self.nx + ix
    }

    pub fn contains(&self, cell: [usize; 3]) -> bool {
        cell[0] < self.nx && cell[1] < self.ny && cell[2] < self.nz
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dy * self.dz
    }

    /// Downwind distance of cells in column `ix`.
    pub fn downwind_distance(&self, ix: usize) -> f64 {
        (ix as f64 + 1.0) * self.dx
    }

    fn validate(&self) -> Result<()> {
        if self.n_cells() == 0 {
            return Err(Error::InvalidGrid(format!(
                "zero-volume grid {}x{}x{}",
                self.nx, self.ny, self.nz
            )));
        }
        for (name, v) in [
            ("dx", self.dx),
            ("dy", self.dy),
            ("dz", self.dz),
            ("dt", self.dt),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Eddy diffusivity as a function of downwind distance, in m²/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diffusivity {
    Constant {
        value: f64,
    },
    /// `coeff * x^exponent`
    PowerLaw {
        coeff: f64,
        exponent: f64,
    },
}

impl Diffusivity {
    pub fn at(&self, x: f64) -> f64 {
        match *self {
            Diffusivity::Constant { value } => value,
            Diffusivity::PowerLaw { coeff, exponent } => coeff * x.powf(exponent),
        }
    }
}

impl Default for Diffusivity {
    fn default() -> Self {
        Diffusivity::Constant { value: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionParams {
    /// Wind speed `u ≥ 0` in m/s.
    pub wind_speed: f64,
    /// Wind direction in the horizontal plane; 0 points along +x.
    pub wind_angle: f64,
    pub k_y: Diffusivity,
    pub k_z: Diffusivity,
    /// Grid cell of each point source.
    pub sources: Vec<[usize; 3]>,
    /// Covariance of the zero-mean source emission rates, one row per source.
    pub emission_cov: DMatrix<f64>,
    /// Variance of the additive white process noise on every cell.
    pub process_noise_var: f64,
}

/// Discrete plant `x(k+1) = A x(k) + B u(k) + w(k)` with `u` zero-mean white
/// emission noise, so that the effective noise covariance is
/// `Q_eff = Q_proc + B Σ_s Bᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    q_proc: DMatrix<f64>,
    emission_cov: DMatrix<f64>,
    q_eff: DMatrix<f64>,
    noise_factor: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub x: DVector<f64>,
    pub k: usize,
}

impl FieldState {
    pub fn zeros(n: usize) -> Self {
        Self {
            x: DVector::zeros(n),
            k: 0,
        }
    }
}

impl FieldModel {
    pub fn from_matrices(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        q_proc: DMatrix<f64>,
        emission_cov: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dims("FieldModel A", n, a.ncols()));
        }
        if b.nrows() != n {
            return Err(Error::dims("FieldModel B rows", n, b.nrows()));
        }
        if q_proc.shape() != (n, n) {
            return Err(Error::dims("FieldModel Q_proc", n, q_proc.nrows()));
        }
        let m = b.ncols();
        if emission_cov.shape() != (m, m) {
            return Err(Error::dims(
                "FieldModel emission covariance",
                m,
                emission_cov.nrows(),
            ));
        }
        if !a.iter().all(|v| v.is_finite()) {
            return Err(Error::Config(
                "state-transition matrix has non-finite entries".into(),
            ));
        }
        for (name, q) in [
            ("process noise", &q_proc),
            ("emission covariance", &emission_cov),
        ] {
            if q != &q.transpose() {
                return Err(Error::Config(format!("{name} is not symmetric")));
            }
            if !linalg::is_psd(q, 1e-9) {
                return Err(Error::Config(format!(
                    "{name} is not positive semidefinite"
                )));
            }
        }
        let q_eff = linalg::symmetrized(&q_proc + &b * &emission_cov * b.transpose());
        let noise_factor = linalg::psd_factor(&q_eff);
        Ok(Self {
            a,
            b,
            q_proc,
            emission_cov,
            q_eff,
            noise_factor,
        })
    }

    /// Plant with no input channel: `x(k+1) = A x(k) + w(k)`, `w ~ N(0, Q)`.
    pub fn linear(a: DMatrix<f64>, q: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        Self::from_matrices(a, DMatrix::zeros(n, 0), q, DMatrix::zeros(0, 0))
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn q_proc(&self) -> &DMatrix<f64> {
        &self.q_proc
    }

    pub fn emission_cov(&self) -> &DMatrix<f64> {
        &self.emission_cov
    }

    pub fn q_eff(&self) -> &DMatrix<f64> {
        &self.q_eff
    }
}

/// Discretizes the advection-diffusion equation on `grid`.
///
/// Advection uses first-order upwind differences, diffusion in `y` and `z`
/// second-order central differences, and time stepping is explicit Euler.
pub fn build_model(grid: &GridSpec, params: &DispersionParams) -> Result<FieldModel> {
    grid.validate()?;
    if !(params.wind_speed >= 0.0 && params.wind_speed.is_finite()) {
        return Err(Error::Config(format!(
            "wind speed must be non-negative, got {}",
            params.wind_speed
        )));
    }
    if !(params.process_noise_var >= 0.0) {
        return Err(Error::Config(
            "process noise variance must be non-negative".into(),
        ));
    }
    for &cell in &params.sources {
        if !grid.contains(cell) {
            return Err(Error::Config(format!("source cell {cell:?} outside grid")));
        }
    }

    let ux = params.wind_speed * params.wind_angle.cos();
    let uy = params.wind_speed * params.wind_angle.sin();
    let cx = ux.abs() * grid.dt / grid.dx;
    let cy = uy.abs() * grid.dt / grid.dy;
    check_bound("courant number |u_x|·dt/dx", cx, 1.0)?;
    check_bound("courant number |u_y|·dt/dy", cy, 1.0)?;

    let mut ry = Vec::with_capacity(grid.nx);
    let mut rz = Vec::with_capacity(grid.nx);
    for ix in 0..grid.nx {
        let x = grid.downwind_distance(ix);
        let (ky, kz) = (params.k_y.at(x), params.k_z.at(x));
        if !(ky >= 0.0 && kz >= 0.0) {
            return Err(Error::Config(format!(
                "eddy diffusivities must be non-negative (K_y={ky}, K_z={kz} at x={x})"
            )));
        }
        ry.push(ky * grid.dt / (grid.dy * grid.dy));
        rz.push(kz * grid.dt / (grid.dz * grid.dz));
    }
    check_bound(
        "diffusion number K_y·dt/dy²",
        ry.iter().copied().fold(0.0, f64::max),
        0.5,
    )?;
    check_bound(
        "diffusion number K_z·dt/dz²",
        rz.iter().copied().fold(0.0, f64::max),
        0.5,
    )?;

    let n = grid.n_cells();
    let mut a = DMatrix::<f64>::identity(n, n);
    for iz in 0..grid.nz {
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let row = grid.index(ix, iy, iz);

                // upwind advection; a missing upstream cell is a zero ghost
                if cx > 0.0 {
                    a[(row, row)] -= cx;
                    let upstream = if ux > 0.0 {
                        ix.checked_sub(1)
                    } else {
                        Some(ix + 1).filter(|&i| i < grid.nx)
                    };
                    if let Some(up) = upstream {
                        a[(row, grid.index(up, iy, iz))] += cx;
                    }
                }
                if cy > 0.0 {
                    a[(row, row)] -= cy;
                    let upstream = if uy > 0.0 {
                        iy.checked_sub(1)
                    } else {
                        Some(iy + 1).filter(|&i| i < grid.ny)
                    };
                    if let Some(up) = upstream {
                        a[(row, grid.index(ix, up, iz))] += cy;
                    }
                }

                // lateral diffusion, zero ghosts at ±y
                let r = ry[ix];
                if r > 0.0 {
                    a[(row, row)] -= 2.0 * r;
                    if iy > 0 {
                        a[(row, grid.index(ix, iy - 1, iz))] += r;
                    }
                    if iy + 1 < grid.ny {
                        a[(row, grid.index(ix, iy + 1, iz))] += r;
                    }
                }

                // vertical diffusion: zero ghost above the top, mirrored ghost
                // below the ground
                let r = rz[ix];
                if r > 0.0 {
                    if iz > 0 {
                        a[(row, row)] -= 2.0 * r;
                        a[(row, grid.index(ix, iy, iz - 1))] += r;
                    } else {
                        a[(row, row)] -= r;
                    }
                    if iz + 1 < grid.nz {
                        a[(row, grid.index(ix, iy, iz + 1))] += r;
                    }
                }
            }
        }
    }

    let m = params.sources.len();
    if params.emission_cov.shape() != (m, m) {
        return Err(Error::dims(
            "emission covariance",
            m,
            params.emission_cov.nrows(),
        ));
    }
    let mut b = DMatrix::<f64>::zeros(n, m);
    let gain = grid.dt / grid.cell_volume();
    for (j, &[ix, iy, iz]) in params.sources.iter().enumerate() {
        b[(grid.index(ix, iy, iz), j)] = gain;
    }
    let q_proc = DMatrix::identity(n, n) * params.process_noise_var;

    FieldModel::from_matrices(a, b, q_proc, params.emission_cov.clone())
}

fn check_bound(bound: &'static str, value: f64, limit: f64) -> Result<()> {
    if value > limit || !value.is_finite() {
        Err(Error::Unstable {
            bound,
            value,
            limit,
        })
    } else {
        Ok(())
    }
}

/// Advances the true field one step: `x' = A x + w`, `w ~ N(0, Q_eff)`.
pub fn step_truth(model: &FieldModel, state: &FieldState, seed: u64) -> Result<FieldState> {
    if state.x.len() != model.dim() {
        return Err(Error::dims("step_truth", model.dim(), state.x.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xi = DVector::from_fn(model.dim(), |_, _| StandardNormal.sample(&mut rng));
    let x = &model.a * &state.x + &model.noise_factor * xi;
    Ok(FieldState { x, k: state.k + 1 })
}
