//! Mass scaling of the ground state and the L^2-preserving dilation
//! h * u(x) = e^{Nh/2} u(e^h x).

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::functionals::pohozaev_residual;
use crate::ground_state::{check_admissible, GroundState};
use crate::grid::Grid;
use crate::interp::Interpolant;
use crate::potential::PotentialField;

/// Largest |h| accepted by `dilate`.
pub const DEFAULT_DILATION_CAP: f64 = 3.0;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalingParams {
    pub dim: usize,
    pub power: f64,
    pub rho0: f64,
    pub m_rho0: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalingRow {
    pub rho: f64,
    pub mu: f64,
    pub lambda: f64,
    pub m: f64,
    pub q: f64,
}

/// q = (4N - 2p(N-2)) / (N(p-2) - 4)
pub fn q_exponent(dim: usize, p: f64) -> f64 {
    let n = dim as f64;
    (4.0 * n - 2.0 * p * (n - 2.0)) / (n * (p - 2.0) - 4.0)
}

impl ScalingParams {
    pub fn new(dim: usize, power: f64, rho0: f64, m_rho0: f64) -> Result<Self> {
        check_admissible(dim, power)?;
        Ok(Self { dim, power, rho0, m_rho0 })
    }

    pub fn from_ground_state(gs: &GroundState) -> Self {
        Self { dim: gs.dim(), power: gs.power(), rho0: gs.rho0(), m_rho0: gs.m_rho0() }
    }

    pub fn q(&self) -> f64 {
        q_exponent(self.dim, self.power)
    }

    fn check_rho(rho: f64) -> Result<()> {
        if rho.is_finite() && rho > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("mass {rho} must be positive")))
        }
    }

    /// Length scale mu with Z_rho(x) = mu^{-2/(p-2)} U(x / mu).
    pub fn mu(&self, rho: f64) -> Result<f64> {
        Self::check_rho(rho)?;
        let n = self.dim as f64;
        let p = self.power;
        Ok((rho / self.rho0).powf(2.0 * (p - 2.0) / (n * (p - 2.0) - 4.0)))
    }

    pub fn lambda(&self, rho: f64) -> Result<f64> {
        Ok(self.mu(rho)?.powi(-2))
    }

    pub fn m(&self, rho: f64) -> Result<f64> {
        Self::check_rho(rho)?;
        Ok(self.m_rho0 * (rho / self.rho0).powf(-self.q()))
    }

    pub fn row(&self, rho: f64) -> Result<ScalingRow> {
        Ok(ScalingRow { rho, mu: self.mu(rho)?, lambda: self.lambda(rho)?, m: self.m(rho)?, q: self.q() })
    }
}

/// Z_rho on the ground-state grid stretched by mu, so no interpolation occurs.
pub fn make_z_rho(gs: &GroundState, rho: f64) -> Result<Field> {
    let sp = ScalingParams::from_ground_state(gs);
    let mu = sp.mu(rho)?;
    let grid = gs.radial_grid().scaled(mu)?;
    let amp = mu.powf(-2.0 / (gs.power() - 2.0));
    let values = gs.profile.values().iter().map(|v| v * amp).collect();
    Field::new(Arc::new(Grid::Radial(grid)), values)
}

/// Z_rho interpolated onto an arbitrary grid of the same dimension.
pub fn z_rho_on(gs: &GroundState, rho: f64, grid: &Arc<Grid>) -> Result<Field> {
    if grid.dim() != gs.dim() {
        return Err(Error::DimensionMismatch { expected: gs.dim(), got: grid.dim() });
    }
    let z = make_z_rho(gs, rho)?;
    let it = Interpolant::new(&z);
    let mut f = Field::from_fn(grid.clone(), |x| it.eval(x))?;
    grid.apply_constraints(f.values_mut());
    Ok(f)
}

pub fn dilate(u: &Field, h: f64) -> Result<Field> {
    dilate_capped(u, h, DEFAULT_DILATION_CAP)
}

pub fn dilate_capped(u: &Field, h: f64, cap: f64) -> Result<Field> {
    if !h.is_finite() || h.abs() > cap {
        return Err(Error::DilationCap { h, cap });
    }
    if h == 0.0 {
        return Ok(u.clone());
    }
    let it = Interpolant::new(u);
    let s = h.exp();
    let amp = (0.5 * u.grid().dim() as f64 * h).exp();
    let dim = u.grid().dim();
    Field::from_fn(u.grid().clone(), |x| {
        let mut y = [0.0; 3];
        for (a, b) in y.iter_mut().zip(x) {
            *a = s * b;
        }
        amp * it.eval(&y[..dim])
    })
}

/// d/dh F(h * u) with V held fixed on the grid.
pub fn dilation_energy_derivative(u: &Field, h: f64, v: &PotentialField, p: f64) -> Result<f64> {
    let d = dilate(u, h)?;
    pohozaev_residual(&d, v, p)
}
