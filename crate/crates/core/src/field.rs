use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Samples of a real function on a grid.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} samples for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    /// Sample `f` at every node; radial nodes are passed as (r, 0, ..).
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let dim = grid.dim();
        let mut x = vec![0.0; dim];
        let values = (0..grid.len())
            .map(|i| {
                grid.point(i, &mut x);
                f(&x)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::NonFinite(i)),
            None => Ok(()),
        }
    }

    pub fn scale(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values)
    }
}

/// |x|^p with an integer fast path.
#[inline]
pub fn pow_abs(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == p.trunc() && p.abs() < 64.0 {
        a.powi(p as i32)
    } else {
        a.powf(p)
    }
}

pub fn integrate(f: &Field) -> f64 {
    let w = f.grid.weights();
    w.iter().zip(&f.values).map(|(a, b)| a * b).sum()
}

pub fn inner(a: &Field, b: &Field) -> Result<f64> {
    if !a.same_grid(b) {
        return Err(Error::GridMismatch);
    }
    let w = a.grid.weights();
    Ok(w.iter().zip(a.values.iter().zip(&b.values)).map(|(w, (x, y))| w * x * y).sum())
}

pub fn norm_lp(u: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("L^p norm needs 1 <= p < inf, got {p}")));
    }
    u.check_finite()?;
    let w = u.grid.weights();
    let s: f64 = w.iter().zip(&u.values).map(|(w, v)| w * pow_abs(*v, p)).sum();
    Ok(s.powf(1.0 / p))
}

pub fn norm_l2(u: &Field) -> f64 {
    let w = u.grid.weights();
    w.iter().zip(&u.values).map(|(w, v)| w * v * v).sum::<f64>().sqrt()
}

pub fn norm_sup(u: &Field) -> f64 {
    u.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Discrete |grad u|_2^2.
pub fn grad_seminorm_sq(u: &Field) -> Result<f64> {
    u.check_finite()?;
    Ok(u.grid.kinetic(&u.values))
}

pub fn laplacian_apply(u: &Field) -> Field {
    let mut out = vec![0.0; u.len()];
    u.grid.laplacian(&u.values, &mut out);
    Field { grid: u.grid.clone(), values: out }
}
