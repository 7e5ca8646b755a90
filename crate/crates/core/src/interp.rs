//! C^2 cubic B-spline interpolation of grid fields.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{CartesianGrid, Grid};
use crate::linalg::thomas;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StartCondition {
    /// Mirror symmetry about the first node (radial center).
    Even,
    /// Vanishing second derivative.
    Natural,
}

fn prefilter(values: &mut [f64], start: StartCondition, scratch: &mut Vec<f64>) {
    let n = values.len();
    let mut sub = vec![1.0 / 6.0; n];
    let mut diag = vec![4.0 / 6.0; n];
    let mut sup = vec![1.0 / 6.0; n];
    match start {
        StartCondition::Even => sup[0] = 2.0 / 6.0,
        StartCondition::Natural => {
            diag[0] = 1.0;
            sup[0] = 0.0;
        }
    }
    diag[n - 1] = 1.0;
    sub[n - 1] = 0.0;
    sub[0] = 0.0;
    thomas(&sub, &diag, &sup, values, scratch);
}

#[inline]
fn basis(f: f64) -> [f64; 4] {
    let f2 = f * f;
    let f3 = f2 * f;
    let g = 1.0 - f;
    [g * g * g / 6.0, (3.0 * f3 - 6.0 * f2 + 4.0) / 6.0, (-3.0 * f3 + 3.0 * f2 + 3.0 * f + 1.0) / 6.0, f3 / 6.0]
}

#[inline]
fn basis_deriv(f: f64) -> [f64; 4] {
    let f2 = f * f;
    let g = 1.0 - f;
    [-0.5 * g * g, (9.0 * f2 - 12.0 * f) / 6.0, (-9.0 * f2 + 6.0 * f + 3.0) / 6.0, 0.5 * f2]
}

#[inline]
fn coef_at(c: &[f64], i: isize, start: StartCondition) -> f64 {
    let n = c.len() as isize;
    if i < 0 {
        match start {
            StartCondition::Even => c[1],
            StartCondition::Natural => 2.0 * c[0] - c[1],
        }
    } else if i >= n {
        2.0 * c[(n - 1) as usize] - c[(n - 2) as usize]
    } else {
        c[i as usize]
    }
}

// Locate t in a uniform node set; None outside [x0, x0 + (n-1) h].
#[inline]
fn locate(t: f64, x0: f64, h: f64, n: usize) -> Option<(isize, f64)> {
    let s = (t - x0) / h;
    let last = (n - 1) as f64;
    if !(s >= -1e-12 && s <= last + 1e-12) {
        return None;
    }
    let s = s.clamp(0.0, last);
    let mut i = s.floor() as isize;
    if i as usize >= n - 1 {
        i = n as isize - 2;
    }
    Some((i, s - i as f64))
}

#[derive(Clone, Debug)]
pub struct Spline1d {
    x0: f64,
    h: f64,
    start: StartCondition,
    coef: Vec<f64>,
}

impl Spline1d {
    pub fn new(x0: f64, h: f64, values: &[f64], start: StartCondition) -> Self {
        let mut coef = values.to_vec();
        prefilter(&mut coef, start, &mut Vec::new());
        Self { x0, h, start, coef }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match locate(t, self.x0, self.h, self.coef.len()) {
            None => 0.0,
            Some((i, f)) => {
                let b = basis(f);
                (0..4).map(|k| b[k] * coef_at(&self.coef, i - 1 + k as isize, self.start)).sum()
            }
        }
    }

    /// Value and first derivative.
    pub fn eval_deriv(&self, t: f64) -> (f64, f64) {
        match locate(t, self.x0, self.h, self.coef.len()) {
            None => (0.0, 0.0),
            Some((i, f)) => {
                let b = basis(f);
                let d = basis_deriv(f);
                let mut v = 0.0;
                let mut dv = 0.0;
                for k in 0..4 {
                    let c = coef_at(&self.coef, i - 1 + k as isize, self.start);
                    v += b[k] * c;
                    dv += d[k] * c;
                }
                (v, dv / self.h)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct TensorSpline {
    lo: Vec<f64>,
    spacing: Vec<f64>,
    shape: Vec<usize>,
    // coefficients padded by one ghost layer per side, linearly extended
    pshape: Vec<usize>,
    pstrides: Vec<usize>,
    coef: Vec<f64>,
}

impl TensorSpline {
    pub fn new(grid: &CartesianGrid, values: &[f64]) -> Self {
        let dim = grid.dim();
        let mut coef = values.to_vec();
        let mut line = Vec::new();
        let mut scratch = Vec::new();
        for k in 0..dim {
            let n = grid.shape()[k];
            let s = grid.strides()[k];
            let block = n * s;
            for o in 0..coef.len() / block {
                for inner in 0..s {
                    let base = o * block + inner;
                    line.clear();
                    line.extend((0..n).map(|i| coef[base + i * s]));
                    prefilter(&mut line, StartCondition::Natural, &mut scratch);
                    for i in 0..n {
                        coef[base + i * s] = line[i];
                    }
                }
            }
        }
        let shape = grid.shape().to_vec();
        let pshape: Vec<usize> = shape.iter().map(|n| n + 2).collect();
        let mut pstrides = vec![1; dim];
        for k in 1..dim {
            pstrides[k] = pstrides[k - 1] * pshape[k - 1];
        }
        let plen: usize = pshape.iter().product();
        let mut padded = vec![0.0; plen];
        let mut idx = vec![0usize; dim];
        for (flat, c) in coef.iter().enumerate() {
            grid.multi_index(flat, &mut idx);
            let p: usize = (0..dim).map(|k| (idx[k] + 1) * pstrides[k]).sum();
            padded[p] = *c;
        }
        // ghost layers, axis by axis; linear extension is separable
        let mut pidx = vec![0usize; dim];
        for k in 0..dim {
            let n = pshape[k];
            let s = pstrides[k];
            for flat in 0..plen {
                let mut f = flat;
                for j in 0..dim {
                    pidx[j] = f % pshape[j];
                    f /= pshape[j];
                }
                if pidx[k] != 0 {
                    continue;
                }
                // only fill lines whose lower axes are already complete
                if (k + 1..dim).any(|j| pidx[j] == 0 || pidx[j] == pshape[j] - 1) {
                    continue;
                }
                padded[flat] = 2.0 * padded[flat + s] - padded[flat + 2 * s];
                let last = flat + (n - 1) * s;
                padded[last] = 2.0 * padded[last - s] - padded[last - 2 * s];
            }
        }
        Self { lo: grid.lo().to_vec(), spacing: grid.spacing().to_vec(), shape, pshape, pstrides, coef: padded }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let dim = self.shape.len();
        let mut base = 0usize;
        let mut b = [[0.0; 4]; 3];
        for k in 0..dim {
            match locate(x[k], self.lo[k], self.spacing[k], self.shape[k]) {
                None => return 0.0,
                Some((i, f)) => {
                    // padded index of node i-1 is i
                    base += i as usize * self.pstrides[k];
                    b[k] = basis(f);
                }
            }
        }
        let c = &self.coef;
        match dim {
            1 => (0..4).map(|a| b[0][a] * c[base + a]).sum(),
            2 => {
                let s1 = self.pstrides[1];
                let mut v = 0.0;
                for j in 0..4 {
                    let row = base + j * s1;
                    let r: f64 = (0..4).map(|a| b[0][a] * c[row + a]).sum();
                    v += b[1][j] * r;
                }
                v
            }
            _ => {
                let s1 = self.pstrides[1];
                let s2 = self.pstrides[2];
                let mut v = 0.0;
                for l in 0..4 {
                    let mut plane = 0.0;
                    for j in 0..4 {
                        let row = base + j * s1 + l * s2;
                        let r: f64 = (0..4).map(|a| b[0][a] * c[row + a]).sum();
                        plane += b[1][j] * r;
                    }
                    v += b[2][l] * plane;
                }
                v
            }
        }
    }

    pub fn padded_shape(&self) -> &[usize] {
        &self.pshape
    }
}

/// Evaluates a field anywhere in R^N, zero outside the grid.
#[derive(Clone, Debug)]
pub enum Interpolant {
    Radial(Spline1d),
    Cartesian(TensorSpline),
}

impl Interpolant {
    pub fn new(u: &Field) -> Self {
        match &**u.grid() {
            Grid::Radial(g) => {
                Interpolant::Radial(Spline1d::new(0.0, g.spacing(), u.values(), StartCondition::Even))
            }
            Grid::Cartesian(g) => Interpolant::Cartesian(TensorSpline::new(g, u.values())),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Interpolant::Radial(s) => s.eval(x.iter().map(|a| a * a).sum::<f64>().sqrt()),
            Interpolant::Cartesian(s) => s.eval(x),
        }
    }
}

/// Interpolate `u` onto `target`. The identity resample returns an exact copy.
pub fn resample(u: &Field, target: &Arc<Grid>) -> Result<Field> {
    if Arc::ptr_eq(u.grid(), target) || **u.grid() == **target {
        return Ok(u.clone());
    }
    if u.grid().dim() != target.dim() {
        return Err(Error::DimensionMismatch { expected: u.grid().dim(), got: target.dim() });
    }
    let it = Interpolant::new(u);
    Field::from_fn(target.clone(), |x| it.eval(x))
}
