//! The energy of s * u for s = (y, h), written on u's own grid:
//!
//!   G(u; y, h) = e^{2h} a/2 - e^{kh} b/p + (1/2) sum_i w_i V(e^{-h} z_i + y) u_i^2
//!
//! with a = |grad u|^2, b = |u|_p^p, k = N(p-2)/2. Translations and
//! dilations act on V instead of u, so no interpolation is involved.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::field::pow_abs;
use crate::grid::Grid;
use crate::potential::PotentialSpec;

pub(crate) struct Frame<'a> {
    spec: &'a PotentialSpec,
    dim: usize,
    radial: bool,
    p: f64,
    k: f64,
    ny: usize,
    nodes: Vec<usize>,
    coords: Vec<f64>,
    spacing: Vec<f64>,
    pole: Option<Vec<f64>>,
}

/// Per-field data G depends on.
pub(crate) struct Moments {
    pub a: f64,
    pub b: f64,
    q: Vec<f64>,
}

impl<'a> Frame<'a> {
    pub fn new(grid: &Grid, spec: &'a PotentialSpec, p: f64, translations: bool) -> Self {
        let dim = grid.dim();
        let w = grid.weights();
        let nodes: Vec<usize> = (0..grid.len()).filter(|&i| w[i] > 0.0).collect();
        let mut coords = vec![0.0; nodes.len() * dim];
        for (j, &i) in nodes.iter().enumerate() {
            grid.point(i, &mut coords[j * dim..(j + 1) * dim]);
        }
        let (radial, spacing) = match grid {
            Grid::Radial(g) => (true, vec![g.spacing()]),
            Grid::Cartesian(g) => (false, g.spacing().to_vec()),
        };
        let pole = (!spec.is_bounded()).then(|| {
            let c = spec.center();
            (0..dim).map(|k| c.get(k).copied().unwrap_or(0.0)).collect()
        });
        let ny = if translations && !radial && !spec.is_zero() { dim } else { 0 };
        Self { spec, dim, radial, p, k: dim as f64 * (p - 2.0) / 2.0, ny, nodes, coords, spacing, pole }
    }

    /// Number of frame parameters, translations first, dilation last.
    pub fn params(&self) -> usize {
        self.ny + 1
    }

    pub fn moments(&self, grid: &Grid, u: &[f64]) -> Moments {
        let w = grid.weights();
        let a = grid.kinetic(u);
        let b: f64 = w.iter().zip(u).map(|(w, x)| w * pow_abs(*x, self.p)).sum();
        let q = self.nodes.iter().map(|&i| w[i] * u[i] * u[i]).collect();
        Moments { a, b, q }
    }

    fn map_point(&self, j: usize, s: &[f64], x: &mut [f64]) {
        let e = (-s[self.ny]).exp();
        for k in 0..self.dim {
            x[k] = e * self.coords[j * self.dim + k] + if k < self.ny { s[k] } else { 0.0 };
        }
    }

    fn is_near(&self, j: usize, s: &[f64], x: &[f64]) -> bool {
        match &self.pole {
            None => false,
            Some(c) => {
                if self.radial {
                    self.nodes[j] == 0
                } else {
                    let e = (-s[self.ny]).exp();
                    (0..self.dim).all(|k| (x[k] - c[k]).abs() <= 2.0 * e * self.spacing[k])
                }
            }
        }
    }

    // V averaged over the mapped cell of node j, for nodes next to the pole
    fn near_value(&self, j: usize, s: &[f64]) -> f64 {
        let e = (-s[self.ny]).exp();
        if self.radial {
            let r = self.coords[j * self.dim];
            let dr = self.spacing[0];
            return self.spec.shell_average(self.dim, e * (r - 0.5 * dr).max(0.0), e * (r + 0.5 * dr));
        }
        let mut x = [0.0; 3];
        self.map_point(j, s, &mut x);
        let half: Vec<f64> = self.spacing.iter().map(|d| 0.5 * e * d).collect();
        self.spec.cell_average(&x[..self.dim], &half)
    }

    /// V at every node in the frame s; zero-weight nodes get 0.
    pub fn values(&self, len: usize, s: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; len];
        if self.spec.is_zero() {
            return out;
        }
        let mut x = [0.0; 3];
        for (j, &i) in self.nodes.iter().enumerate() {
            self.map_point(j, s, &mut x);
            out[i] = if self.is_near(j, s, &x[..self.dim]) { self.near_value(j, s) } else { self.spec.value(&x[..self.dim]) };
        }
        out
    }

    /// (1/2) sum w V_s u^2 and its gradient in s.
    fn potential_term(&self, q: &[f64], s: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        if self.spec.is_zero() {
            return 0.0;
        }
        let dim = self.dim;
        let e = (-s[self.ny]).exp();
        let mut x = [0.0; 3];
        let mut dv = [0.0; 3];
        let mut c = 0.0;
        let mut near = Vec::new();
        for (j, qj) in q.iter().enumerate() {
            self.map_point(j, s, &mut x);
            if self.is_near(j, s, &x[..dim]) {
                near.push(j);
                continue;
            }
            let v = self.spec.value_grad(&x[..dim], &mut dv[..dim]);
            let hq = 0.5 * qj;
            c += hq * v;
            let mut radial = 0.0;
            for k in 0..dim {
                radial += dv[k] * self.coords[j * dim + k];
                if k < self.ny {
                    grad[k] += hq * dv[k];
                }
            }
            grad[self.ny] -= hq * e * radial;
        }
        let mut sp = s.to_vec();
        for j in near {
            let hq = 0.5 * q[j];
            c += hq * self.near_value(j, s);
            for t in 0..s.len() {
                let d = 1e-6;
                sp[t] = s[t] + d;
                let up = self.near_value(j, &sp);
                sp[t] = s[t] - d;
                let dn = self.near_value(j, &sp);
                sp[t] = s[t];
                grad[t] += hq * (up - dn) / (2.0 * d);
            }
        }
        c
    }

    /// G and its gradient in s.
    pub fn eval(&self, m: &Moments, s: &[f64], grad: &mut [f64]) -> f64 {
        let h = s[self.ny];
        let kin = (2.0 * h).exp() * m.a;
        let nl = (self.k * h).exp() * m.b;
        let c = self.potential_term(&m.q, s, grad);
        grad[self.ny] += kin - self.k / self.p * nl;
        0.5 * kin - nl / self.p + c
    }

    /// Maximize G over s starting from `s`. `hess` carries a Hessian between
    /// calls and is refreshed when it stops producing ascent.
    pub fn maximize(&self, m: &Moments, s: &mut [f64], hess: &mut Option<DMatrix<f64>>, cap: f64) -> Result<f64> {
        if !(m.a > 0.0 && m.b > 0.0) {
            return Err(Error::ZeroField);
        }
        let n = self.params();
        let mut g = vec![0.0; n];
        if self.spec.is_zero() {
            let h = (self.p * m.a / (self.k * m.b)).ln() / (self.k - 2.0);
            if h.abs() > cap {
                return Err(Error::DilationCap { h, cap });
            }
            s[self.ny] = h;
            return Ok(self.eval(m, s, &mut g));
        }
        let mut val = self.eval(m, s, &mut g);
        let mut trial = vec![0.0; n];
        let mut gt = vec![0.0; n];
        let mut fresh = false;
        for it in 0..60 {
            let h = s[self.ny];
            let scale = (2.0 * h).exp() * m.a + (self.k * h).exp() * m.b;
            let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if gnorm <= 1e-11 * scale {
                break;
            }
            if hess.is_none() || it > 12 && !fresh {
                *hess = Some(self.hessian(m, s, &g));
                fresh = true;
            }
            let step = ascent_step(hess.as_ref().unwrap(), &g, scale);
            let mut t = 1.0;
            let mut ok = false;
            for _ in 0..40 {
                for i in 0..n {
                    trial[i] = s[i] + t * step[i];
                }
                let v = self.eval(m, &trial, &mut gt);
                if v > val || (v >= val && gt.iter().map(|x| x * x).sum::<f64>().sqrt() < gnorm) {
                    ok = true;
                    val = v;
                    break;
                }
                t *= 0.5;
            }
            if !ok {
                if fresh {
                    break;
                }
                *hess = Some(self.hessian(m, s, &g));
                fresh = true;
                continue;
            }
            s.copy_from_slice(&trial);
            g.copy_from_slice(&gt);
            fresh = false;
            if s[self.ny].abs() > cap {
                return Err(Error::DilationCap { h: s[self.ny], cap });
            }
        }
        Ok(val)
    }

    fn hessian(&self, m: &Moments, s: &[f64], g: &[f64]) -> DMatrix<f64> {
        let n = self.params();
        let mut h = DMatrix::zeros(n, n);
        let mut sp = s.to_vec();
        let mut gp = vec![0.0; n];
        for j in 0..n {
            let d = 1e-5;
            sp[j] = s[j] + d;
            self.eval(m, &sp, &mut gp);
            sp[j] = s[j];
            for i in 0..n {
                h[(i, j)] = (gp[i] - g[i]) / d;
            }
        }
        0.5 * (&h + h.transpose())
    }
}

// Newton ascent step with the Hessian pushed to be negative definite.
fn ascent_step(hess: &DMatrix<f64>, g: &[f64], scale: f64) -> Vec<f64> {
    let eig = SymmetricEigen::new(hess.clone());
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (1e-6 * top).max(1e-12 * scale);
    let gv = DVector::from_column_slice(g);
    let coef = eig.eigenvectors.transpose() * gv;
    let mut step = DVector::zeros(g.len());
    for i in 0..g.len() {
        let ev = eig.eigenvalues[i].min(-floor);
        step += eig.eigenvectors.column(i) * (-coef[i] / ev);
    }
    let big = step.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if big > 0.5 {
        step *= 0.5 / big;
    }
    step.iter().copied().collect()
}
