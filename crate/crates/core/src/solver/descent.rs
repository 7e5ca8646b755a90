//! Minimization of J(u) = max_s G(u; s) over the sphere |u|_2 = rho by
//! preconditioned L-BFGS with a normalizing retraction. At a minimizer of J
//! the frame maximizer s turns u into a critical point of the energy.

use std::collections::VecDeque;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::field::pow_abs;
use crate::grid::Grid;

use super::frame::Frame;
use super::precond::Preconditioner;
use super::SolveConfig;

pub(crate) struct Point {
    pub u: Vec<f64>,
    pub s: Vec<f64>,
    pub j: f64,
    /// Tangential L^2 gradient, with the dilation generator removed when gauged.
    pub grad: Vec<f64>,
    pub lambda: f64,
    pub residual: f64,
    /// Norm of `grad`.
    pub reduced: f64,
}

pub(crate) struct Outcome {
    pub point: Point,
    pub iterations: usize,
    pub stalled: bool,
    /// Largest increase of J between accepted iterates.
    pub max_rise: f64,
}

pub(crate) struct Engine<'a> {
    grid: Arc<Grid>,
    frame: Frame<'a>,
    rho: f64,
    p: f64,
    cap: f64,
    hess: Option<DMatrix<f64>>,
    precond: Option<(Preconditioner, f64, f64)>,
    sigma_floor: f64,
    gauge: bool,
}

fn dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}

impl<'a> Engine<'a> {
    pub fn new(grid: Arc<Grid>, frame: Frame<'a>, rho: f64, p: f64, cap: f64, sigma_floor: f64) -> Self {
        Self { grid, frame, rho, p, cap, hess: None, precond: None, sigma_floor, gauge: true }
    }

    fn weights(&self) -> &[f64] {
        self.grid.weights().as_slice()
    }

    pub fn normalize(&self, u: &mut [f64]) -> Result<()> {
        self.grid.apply_constraints(u);
        let m = dot(self.weights(), u, u);
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::ZeroField);
        }
        let c = self.rho / m.sqrt();
        u.iter_mut().for_each(|x| *x *= c);
        Ok(())
    }

    pub fn evaluate(&mut self, u: Vec<f64>, warm: &[f64]) -> Result<Point> {
        let mut s = warm.to_vec();
        let mom = self.frame.moments(&self.grid, &u);
        let j = self.frame.maximize(&mom, &mut s, &mut self.hess, self.cap)?;
        let h = s[s.len() - 1];
        let vs = self.frame.values(u.len(), &s);
        let mut lap = vec![0.0; u.len()];
        self.grid.laplacian(&u, &mut lap);
        let ek = (self.frame_k() * h).exp();
        let e2 = (2.0 * h).exp();
        let mask = self.grid.dof_mask();
        let mut g: Vec<f64> = (0..u.len())
            .map(|i| if mask[i] { -e2 * lap[i] + vs[i] * u[i] - ek * pow_abs(u[i], self.p - 2.0) * u[i] } else { 0.0 })
            .collect();
        let w = self.weights();
        let lambda = -dot(w, &g, &u) / (self.rho * self.rho);
        axpy(&mut g, lambda, &u);
        for (gi, m) in g.iter_mut().zip(&mask) {
            if !m {
                *gi = 0.0;
            }
        }
        let residual = dot(w, &g, &g).sqrt();
        if !j.is_finite() || !residual.is_finite() {
            return Err(Error::NonFinite(0));
        }
        let reduced = if self.gauge {
            let mut t = generator(&self.grid, &u);
            self.project(&mut t, &u);
            let tt = dot(w, &t, &t);
            if tt > 0.0 {
                let c = dot(w, &g, &t) / tt;
                axpy(&mut g, -c, &t);
            }
            dot(w, &g, &g).sqrt()
        } else {
            residual
        };
        Ok(Point { u, s, j, grad: g, lambda, residual, reduced })
    }

    fn frame_k(&self) -> f64 {
        self.grid.dim() as f64 * (self.p - 2.0) / 2.0
    }

    fn ensure_precond(&mut self, h: f64, lambda: f64) -> Result<bool> {
        let sigma = lambda.max(self.sigma_floor);
        let scale = (2.0 * h).exp();
        if let Some((_, s0, sig0)) = &self.precond {
            if (scale / s0 - 1.0).abs() < 0.2 && (sigma / sig0 - 1.0).abs() < 0.3 {
                return Ok(false);
            }
        }
        self.precond = Some((Preconditioner::new(&self.grid, scale, sigma)?, scale, sigma));
        Ok(true)
    }

    // P^{-1} r made L^2-orthogonal to u through an oblique correction.
    fn apply_m(&self, r: &[f64], pu: &[f64], upu: f64, u: &[f64]) -> Vec<f64> {
        let p = &self.precond.as_ref().expect("preconditioner built").0;
        let mut z = p.apply(r);
        let c = dot(self.weights(), u, &z) / upu;
        axpy(&mut z, -c, pu);
        z
    }

    fn project(&self, x: &mut [f64], u: &[f64]) {
        let c = dot(self.weights(), x, u) / (self.rho * self.rho);
        axpy(x, -c, u);
    }

    fn degauge(&self, x: &mut [f64], u: &[f64]) {
        if !self.gauge {
            return;
        }
        let w = self.weights();
        let mut t = generator(&self.grid, u);
        self.project(&mut t, u);
        let tt = dot(w, &t, &t);
        if tt > 0.0 {
            let c = dot(w, x, &t) / tt;
            axpy(x, -c, &t);
        }
    }

    pub fn run(&mut self, u0: Vec<f64>, s0: Vec<f64>, cfg: &SolveConfig, tol_abs: f64, mut observe: impl FnMut(usize, &Point, &Frame) -> Result<()>) -> Result<Outcome> {
        let mut u0 = u0;
        self.normalize(&mut u0)?;
        let mut pt = self.evaluate(u0, &s0)?;
        let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
        let mut max_rise = 0.0f64;
        let mut iterations = 0;
        let mut stalled = false;
        let mut alpha0 = cfg.initial_step;
        loop {
            observe(iterations, &pt, &self.frame)?;
            if pt.reduced <= tol_abs {
                break;
            }
            if iterations >= cfg.max_iter {
                break;
            }
            let h = pt.s[pt.s.len() - 1];
            self.ensure_precond(h, pt.lambda)?;
            let pu = self.precond.as_ref().expect("preconditioner built").0.apply(&pt.u);
            let upu = dot(self.weights(), &pt.u, &pu);
            let w = self.weights().to_vec();
            let mut d = two_loop(&pairs, &pt.grad, &w, |q| self.apply_m(q, &pu, upu, &pt.u));
            self.project(&mut d, &pt.u);
            self.degauge(&mut d, &pt.u);
            let mut slope = dot(&w, &pt.grad, &d);
            if !(slope > 0.0) {
                pairs.clear();
                d = self.apply_m(&pt.grad, &pu, upu, &pt.u);
                self.project(&mut d, &pt.u);
                self.degauge(&mut d, &pt.u);
                slope = dot(&w, &pt.grad, &d);
            }
            let dn = dot(&w, &d, &d).sqrt();
            let mut alpha = if pairs.is_empty() { alpha0 } else { 1.0 };
            alpha = alpha.min(cfg.max_step * self.rho / dn);
            let mut accepted = None;
            for _ in 0..40 {
                let mut trial: Vec<f64> = pt.u.iter().zip(&d).map(|(u, d)| u - alpha * d).collect();
                self.normalize(&mut trial)?;
                let next = match self.evaluate(trial, &pt.s) {
                    Ok(n) => n,
                    Err(Error::DilationCap { .. }) => {
                        alpha *= cfg.backtrack;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let armijo = next.j <= pt.j - 1e-4 * alpha * slope;
                let flat = next.j <= pt.j + 1e-12 * pt.j.abs() && next.reduced < pt.reduced;
                if armijo || flat {
                    accepted = Some(next);
                    break;
                }
                alpha *= cfg.backtrack;
            }
            let Some(next) = accepted else {
                if pairs.is_empty() {
                    stalled = true;
                    break;
                }
                pairs.clear();
                continue;
            };
            if pairs.is_empty() {
                alpha0 = (2.0 * alpha).min(cfg.initial_step.max(1.0));
            }
            max_rise = max_rise.max(next.j - pt.j);
            // curvature pair, transported by projection onto the new tangent space
            let mut sv: Vec<f64> = next.u.iter().zip(&pt.u).map(|(a, b)| a - b).collect();
            self.project(&mut sv, &next.u);
            let mut old_g = pt.grad.clone();
            self.project(&mut old_g, &next.u);
            let yv: Vec<f64> = next.grad.iter().zip(&old_g).map(|(a, b)| a - b).collect();
            for (s, y, _) in pairs.iter_mut() {
                self.project(s, &next.u);
                self.project(y, &next.u);
            }
            let sy = dot(&w, &sv, &yv);
            let ss = dot(&w, &sv, &sv);
            let yy = dot(&w, &yv, &yv);
            if sy > 1e-10 * (ss * yy).sqrt() {
                pairs.push_back((sv, yv, 1.0 / sy));
                if pairs.len() > cfg.memory {
                    pairs.pop_front();
                }
            }
            pt = next;
            iterations += 1;
        }
        Ok(Outcome { point: pt, iterations, stalled, max_rise })
    }
}

fn two_loop(pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, g: &[f64], w: &[f64], m: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut a = vec![0.0; pairs.len()];
    for (i, (s, y, r)) in pairs.iter().enumerate().rev() {
        a[i] = r * dot(w, s, &q);
        axpy(&mut q, -a[i], y);
    }
    let mut z = m(&q);
    for (i, (s, y, r)) in pairs.iter().enumerate() {
        let b = r * dot(w, y, &z);
        axpy(&mut z, a[i] - b, s);
    }
    z
}

/// Generator of the dilation orbit, (N/2) u + x . grad u, by centered differences.
pub(crate) fn generator(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let half = 0.5 * grid.dim() as f64;
    let mut out: Vec<f64> = u.iter().map(|x| half * x).collect();
    match grid {
        Grid::Radial(g) => {
            let r = g.nodes();
            let n = r.len();
            for i in 1..n - 1 {
                out[i] += r[i] * (u[i + 1] - u[i - 1]) / (r[i + 1] - r[i - 1]);
            }
            out[n - 1] = 0.0;
        }
        Grid::Cartesian(g) => {
            let dim = g.dim();
            let mut idx = vec![0usize; dim];
            for f in 0..u.len() {
                if g.on_boundary(f) {
                    out[f] = 0.0;
                    continue;
                }
                g.multi_index(f, &mut idx);
                for k in 0..dim {
                    let st = g.strides()[k];
                    out[f] += g.coord(k, idx[k]) * (u[f + st] - u[f - st]) / (2.0 * g.spacing()[k]);
                }
            }
        }
    }
    out
}
