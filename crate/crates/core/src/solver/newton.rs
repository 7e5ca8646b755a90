//! Riemannian Newton on the mass sphere for the discrete equation
//! -Δu + V u + λ u = |u|^{p-2} u, with preconditioned MINRES inner solves.

use crate::error::{Error, Result};
use crate::field::{pow_abs, Field};
use crate::potential::PotentialField;

use super::precond::Preconditioner;

pub(crate) struct NewtonOutcome {
    pub u: Field,
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<(f64, f64, f64)>,
}

struct Sys<'a> {
    u: &'a Field,
    v: &'a [f64],
    w: &'a [f64],
    mask: Vec<bool>,
    p: f64,
    rho: f64,
}

fn dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * x * y).sum()
}

impl Sys<'_> {
    fn project(&self, x: &mut [f64], u: &[f64]) {
        let c = dot(self.w, x, u) / dot(self.w, u, u);
        x.iter_mut().zip(u).for_each(|(x, u)| *x -= c * u);
    }

    /// Tangential gradient, multiplier and energy at u.
    fn gradient(&self, u: &[f64]) -> (Vec<f64>, f64, f64) {
        let mut lap = vec![0.0; u.len()];
        self.u.grid().laplacian(u, &mut lap);
        let mut g: Vec<f64> = (0..u.len())
            .map(|i| if self.mask[i] { -lap[i] + self.v[i] * u[i] - pow_abs(u[i], self.p - 2.0) * u[i] } else { 0.0 })
            .collect();
        let lambda = -dot(self.w, &g, u) / (self.rho * self.rho);
        g.iter_mut().zip(u).for_each(|(g, u)| *g += lambda * u);
        for (g, m) in g.iter_mut().zip(&self.mask) {
            if !m {
                *g = 0.0;
            }
        }
        let a = self.u.grid().kinetic(u);
        let rest: f64 = (0..u.len()).map(|i| self.w[i] * (0.5 * self.v[i] * u[i] * u[i] - pow_abs(u[i], self.p) / self.p)).sum();
        (g, lambda, 0.5 * a + rest)
    }

    fn hess(&self, u: &[f64], lambda: f64, x: &[f64]) -> Vec<f64> {
        let mut lap = vec![0.0; x.len()];
        self.u.grid().laplacian(x, &mut lap);
        let mut y: Vec<f64> = (0..x.len())
            .map(|i| {
                if self.mask[i] {
                    -lap[i] + (self.v[i] + lambda - (self.p - 1.0) * pow_abs(u[i], self.p - 2.0)) * x[i]
                } else {
                    0.0
                }
            })
            .collect();
        self.project(&mut y, u);
        y
    }
}

/// Preconditioned MINRES for a self-adjoint operator in the weighted inner product.
pub(crate) fn minres(
    w: &[f64],
    a: impl Fn(&[f64]) -> Vec<f64>,
    m: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rtol: f64,
    max_iter: usize,
) -> (Vec<f64>, usize) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = m(&r1);
    let beta1 = dot(w, &r1, &y).max(0.0).sqrt();
    if beta1 == 0.0 {
        return (x, 0);
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta, mut dbar, mut epsln, mut phibar) = (0.0, beta1, 0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut wv = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let s = 1.0 / beta;
        let v: Vec<f64> = y.iter().map(|x| s * x).collect();
        y = a(&v);
        if it >= 2 {
            let c = beta / oldb;
            y.iter_mut().zip(&r1).for_each(|(y, r)| *y -= c * r);
        }
        let alfa = dot(w, &v, &y);
        let c = alfa / beta;
        y.iter_mut().zip(&r2).for_each(|(y, r)| *y -= c * r);
        r1 = std::mem::replace(&mut r2, y);
        y = m(&r2);
        oldb = beta;
        beta = dot(w, &r2, &y).max(0.0).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let w1 = std::mem::replace(&mut w2, wv.clone());
        for i in 0..n {
            wv[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
            x[i] += phi * wv[i];
        }
        if phibar <= rtol * beta1 || beta == 0.0 {
            break;
        }
    }
    (x, it)
}

/// Newton iterations from `u` (mass rho) until the tangential gradient
/// falls below `tol`.
pub(crate) fn polish(u: &Field, v: &PotentialField, p: f64, rho: f64, sigma_floor: f64, tol: f64, max_iter: usize) -> Result<NewtonOutcome> {
    if !u.same_grid(v) {
        return Err(Error::GridMismatch);
    }
    let grid = u.grid().clone();
    let sys = Sys { u, v: v.values(), w: grid.weights().as_slice(), mask: grid.dof_mask(), p, rho };
    let normalize = |x: &mut Vec<f64>| {
        grid.apply_constraints(x);
        let m = dot(sys.w, x, x).sqrt();
        x.iter_mut().for_each(|y| *y *= rho / m);
    };
    let mut cur = u.values().to_vec();
    normalize(&mut cur);
    let (mut g, mut lambda, mut energy) = sys.gradient(&cur);
    let mut res = dot(sys.w, &g, &g).sqrt();
    let mut history = vec![(energy, res, lambda)];
    let mut iterations = 0;
    let mut converged = res <= tol;
    while !converged && iterations < max_iter {
        let pre = Preconditioner::new(&grid, 1.0, lambda.max(sigma_floor))?;
        let pu = pre.apply(&cur);
        let upu = dot(sys.w, &cur, &pu);
        let m = |r: &[f64]| {
            let mut z = pre.apply(r);
            let c = dot(sys.w, &cur, &z) / upu;
            z.iter_mut().zip(&pu).for_each(|(z, p)| *z -= c * p);
            z
        };
        let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
        let (step, _) = minres(sys.w, |x| sys.hess(&cur, lambda, x), m, &rhs, 1e-4, 400);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let mut trial: Vec<f64> = cur.iter().zip(&step).map(|(u, d)| u + t * d).collect();
            normalize(&mut trial);
            let (gt, lt, et) = sys.gradient(&trial);
            let rt = dot(sys.w, &gt, &gt).sqrt();
            if rt.is_finite() && rt < (1.0 - 1e-4 * t) * res {
                cur = trial;
                g = gt;
                lambda = lt;
                energy = et;
                res = rt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        iterations += 1;
        history.push((energy, res, lambda));
        converged = res <= tol;
    }
    Ok(NewtonOutcome { u: Field::new(grid.clone(), cur)?, lambda, residual: res, iterations, converged, history })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minres_solves_indefinite_system() {
        let n = 30;
        let w = vec![1.0; n];
        let d: Vec<f64> = (0..n).map(|i| i as f64 - 3.5).collect();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let (x, _) = minres(&w, |v| v.iter().zip(&d).map(|(a, b)| a * b).collect(), |r| r.to_vec(), &b, 1e-12, 200);
        for i in 0..n {
            assert!((x[i] * d[i] - b[i]).abs() < 1e-9);
        }
    }
}
