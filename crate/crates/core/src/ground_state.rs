//! Positive radial ground state of  -U'' - (N-1)/r U' + U = U^{p-1}.
//!
//! The central amplitude is found by shooting: a too-small amplitude turns
//! back up before reaching zero, a too-large one crosses zero. Bisection runs
//! to the resolution of doubles; past the radius where the two bracketing
//! trajectories separate, the profile is continued by the decaying solution
//! of the linearized equation, r^{-(N-2)/2} K_{(N-2)/2}(r).

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{pow_abs, Field};
use crate::grid::{Grid, RadialGrid};

/// 2 + 4/N < p < 2N/(N-2), no upper bound for N <= 2.
pub fn admissible(dim: usize, p: f64) -> bool {
    if dim == 0 || !p.is_finite() {
        return false;
    }
    let n = dim as f64;
    p > 2.0 + 4.0 / n && (dim <= 2 || p < 2.0 * n / (n - 2.0))
}

pub fn check_admissible(dim: usize, p: f64) -> Result<()> {
    if admissible(dim, p) {
        Ok(())
    } else {
        Err(Error::PowerOutOfWindow { dim, p })
    }
}

#[derive(Clone, Debug)]
pub struct GroundStateConfig {
    pub r_max: f64,
    pub nodes: usize,
    /// Bound on the scaled sup-norm ODE residual is 10 * tol.
    pub tol: f64,
    pub max_amplitude: f64,
    /// Relative separation of the bracketing trajectories that ends the
    /// trusted part of the shooting solution.
    pub split_tol: f64,
}

impl Default for GroundStateConfig {
    fn default() -> Self {
        Self { r_max: 30.0, nodes: 30 * 2048 + 1, tol: 1e-8, max_amplitude: 1e6, split_tol: 1e-7 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundStateSummary {
    pub dim: usize,
    pub power: f64,
    pub amplitude: f64,
    pub rho0: f64,
    pub m_rho0: f64,
    pub kinetic: f64,
    pub potential_p: f64,
    pub residual_sup: f64,
    pub residual_l2: f64,
    pub decay_rate: f64,
    pub tail_start: f64,
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub summary: GroundStateSummary,
    pub profile: Field,
}

impl GroundState {
    pub fn dim(&self) -> usize {
        self.summary.dim
    }
    pub fn power(&self) -> f64 {
        self.summary.power
    }
    pub fn rho0(&self) -> f64 {
        self.summary.rho0
    }
    pub fn m_rho0(&self) -> f64 {
        self.summary.m_rho0
    }
    pub fn radial_grid(&self) -> &RadialGrid {
        match &**self.profile.grid() {
            Grid::Radial(g) => g,
            Grid::Cartesian(_) => unreachable!("ground-state profiles live on radial grids"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shot {
    TooSmall,
    TooLarge,
    Undecided,
}

struct Shooter {
    dim: f64,
    p: f64,
    h: f64,
    n: usize,
}

impl Shooter {
    #[inline]
    fn rhs(&self, r: f64, u: f64, du: f64, a: f64) -> (f64, f64) {
        let nl = pow_abs(u, self.p - 2.0) * u;
        let dd = if r == 0.0 {
            (a - pow_abs(a, self.p - 1.0)) / self.dim
        } else {
            -(self.dim - 1.0) / r * du + u - nl
        };
        (du, dd)
    }

    /// Integrate from the center; returns the classification and fills
    /// `out` (when given) up to the node where the outcome was decided.
    fn shoot(&self, a: f64, mut out: Option<&mut Vec<f64>>) -> Shot {
        let h = self.h;
        // Near the center, where the 1/r coefficient hurts RK4, use the power
        // series U = sum c_k r^{2k}. Powers of the series follow Miller's
        // recurrence.
        let (n, q) = (self.dim, self.p - 1.0);
        const K: usize = 40;
        let mut c = [0.0; K + 1];
        let mut v = [0.0; K + 1];
        c[0] = a;
        v[0] = pow_abs(a, q);
        for k in 0..K {
            c[k + 1] = (c[k] - v[k]) / (2.0 * (k as f64 + 1.0) * (2.0 * k as f64 + n));
            let k1 = k + 1;
            let mut s = 0.0;
            for j in 1..=k1 {
                s += ((q + 1.0) * j as f64 - k1 as f64) * c[j] * v[k1 - j];
            }
            v[k1] = s / (k1 as f64 * a);
        }
        let series = |r: f64| -> (f64, f64) {
            let s = r * r;
            let (mut u, mut du) = (0.0, 0.0);
            for k in (0..=K).rev() {
                u = u * s + c[k];
                if k > 0 {
                    du = du * s + 2.0 * k as f64 * c[k];
                }
            }
            (u, du * r)
        };
        let mut start = 0;
        while start + 1 < self.n {
            let r = (start + 1) as f64 * h;
            if (c[K] * r.powi(2 * K as i32)).abs() > 1e-18 * a || (start + 1) as f64 * h > 0.5 {
                break;
            }
            start += 1;
        }
        if let Some(o) = out.as_deref_mut() {
            o.clear();
            for i in 0..=start {
                o.push(series(i as f64 * h).0);
            }
        }
        let (mut u, mut du) = series(start as f64 * h);
        if start == 0 {
            du = 0.0;
        }
        for i in start..self.n - 1 {
            let r = i as f64 * h;
            let (k1u, k1d) = self.rhs(r, u, du, a);
            let (k2u, k2d) = self.rhs(r + 0.5 * h, u + 0.5 * h * k1u, du + 0.5 * h * k1d, a);
            let (k3u, k3d) = self.rhs(r + 0.5 * h, u + 0.5 * h * k2u, du + 0.5 * h * k2d, a);
            let (k4u, k4d) = self.rhs(r + h, u + h * k3u, du + h * k3d, a);
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            du += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            if let Some(o) = out.as_deref_mut() {
                o.push(u);
            }
            if !u.is_finite() || u < 0.0 {
                return Shot::TooLarge;
            }
            if du > 0.0 {
                return Shot::TooSmall;
            }
        }
        Shot::Undecided
    }
}

/// Decaying solution shape of  u'' + (N-1)/r u' = u, up to a constant.
pub fn linear_tail(dim: usize, r: f64) -> f64 {
    let nu = (dim as f64 - 2.0) / 2.0;
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..30 {
        let kf = k as f64;
        let next = term * (mu - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf * r);
        if next == 0.0 || next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    r.powf(-(dim as f64 - 1.0) / 2.0) * (-r).exp() * sum
}

/// Scaled residual of  U'' + (N-1)/r U' - lambda U + |U|^{p-2} U  on a radial
/// grid, using fourth-order differences. Returns (sup / max|U|, l2 / |U|_2).
pub fn ode_residual(u: &Field, p: f64, lambda: f64) -> (f64, f64) {
    let g = match &**u.grid() {
        Grid::Radial(g) => g,
        Grid::Cartesian(_) => return (f64::NAN, f64::NAN),
    };
    let v = u.values();
    let n = v.len();
    let h = g.spacing();
    let dim = g.dim() as f64;
    let at = |i: isize| -> f64 { v[i.unsigned_abs()] };
    let w = g.weights();
    let (mut sup, mut l2, mut norm) = (0.0f64, 0.0, 0.0);
    for i in 0..n - 2 {
        let ii = i as isize;
        let d2 = (-at(ii + 2) + 16.0 * at(ii + 1) - 30.0 * at(ii) + 16.0 * at(ii - 1) - at(ii - 2)) / (12.0 * h * h);
        let lap = if i == 0 {
            dim * d2
        } else {
            let d1 = (-at(ii + 2) + 8.0 * at(ii + 1) - 8.0 * at(ii - 1) + at(ii - 2)) / (12.0 * h);
            d2 + (dim - 1.0) / g.nodes()[i] * d1
        };
        let res = lap - lambda * v[i] + pow_abs(v[i], p - 2.0) * v[i];
        sup = sup.max(res.abs());
        l2 += w[i] * res * res;
        norm += w[i] * v[i] * v[i];
    }
    let umax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (sup / umax, (l2 / norm).sqrt())
}

pub fn solve_ground_state(dim: usize, p: f64, cfg: &GroundStateConfig) -> Result<GroundState> {
    check_admissible(dim, p)?;
    if cfg.nodes < 64 || !(cfg.r_max > 0.0) {
        return Err(Error::InvalidArgument("ground-state grid too small".into()));
    }
    let grid = RadialGrid::new(dim, cfg.r_max, cfg.nodes)?;
    let sh = Shooter { dim: dim as f64, p, h: grid.spacing(), n: grid.len() };

    // a = 1 is the constant solution and counts as too small.
    let mut lo = 1.0;
    let mut hi = 2.0;
    loop {
        match sh.shoot(hi, None) {
            Shot::TooLarge => break,
            _ => {
                lo = hi;
                hi *= 2.0;
                if hi > cfg.max_amplitude {
                    return Err(Error::BracketNotFound(cfg.max_amplitude));
                }
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match sh.shoot(mid, None) {
            Shot::TooSmall => lo = mid,
            Shot::TooLarge => hi = mid,
            Shot::Undecided => {
                lo = mid;
                hi = mid;
                break;
            }
        }
    }

    let mut u_lo = Vec::new();
    let mut u_hi = Vec::new();
    sh.shoot(lo, Some(&mut u_lo));
    sh.shoot(hi, Some(&mut u_hi));
    let reach = u_lo.len().min(u_hi.len());
    let mut cut = reach - 1;
    for i in 1..reach {
        let a = u_lo[i];
        if (u_hi[i] - a).abs() > cfg.split_tol * a.abs() {
            cut = i;
            break;
        }
    }
    // step back so the stitch node sits inside the trusted region
    let cut = cut.saturating_sub(8).max(2);
    let nodes = grid.nodes();
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..=cut {
        values.push(0.5 * (u_lo[i] + u_hi[i]));
    }
    let r_c = nodes[cut];
    let scale = values[cut] / linear_tail(dim, r_c);
    for &r in &nodes[cut + 1..] {
        values.push(scale * linear_tail(dim, r));
    }
    let n = values.len();
    values[n - 1] = 0.0;

    let r1 = 0.5 * r_c;
    let i1 = (r1 / grid.spacing()).round() as usize;
    let lg = |i: usize| (values[i] * nodes[i].powf((dim as f64 - 1.0) / 2.0)).ln();
    let decay_rate = if i1 > 0 && i1 < cut { -(lg(cut) - lg(i1)) / (nodes[cut] - nodes[i1]) } else { f64::NAN };

    let amplitude = values[0];
    let profile = Field::new(Arc::new(Grid::Radial(grid)), values)?;
    let (residual_sup, residual_l2) = ode_residual(&profile, p, 1.0);
    if !(residual_sup <= 10.0 * cfg.tol) {
        return Err(Error::ResidualTooLarge { residual: residual_sup, tol: 10.0 * cfg.tol });
    }
    let kinetic = profile.grid().kinetic(profile.values());
    let w = profile.grid().weights();
    let mass: f64 = w.iter().zip(profile.values()).map(|(w, v)| w * v * v).sum();
    let potential_p: f64 = w.iter().zip(profile.values()).map(|(w, v)| w * pow_abs(*v, p)).sum();
    // The Pohozaev relation turns the spectrally accurate |U|_p^p into the
    // level; the discrete kinetic term is only second order.
    let n = dim as f64;
    let m_rho0 = (n * (p - 2.0) - 4.0) / (4.0 * p) * potential_p;
    Ok(GroundState {
        summary: GroundStateSummary {
            dim,
            power: p,
            amplitude,
            rho0: mass.sqrt(),
            m_rho0,
            kinetic,
            potential_p,
            residual_sup,
            residual_l2,
            decay_rate,
            tail_start: r_c,
        },
        profile,
    })
}

/// Exact one-dimensional ground state.
pub fn ground_state_1d_exact(p: f64, x: f64) -> f64 {
    let k = p - 2.0;
    (p / 2.0).powf(1.0 / k) * (0.5 * k * x).cosh().powf(-2.0 / k)
}
