//! The (N+1)-parameter family (y, h) -> h * Z_rho(. - y), its energy, the
//! linking box Q = B_R x [h1, h2] and the search for its maximum.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::barycenter::barycenter;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{Grid, RadialGrid};
use crate::ground_state::GroundState;
use crate::interp::{Spline1d, StartCondition};
use crate::potential::{PotentialSpec, GL8};
use crate::scaling::{make_z_rho, ScalingParams};

pub struct SeedSurface {
    dim: usize,
    power: f64,
    rho: f64,
    mu: f64,
    m_rho: f64,
    a: f64,
    b: f64,
    z: Field,
    spline: Spline1d,
    rq: Vec<f64>,
    wq: Vec<f64>,
    dirs: Vec<f64>,
    dw: Vec<f64>,
}

impl SeedSurface {
    pub fn new(gs: &GroundState, rho: f64) -> Result<Self> {
        let sp = ScalingParams::from_ground_state(gs);
        let z = make_z_rho(gs, rho)?;
        let g: &RadialGrid = match &**z.grid() {
            Grid::Radial(g) => g,
            Grid::Cartesian(_) => unreachable!("profiles live on radial grids"),
        };
        let spline = Spline1d::new(0.0, g.spacing(), z.values(), StartCondition::Even);
        let dim = gs.dim();
        let p = gs.power();
        let mu = sp.mu(rho)?;
        let m_rho = sp.m(rho)?;
        let k = dim as f64 * (p - 2.0) / 2.0;
        let a = 2.0 * k * m_rho / (k - 2.0);
        let b = p * a / k;
        // radial Gauss panels of width mu up to where Z^2 is negligible
        let top = (20.0 * mu).min(g.r_max());
        let panels = 20;
        let (gx, gw) = GL8;
        let mut rq = Vec::new();
        let mut wq = Vec::new();
        for pnl in 0..panels {
            let lo = top * pnl as f64 / panels as f64;
            let half = 0.5 * top / panels as f64;
            for (t, w) in gx.iter().zip(gw) {
                let r = lo + half * (1.0 + t);
                let zr = spline.eval(r);
                rq.push(r);
                wq.push(half * w * r.powi(dim as i32 - 1) * zr * zr);
            }
        }
        let (dirs, dw) = sphere_rule(dim);
        Ok(Self { dim, power: p, rho, mu, m_rho, a, b, z, spline, rq, wq, dirs, dw })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    /// Length scale of Z_rho.
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn m_rho(&self) -> f64 {
        self.m_rho
    }
    /// Z_rho on its radial grid.
    pub fn profile(&self) -> &Field {
        &self.z
    }

    fn k(&self) -> f64 {
        self.dim as f64 * (self.power - 2.0) / 2.0
    }

    /// F_infinity(h * Z_rho).
    pub fn autonomous_energy(&self, h: f64) -> f64 {
        0.5 * (2.0 * h).exp() * self.a - (self.k() * h).exp() * self.b / self.power
    }

    /// int V(e^{-h} z + y) Z_rho(z)^2 dz by product quadrature.
    pub fn potential_integral(&self, v: &PotentialSpec, y: &[f64], h: f64) -> f64 {
        if v.is_zero() {
            return 0.0;
        }
        let e = (-h).exp();
        let n = self.dim;
        let mut x = [0.0; 3];
        let mut s = 0.0;
        for (r, wr) in self.rq.iter().zip(&self.wq) {
            let mut inner = 0.0;
            for (d, wd) in self.dirs.chunks(n).zip(&self.dw) {
                for k in 0..n {
                    x[k] = e * r * d[k] + y.get(k).copied().unwrap_or(0.0);
                }
                inner += wd * v.value(&x[..n]);
            }
            s += wr * inner;
        }
        s
    }

    /// F(h * Z_rho(. - y)).
    pub fn energy(&self, v: &PotentialSpec, y: &[f64], h: f64) -> f64 {
        self.autonomous_energy(h) + 0.5 * self.potential_integral(v, y, h)
    }

    /// h * Z_rho(. - y) sampled on a grid of the same dimension.
    pub fn field(&self, grid: &Arc<Grid>, y: &[f64], h: f64) -> Result<Field> {
        if grid.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: grid.dim() });
        }
        let amp = (0.5 * self.dim as f64 * h).exp();
        let s = h.exp();
        let mut f = Field::from_fn(grid.clone(), |x| {
            let r2: f64 = x.iter().enumerate().map(|(k, a)| (a - y.get(k).copied().unwrap_or(0.0)).powi(2)).sum();
            amp * self.spline.eval(s * r2.sqrt())
        })?;
        grid.apply_constraints(f.values_mut());
        Ok(f)
    }
}

// Directions on the unit sphere with weights summing to its area.
fn sphere_rule(dim: usize) -> (Vec<f64>, Vec<f64>) {
    match dim {
        1 => (vec![1.0, -1.0], vec![1.0, 1.0]),
        2 => {
            let m = 32;
            let mut d = Vec::new();
            for i in 0..m {
                let t = 2.0 * PI * i as f64 / m as f64;
                d.extend([t.cos(), t.sin()]);
            }
            (d, vec![2.0 * PI / m as f64; m])
        }
        _ => {
            let m = 16;
            let (gx, gw) = GL8;
            let mut d = Vec::new();
            let mut w = Vec::new();
            for (c, wc) in gx.iter().zip(gw) {
                let s = (1.0 - c * c).sqrt();
                for i in 0..m {
                    let t = 2.0 * PI * (i as f64 + 0.5) / m as f64;
                    d.extend([s * t.cos(), s * t.sin(), *c]);
                    w.push(wc * 2.0 * PI / m as f64);
                }
            }
            (d, w)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LinkingBox {
    pub radius: f64,
    pub h1: f64,
    pub h2: f64,
    /// Samples per axis for y, and along h.
    pub ny: usize,
    pub nh: usize,
    /// Achieved interior max minus boundary max.
    pub margin: f64,
    pub interior_max: f64,
    pub boundary_max: f64,
}

impl LinkingBox {
    pub fn new(radius: f64, h1: f64, h2: f64) -> Self {
        Self { radius, h1, h2, ny: 9, nh: 17, margin: f64::NAN, interior_max: f64::NAN, boundary_max: f64::NAN }
    }

    fn h_values(&self) -> Vec<f64> {
        (0..self.nh).map(|i| self.h1 + (self.h2 - self.h1) * i as f64 / (self.nh - 1) as f64).collect()
    }

    /// y samples in the closed ball, as a flat list of N-vectors with their
    /// per-axis indices.
    fn y_values(&self, dim: usize) -> Vec<(Vec<usize>, Vec<f64>)> {
        let n = self.ny;
        let axis: Vec<f64> = (0..n).map(|i| -self.radius + 2.0 * self.radius * i as f64 / (n - 1) as f64).collect();
        let total = n.pow(dim as u32);
        let mut out = Vec::new();
        for flat in 0..total {
            let mut f = flat;
            let mut idx = Vec::with_capacity(dim);
            for _ in 0..dim {
                idx.push(f % n);
                f /= n;
            }
            let y: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
            if y.iter().map(|a| a * a).sum::<f64>().sqrt() <= self.radius * (1.0 + 1e-12) {
                out.push((idx, y));
            }
        }
        out
    }
}

fn norm(y: &[f64]) -> f64 {
    y.iter().map(|a| a * a).sum::<f64>().sqrt()
}

// (value, |y|, |h|) ordering: larger value first, then smaller |y|, |h|.
fn better(a: (f64, f64, f64), b: (f64, f64, f64)) -> bool {
    let tol = 1e-12 * a.0.abs().max(b.0.abs());
    if a.0 > b.0 + tol {
        return true;
    }
    if a.0 < b.0 - tol {
        return false;
    }
    if (a.1 - b.1).abs() > 1e-12 {
        return a.1 < b.1;
    }
    a.2 < b.2
}

fn grid_max(seed: &SeedSurface, bx: &LinkingBox, v: &PotentialSpec) -> (Vec<f64>, f64, f64) {
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for (_, y) in bx.y_values(seed.dim) {
        for h in bx.h_values() {
            let val = seed.energy(v, &y, h);
            let take = match &best {
                None => true,
                Some((by, bh, bv)) => better((val, norm(&y), h.abs()), (*bv, norm(by), bh.abs())),
            };
            if take {
                best = Some((y.clone(), h, val));
            }
        }
    }
    best.expect("box has samples")
}

fn boundary_max(seed: &SeedSurface, bx: &LinkingBox, v: &PotentialSpec) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for (_, y) in bx.y_values(seed.dim) {
        m = m.max(seed.energy(v, &y, bx.h1)).max(seed.energy(v, &y, bx.h2));
    }
    let (dirs, _) = sphere_rule(seed.dim);
    for d in dirs.chunks(seed.dim) {
        let y: Vec<f64> = d.iter().map(|c| c * bx.radius).collect();
        for h in bx.h_values() {
            m = m.max(seed.energy(v, &y, h));
        }
    }
    m
}

/// Grow Q from R = 1, h in [-1, 1] by doubling until the seed's boundary
/// values sit below its interior maximum by more than `margin`.
pub fn choose_box(seed: &SeedSurface, v: &PotentialSpec, margin: f64, capacity: f64, h_cap: f64) -> Result<LinkingBox> {
    choose_box_with(seed, v, margin, capacity, h_cap, 2.0)
}

pub(crate) fn choose_box_with(seed: &SeedSurface, v: &PotentialSpec, margin: f64, capacity: f64, h_cap: f64, growth: f64) -> Result<LinkingBox> {
    if v.is_zero() {
        return Err(Error::Autonomous);
    }
    let mut bx = LinkingBox::new(1.0_f64.min(capacity), -1.0_f64.max(-h_cap), 1.0_f64.min(h_cap));
    loop {
        let (_, _, top) = grid_max(seed, &bx, v);
        let edge = boundary_max(seed, &bx, v);
        bx.interior_max = top;
        bx.boundary_max = edge;
        bx.margin = top - edge;
        if edge < top - margin {
            return Ok(bx);
        }
        let grown = LinkingBox::new((growth * bx.radius).min(capacity), (growth * bx.h1).max(-h_cap), (growth * bx.h2).min(h_cap));
        if grown.radius == bx.radius && grown.h1 == bx.h1 && grown.h2 == bx.h2 {
            return Err(Error::GridCapacity(format!(
                "boundary certificate fails at R = {}, h in [{}, {}] (margin {:.3e}); use a larger grid",
                bx.radius, bx.h1, bx.h2, bx.margin
            )));
        }
        bx = LinkingBox { ny: bx.ny, nh: bx.nh, ..grown };
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SurfacePoint {
    pub y: Vec<f64>,
    pub h: f64,
    pub value: f64,
}

fn golden(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximum of the seed energy over Q: grid search, then golden-section in h
/// and coordinate sweeps in y.
pub fn surface_max(seed: &SeedSurface, bx: &LinkingBox, v: &PotentialSpec) -> SurfacePoint {
    let (mut y, mut h, mut val) = grid_max(seed, bx, v);
    let mut dh = (bx.h2 - bx.h1) / (bx.nh - 1) as f64;
    let mut dy = 2.0 * bx.radius / (bx.ny - 1) as f64;
    for _ in 0..6 {
        let (hn, vn) = golden(|t| seed.energy(v, &y, t), (h - dh).max(bx.h1), (h + dh).min(bx.h2), 1e-7);
        if vn > val + 1e-13 * val.abs() {
            h = hn;
            val = vn;
        }
        if !v.is_zero() {
            for k in 0..seed.dim {
                let mut yt = y.clone();
                let (yn, vn) = golden(
                    |t| {
                        yt[k] = t;
                        if norm(&yt) > bx.radius {
                            f64::NEG_INFINITY
                        } else {
                            seed.energy(v, &yt, h)
                        }
                    },
                    y[k] - dy,
                    y[k] + dy,
                    1e-7,
                );
                if vn > val + 1e-13 * val.abs() {
                    y[k] = yn;
                    val = vn;
                }
            }
        }
        dh *= 0.5;
        dy *= 0.5;
    }
    SurfacePoint { y, h, value: val }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainCell {
    pub y: Vec<f64>,
    pub h: f64,
    pub beta: Vec<f64>,
}

/// Cells of Q where |beta(seed)| <= threshold, connected through grid
/// neighbours, that join (0, h1) to (0, h2).
pub fn barycenter_sweep(seed: &SeedSurface, bx: &LinkingBox, grid: &Arc<Grid>, threshold: f64) -> Result<Vec<ChainCell>> {
    if grid.is_radial() {
        return Err(Error::InvalidArgument("barycenter sweep needs a Cartesian grid".into()));
    }
    let dim = seed.dim;
    if bx.ny % 2 == 0 {
        return Err(Error::InvalidArgument("the y sampling must contain y = 0 (odd count)".into()));
    }
    let extent = match &**grid {
        Grid::Cartesian(g) => (0..dim).map(|k| g.hi()[k] - g.lo()[k]).fold(0.0, f64::max),
        Grid::Radial(_) => unreachable!(),
    };
    let tol = threshold + 1e-9 * extent;
    let ys = bx.y_values(dim);
    let hs = bx.h_values();
    let mut cells = Vec::new();
    let mut index = std::collections::HashMap::new();
    for (idx, y) in ys.iter() {
        for (hi, h) in hs.iter().enumerate() {
            let f = seed.field(grid, y, *h)?;
            let beta = barycenter(&f)?;
            if norm(&beta) <= tol {
                index.insert((idx.clone(), hi), cells.len());
                cells.push((idx.clone(), hi, ChainCell { y: y.clone(), h: *h, beta }));
            }
        }
    }
    let mid = vec![bx.ny / 2; dim];
    let start = index.get(&(mid.clone(), 0)).copied();
    let goal = index.get(&(mid, bx.nh - 1)).copied();
    let (Some(start), Some(goal)) = (start, goal) else {
        return Err(Error::NoChain(threshold));
    };
    let mut seen = vec![false; cells.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(c) = queue.pop_front() {
        let (idx, hi, _) = &cells[c];
        let mut nbrs = Vec::new();
        for k in 0..dim {
            for s in [-1isize, 1] {
                let j = idx[k] as isize + s;
                if j >= 0 && (j as usize) < bx.ny {
                    let mut n = idx.clone();
                    n[k] = j as usize;
                    nbrs.push((n, *hi));
                }
            }
        }
        if *hi > 0 {
            nbrs.push((idx.clone(), hi - 1));
        }
        if hi + 1 < bx.nh {
            nbrs.push((idx.clone(), hi + 1));
        }
        for n in nbrs {
            if let Some(&m) = index.get(&n) {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
    }
    if !seen[goal] {
        return Err(Error::NoChain(threshold));
    }
    Ok(cells.into_iter().zip(seen).filter(|(_, s)| *s).map(|(c, _)| c.2).collect())
}
