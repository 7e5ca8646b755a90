//! Discretizations of R^N: a radial half-line grid for radially symmetric
//! fields and a tensor-product Cartesian box.
//!
//! Both grids carry node quadrature weights. Radial grids use fourth-order
//! midpoint derivatives, Cartesian boxes a sine series on the interior. In
//! both cases the discrete Laplacian is the exact negative gradient of the
//! discrete kinetic energy in the weighted inner product.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::spectral;

/// Surface measure of the unit sphere in R^N.
pub fn sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * PI.powf(n / 2.0) / gamma(n / 2.0)
}

/// Volume of the unit ball in R^N.
pub fn ball_volume(dim: usize) -> f64 {
    sphere_area(dim) / dim as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureWeights(Vec<f64>);

impl QuadratureWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl std::ops::Deref for QuadratureWeights {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

// Closing weights of the fifth-order Gregory rule, last node first.
const GREGORY_END: [f64; 4] = [251.0 / 720.0, 897.0 / 720.0, 633.0 / 720.0, 739.0 / 720.0];

#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    dim: usize,
    spacing: f64,
    nodes: Vec<f64>,
    weights: QuadratureWeights,
    // edges[i] joins nodes i and i+1
    edges: Vec<f64>,
}

impl RadialGrid {
    /// Uniform nodes r_i = i h on [0, r_max], n nodes including both ends.
    pub fn new(dim: usize, r_max: f64, n: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DegenerateGrid("dimension must be positive".into()));
        }
        if n < 8 {
            return Err(Error::DegenerateGrid(format!("radial grid needs at least 8 nodes, got {n}")));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::DegenerateGrid(format!("radius {r_max} must be positive")));
        }
        let h = r_max / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let area = sphere_area(dim);
        let mut w: Vec<f64> = nodes
            .iter()
            .map(|&r| area * r.powi(dim as i32 - 1) * h)
            .collect();
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
        if dim >= 2 {
            // r^{N-1} has a nonzero slope at R, plain trapezoid would be O(h^2) there.
            for (k, g) in GREGORY_END.iter().enumerate() {
                let i = n - 1 - k;
                w[i] = area * nodes[i].powi(dim as i32 - 1) * h * g;
            }
        }
        if dim == 2 {
            // r g(r) with g even has slope g(0) at the origin
            w[0] = area * h * h / 12.0;
        }
        let edges = (0..n - 1).map(|i| area * h * ((i as f64 + 0.5) * h).powi(dim as i32 - 1)).collect();
        Ok(Self { dim, spacing: h, nodes, weights: QuadratureWeights(w), edges })
    }

    /// Same node count, every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.dim, self.r_max() * factor, self.nodes.len())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &QuadratureWeights {
        &self.weights
    }
    /// Midpoint weights of the kinetic quadrature.
    pub fn edge_weights(&self) -> &[f64] {
        &self.edges
    }

    /// Center value minimizing the kinetic term when the center carries no weight.
    fn center(&self, u: &[f64]) -> f64 {
        if self.weights[0] > 0.0 {
            return u[0];
        }
        let (e0, e1) = (self.edges[0], self.edges[1]);
        (27.0 * e0 * (28.0 * u[1] - u[2]) + e1 * (27.0 * u[1] - 27.0 * u[2] + u[3])) / (729.0 * e0 + e1)
    }

    // Value at index i in -1..=n with even reflection at the origin and odd
    // reflection at the outer node.
    fn ext(&self, u: &[f64], u0: f64, i: isize) -> f64 {
        let n = u.len() as isize;
        match i {
            -1 => u[1],
            0 => u0,
            i if i == n => -u[n as usize - 2],
            i => u[i as usize],
        }
    }

    /// Fourth-order derivative at the midpoints (i + 1/2) h.
    fn mid_derivatives(&self, u: &[f64]) -> Vec<f64> {
        let u0 = self.center(u);
        let c = 1.0 / (24.0 * self.spacing);
        (0..u.len() as isize - 1)
            .map(|i| c * (self.ext(u, u0, i - 1) - 27.0 * self.ext(u, u0, i) + 27.0 * self.ext(u, u0, i + 1) - self.ext(u, u0, i + 2)))
            .collect()
    }

    fn mid_values(&self, f: &[f64]) -> Vec<f64> {
        let f0 = f[0];
        (0..f.len() as isize - 1)
            .map(|i| (-self.ext(f, f0, i - 1) + 9.0 * self.ext(f, f0, i) + 9.0 * self.ext(f, f0, i + 1) - self.ext(f, f0, i + 2)) / 16.0)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CartesianGrid {
    shape: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    spacing: Vec<f64>,
    axis_weights: Vec<Vec<f64>>,
    strides: Vec<usize>,
    weights: QuadratureWeights,
}

impl CartesianGrid {
    /// Box [lo, hi] with `shape[k]` nodes along axis k, boundary nodes included.
    /// Axis 0 varies fastest in the flat node ordering.
    pub fn new(shape: &[usize], lo: &[f64], hi: &[f64]) -> Result<Self> {
        let dim = shape.len();
        if dim == 0 || dim > 3 {
            return Err(Error::DegenerateGrid(format!("Cartesian grids support 1 to 3 axes, got {dim}")));
        }
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::DegenerateGrid("extent arrays disagree with shape".into()));
        }
        let mut spacing = Vec::with_capacity(dim);
        let mut axis_weights = Vec::with_capacity(dim);
        for k in 0..dim {
            if shape[k] < 3 {
                return Err(Error::DegenerateGrid(format!("axis {k} needs at least 3 nodes")));
            }
            if !(lo[k].is_finite() && hi[k].is_finite() && hi[k] > lo[k]) {
                return Err(Error::DegenerateGrid(format!("axis {k} has empty extent")));
            }
            let dx = (hi[k] - lo[k]) / (shape[k] - 1) as f64;
            let mut t = vec![dx; shape[k]];
            t[0] = 0.5 * dx;
            t[shape[k] - 1] = 0.5 * dx;
            spacing.push(dx);
            axis_weights.push(t);
        }
        let mut strides = vec![1; dim];
        for k in 1..dim {
            strides[k] = strides[k - 1] * shape[k - 1];
        }
        let len: usize = shape.iter().product();
        let mut w = vec![0.0; len];
        let mut idx = vec![0usize; dim];
        for wi in w.iter_mut() {
            let mut prod = 1.0;
            for k in 0..dim {
                prod *= axis_weights[k][idx[k]];
            }
            *wi = prod;
            advance(&mut idx, shape);
        }
        Ok(Self {
            shape: shape.to_vec(),
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            spacing,
            axis_weights,
            strides,
            weights: QuadratureWeights(w),
        })
    }

    /// Cube [-half, half]^dim with n nodes per axis.
    pub fn cube(dim: usize, n: usize, half: f64) -> Result<Self> {
        Self::new(&vec![n; dim], &vec![-half; dim], &vec![half; dim])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }
    pub fn lo(&self) -> &[f64] {
        &self.lo
    }
    pub fn hi(&self) -> &[f64] {
        &self.hi
    }
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }
    pub fn axis_weights(&self, k: usize) -> &[f64] {
        &self.axis_weights[k]
    }
    pub fn weights(&self) -> &QuadratureWeights {
        &self.weights
    }

    pub fn coord(&self, k: usize, i: usize) -> f64 {
        self.lo[k] + i as f64 * self.spacing[k]
    }

    pub fn multi_index(&self, mut flat: usize, out: &mut [usize]) {
        for k in 0..self.dim() {
            out[k] = flat % self.shape[k];
            flat /= self.shape[k];
        }
    }

    pub fn on_boundary(&self, flat: usize) -> bool {
        let mut f = flat;
        for k in 0..self.dim() {
            let i = f % self.shape[k];
            f /= self.shape[k];
            if i == 0 || i + 1 == self.shape[k] {
                return true;
            }
        }
        false
    }

    fn eigenvalues(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|k| spectral::eigenvalues(self.shape[k] - 2, self.spacing[k])).collect()
    }
}

fn advance(idx: &mut [usize], shape: &[usize]) {
    for k in 0..idx.len() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Grid {
    Radial(RadialGrid),
    Cartesian(CartesianGrid),
}

impl From<RadialGrid> for Grid {
    fn from(g: RadialGrid) -> Self {
        Grid::Radial(g)
    }
}

impl From<CartesianGrid> for Grid {
    fn from(g: CartesianGrid) -> Self {
        Grid::Cartesian(g)
    }
}

impl Grid {
    pub fn dim(&self) -> usize {
        match self {
            Grid::Radial(g) => g.dim(),
            Grid::Cartesian(g) => g.dim(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Radial(g) => g.len(),
            Grid::Cartesian(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, Grid::Radial(_))
    }

    pub fn weights(&self) -> &QuadratureWeights {
        match self {
            Grid::Radial(g) => g.weights(),
            Grid::Cartesian(g) => g.weights(),
        }
    }

    /// Coordinates of node i. Radial nodes are placed on the first axis.
    pub fn point(&self, i: usize, out: &mut [f64]) {
        match self {
            Grid::Radial(g) => {
                out.iter_mut().for_each(|x| *x = 0.0);
                out[0] = g.nodes[i];
            }
            Grid::Cartesian(g) => {
                let mut f = i;
                for k in 0..g.dim() {
                    let ik = f % g.shape[k];
                    f /= g.shape[k];
                    out[k] = g.coord(k, ik);
                }
            }
        }
    }

    /// Euclidean norm of node i.
    pub fn radius(&self, i: usize) -> f64 {
        match self {
            Grid::Radial(g) => g.nodes[i],
            Grid::Cartesian(_) => {
                let mut x = [0.0; 3];
                self.point(i, &mut x);
                (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
            }
        }
    }

    /// Nodes held at zero (outer radial node, Cartesian box boundary).
    pub fn is_dirichlet(&self, i: usize) -> bool {
        match self {
            Grid::Radial(g) => i + 1 == g.len(),
            Grid::Cartesian(g) => g.on_boundary(i),
        }
    }

    /// Nodes that carry a degree of freedom: positive weight and not Dirichlet.
    pub fn dof_mask(&self) -> Vec<bool> {
        let w = self.weights();
        (0..self.len()).map(|i| w[i] > 0.0 && !self.is_dirichlet(i)).collect()
    }

    /// Zero Dirichlet nodes and, on radial grids with N >= 2, refill the
    /// zero-weight center node by even extrapolation.
    pub fn apply_constraints(&self, u: &mut [f64]) {
        match self {
            Grid::Radial(g) => {
                let n = g.len();
                u[n - 1] = 0.0;
                if g.weights[0] == 0.0 {
                    u[0] = g.center(u);
                }
            }
            Grid::Cartesian(g) => {
                for (i, v) in u.iter_mut().enumerate() {
                    if g.on_boundary(i) {
                        *v = 0.0;
                    }
                }
            }
        }
    }

    /// Weighted sum of squared edge differences, the discrete |grad u|_2^2.
    pub fn kinetic(&self, u: &[f64]) -> f64 {
        match self {
            Grid::Radial(g) => g.mid_derivatives(u).iter().zip(&g.edges).map(|(d, e)| e * d * d).sum(),
            Grid::Cartesian(g) => {
                let inner = spectral::interior(&g.shape);
                let mut buf = spectral::gather(&g.shape, &inner, u);
                spectral::dst_all(&mut buf, &inner);
                let eig = g.eigenvalues();
                let mut s = 0.0;
                spectral::for_modes(&inner, &eig, |i, lam| s += lam * buf[i] * buf[i]);
                let norm: f64 = inner.iter().map(|m| 2.0 / (m + 1) as f64).product();
                s * norm * g.spacing.iter().product::<f64>()
            }
        }
    }

    /// Discrete Laplacian, equal to -(1/2 w_i) d(kinetic)/du_i wherever w_i > 0.
    pub fn laplacian(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        match self {
            Grid::Radial(g) => {
                let n = g.len();
                let d = g.mid_derivatives(u);
                let c = 1.0 / (24.0 * g.spacing);
                let mut add = |j: isize, v: f64| match j {
                    -1 => out[1] += v,
                    j if j == n as isize => out[n - 2] -= v,
                    j => out[j as usize] += v,
                };
                for (i, (di, e)) in d.iter().zip(&g.edges).enumerate() {
                    let f = c * e * di;
                    let i = i as isize;
                    add(i - 1, f);
                    add(i, -27.0 * f);
                    add(i + 1, 27.0 * f);
                    add(i + 2, -f);
                }
                for i in 0..n {
                    let w = g.weights[i];
                    if w > 0.0 {
                        out[i] /= -w;
                    }
                }
                if g.weights[0] == 0.0 {
                    out[0] = (4.0 * out[1] - out[2]) / 3.0;
                }
            }
            Grid::Cartesian(g) => {
                let inner = spectral::interior(&g.shape);
                let mut buf = spectral::gather(&g.shape, &inner, u);
                spectral::dst_all(&mut buf, &inner);
                let eig = g.eigenvalues();
                spectral::for_modes(&inner, &eig, |i, lam| buf[i] *= -lam);
                spectral::idst_all(&mut buf, &inner);
                spectral::scatter(&g.shape, &inner, &buf, out);
            }
        }
    }

    /// Quadrature of  f * (x + shift) . grad u  with the derivative of the
    /// kinetic discretization.
    pub fn edge_moment(&self, u: &[f64], f: &[f64], shift: &[f64]) -> f64 {
        match self {
            Grid::Radial(g) => {
                let d = g.mid_derivatives(u);
                let fm = g.mid_values(f);
                let h = g.spacing;
                (0..d.len()).map(|i| g.edges[i] * fm[i] * d[i] * (i as f64 + 0.5) * h).sum()
            }
            Grid::Cartesian(g) => {
                let inner = spectral::interior(&g.shape);
                let fi = spectral::gather(&g.shape, &inner, f);
                let w = spectral::gather(&g.shape, &inner, &g.weights.0);
                let mut s = 0.0;
                for k in 0..g.dim() {
                    let mut du = spectral::gather(&g.shape, &inner, u);
                    spectral::derivative(&mut du, &inner, k, g.spacing[k]);
                    let stride: usize = inner[..k].iter().product();
                    let x0 = g.lo[k] + shift.get(k).copied().unwrap_or(0.0);
                    for (i, v) in du.iter().enumerate() {
                        let x = x0 + ((i / stride) % inner[k] + 1) as f64 * g.spacing[k];
                        s += w[i] * fi[i] * v * x;
                    }
                }
                s
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((ball_volume(1) - 2.0).abs() < 1e-14);
        assert!((ball_volume(2) - PI).abs() < 1e-14);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn radial_constant_integrates_to_ball_volume() {
        for dim in 1..=4 {
            let g = RadialGrid::new(dim, 3.0, 301).unwrap();
            let vol = ball_volume(dim) * 3f64.powi(dim as i32);
            assert!((g.weights().total() - vol).abs() < 1e-10 * vol, "dim {dim}");
        }
    }

    fn gauss_error(dim: usize, n: usize) -> f64 {
        let g = Grid::from(RadialGrid::new(dim, 6.0, n).unwrap());
        let mut u: Vec<f64> = (0..g.len()).map(|i| (-g.radius(i).powi(2)).exp()).collect();
        g.apply_constraints(&mut u);
        let mut out = vec![0.0; u.len()];
        g.laplacian(&u, &mut out);
        // near the origin the scheme is consistent in the energy sense only
        (1..u.len() - 1)
            .filter(|&i| g.radius(i) >= 0.5)
            .map(|i| {
                let r2 = g.radius(i).powi(2);
                (out[i] - (4.0 * r2 - 2.0 * dim as f64) * (-r2).exp()).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn radial_laplacian_is_fourth_order() {
        for dim in 1..=3 {
            let (e1, e2) = (gauss_error(dim, 121), gauss_error(dim, 241));
            assert!(e2 < 1e-4 && e1 / e2 > 12.0, "dim {dim}: {e1} {e2}");
        }
    }

    #[test]
    fn radial_kinetic_of_gaussian() {
        for dim in 1..=3 {
            let g = Grid::from(RadialGrid::new(dim, 6.0, 601).unwrap());
            let u: Vec<f64> = (0..g.len()).map(|i| (-g.radius(i).powi(2)).exp()).collect();
            // |S| int 4 r^2 e^{-2r^2} r^{N-1} dr = |S| 2^{-N/2} Gamma(N/2 + 1)
            let n = dim as f64;
            let exact = sphere_area(dim) * 2f64.powf(-n / 2.0) * gamma(n / 2.0 + 1.0);
            assert!((g.kinetic(&u) / exact - 1.0).abs() < 1e-8, "dim {dim}");
        }
    }

    fn symmetric(g: &Grid) {
        let mask = g.dof_mask();
        let mut u: Vec<f64> = (0..g.len()).map(|i| if mask[i] { ((i * 31) % 17) as f64 / 17.0 } else { 0.0 }).collect();
        let mut v: Vec<f64> = (0..g.len()).map(|i| if mask[i] { ((i * 13) % 11) as f64 / 11.0 - 0.5 } else { 0.0 }).collect();
        g.apply_constraints(&mut u);
        g.apply_constraints(&mut v);
        let (mut lu, mut lv) = (vec![0.0; g.len()], vec![0.0; g.len()]);
        g.laplacian(&u, &mut lu);
        g.laplacian(&v, &mut lv);
        let w = g.weights();
        let dot = |a: &[f64], b: &[f64]| (0..g.len()).filter(|&i| mask[i]).map(|i| w[i] * a[i] * b[i]).sum::<f64>();
        let (x, y) = (dot(&lu, &v), dot(&u, &lv));
        assert!((x - y).abs() < 1e-9 * x.abs().max(1.0));
        assert!((dot(&lu, &u) + g.kinetic(&u)).abs() < 1e-9 * g.kinetic(&u));
    }

    #[test]
    fn laplacian_is_symmetric_and_matches_kinetic() {
        for dim in 1..=3 {
            symmetric(&Grid::from(RadialGrid::new(dim, 2.0, 41).unwrap()));
        }
        symmetric(&Grid::from(CartesianGrid::new(&[9, 12], &[-1.0, 0.0], &[1.0, 2.0]).unwrap()));
        symmetric(&Grid::from(CartesianGrid::cube(3, 7, 1.0).unwrap()));
    }

    #[test]
    fn cartesian_kinetic_is_spectral() {
        let g = Grid::from(CartesianGrid::cube(2, 49, 7.0).unwrap());
        let mut x = [0.0; 2];
        let u: Vec<f64> = (0..g.len())
            .map(|i| {
                g.point(i, &mut x);
                (-(x[0] * x[0] + x[1] * x[1])).exp()
            })
            .collect();
        // int |grad e^{-|x|^2}|^2 over R^2 = pi
        assert!((g.kinetic(&u) - PI).abs() < 1e-10);
    }
}
