//! Exact inverse of  c(-Δ) + σ  on the free nodes of a grid. Radial grids
//! factor the banded stiffness matrix, Cartesian boxes divide in the sine
//! basis.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::BandCholesky;
use crate::spectral;

// Coupling reach of the radial stencil.
const RADIAL_BAND: usize = 3;

pub struct Preconditioner {
    inner: Inner,
}

enum Inner {
    Radial {
        dofs: Vec<usize>,
        factor: BandCholesky,
        weights: Vec<f64>,
    },
    Cartesian {
        shape: Vec<usize>,
        interior: Vec<usize>,
        eig: Vec<Vec<f64>>,
        scale: f64,
        shift: f64,
    },
}

impl Preconditioner {
    pub fn new(grid: &Grid, scale: f64, shift: f64) -> Result<Self> {
        if !(scale > 0.0 && shift > 0.0) {
            return Err(Error::InvalidArgument(format!("preconditioner needs positive scale and shift, got {scale}, {shift}")));
        }
        let inner = match grid {
            Grid::Radial(_) => {
                let w = grid.weights().as_slice();
                let mask = grid.dof_mask();
                let dofs: Vec<usize> = (0..grid.len()).filter(|&i| mask[i]).collect();
                let m = dofs.len();
                // stiffness W(c(-Δ) + σ), read off column colours that are
                // farther apart than the band
                let colours = 2 * RADIAL_BAND + 1;
                let mut band = vec![vec![0.0; RADIAL_BAND + 1]; m];
                let mut x = vec![0.0; grid.len()];
                let mut lap = vec![0.0; grid.len()];
                for colour in 0..colours {
                    x.iter_mut().for_each(|v| *v = 0.0);
                    for r in (colour..m).step_by(colours) {
                        x[dofs[r]] = 1.0;
                    }
                    grid.laplacian(&x, &mut lap);
                    for (r, &i) in dofs.iter().enumerate() {
                        let k = -scale * w[i] * lap[i] + shift * w[i] * x[i];
                        // offset to the unit column at or left of row r
                        let off = (r % colours + colours - colour) % colours;
                        if off <= RADIAL_BAND && off <= r {
                            band[r][off] = k;
                        }
                    }
                }
                let factor = BandCholesky::new(band)
                    .ok_or_else(|| Error::InvalidArgument("radial stiffness matrix is not positive definite".into()))?;
                let weights = dofs.iter().map(|&i| w[i]).collect();
                Inner::Radial { dofs, factor, weights }
            }
            Grid::Cartesian(g) => {
                let shape = g.shape().to_vec();
                let interior = spectral::interior(&shape);
                let eig = interior.iter().enumerate().map(|(k, &m)| spectral::eigenvalues(m, g.spacing()[k])).collect();
                Inner::Cartesian { shape, interior, eig, scale, shift }
            }
        };
        Ok(Self { inner })
    }

    /// x = P^{-1} g on free nodes, zero elsewhere.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; g.len()];
        match &self.inner {
            Inner::Radial { dofs, factor, weights } => {
                let mut rhs: Vec<f64> = dofs.iter().zip(weights).map(|(&i, w)| g[i] * w).collect();
                factor.solve(&mut rhs);
                for (&i, v) in dofs.iter().zip(rhs) {
                    out[i] = v;
                }
            }
            Inner::Cartesian { shape, interior, eig, scale, shift } => {
                let mut buf = spectral::gather(shape, interior, g);
                spectral::dst_all(&mut buf, interior);
                spectral::for_modes(interior, eig, |i, lam| buf[i] /= scale * lam + shift);
                spectral::idst_all(&mut buf, interior);
                spectral::scatter(shape, interior, &buf, &mut out);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CartesianGrid, RadialGrid};

    fn operator(grid: &Grid, c: f64, s: f64, x: &[f64]) -> Vec<f64> {
        let mut lap = vec![0.0; x.len()];
        grid.laplacian(x, &mut lap);
        (0..x.len()).map(|i| c * -lap[i] + s * x[i]).collect()
    }

    fn check(grid: Grid) {
        let n = grid.len();
        let mask = grid.dof_mask();
        let mut x: Vec<f64> = (0..n).map(|i| if mask[i] { ((i * 7919) % 97) as f64 / 97.0 - 0.4 } else { 0.0 }).collect();
        grid.apply_constraints(&mut x);
        let (c, s) = (1.7, 0.6);
        let y = Preconditioner::new(&grid, c, s).unwrap().apply(&operator(&grid, c, s, &x));
        for i in 0..n {
            if mask[i] {
                assert!((y[i] - x[i]).abs() < 1e-9, "node {i}: {} vs {}", y[i], x[i]);
            }
        }
    }

    #[test]
    fn inverts_radial_operator() {
        for dim in 1..=3 {
            check(Grid::Radial(RadialGrid::new(dim, 8.0, 40).unwrap()));
            check(Grid::Radial(RadialGrid::new(dim, 3.0, 9).unwrap()));
        }
    }

    #[test]
    fn inverts_cartesian_operator() {
        check(Grid::Cartesian(CartesianGrid::new(&[9], &[-2.0], &[2.0]).unwrap()));
        check(Grid::Cartesian(CartesianGrid::new(&[7, 10], &[-2.0, -1.0], &[2.0, 3.0]).unwrap()));
        check(Grid::Cartesian(CartesianGrid::new(&[6, 5, 8], &[-1.0, -1.0, -2.0], &[1.0, 2.0, 2.0]).unwrap()));
    }
}
