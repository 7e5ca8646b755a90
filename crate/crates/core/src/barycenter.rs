//! Barycenter map: unit-ball local average of |u|, thresholded at half its
//! maximum, then the center of mass of what remains.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{CartesianGrid, Grid};

/// Unit-ball average of |u| at every node, zero outside the grid.
pub fn local_average(u: &Field) -> Result<Field> {
    u.check_finite()?;
    match &**u.grid() {
        Grid::Radial(_) => Err(Error::InvalidArgument("local averages need a Cartesian grid".into())),
        Grid::Cartesian(g) => {
            if g.spacing().iter().any(|d| *d > 0.25) {
                return Err(Error::InvalidArgument(format!(
                    "grid spacing {:?} too coarse to resolve the unit ball (need <= 0.25)",
                    g.spacing()
                )));
            }
            let vals = ball_average(g, u.values());
            u.with_values(vals)
        }
    }
}

fn ball_average(g: &CartesianGrid, u: &[f64]) -> Vec<f64> {
    let dim = g.dim();
    let shape = g.shape();
    let dx = g.spacing();
    let n0 = shape[0];
    let rows = u.len() / n0;
    // prefix sums of |u| along axis 0
    let mut pre = vec![0.0; rows * (n0 + 1)];
    for r in 0..rows {
        let mut acc = 0.0;
        for i in 0..n0 {
            acc += u[r * n0 + i].abs();
            pre[r * (n0 + 1) + i + 1] = acc;
        }
    }
    // offsets in the remaining axes with their half-lengths along axis 0
    let reach = |k: usize| (1.0 / dx[k]).floor() as isize;
    let mut offs: Vec<(isize, isize, isize)> = Vec::new();
    let (r1, r2) = (if dim > 1 { reach(1) } else { 0 }, if dim > 2 { reach(2) } else { 0 });
    for o2 in -r2..=r2 {
        for o1 in -r1..=r1 {
            let mut rem = 1.0;
            if dim > 1 {
                rem -= (o1 as f64 * dx[1]).powi(2);
            }
            if dim > 2 {
                rem -= (o2 as f64 * dx[2]).powi(2);
            }
            if rem < 0.0 {
                continue;
            }
            let m = (rem.sqrt() / dx[0] + 1e-12).floor() as isize;
            offs.push((o1, o2, m));
        }
    }
    let count: f64 = offs.iter().map(|o| (2 * o.2 + 1) as f64).sum();
    let n1 = if dim > 1 { shape[1] as isize } else { 1 };
    let n2 = if dim > 2 { shape[2] as isize } else { 1 };
    let mut out = vec![0.0; u.len()];
    for i2 in 0..n2 {
        for i1 in 0..n1 {
            let row_out = (i2 * n1 + i1) as usize * n0;
            for &(o1, o2, m) in &offs {
                let (j1, j2) = (i1 + o1, i2 + o2);
                if j1 < 0 || j1 >= n1 || j2 < 0 || j2 >= n2 {
                    continue;
                }
                let base = (j2 * n1 + j1) as usize * (n0 + 1);
                for i0 in 0..n0 as isize {
                    let lo = (i0 - m).max(0) as usize;
                    let hi = ((i0 + m).min(n0 as isize - 1) + 1) as usize;
                    out[row_out + i0 as usize] += pre[base + hi] - pre[base + lo];
                }
            }
        }
    }
    out.iter_mut().for_each(|v| *v /= count);
    out
}

/// Barycenter beta(u) in R^N. Radial fields are centered at the origin.
pub fn barycenter(u: &Field) -> Result<Vec<f64>> {
    let dim = u.grid().dim();
    if u.values().iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroField);
    }
    if u.grid().is_radial() {
        u.check_finite()?;
        return Ok(vec![0.0; dim]);
    }
    let nu = local_average(u)?;
    let top = nu.values().iter().fold(0.0f64, |m, v| m.max(*v));
    let w = u.grid().weights();
    let mut x = vec![0.0; dim];
    let mut num = vec![0.0; dim];
    let mut den = 0.0;
    for (i, v) in nu.values().iter().enumerate() {
        let hat = v - 0.5 * top;
        if hat <= 0.0 {
            continue;
        }
        u.grid().point(i, &mut x);
        let wh = w[i] * hat;
        den += wh;
        for k in 0..dim {
            num[k] += wh * x[k];
        }
    }
    Ok(num.into_iter().map(|s| s / den).collect())
}
