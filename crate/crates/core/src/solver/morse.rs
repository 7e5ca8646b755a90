//! Negative directions of the constrained second variation
//!   L = -Δ + V + λ - (p-1)|u|^{p-2}   on  {φ : <φ, u>_2 = 0}.
//!
//! Lanczos on P^{-1} L in the P inner product, P = -Δ + σ. Sylvester's law
//! of inertia makes the signs of its eigenvalues those of L.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{pow_abs, Field};
use crate::potential::PotentialField;

use super::precond::Preconditioner;

#[derive(Clone, Debug, Serialize)]
pub struct MorseEstimate {
    /// Number of negative eigenvalues among the lowest k, None if undecided.
    pub index: Option<usize>,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub steps: usize,
    /// max |<q, u>| / (|q| |u|) over the Krylov basis.
    pub tangent_defect: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

struct Op<'a> {
    u: &'a Field,
    w: &'a [f64],
    mask: Vec<bool>,
    diag: Vec<f64>,
    sigma: f64,
}

impl Op<'_> {
    fn lap(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.u.grid().laplacian(x, &mut out);
        out
    }
    fn l(&self, x: &[f64]) -> Vec<f64> {
        let lap = self.lap(x);
        (0..x.len()).map(|i| if self.mask[i] { -lap[i] + self.diag[i] * x[i] } else { 0.0 }).collect()
    }
    fn p(&self, x: &[f64]) -> Vec<f64> {
        let lap = self.lap(x);
        (0..x.len()).map(|i| if self.mask[i] { -lap[i] + self.sigma * x[i] } else { 0.0 }).collect()
    }
    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.w.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * x * y).sum()
    }
}

pub fn morse_index_estimate(u: &Field, v: &PotentialField, p: f64, lambda: f64, k: usize) -> Result<MorseEstimate> {
    if !u.same_grid(v) {
        return Err(Error::GridMismatch);
    }
    u.check_finite()?;
    let grid = u.grid();
    let w = grid.weights().as_slice();
    let mask = grid.dof_mask();
    let ndof = mask.iter().filter(|m| **m).count();
    if k == 0 || k + 2 > ndof {
        return Err(Error::InvalidArgument(format!("cannot extract {k} eigenvalues from {ndof} unknowns")));
    }
    let diag: Vec<f64> = (0..u.len())
        .map(|i| v.values()[i] + lambda - (p - 1.0) * pow_abs(u.values()[i], p - 2.0))
        .collect();
    let sigma = lambda.abs().max(1e-3);
    let op = Op { u, w, mask, diag, sigma };
    let pre = Preconditioner::new(grid, 1.0, sigma)?;
    let pu = pre.apply(u.values());
    let upu = op.dot(u.values(), &pu);
    let apply_a = |x: &[f64]| -> Vec<f64> {
        let mut z = pre.apply(&op.l(x));
        let c = op.dot(u.values(), &z) / upu;
        z.iter_mut().zip(&pu).for_each(|(z, p)| *z -= c * p);
        z
    };
    // deterministic start vector in the tangent space
    let mut q: Vec<f64> = (0..u.len())
        .map(|i| if op.mask[i] { ((i as f64 * 0.618_033_988_75).fract() - 0.5) * (1.0 + u.values()[i].abs()) } else { 0.0 })
        .collect();
    let c = op.dot(u.values(), &q) / upu;
    q.iter_mut().zip(&pu).for_each(|(q, p)| *q -= c * p);
    let nrm = op.dot(&q, &op.p(&q)).sqrt();
    q.iter_mut().for_each(|x| *x /= nrm);

    let bytes = 8 * u.len();
    let max_steps = (ndof - 1).min(60 + 6 * k).min((400_000_000 / bytes).max(k + 10));
    let unorm = op.dot(u.values(), u.values()).sqrt();
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut ritz = (Vec::new(), Vec::new());
    let mut done = false;
    while !done {
        let j = basis.len() - 1;
        let qj = &basis[j];
        let mut z = apply_a(qj);
        alpha.push(op.dot(qj, &op.l(qj)));
        for _ in 0..2 {
            // rounding drifts along u and the iteration amplifies it
            let c = op.dot(u.values(), &z) / upu;
            z.iter_mut().zip(&pu).for_each(|(z, p)| *z -= c * p);
            let pz = op.p(&z);
            let coef: Vec<f64> = basis.iter().map(|b| op.dot(b, &pz)).collect();
            for (b, c) in basis.iter().zip(coef) {
                z.iter_mut().zip(b).for_each(|(z, b)| *z -= c * b);
            }
        }
        let b = op.dot(&z, &op.p(&z)).max(0.0).sqrt();
        let steps = alpha.len();
        if steps >= k && (steps % 5 == 0 || steps >= max_steps || b < 1e-13) {
            ritz = ritz_pairs(&alpha, &beta, b);
            let conv = ritz.1.iter().take(k).all(|r| *r <= 1e-6);
            done = conv || steps >= max_steps || b < 1e-13;
        }
        if !done {
            beta.push(b);
            z.iter_mut().for_each(|x| *x /= b);
            basis.push(z);
        }
    }
    let tangent_defect = basis
        .iter()
        .map(|b| op.dot(b, u.values()).abs() / (op.dot(b, b).sqrt() * unorm))
        .fold(0.0, f64::max);
    let (vals, res) = ritz;
    let vals: Vec<f64> = vals.into_iter().take(k).collect();
    let res: Vec<f64> = res.into_iter().take(k).collect();
    let decided = vals.iter().zip(&res).all(|(v, r)| *r <= 1e-6 && v.abs() > *r);
    let index = decided.then(|| vals.iter().filter(|v| **v < 0.0).count());
    let note = (!decided).then(|| "indeterminate: Ritz values not resolved".to_string());
    Ok(MorseEstimate { index, eigenvalues: vals, residuals: res, steps: alpha.len(), tangent_defect, note })
}

// Ascending Ritz values of the Lanczos matrix and their residual bounds.
fn ritz_pairs(alpha: &[f64], beta: &[f64], last: f64) -> (Vec<f64>, Vec<f64>) {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut pairs: Vec<(f64, f64)> =
        (0..m).map(|i| (eig.eigenvalues[i], (last * eig.eigenvectors[(m - 1, i)]).abs())).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}
