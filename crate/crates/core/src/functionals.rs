//! Energy functional, its L^2 gradient, the Lagrange multiplier and the
//! Pohozaev defect, all on the discrete quadrature of the field's grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{pow_abs, Field};
use crate::potential::PotentialField;

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct EnergyBreakdown {
    /// |grad u|_2^2 / 2
    pub kinetic: f64,
    /// (1/2) int V u^2
    pub potential: f64,
    /// (1/p) |u|_p^p
    pub nonlinear: f64,
    pub total: f64,
}

/// The four integrals every identity is built from:
/// a = |grad u|^2, b = |u|_p^p, c = int V u^2, d = int V u grad u . x
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct DiagnosticQuadruple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl DiagnosticQuadruple {
    pub fn energy(&self, p: f64) -> f64 {
        0.5 * self.a + 0.5 * self.c - self.b / p
    }

    pub fn multiplier(&self, mass: f64) -> f64 {
        (self.b - self.a - self.c) / mass
    }

    pub fn pohozaev(&self, dim: usize, p: f64) -> f64 {
        let n = dim as f64;
        self.a - n * (p - 2.0) / (2.0 * p) * self.b + 0.5 * n * self.c + self.d
    }
}

/// Residuals of the three relations tying F, lambda and the quadruple together.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityLedger {
    /// 2F - (a + c - 2b/p)
    pub energy: f64,
    /// lambda rho^2 - (b - a - c)
    pub multiplier: f64,
    /// a - N(p-2)/(2p) b + (N/2) c + d
    pub pohozaev: f64,
    /// pohozaev / max(a, b, |c|)
    pub pohozaev_relative: f64,
}

fn check_pair(u: &Field, v: &PotentialField) -> Result<()> {
    if !u.same_grid(v) {
        return Err(Error::GridMismatch);
    }
    u.check_finite()
}

pub fn quadruple(u: &Field, v: &PotentialField, p: f64) -> Result<DiagnosticQuadruple> {
    check_pair(u, v)?;
    let g = u.grid();
    let w = g.weights();
    let uv = u.values();
    let vv = v.values();
    let a = g.kinetic(uv);
    let mut b = 0.0;
    let mut c = 0.0;
    for i in 0..uv.len() {
        b += w[i] * pow_abs(uv[i], p);
        c += w[i] * vv[i] * uv[i] * uv[i];
    }
    let vu: Vec<f64> = vv.iter().zip(uv).map(|(a, b)| a * b).collect();
    let d = g.edge_moment(uv, &vu, &[]);
    Ok(DiagnosticQuadruple { a, b, c, d })
}

pub fn energy(u: &Field, v: &PotentialField, p: f64) -> Result<EnergyBreakdown> {
    check_pair(u, v)?;
    let g = u.grid();
    let w = g.weights();
    let kinetic = 0.5 * g.kinetic(u.values());
    let mut pot = 0.0;
    let mut nl = 0.0;
    for ((wi, ui), vi) in w.iter().zip(u.values()).zip(v.values()) {
        pot += wi * vi * ui * ui;
        nl += wi * pow_abs(*ui, p);
    }
    let potential = 0.5 * pot;
    let nonlinear = nl / p;
    Ok(EnergyBreakdown { kinetic, potential, nonlinear, total: kinetic + potential - nonlinear })
}

/// Energy without potential.
pub fn energy_inf(u: &Field, p: f64) -> Result<f64> {
    u.check_finite()?;
    let g = u.grid();
    let w = g.weights();
    let nl: f64 = w.iter().zip(u.values()).map(|(w, x)| w * pow_abs(*x, p)).sum();
    Ok(0.5 * g.kinetic(u.values()) - nl / p)
}

/// -Delta u + V u - |u|^{p-2} u
pub fn l2_gradient(u: &Field, v: &PotentialField, p: f64) -> Result<Field> {
    check_pair(u, v)?;
    let mut out = vec![0.0; u.len()];
    u.grid().laplacian(u.values(), &mut out);
    for ((o, ui), vi) in out.iter_mut().zip(u.values()).zip(v.values()) {
        *o = -*o + vi * ui - pow_abs(*ui, p - 2.0) * ui;
    }
    Field::new(u.grid().clone(), out)
}

fn mass_of(u: &Field) -> f64 {
    let w = u.grid().weights();
    w.iter().zip(u.values()).map(|(w, x)| w * x * x).sum()
}

fn check_mass(u: &Field, rho: f64) -> Result<f64> {
    let m = mass_of(u);
    if m == 0.0 {
        return Err(Error::ZeroField);
    }
    if (m.sqrt() - rho).abs() > 1e-8 * rho {
        return Err(Error::MassViolation { norm: m.sqrt(), rho });
    }
    Ok(m)
}

/// Gradient of F restricted to the sphere |u|_2 = rho, with the multiplier.
pub fn projected_gradient(u: &Field, v: &PotentialField, p: f64, rho: f64) -> Result<(Field, f64)> {
    let m = check_mass(u, rho)?;
    let mut g = l2_gradient(u, v, p)?;
    let w = u.grid().weights();
    let gu: f64 = w.iter().zip(g.values().iter().zip(u.values())).map(|(w, (a, b))| w * a * b).sum();
    let lambda = -gu / m;
    for (gi, ui) in g.values_mut().iter_mut().zip(u.values()) {
        *gi += lambda * ui;
    }
    Ok((g, lambda))
}

/// lambda = (|u|_p^p - |grad u|^2 - int V u^2) / rho^2
pub fn multiplier(u: &Field, v: &PotentialField, p: f64, rho: f64) -> Result<f64> {
    let m = check_mass(u, rho)?;
    let q = quadruple(u, v, p)?;
    Ok(q.multiplier(m))
}

pub fn pohozaev_residual(u: &Field, v: &PotentialField, p: f64) -> Result<f64> {
    let q = quadruple(u, v, p)?;
    Ok(q.pohozaev(u.grid().dim(), p))
}

pub fn identity_ledger(u: &Field, v: &PotentialField, p: f64) -> Result<(DiagnosticQuadruple, IdentityLedger)> {
    let q = quadruple(u, v, p)?;
    let e = energy(u, v, p)?;
    let m = mass_of(u);
    if m == 0.0 {
        return Err(Error::ZeroField);
    }
    let lambda = q.multiplier(m);
    let poh = q.pohozaev(u.grid().dim(), p);
    let scale = q.a.max(q.b).max(q.c.abs());
    Ok((
        q,
        IdentityLedger {
            energy: 2.0 * e.total - (q.a + q.c - 2.0 * q.b / p),
            multiplier: lambda * m - (q.b - q.a - q.c),
            pohozaev: poh,
            pohozaev_relative: poh / scale,
        },
    ))
}
