//! Pointwise certification of the admissibility conditions on V for a
//! concrete (V, rho, N, p), plus the explicit energy and multiplier bounds
//! used to certify solver output.

use std::sync::Arc;

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::field::{pow_abs, Field};
use crate::grid::{Grid, RadialGrid};
use crate::potential::{Norm, PotentialSpec};
use crate::scaling::ScalingParams;

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Within the quadrature error band of the threshold.
    Marginal,
    NotApplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct Inequality {
    pub label: String,
    pub lhs: f64,
    pub lhs_error: f64,
    pub rhs: f64,
    pub rhs_error: f64,
    pub strict: bool,
    /// rhs - lhs
    pub margin: f64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Inequality {
    pub fn new(label: &str, lhs: Norm, rhs: Norm, strict: bool) -> Self {
        let holds = |l: f64, r: f64| if strict { l < r } else { l <= r };
        let err = lhs.error + rhs.error;
        let status = if holds(lhs.value + err, rhs.value) {
            Status::Pass
        } else if err > 0.0 && holds(lhs.value - err, rhs.value) {
            Status::Marginal
        } else {
            Status::Fail
        };
        Self {
            label: label.into(),
            lhs: lhs.value,
            lhs_error: lhs.error,
            rhs: rhs.value,
            rhs_error: rhs.error,
            strict,
            margin: rhs.value - lhs.value,
            status,
            note: None,
        }
    }

    fn with_note(mut self, note: &str) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportConstants {
    pub dim: usize,
    pub power: f64,
    pub rho: f64,
    pub rho0: f64,
    pub m_rho: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aubin_talenti: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_norm_2star: Option<Norm>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub assumption: String,
    pub verdict: Status,
    pub rows: Vec<Inequality>,
    /// Informational rows that do not enter the verdict.
    pub auxiliary: Vec<Inequality>,
    pub notes: Vec<String>,
    pub constants: ReportConstants,
}

impl AssumptionReport {
    fn finish(assumption: &str, rows: Vec<Inequality>, auxiliary: Vec<Inequality>, notes: Vec<String>, constants: ReportConstants) -> Self {
        let verdict = if rows.iter().any(|r| r.status == Status::Fail) {
            Status::Fail
        } else if rows.iter().any(|r| r.status == Status::Marginal) {
            Status::Marginal
        } else if rows.iter().all(|r| r.status == Status::Pass) && !rows.is_empty() {
            Status::Pass
        } else {
            Status::NotApplicable
        };
        Self { assumption: assumption.into(), verdict, rows, auxiliary, notes, constants }
    }

    fn not_applicable(assumption: &str, note: &str, constants: ReportConstants) -> Self {
        Self {
            assumption: assumption.into(),
            verdict: Status::NotApplicable,
            rows: Vec::new(),
            auxiliary: Vec::new(),
            notes: vec![note.into()],
            constants,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Status::Pass
    }
}

/// Best constant of the Sobolev embedding H^1 into L^{2*}, N >= 3.
pub fn aubin_talenti(dim: usize) -> Result<f64> {
    if dim < 3 {
        return Err(Error::InvalidArgument(format!("Sobolev constant needs N >= 3, got {dim}")));
    }
    let n = dim as f64;
    Ok((std::f64::consts::PI * n * (n - 2.0)).powf(-0.5) * (gamma(n) / gamma(n / 2.0)).powf(1.0 / n))
}

fn theta(dim: usize) -> f64 {
    (2.0 / dim as f64).min(1.0)
}

fn constants(s: &ScalingParams, rho: f64) -> Result<ReportConstants> {
    Ok(ReportConstants { dim: s.dim, power: s.power, rho, rho0: s.rho0, m_rho: s.m(rho)?, aubin_talenti: None, z_norm_2star: None })
}

/// Right-hand sides of the bounded-potential conditions: (sup bound on V, sup bound on W).
pub fn v1_thresholds(s: &ScalingParams, rho: f64) -> Result<(f64, f64)> {
    let n = s.dim as f64;
    let p = s.power;
    let m = s.m(rho)?;
    let v = 2.0 * theta(s.dim) * m / (rho * rho);
    let k = 2.0 * n - p * (n - 2.0);
    let inner = (n * (p - 2.0) - 4.0) / (2.0 * (p - 2.0) * (n * (2.0 * p - 1.0) * (p - 2.0) + 2.0 * (p * (2.0 - n) + 2.0 * n)));
    let w = m.sqrt() * k / rho * inner.sqrt();
    Ok((v, w))
}

pub fn check_v1(v: &PotentialSpec, rho: f64, s: &ScalingParams) -> Result<AssumptionReport> {
    v.check_dim(s.dim)?;
    let c = constants(s, rho)?;
    let norms = v.norms(s.dim)?;
    if !norms.v_inf.value.is_finite() || !norms.w_inf.value.is_finite() {
        return Ok(AssumptionReport::not_applicable("V1", "V or W unbounded: not applicable, use check_V2", c));
    }
    let (rv, rw) = v1_thresholds(s, rho)?;
    let mut notes = Vec::new();
    let mut pos = Inequality::new("V1.positivity: 0 < |V|_inf", Norm { value: 0.0, error: 0.0 }, norms.v_inf, true);
    if v.is_zero() {
        pos = pos.with_note("autonomous case");
        notes.push("autonomous case: V vanishes identically".into());
    }
    let rows = vec![
        pos,
        Inequality::new("V1.sup_bound: |V|_inf < 2 min(1, 2/N) m_rho / rho^2", norms.v_inf, Norm { value: rv, error: 0.0 }, true),
        Inequality::new("V1.weighted_sup_bound: |W|_inf <= C(N, p) m_rho^{1/2} / rho", norms.w_inf, Norm { value: rw, error: 0.0 }, false),
    ];
    // The weighted bound also appears with its denominator written as
    // 2N - p(N-2); the two are the same expression, reported for cross-checking.
    let n = s.dim as f64;
    let p = s.power;
    let m = s.m(rho)?;
    let alt_inner = (n * (p - 2.0) - 4.0) / (2.0 * (p - 2.0) * (n * (2.0 * p - 1.0) * (p - 2.0) + 2.0 * (2.0 * n - p * (n - 2.0))));
    let alt = m.sqrt() * (2.0 * n - p * (n - 2.0)) / rho * alt_inner.sqrt();
    let aux = vec![Inequality::new("V1.weighted_sup_bound (alternate form)", norms.w_inf, Norm { value: alt, error: 0.0 }, false)];
    Ok(AssumptionReport::finish("V1", rows, aux, notes, c))
}

/// |Z|_{2*} with an error estimate from the same quadrature on every other node.
pub fn z_norm_2star(z: &Field) -> Result<Norm> {
    let dim = z.grid().dim();
    if dim < 3 {
        return Err(Error::InvalidArgument("critical Sobolev exponent needs N >= 3".into()));
    }
    let n = dim as f64;
    let e = 2.0 * n / (n - 2.0);
    let norm = |f: &Field| -> f64 {
        let w = f.grid().weights();
        w.iter().zip(f.values()).map(|(w, x)| w * pow_abs(*x, e)).sum::<f64>().powf(1.0 / e)
    };
    let fine = norm(z);
    let err = match &**z.grid() {
        Grid::Radial(g) if g.len() >= 17 => {
            let m = (g.len() - 1) / 2;
            let r = g.nodes()[2 * m];
            let cg = RadialGrid::new(dim, r, m + 1)?;
            let vals = (0..=m).map(|i| z.values()[2 * i]).collect();
            let coarse = Field::new(Arc::new(Grid::Radial(cg)), vals)?;
            (fine - norm(&coarse)).abs()
        }
        _ => 0.0,
    };
    Ok(Norm { value: fine, error: err })
}

/// Threshold on |V|_{N/2} with coefficient `coef`.
fn half_dim_threshold(s: &ScalingParams, rho: f64, z: Norm, coef: f64) -> Result<Norm> {
    let n = s.dim as f64;
    let p = s.power;
    let m = s.m(rho)?;
    let expo = (n * (p - 2.0) - 4.0) / (n * (p - 2.0));
    let base = coef * (((n + 2.0) / n).powf(expo) - 1.0) * m;
    let value = base / (z.value * z.value);
    // first-order propagation of the |Z| quadrature error
    let error = 2.0 * value * z.error / z.value;
    Ok(Norm { value, error })
}

pub fn check_v2(v: &PotentialSpec, rho: f64, s: &ScalingParams, z: &Field) -> Result<AssumptionReport> {
    let mut c = constants(s, rho)?;
    if s.dim < 3 {
        return Ok(AssumptionReport::not_applicable(
            "V2",
            "out of scope for N < 3; a Gagliardo-Nirenberg variant would be needed",
            c,
        ));
    }
    v.check_dim(s.dim)?;
    let n = s.dim as f64;
    let p = s.power;
    let a = aubin_talenti(s.dim)?;
    let zn = z_norm_2star(z)?;
    c.aubin_talenti = Some(a);
    c.z_norm_2star = Some(zn);
    let norms = v.norms(s.dim)?;
    if !norms.v_half_dim.value.is_finite() || !norms.w_dim.value.is_finite() {
        return Ok(AssumptionReport::not_applicable("V2", "|V|_{N/2} or |W|_N infinite", c));
    }
    let k = 2.0 * n - p * (n - 2.0);
    let t1 = half_dim_threshold(s, rho, zn, 2.0 * n * (p - 2.0) / k)?;
    let ca = 2.0 * n * a * a * (1.0 + n * (p - 2.0) / 2.0);
    let cw = 4.0 * a * (1.0 + n * (p - 2.0) * (p - 2.0) / k);
    let lhs = Norm {
        value: ca * norms.v_half_dim.value + cw * norms.w_dim.value,
        error: ca * norms.v_half_dim.error + cw * norms.w_dim.error,
    };
    let mut notes = Vec::new();
    let mut r1 = Inequality::new("V2.half_dim_bound: |V|_{N/2} < C1(N, p) m_rho / |Z_rho|_{2*}^2", norms.v_half_dim, t1, true);
    if v.is_zero() {
        r1 = r1.with_note("zero potential: left side vanishes");
        notes.push("autonomous case: V vanishes identically".into());
    }
    let rows = vec![
        r1,
        Inequality::new("V2.sobolev_combination: C_V |V|_{N/2} + C_W |W|_N <= N(p-2) - 4", lhs, Norm { value: n * (p - 2.0) - 4.0, error: 0.0 }, false),
    ];
    let t_pole = half_dim_threshold(s, rho, zn, 2.0 * n * (p - 2.0) / (n * (p - 2.0) - 4.0))?;
    let aux = vec![Inequality::new("V2.pole_level_condition: coefficient 2N(p-2)/(N(p-2)-4)", norms.v_half_dim, t_pole, true)
        .with_note("condition under which the level stays below (N+2)/N m_rho; agrees with the half-dim bound when p = 2(N+1)/(N-1)")];
    Ok(AssumptionReport::finish("V2", rows, aux, notes, c))
}

/// lambda <= (2q + 8 min(1, 2/N) / (N(p-2) - 4)) m_rho / rho^2
pub fn multiplier_upper_bound(s: &ScalingParams, rho: f64) -> Result<f64> {
    let n = s.dim as f64;
    let p = s.power;
    Ok((2.0 * s.q() + 8.0 * theta(s.dim) / (n * (p - 2.0) - 4.0)) * s.m(rho)? / (rho * rho))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnergyBounds {
    /// m_rho + |V|_inf rho^2 / 2 for bounded V.
    pub bounded: Option<f64>,
    /// (N+2)/N m_rho under the pole-level condition.
    pub pole: Option<f64>,
}

impl EnergyBounds {
    /// Tightest applicable bound.
    pub fn best(&self) -> Option<f64> {
        match (self.bounded, self.pole) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

pub fn energy_upper_bounds(v: &PotentialSpec, rho: f64, s: &ScalingParams, z: Option<&Field>) -> Result<EnergyBounds> {
    let m = s.m(rho)?;
    if v.is_zero() {
        return Ok(EnergyBounds { bounded: Some(m), pole: Some(m) });
    }
    let norms = v.norms(s.dim)?;
    let bounded = norms.v_inf.value.is_finite().then(|| m + 0.5 * norms.v_inf.value * rho * rho);
    let pole = match z {
        Some(z) if s.dim >= 3 && norms.v_half_dim.value.is_finite() => {
            let n = s.dim as f64;
            let p = s.power;
            let zn = z_norm_2star(z)?;
            let t = half_dim_threshold(s, rho, zn, 2.0 * n * (p - 2.0) / (n * (p - 2.0) - 4.0))?;
            (norms.v_half_dim.value + norms.v_half_dim.error < t.value - t.error).then(|| (n + 2.0) / n * m)
        }
        _ => None,
    };
    if bounded.is_none() && pole.is_none() {
        return Err(Error::InvalidArgument("no energy upper bound applies to this potential".into()));
    }
    Ok(EnergyBounds { bounded, pole })
}
