//! External potentials: parametric families, sampling on grids, and the
//! Lebesgue norms of V and of W(x) = V(x)|x| used by the hypothesis checks.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{sphere_area, Grid};
use crate::interp::{Spline1d, StartCondition};
use crate::io::load_field;

/// Potentials are stored as their samples on a grid.
pub type PotentialField = Field;

#[derive(Clone, Debug)]
pub struct RadialSamples {
    pub r_max: f64,
    pub values: Vec<f64>,
    pub source: Option<PathBuf>,
    spline: Spline1d,
}

impl RadialSamples {
    pub fn new(r_max: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 4 || !(r_max > 0.0) {
            return Err(Error::InvalidArgument("sampled potential needs at least 4 samples".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let h = r_max / (values.len() - 1) as f64;
        let spline = Spline1d::new(0.0, h, &values, StartCondition::Even);
        Ok(Self { r_max, values, source: None, spline })
    }

    pub fn spacing(&self) -> f64 {
        self.r_max / (self.values.len() - 1) as f64
    }
}

#[derive(Clone, Debug)]
pub enum PotentialSpec {
    Zero,
    /// A exp(-|x-c|^2 / w^2)
    Gaussian { amplitude: f64, width: f64, center: Vec<f64> },
    /// A / (1 + (|x|/w)^s)
    PowerDecay { amplitude: f64, width: f64, decay: f64 },
    /// b |x-c|^{-alpha} exp(-|x-c|^2 / cutoff^2)
    Pole { amplitude: f64, alpha: f64, cutoff: f64, center: Vec<f64> },
    /// Radial samples on [0, r_max], spline-interpolated, zero beyond r_max.
    Sampled(RadialSamples),
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Norm {
    pub value: f64,
    /// Estimated absolute quadrature error, 0 for closed forms.
    pub error: f64,
}

impl Norm {
    fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PotentialNorms {
    pub v_inf: Norm,
    pub w_inf: Norm,
    pub v_half_dim: Norm,
    pub w_dim: Norm,
}

fn center_at(c: &[f64], k: usize) -> f64 {
    c.get(k).copied().unwrap_or(0.0)
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().enumerate().map(|(k, a)| (a - center_at(c, k)).powi(2)).sum()
}

// int_0^inf r^{k-1} exp(-a r^2) dr
fn gauss_moment(k: f64, a: f64) -> f64 {
    0.5 * gamma(k / 2.0) * a.powf(-k / 2.0)
}

fn beta_fn(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

impl PotentialSpec {
    pub fn family(&self) -> &'static str {
        match self {
            PotentialSpec::Zero => "zero",
            PotentialSpec::Gaussian { .. } => "gaussian",
            PotentialSpec::PowerDecay { .. } => "power",
            PotentialSpec::Pole { .. } => "pole",
            PotentialSpec::Sampled(_) => "sampled",
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PotentialSpec::Zero => true,
            PotentialSpec::Gaussian { amplitude, .. }
            | PotentialSpec::PowerDecay { amplitude, .. }
            | PotentialSpec::Pole { amplitude, .. } => *amplitude == 0.0,
            PotentialSpec::Sampled(s) => s.values.iter().all(|v| *v == 0.0),
        }
    }

    /// True when V is bounded.
    pub fn is_bounded(&self) -> bool {
        !matches!(self, PotentialSpec::Pole { amplitude, .. } if *amplitude != 0.0)
    }

    /// Center of symmetry.
    pub fn center(&self) -> Vec<f64> {
        match self {
            PotentialSpec::Gaussian { center, .. } | PotentialSpec::Pole { center, .. } => center.clone(),
            _ => Vec::new(),
        }
    }

    pub fn is_radial_about_origin(&self) -> bool {
        self.center().iter().all(|c| *c == 0.0)
    }

    /// Same family, amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        match &mut s {
            PotentialSpec::Zero => {}
            PotentialSpec::Gaussian { amplitude, .. }
            | PotentialSpec::PowerDecay { amplitude, .. }
            | PotentialSpec::Pole { amplitude, .. } => *amplitude *= factor,
            PotentialSpec::Sampled(r) => {
                let v: Vec<f64> = r.values.iter().map(|v| v * factor).collect();
                let src = r.source.clone();
                *r = RadialSamples::new(r.r_max, v).expect("scaling keeps samples finite");
                r.source = src;
            }
        }
        s
    }

    pub fn amplitude(&self) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Gaussian { amplitude, .. }
            | PotentialSpec::PowerDecay { amplitude, .. }
            | PotentialSpec::Pole { amplitude, .. } => *amplitude,
            PotentialSpec::Sampled(r) => r.values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Gaussian { amplitude, width, center } => {
                amplitude * (-dist2(x, center) / (width * width)).exp()
            }
            PotentialSpec::PowerDecay { amplitude, width, decay } => {
                let r = dist2(x, &[]).sqrt();
                amplitude / (1.0 + (r / width).powf(*decay))
            }
            PotentialSpec::Pole { amplitude, alpha, cutoff, center } => {
                let r2 = dist2(x, center);
                amplitude * r2.powf(-alpha / 2.0) * (-r2 / (cutoff * cutoff)).exp()
            }
            PotentialSpec::Sampled(s) => s.spline.eval(dist2(x, &[]).sqrt()),
        }
    }

    /// Value and gradient at x.
    pub fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        // radial profile f(r) about center c: grad = f'(r) (x-c)/r
        let (v, dv_over_r, c): (f64, f64, &[f64]) = match self {
            PotentialSpec::Zero => (0.0, 0.0, &[]),
            PotentialSpec::Gaussian { amplitude, width, center } => {
                let w2 = width * width;
                let v = amplitude * (-dist2(x, center) / w2).exp();
                (v, -2.0 * v / w2, center)
            }
            PotentialSpec::PowerDecay { amplitude, width, decay } => {
                let r = dist2(x, &[]).sqrt();
                let t = r / width;
                let ts = t.powf(*decay);
                let v = amplitude / (1.0 + ts);
                let d = if r > 0.0 { -amplitude * decay * ts / (r * (1.0 + ts).powi(2)) / r } else { 0.0 };
                (v, d, &[])
            }
            PotentialSpec::Pole { amplitude, alpha, cutoff, center } => {
                let r2 = dist2(x, center);
                let c2 = cutoff * cutoff;
                let v = amplitude * r2.powf(-alpha / 2.0) * (-r2 / c2).exp();
                (v, v * (-alpha / r2 - 2.0 / c2), center)
            }
            PotentialSpec::Sampled(s) => {
                let r = dist2(x, &[]).sqrt();
                let (v, dv) = s.spline.eval_deriv(r);
                (v, if r > 0.0 { dv / r } else { 0.0 }, &[])
            }
        };
        for (k, g) in grad.iter_mut().enumerate() {
            *g = dv_over_r * (x[k] - center_at(c, k));
        }
        v
    }

    /// Average of V over the box with the given center and half-widths.
    /// Only the pole family needs this; others return the point value.
    pub fn cell_average(&self, center: &[f64], half: &[f64]) -> f64 {
        match self {
            PotentialSpec::Pole { amplitude, alpha, cutoff, center: p } => {
                let rel: Vec<f64> = center.iter().enumerate().map(|(k, x)| x - center_at(p, k)).collect();
                let singular = power_box_average(&rel, half, *alpha);
                let c2 = cutoff * cutoff;
                let smooth = box_gauss(&rel, half, |y| {
                    let r2: f64 = y.iter().map(|a| a * a).sum();
                    if r2 == 0.0 {
                        0.0
                    } else {
                        r2.powf(-alpha / 2.0) * ((-r2 / c2).exp() - 1.0)
                    }
                });
                amplitude * (singular + smooth)
            }
            _ => self.value(center),
        }
    }

    /// Shell average of V over r in [a, b] with weight r^{N-1}.
    pub fn shell_average(&self, dim: usize, a: f64, b: f64) -> f64 {
        let n = dim as f64;
        match self {
            PotentialSpec::Pole { amplitude, alpha, cutoff, .. } => {
                let k = n - alpha;
                let pure = (n / k) * (b.powf(k) - a.powf(k)) / (b.powf(n) - a.powf(n));
                let c2 = cutoff * cutoff;
                let (gx, gw) = GL8;
                let mut s = 0.0;
                let mut m = 0.0;
                for (t, w) in gx.iter().zip(gw) {
                    let r = a + (b - a) * 0.5 * (1.0 + t);
                    let wr = w * r.powf(n - 1.0);
                    s += wr * r.powf(-alpha) * ((-r * r / c2).exp() - 1.0);
                    m += wr;
                }
                amplitude * (pure + s / m)
            }
            _ => self.value(&[0.5 * (a + b)]),
        }
    }

    /// Samples on a grid. Nodes whose cell touches the pole get cell averages.
    pub fn sample(&self, grid: &std::sync::Arc<Grid>) -> Result<PotentialField> {
        let dim = grid.dim();
        let mut values = vec![0.0; grid.len()];
        let mut x = vec![0.0; dim];
        match &**grid {
            Grid::Radial(g) => {
                if !self.is_radial_about_origin() {
                    return Err(Error::InvalidArgument("radial grids need a potential centered at the origin".into()));
                }
                let h = g.spacing();
                for (i, v) in values.iter_mut().enumerate() {
                    grid.point(i, &mut x);
                    *v = if i == 0 && !self.is_bounded() { self.shell_average(dim, 0.0, 0.5 * h) } else { self.value(&x) };
                }
            }
            Grid::Cartesian(g) => {
                let half: Vec<f64> = g.spacing().iter().map(|d| 0.5 * d).collect();
                let pole = if self.is_bounded() { None } else { Some(self.center()) };
                for (i, v) in values.iter_mut().enumerate() {
                    grid.point(i, &mut x);
                    *v = match &pole {
                        Some(p) if near_pole(&x, p, g.spacing()) => self.cell_average(&x, &half),
                        _ => self.value(&x),
                    };
                }
            }
        }
        Field::new(grid.clone(), values)
    }

    pub fn norms(&self, dim: usize) -> Result<PotentialNorms> {
        let n = dim as f64;
        let area = sphere_area(dim);
        let inf = Norm::exact(f64::INFINITY);
        match self {
            PotentialSpec::Zero => {
                let z = Norm::exact(0.0);
                Ok(PotentialNorms { v_inf: z, w_inf: z, v_half_dim: z, w_dim: z })
            }
            PotentialSpec::Gaussian { amplitude, width, center } => {
                let a = amplitude.abs();
                let w = *width;
                let c = center.iter().map(|x| x * x).sum::<f64>().sqrt();
                let s = 0.5 * (c + (c * c + 2.0 * w * w).sqrt());
                let w_inf = a * s * (-(s - c).powi(2) / (w * w)).exp();
                let v_half = a * 2.0 * PI * w * w / n;
                let w_dim = if c == 0.0 {
                    Norm::exact(a * (area * gauss_moment(2.0 * n, n / (w * w))).powf(1.0 / n))
                } else {
                    offcenter_w_norm(dim, a, w, c)
                };
                Ok(PotentialNorms { v_inf: Norm::exact(a), w_inf: Norm::exact(w_inf), v_half_dim: Norm::exact(v_half), w_dim })
            }
            PotentialSpec::PowerDecay { amplitude, width, decay } => {
                let a = amplitude.abs();
                let (w, s) = (*width, *decay);
                let w_inf = if s > 1.0 {
                    let t = (1.0 / (s - 1.0)).powf(1.0 / s);
                    a * w * t * (s - 1.0) / s
                } else {
                    f64::INFINITY
                };
                let (v_half, w_dim) = if s > 2.0 {
                    let iv = area * w.powf(n) * beta_fn(n / s, n / 2.0 - n / s) / s;
                    let iw = area * w.powf(2.0 * n) * beta_fn(2.0 * n / s, n - 2.0 * n / s) / s;
                    (a * iv.powf(2.0 / n), a * iw.powf(1.0 / n))
                } else {
                    (f64::INFINITY, f64::INFINITY)
                };
                Ok(PotentialNorms {
                    v_inf: Norm::exact(a),
                    w_inf: Norm::exact(w_inf),
                    v_half_dim: Norm::exact(v_half),
                    w_dim: Norm::exact(w_dim),
                })
            }
            PotentialSpec::Pole { amplitude, alpha, cutoff, center } => {
                if center.iter().any(|c| *c != 0.0) {
                    return Err(Error::InvalidArgument("pole norms need the pole at the origin".into()));
                }
                let b = amplitude.abs();
                let (al, rc) = (*alpha, *cutoff);
                if !(al > 0.0 && al < 2.0) {
                    return Err(Error::InvalidArgument(format!("pole exponent {al} outside (0, 2)")));
                }
                let c2 = rc * rc;
                let v_half = b * (area * gauss_moment(n - al * n / 2.0, n / (2.0 * c2))).powf(2.0 / n);
                let w_dim = b * (area * gauss_moment(n * (2.0 - al), n / c2)).powf(1.0 / n);
                let w_inf = if al < 1.0 {
                    let r = rc * ((1.0 - al) / 2.0).sqrt();
                    b * r.powf(1.0 - al) * (-r * r / c2).exp()
                } else if al == 1.0 {
                    b
                } else {
                    f64::INFINITY
                };
                Ok(PotentialNorms { v_inf: inf, w_inf: Norm::exact(w_inf), v_half_dim: Norm::exact(v_half), w_dim: Norm::exact(w_dim) })
            }
            PotentialSpec::Sampled(s) => Ok(sampled_norms(s, dim)),
        }
    }

    pub fn describe(&self) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        m.insert("family", self.family().to_string());
        let join = |c: &[f64]| c.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        match self {
            PotentialSpec::Zero => {}
            PotentialSpec::Gaussian { amplitude, width, center } => {
                m.insert("amplitude", amplitude.to_string());
                m.insert("width", width.to_string());
                m.insert("center", join(center));
            }
            PotentialSpec::PowerDecay { amplitude, width, decay } => {
                m.insert("amplitude", amplitude.to_string());
                m.insert("width", width.to_string());
                m.insert("decay", decay.to_string());
            }
            PotentialSpec::Pole { amplitude, alpha, cutoff, center } => {
                m.insert("amplitude", amplitude.to_string());
                m.insert("alpha", alpha.to_string());
                m.insert("cutoff", cutoff.to_string());
                m.insert("center", join(center));
            }
            PotentialSpec::Sampled(s) => {
                if let Some(p) = &s.source {
                    m.insert("samples", p.display().to_string());
                }
            }
        }
        m
    }

    /// Parse `key = value` lines (or `key=value` items separated by commas
    /// or semicolons). Relative `samples` paths resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        const KEYS: [&str; 8] = ["family", "amplitude", "width", "decay", "alpha", "cutoff", "center", "samples"];
        let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            // pieces without a key continue the previous value, as in center = 1,0
            let mut items: Vec<String> = Vec::new();
            for piece in line.split([';', ',']) {
                match items.last_mut() {
                    Some(last) if !piece.contains('=') && !piece.contains(':') => {
                        last.push(',');
                        last.push_str(piece);
                    }
                    _ => items.push(piece.to_string()),
                }
            }
            for item in items.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
                let (k, v) = item
                    .split_once('=')
                    .or_else(|| item.split_once(':'))
                    .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected key = value, got {item:?}") })?;
                let k = k.trim().to_ascii_lowercase();
                if !KEYS.contains(&k.as_str()) {
                    return Err(Error::Parse { line: i + 1, msg: format!("unknown potential key {k:?}") });
                }
                kv.insert(k, (i + 1, v.trim().to_string()));
            }
        }
        let num = |key: &str, default: Option<f64>| -> Result<f64> {
            match kv.get(key) {
                Some((line, v)) => v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::Parse { line: *line, msg: format!("bad value for {key}: {v:?}") }),
                None => default.ok_or_else(|| Error::Parse { line: 0, msg: format!("missing key {key}") }),
            }
        };
        let center = match kv.get("center") {
            Some((line, v)) => v
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|_| Error::Parse { line: *line, msg: format!("bad center {v:?}") }))
                .collect::<Result<Vec<f64>>>()?,
            None => Vec::new(),
        };
        let family = kv.get("family").map(|(_, v)| v.to_ascii_lowercase()).unwrap_or_else(|| "zero".into());
        let spec = match family.as_str() {
            "zero" | "none" => PotentialSpec::Zero,
            "gaussian" => PotentialSpec::Gaussian { amplitude: num("amplitude", None)?, width: num("width", Some(1.0))?, center },
            "power" | "power-decay" | "decay" => PotentialSpec::PowerDecay {
                amplitude: num("amplitude", None)?,
                width: num("width", Some(1.0))?,
                decay: num("decay", None)?,
            },
            "pole" => {
                let cutoff = match kv.get("cutoff") {
                    Some(_) => num("cutoff", None)?,
                    None => num("width", Some(1.0))?,
                };
                PotentialSpec::Pole { amplitude: num("amplitude", None)?, alpha: num("alpha", None)?, cutoff, center }
            }
            "sampled" => {
                let (_, p) = kv.get("samples").ok_or_else(|| Error::Parse { line: 0, msg: "sampled family needs samples = <field file>".into() })?;
                let mut path = PathBuf::from(p);
                if path.is_relative() {
                    if let Some(b) = base {
                        path = b.join(path);
                    }
                }
                let f = load_field(&path)?;
                let r_max = match &**f.grid() {
                    Grid::Radial(g) => g.r_max(),
                    Grid::Cartesian(_) => return Err(Error::InvalidArgument("sampled potentials must be radial fields".into())),
                };
                let mut s = RadialSamples::new(r_max, f.into_values())?;
                s.source = Some(path);
                PotentialSpec::Sampled(s)
            }
            other => return Err(Error::Parse { line: kv.get("family").map(|x| x.0).unwrap_or(0), msg: format!("unknown family {other:?}") }),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match self {
            PotentialSpec::Gaussian { width, .. } if !(*width > 0.0) => bad(format!("width {width} must be positive")),
            PotentialSpec::PowerDecay { width, decay, .. } if !(*width > 0.0 && *decay > 0.0) => {
                bad("power-decay width and decay must be positive".into())
            }
            PotentialSpec::Pole { alpha, cutoff, .. } if !(*alpha > 0.0 && *alpha < 2.0 && *cutoff > 0.0) => {
                bad(format!("pole needs 0 < alpha < 2 and a positive cutoff, got alpha {alpha}, cutoff {cutoff}"))
            }
            _ => Ok(()),
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        let c = self.center();
        if c.len() > dim {
            return Err(Error::DimensionMismatch { expected: dim, got: c.len() });
        }
        if let PotentialSpec::Pole { alpha, .. } = self {
            // V in L^{N/2} and W in L^N near the pole
            if !(alpha * dim as f64 / 2.0 < dim as f64) {
                return Err(Error::InvalidArgument("pole too strong for this dimension".into()));
            }
        }
        Ok(())
    }
}

fn near_pole(x: &[f64], p: &[f64], dx: &[f64]) -> bool {
    x.iter().enumerate().all(|(k, a)| (a - center_at(p, k)).abs() <= 2.0 * dx[k])
}

// Gauss-Legendre nodes and weights on [-1, 1]
const GL4: ([f64; 4], [f64; 4]) = (
    [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6],
    [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9],
);
pub(crate) const GL8: ([f64; 8], [f64; 8]) = (
    [
        -0.960_289_856_497_536_3,
        -0.796_666_477_413_626_7,
        -0.525_532_409_916_329_0,
        -0.183_434_642_495_649_8,
        0.183_434_642_495_649_8,
        0.525_532_409_916_329_0,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ],
    [
        0.101_228_536_290_376_3,
        0.222_381_034_453_374_5,
        0.313_706_645_877_887_3,
        0.362_683_783_378_362_0,
        0.362_683_783_378_362_0,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ],
);

// Composite 4-point Gauss rule with `sub` panels per axis over a box of
// dimension d = center.len(); returns the average of f.
fn box_rule(center: &[f64], half: &[f64], sub: usize, f: &mut dyn FnMut(&[f64]) -> f64) -> f64 {
    let d = center.len();
    if d == 0 {
        return f(&[]);
    }
    let (gx, gw) = GL4;
    let per = 4 * sub;
    let mut idx = vec![0usize; d];
    let mut y = vec![0.0; d];
    let total = per.pow(d as u32);
    let mut s = 0.0;
    for _ in 0..total {
        let mut w = 1.0;
        for k in 0..d {
            let panel = idx[k] / 4;
            let g = idx[k] % 4;
            let a = center[k] - half[k] + 2.0 * half[k] * panel as f64 / sub as f64;
            let hpanel = half[k] / sub as f64;
            y[k] = a + hpanel * (1.0 + gx[g]);
            w *= gw[g] * 0.5 / sub as f64;
        }
        s += w * f(&y);
        for k in 0..d {
            idx[k] += 1;
            if idx[k] < per {
                break;
            }
            idx[k] = 0;
        }
    }
    s
}

fn box_gauss(center: &[f64], half: &[f64], f: impl Fn(&[f64]) -> f64) -> f64 {
    box_rule(center, half, 2, &mut |y| f(y))
}

/// Average of |y|^{-alpha} over the box center +- half (pole at the origin),
/// through the divergence theorem: div(y |y|^{-alpha}) = (d - alpha)|y|^{-alpha}.
pub fn power_box_average(center: &[f64], half: &[f64], alpha: f64) -> f64 {
    let d = center.len();
    let vol: f64 = half.iter().map(|h| 2.0 * h).product();
    let mut flux = 0.0;
    for k in 0..d {
        for sign in [-1.0, 1.0] {
            let a = center[k] + sign * half[k];
            if a == 0.0 {
                continue;
            }
            let fc: Vec<f64> = (0..d).filter(|&j| j != k).map(|j| center[j]).collect();
            let fh: Vec<f64> = (0..d).filter(|&j| j != k).map(|j| half[j]).collect();
            let area: f64 = fh.iter().map(|h| 2.0 * h).product();
            let avg = box_rule(&fc, &fh, 4, &mut |y| {
                let r2 = a * a + y.iter().map(|t| t * t).sum::<f64>();
                r2.powf(-alpha / 2.0)
            });
            flux += sign * a * area * avg;
        }
    }
    flux / ((d as f64 - alpha) * vol)
}

// |W|_N for an off-center Gaussian by axisymmetric quadrature, error from
// comparing two resolutions.
fn offcenter_w_norm(dim: usize, a: f64, w: f64, c: f64) -> Norm {
    let n = dim as f64;
    let integral = |m: usize| -> f64 {
        let r_hi = c + 12.0 * w;
        let h = r_hi / m as f64;
        let mut s = 0.0;
        for i in 1..=m {
            let r = i as f64 * h;
            let wt = if i == m { 0.5 } else { 1.0 };
            // angular integral of exp(-N |x - c|^2 / w^2) over the sphere of radius r
            let base = (-n * (r - c).powi(2) / (w * w)).exp();
            let z = 2.0 * n * r * c / (w * w);
            let ang = match dim {
                1 => 1.0 + (-2.0 * z).exp(),
                2 => {
                    let k = 256;
                    let mut t = 0.0;
                    for j in 0..k {
                        let phi = 2.0 * PI * j as f64 / k as f64;
                        t += (z * (phi.cos() - 1.0)).exp();
                    }
                    2.0 * PI * t / k as f64
                }
                _ => {
                    let surf = sphere_area(dim - 1);
                    // int_{-1}^{1} e^{z(t-1)} (1-t^2)^{(N-3)/2} dt
                    let (gx, gw) = GL8;
                    let mut t = 0.0;
                    let panels = 16;
                    for p in 0..panels {
                        let lo = -1.0 + 2.0 * p as f64 / panels as f64;
                        let hw = 1.0 / panels as f64;
                        for (x, wg) in gx.iter().zip(gw) {
                            let tt = lo + hw * (1.0 + x);
                            t += wg * hw * (z * (tt - 1.0)).exp() * (1.0 - tt * tt).powf((n - 3.0) / 2.0);
                        }
                    }
                    surf * t
                }
            };
            s += wt * h * r.powf(2.0 * n - 1.0) * base * ang;
        }
        s
    };
    let fine = integral(4000);
    let coarse = integral(2000);
    let v = a * fine.powf(1.0 / n);
    let err = (v - a * coarse.powf(1.0 / n)).abs();
    Norm { value: v, error: err }
}

fn sampled_norms(s: &RadialSamples, dim: usize) -> PotentialNorms {
    let n = dim as f64;
    let area = sphere_area(dim);
    let h = s.spacing();
    let quad = |f: &dyn Fn(f64, f64) -> f64, stride: usize| -> f64 {
        let m = s.values.len() - 1;
        let mut acc = 0.0;
        let mut i = 0;
        while i <= m {
            let r = i as f64 * h;
            let wt = if i == 0 || i + stride > m { 0.5 } else { 1.0 };
            acc += wt * f(r, s.values[i]) * r.powf(n - 1.0);
            i += stride;
        }
        acc * h * stride as f64 * area
    };
    let v_inf = s.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let w_inf = s.values.iter().enumerate().fold(0.0f64, |m, (i, v)| m.max(v.abs() * i as f64 * h));
    let jump = |g: &dyn Fn(usize) -> f64| {
        (1..s.values.len()).fold(0.0f64, |m, i| m.max((g(i) - g(i - 1)).abs())) * 0.5
    };
    let fv = |_r: f64, v: f64| v.abs().powf(n / 2.0);
    let fw = |r: f64, v: f64| (v.abs() * r).powf(n);
    let (v1, v2) = (quad(&fv, 1), quad(&fv, 2));
    let (w1, w2) = (quad(&fw, 1), quad(&fw, 2));
    let vn = v1.powf(2.0 / n);
    let wn = w1.powf(1.0 / n);
    PotentialNorms {
        v_inf: Norm { value: v_inf, error: jump(&|i| s.values[i].abs()) },
        w_inf: Norm { value: w_inf, error: jump(&|i| s.values[i].abs() * i as f64 * h) },
        v_half_dim: Norm { value: vn, error: (vn - v2.powf(2.0 / n)).abs() },
        w_dim: Norm { value: wn, error: (wn - w2.powf(1.0 / n)).abs() },
    }
}

/// W(x) = V(x)|x| sampled alongside V.
pub fn weight_field(v: &PotentialField) -> Field {
    let g = v.grid();
    let vals = v.values().iter().enumerate().map(|(i, x)| x * g.radius(i)).collect();
    v.with_values(vals).expect("finite times finite")
}
