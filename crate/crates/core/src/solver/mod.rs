//! Min-max solvers for normalized solutions.
//!
//! Both solvers minimize J(u) = max_{y,h} F((h * u)(. - y)) over the mass
//! sphere. The inner maximum runs over dilations (radial mode) or over
//! dilations and translations (linking mode), so the minimizer is a
//! saddle of F whose unstable directions are the frame directions.

mod descent;
mod frame;
mod morse;
mod newton;
mod precond;
mod seed;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

pub use morse::{morse_index_estimate, MorseEstimate};
pub use precond::Preconditioner;
pub use seed::{barycenter_sweep, choose_box, surface_max, ChainCell, LinkingBox, SeedSurface, SurfacePoint};

use crate::barycenter::barycenter;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::functionals::{identity_ledger, quadruple, DiagnosticQuadruple, IdentityLedger};
use crate::grid::{CartesianGrid, Grid, RadialGrid};
use crate::ground_state::{check_admissible, GroundState};
use crate::hypothesis::{energy_upper_bounds, multiplier_upper_bound};
use crate::potential::PotentialSpec;
use crate::scaling::{z_rho_on, ScalingParams, DEFAULT_DILATION_CAP};

use descent::{Engine, Outcome};
use frame::Frame;

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MassProjection {
    /// u <- rho u / |u|_2 after every step.
    Rescale,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveConfig {
    /// First trial step of the line search, in units of the preconditioned gradient.
    pub initial_step: f64,
    pub backtrack: f64,
    /// Largest step as a fraction of rho.
    pub max_step: f64,
    /// Target for |grad_S F| / (lambda_rho rho).
    pub tol: f64,
    pub max_iter: usize,
    /// Scaled residual at which the descent hands over to Newton polishing.
    pub descent_tol: f64,
    pub newton_max_iter: usize,
    pub mass_projection: MassProjection,
    /// Growth factor of the linking box per enlargement.
    pub box_growth: f64,
    pub h_cap: f64,
    /// Required gap between interior and boundary maxima of the seed.
    pub margin: f64,
    /// L-BFGS memory.
    pub memory: usize,
    pub radial_nodes: usize,
    /// Radial domain radius in units of the length scale of Z_rho.
    pub radial_extent: f64,
    /// Cartesian nodes per axis; defaults depend on N.
    pub shape: Option<Vec<usize>>,
    /// Cartesian half-width; defaults to 16, 12 or 8 length scales for N = 1, 2, 3.
    pub half_width: Option<f64>,
    /// Also solve the autonomous problem on the same grid for the energy window.
    pub reference: bool,
    /// Barycenter sampling period in linking mode.
    pub barycenter_every: usize,
    /// Lowest eigenvalues to inspect for a Morse estimate.
    pub morse_k: Option<usize>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            backtrack: 0.5,
            max_step: 0.5,
            tol: 1e-6,
            max_iter: 3000,
            descent_tol: 1e-4,
            newton_max_iter: 40,
            mass_projection: MassProjection::Rescale,
            box_growth: 2.0,
            h_cap: DEFAULT_DILATION_CAP,
            margin: 0.0,
            memory: 8,
            radial_nodes: 4096,
            radial_extent: 30.0,
            shape: None,
            half_width: None,
            reference: true,
            barycenter_every: 10,
            morse_k: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.initial_step, self.max_step, self.tol, self.descent_tol, self.box_growth, self.h_cap, self.radial_extent];
        if pos.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidArgument("solver step sizes, tolerance, growth, cap and extent must be positive".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidArgument(format!("backtracking factor {} must lie in (0, 1)", self.backtrack)));
        }
        if self.box_growth <= 1.0 {
            return Err(Error::InvalidArgument("box growth factor must exceed 1".into()));
        }
        if self.max_iter == 0 || self.memory == 0 || self.barycenter_every == 0 || self.radial_nodes < 8 {
            return Err(Error::InvalidArgument("iteration limits, memory and node counts must be positive".into()));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::InvalidArgument("margin must be non-negative".into()));
        }
        if let Some(w) = self.half_width {
            if !(w > 0.0) {
                return Err(Error::InvalidArgument("half-width must be positive".into()));
            }
        }
        Ok(())
    }

    fn cartesian_shape(&self, dim: usize) -> Vec<usize> {
        self.shape.clone().unwrap_or_else(|| match dim {
            1 => vec![1024],
            2 => vec![256, 256],
            _ => vec![96; dim],
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    /// Scaled residual |grad_S F| / (lambda_rho rho).
    pub residual: f64,
    pub lambda: f64,
    pub h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

impl Certificate {
    fn new(name: &str, value: f64, bound: f64, holds: bool) -> Self {
        Self { name: name.into(), value, bound, holds }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Levels {
    pub m_rho: f64,
    pub lambda_rho: f64,
    /// Autonomous level on the solver grid.
    pub m_rho_grid: Option<f64>,
    pub lambda_rho_grid: Option<f64>,
    /// Energy upper bound from the hypotheses, continuum and grid-shifted.
    pub upper: Option<f64>,
    pub upper_grid: Option<f64>,
    pub multiplier_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridSummary {
    pub kind: &'static str,
    pub shape: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl GridSummary {
    fn of(g: &Grid) -> Self {
        match g {
            Grid::Radial(r) => Self { kind: "radial", shape: vec![r.len()], lo: vec![0.0], hi: vec![r.r_max()] },
            Grid::Cartesian(c) => Self { kind: "cartesian", shape: c.shape().to_vec(), lo: c.lo().to_vec(), hi: c.hi().to_vec() },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub mode: &'static str,
    pub dim: usize,
    pub power: f64,
    pub rho: f64,
    pub potential: BTreeMap<&'static str, String>,
    /// Grid of the solution field, in physical coordinates.
    pub grid: GridSummary,
    pub converged: bool,
    /// Line search could not make progress before the target was met.
    pub stalled: bool,
    pub iterations: usize,
    pub energy: f64,
    pub lambda: f64,
    pub ps_residual: f64,
    pub ps_residual_scaled: f64,
    pub pohozaev_residual: f64,
    /// Pohozaev residual over m_rho.
    pub pohozaev_relative: f64,
    pub mass: f64,
    pub quadruple: DiagnosticQuadruple,
    pub ledger: IdentityLedger,
    /// Translation and dilation carrying the working field to the solution.
    pub frame_y: Vec<f64>,
    pub frame_h: f64,
    pub barycenter: Option<Vec<f64>>,
    /// Fraction of the mass within the linking radius of the barycenter.
    pub mass_in_ball: Option<f64>,
    pub mass_escape_suspected: bool,
    pub levels: Levels,
    pub certificates: Vec<Certificate>,
    pub certified: bool,
    pub linking_box: Option<LinkingBox>,
    pub seed: Option<SurfacePoint>,
    pub morse: Option<MorseEstimate>,
    /// Largest increase of the min-max objective between iterates.
    pub max_energy_rise: f64,
    pub notes: Vec<String>,
    pub trace: Vec<TraceRow>,
    #[serde(skip)]
    pub solution: Option<Field>,
}

impl SolveReport {
    pub fn solution(&self) -> &Field {
        self.solution.as_ref().expect("reports carry their solution")
    }
}

/// Slack for the energy window, relative to m_rho.
pub const WINDOW_SLACK: f64 = 1e-5;

fn physical_grid(grid: &Grid, s: &[f64]) -> Result<Grid> {
    let h = s[s.len() - 1];
    let e = (-h).exp();
    Ok(match grid {
        Grid::Radial(g) => Grid::Radial(g.scaled(e)?),
        Grid::Cartesian(g) => {
            let dim = g.dim();
            let y = |k: usize| if s.len() > dim { s[k] } else { 0.0 };
            let lo: Vec<f64> = (0..dim).map(|k| e * g.lo()[k] + y(k)).collect();
            let hi: Vec<f64> = (0..dim).map(|k| e * g.hi()[k] + y(k)).collect();
            Grid::Cartesian(CartesianGrid::new(g.shape(), &lo, &hi)?)
        }
    })
}

fn physical_field(grid: &Grid, u: &[f64], s: &[f64]) -> Result<Field> {
    let h = s[s.len() - 1];
    let amp = (0.5 * grid.dim() as f64 * h).exp();
    let pg = Arc::new(physical_grid(grid, s)?);
    Field::new(pg, u.iter().map(|x| amp * x).collect())
}

fn barycenter_if_resolved(f: &Field) -> Option<Vec<f64>> {
    match &**f.grid() {
        Grid::Cartesian(g) if g.spacing().iter().all(|d| *d <= 0.25) => barycenter(f).ok(),
        _ => None,
    }
}

struct Minimum {
    outcome: Outcome,
    trace: Vec<TraceRow>,
    escape: bool,
    /// Polished solution on the physical grid.
    u: Field,
    v: Field,
    lambda: f64,
    residual: f64,
    converged: bool,
    newton_iterations: usize,
}

#[allow(clippy::too_many_arguments)]
fn minimize(grid: &Arc<Grid>, v: &PotentialSpec, sp: &ScalingParams, rho: f64, cfg: &SolveConfig, u0: Vec<f64>, s0: Vec<f64>, translations: bool, escape_radius: f64) -> Result<Minimum> {
    let frame = Frame::new(grid, v, sp.power, translations);
    let mut s = s0;
    s.resize(frame.params(), 0.0);
    let lambda_rho = sp.lambda(rho)?;
    let sigma_floor = 0.25 * lambda_rho;
    let mut engine = Engine::new(grid.clone(), frame, rho, sp.power, cfg.h_cap, sigma_floor);
    let scale = lambda_rho * rho;
    let tol_abs = cfg.tol * scale;
    let mut trace = Vec::new();
    let mut last_beta: Option<f64> = None;
    let mut run = 0usize;
    let mut escape = false;
    let sample_beta = !grid.is_radial();
    let outcome = engine.run(u0, s, cfg, cfg.tol.max(cfg.descent_tol) * scale, |it, pt, _| {
        let h = pt.s[pt.s.len() - 1];
        let beta = if sample_beta && it % cfg.barycenter_every == 0 {
            barycenter_if_resolved(&physical_field(grid, &pt.u, &pt.s)?)
        } else {
            None
        };
        if let Some(b) = &beta {
            let r = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            let growing = last_beta.map_or(false, |l| r > l);
            run = if r > escape_radius && growing { run + cfg.barycenter_every } else { 0 };
            escape |= run >= 50;
            last_beta = Some(r);
        }
        trace.push(TraceRow { iter: it, energy: pt.j, residual: pt.residual / scale, lambda: pt.lambda, h, beta });
        Ok(())
    })?;
    let pt = &outcome.point;
    let h = pt.s[pt.s.len() - 1];
    let start = physical_field(grid, &pt.u, &pt.s)?;
    let vf = v.sample(start.grid())?;
    let nw = newton::polish(&start, &vf, sp.power, rho, sigma_floor, tol_abs, cfg.newton_max_iter)?;
    for (i, (e, r, l)) in nw.history.iter().enumerate().skip(1) {
        trace.push(TraceRow { iter: outcome.iterations + i, energy: *e, residual: r / scale, lambda: *l, h, beta: None });
    }
    Ok(Minimum {
        trace,
        escape,
        lambda: nw.lambda,
        residual: nw.residual,
        converged: nw.converged,
        newton_iterations: nw.iterations,
        u: nw.u,
        v: vf,
        outcome,
    })
}

struct Problem<'a> {
    gs: &'a GroundState,
    v: &'a PotentialSpec,
    rho: f64,
    cfg: &'a SolveConfig,
    sp: ScalingParams,
    grid: Arc<Grid>,
    translations: bool,
    mode: &'static str,
    linking_box: Option<LinkingBox>,
    seed: Option<SurfacePoint>,
    s0: Vec<f64>,
    notes: Vec<String>,
}

fn finish(pb: Problem) -> Result<SolveReport> {
    let Problem { gs, v, rho, cfg, sp, grid, translations, mode, linking_box, seed, s0, mut notes } = pb;
    let dim = sp.dim;
    let p = sp.power;
    let m_rho = sp.m(rho)?;
    let lambda_rho = sp.lambda(rho)?;
    let u0 = z_rho_on(gs, rho, &grid)?.into_values();
    let escape_radius = linking_box.as_ref().map_or(f64::INFINITY, |b| b.radius);
    let main = minimize(&grid, v, &sp, rho, cfg, u0.clone(), s0, translations, escape_radius)?;
    let pt = &main.outcome.point;
    let u = main.u.clone();
    let vf = main.v.clone();
    let q = quadruple(&u, &vf, p)?;
    let (_, ledger) = identity_ledger(&u, &vf, p)?;
    let energy = q.energy(p);
    let mass = u.grid().weights().iter().zip(u.values()).map(|(w, x)| w * x * x).sum::<f64>();
    let lambda = q.multiplier(mass);
    let poh = q.pohozaev(dim, p);
    let converged = main.converged && ((mass.sqrt() - rho).abs() <= 1e-8 * rho);

    let (m_grid, l_grid) = if v.is_zero() {
        (Some(energy), Some(lambda))
    } else if cfg.reference {
        let zero = PotentialSpec::Zero;
        let r = minimize(&grid, &zero, &sp, rho, cfg, u0, vec![0.0], false, f64::INFINITY)?;
        if !r.converged {
            notes.push("autonomous reference solve did not reach the residual target".into());
        }
        let e = crate::functionals::energy_inf(&r.u, p)?;
        (Some(e), Some(r.lambda))
    } else {
        (None, None)
    };
    let m_ref = m_grid.unwrap_or(m_rho);
    let mult_bound = multiplier_upper_bound(&sp, rho)?;
    let (upper, upper_grid) = if v.is_zero() {
        (Some(m_rho), Some(m_ref))
    } else {
        match energy_upper_bounds(v, rho, &sp, Some(seed_profile(gs, rho)?.as_ref())) {
            Ok(b) => {
                let shift = |x: f64| if Some(x) == b.pole { x * m_ref / m_rho } else { x - m_rho + m_ref };
                let grid_best = match (b.bounded.map(shift), b.pole.map(shift)) {
                    (Some(a), Some(c)) => Some(a.min(c)),
                    (a, c) => a.or(c),
                };
                (b.best(), grid_best)
            }
            Err(_) => {
                notes.push("no energy upper bound applies to this potential".into());
                (None, None)
            }
        }
    };
    let slack = WINDOW_SLACK * m_rho;
    let mut certs = vec![Certificate::new("lambda_positive", lambda, 0.0, lambda > 0.0)];
    if v.is_zero() {
        certs.push(Certificate::new("energy_matches_m_rho", (energy - m_rho).abs(), 1e-3 * m_rho, (energy - m_rho).abs() <= 1e-3 * m_rho));
        certs.push(Certificate::new(
            "lambda_matches_lambda_rho",
            (lambda - lambda_rho).abs(),
            1e-2 * lambda_rho,
            (lambda - lambda_rho).abs() <= 1e-2 * lambda_rho,
        ));
    } else {
        certs.push(Certificate::new("energy_above_m_rho", energy, m_ref - slack, energy > m_ref - slack));
        if let Some(ub) = upper_grid {
            certs.push(Certificate::new("energy_below_upper_bound", energy, ub + slack, energy <= ub + slack));
        }
    }
    certs.push(Certificate::new("multiplier_bound", lambda, mult_bound, lambda <= mult_bound));
    certs.push(Certificate::new("pohozaev", poh.abs(), 1e-4 * m_rho, poh.abs() <= 1e-4 * m_rho));
    let certified = converged && certs.iter().all(|c| c.holds);

    let beta = barycenter_if_resolved(&u);
    if !grid.is_radial() && beta.is_none() {
        notes.push("barycenter skipped: solution grid spacing exceeds 0.25".into());
    }
    let mass_in_ball = beta.as_ref().map(|b| {
        let r = linking_box.as_ref().map_or(10.0 * sp.mu(rho).unwrap_or(1.0), |x| x.radius);
        let mut x = vec![0.0; dim];
        let w = u.grid().weights();
        let mut inside = 0.0;
        for i in 0..u.len() {
            u.grid().point(i, &mut x);
            let d2: f64 = x.iter().zip(b).map(|(a, c)| (a - c).powi(2)).sum();
            if d2 <= r * r {
                inside += w[i] * u.values()[i].powi(2);
            }
        }
        inside / mass
    });
    if main.outcome.stalled {
        notes.push("descent line search stalled; Newton polishing took over".into());
    }
    if main.escape {
        notes.push("mass escape suspected: barycenter drifting outward".into());
    }
    let morse = match cfg.morse_k {
        Some(k) => Some(morse_index_estimate(&u, &vf, p, lambda, k)?),
        None => None,
    };
    let ps = main.residual;
    let ny = pt.s.len() - 1;
    Ok(SolveReport {
        mode,
        dim,
        power: p,
        rho,
        potential: v.describe(),
        grid: GridSummary::of(u.grid()),
        converged,
        stalled: main.outcome.stalled,
        iterations: main.outcome.iterations + main.newton_iterations,
        energy,
        lambda,
        ps_residual: ps,
        ps_residual_scaled: ps / (lambda_rho * rho),
        pohozaev_residual: poh,
        pohozaev_relative: poh / m_rho,
        mass: mass.sqrt(),
        quadruple: q,
        ledger,
        frame_y: if ny > 0 { pt.s[..ny].to_vec() } else { vec![0.0; if grid.is_radial() { 0 } else { dim }] },
        frame_h: pt.s[ny],
        barycenter: beta,
        mass_in_ball,
        mass_escape_suspected: main.escape,
        levels: Levels { m_rho, lambda_rho, m_rho_grid: m_grid, lambda_rho_grid: l_grid, upper, upper_grid, multiplier_bound: mult_bound },
        certificates: certs,
        certified,
        linking_box,
        seed,
        morse,
        max_energy_rise: main.outcome.max_rise,
        notes,
        trace: main.trace,
        solution: Some(u),
    })
}

fn seed_profile(gs: &GroundState, rho: f64) -> Result<Box<Field>> {
    Ok(Box::new(crate::scaling::make_z_rho(gs, rho)?))
}

fn check_inputs(gs: &GroundState, v: &PotentialSpec, rho: f64, cfg: &SolveConfig) -> Result<ScalingParams> {
    check_admissible(gs.dim(), gs.power())?;
    cfg.validate()?;
    v.validate()?;
    v.check_dim(gs.dim())?;
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::InvalidArgument(format!("mass {rho} must be positive")));
    }
    Ok(ScalingParams::from_ground_state(gs))
}

/// Radial solve: dilations only, V radial about the origin.
pub fn radial_mountain_pass(gs: &GroundState, v: &PotentialSpec, rho: f64, cfg: &SolveConfig) -> Result<SolveReport> {
    let sp = check_inputs(gs, v, rho, cfg)?;
    if !v.is_radial_about_origin() {
        return Err(Error::InvalidArgument("radial solve needs a potential centered at the origin".into()));
    }
    let mu = sp.mu(rho)?;
    let m_rho = sp.m(rho)?;
    let seed = SeedSurface::new(gs, rho)?;
    // path endpoints h1 * Z_rho, h2 * Z_rho below m_rho
    let mut notes = Vec::new();
    let (mut h1, mut h2) = (-1.0f64, 1.0f64);
    loop {
        let ends = seed.energy(v, &[], h1).max(seed.energy(v, &[], h2));
        if ends < m_rho {
            notes.push(format!("path endpoints h = {h1}, {h2} lie below m_rho ({ends:.6e} < {m_rho:.6e})"));
            break;
        }
        if h1 <= -cfg.h_cap && h2 >= cfg.h_cap {
            return Err(Error::DilationCap { h: h1, cap: cfg.h_cap });
        }
        h1 = (h1 * cfg.box_growth).max(-cfg.h_cap);
        h2 = (h2 * cfg.box_growth).min(cfg.h_cap);
    }
    let grid = Arc::new(Grid::Radial(RadialGrid::new(gs.dim(), cfg.radial_extent * mu, cfg.radial_nodes)?));
    finish(Problem {
        gs,
        v,
        rho,
        cfg,
        sp,
        grid,
        translations: false,
        mode: "radial",
        linking_box: None,
        seed: None,
        s0: vec![0.0],
        notes,
    })
}

/// Cartesian solve with translations and dilations as the frame.
pub fn linking_solve(gs: &GroundState, v: &PotentialSpec, rho: f64, cfg: &SolveConfig) -> Result<SolveReport> {
    let sp = check_inputs(gs, v, rho, cfg)?;
    let dim = gs.dim();
    if dim > 3 {
        return Err(Error::InvalidArgument("Cartesian solves support N <= 3".into()));
    }
    let mu = sp.mu(rho)?;
    let half = cfg.half_width.unwrap_or(mu * [16.0, 12.0, 8.0][dim - 1]);
    let shape = cfg.cartesian_shape(dim);
    if shape.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: shape.len() });
    }
    let grid = Arc::new(Grid::Cartesian(CartesianGrid::new(&shape, &vec![-half; dim], &vec![half; dim])?));
    let seed = SeedSurface::new(gs, rho)?;
    let mut notes = Vec::new();
    let (linking_box, top, s0) = if v.is_zero() {
        notes.push("autonomous case: no linking certificate, translations are a symmetry".into());
        (None, None, vec![0.0])
    } else {
        let bx = choose_box_grown(&seed, v, cfg, half)?;
        let top = surface_max(&seed, &bx, v);
        let mut s0 = top.y.clone();
        s0.push(top.h);
        (Some(bx), Some(top), s0)
    };
    finish(Problem {
        gs,
        v,
        rho,
        cfg,
        sp,
        grid,
        translations: true,
        mode: "linking",
        linking_box,
        seed: top,
        s0,
        notes,
    })
}

fn choose_box_grown(seed: &SeedSurface, v: &PotentialSpec, cfg: &SolveConfig, capacity: f64) -> Result<LinkingBox> {
    seed::choose_box_with(seed, v, cfg.margin, capacity, cfg.h_cap, cfg.box_growth)
}
