//! `normsol` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 the run finished but a
//! certificate or assumption check failed.

mod field_json;
mod settings;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use normsol::functionals::{identity_ledger, projected_gradient};
use normsol::ground_state::{check_admissible, solve_ground_state, GroundState, GroundStateConfig};
use normsol::hypothesis::{check_v1, check_v2, AssumptionReport};
use normsol::io::{parse_field, save_field};
use normsol::potential::PotentialSpec;
use normsol::scaling::{make_z_rho, ScalingParams};
use normsol::solver::{linking_solve, radial_mountain_pass, SolveConfig, SolveReport};
use normsol::Field;

use field_json::FieldJson;
use settings::{parse_list, Settings};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "normsol", version, about = "Normalized solutions of -Δu + V u + λ u = |u|^{p-2} u with |u|_2 = ρ")]
#[command(after_help = "Config file keys (flat `key = value`, flags override): dim, power, rho, tol, max-iter, descent-tol, \
potential, out, solution, trace, nodes, extent, shape, half-width, morse-k, reference, assumption.\n\
Potential specs are files or inline text such as `family=gaussian,amplitude=0.08,width=1`; \
keys: family (zero, gaussian, power, pole, sampled), amplitude, width, decay, alpha, cutoff, center, samples.")]
struct Cli {
    /// Key-value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Problem {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    power: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Ground state profile U and its level.
    GroundState {
        #[command(flatten)]
        pb: Problem,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        nodes: Option<usize>,
        /// Radius of the shooting domain.
        #[arg(long)]
        extent: Option<f64>,
        /// Profile file; a JSON summary is written next to it with `.json` appended.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scaled quantities mu, lambda_rho, m_rho and q as CSV.
    ScalingTable {
        #[command(flatten)]
        pb: Problem,
        /// Comma-separated masses.
        #[arg(long)]
        rho: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the potential hypotheses.
    Check {
        #[command(flatten)]
        pb: Problem,
        #[arg(long)]
        potential: Option<String>,
        #[arg(long)]
        rho: Option<f64>,
        /// v1, v2 or auto (v1 for bounded potentials).
        #[arg(long)]
        assumption: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Radial min-max solve.
    SolveRadial(SolveArgs),
    /// Cartesian linking solve.
    Solve(SolveArgs),
    /// Quadruple, identities and residuals of a stored field.
    Verify {
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        potential: Option<String>,
        #[arg(long)]
        power: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert a field between the text, JSON and CSV formats.
    Export {
        /// Field file in text or JSON form.
        #[arg(long)]
        input: PathBuf,
        /// field, json or csv.
        #[arg(long, default_value = "field")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    pb: Problem,
    #[arg(long)]
    potential: Option<String>,
    /// Mass; defaults to the ground state mass.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    descent_tol: Option<f64>,
    /// Radial nodes.
    #[arg(long)]
    nodes: Option<usize>,
    /// Radial domain in length scales of Z_rho.
    #[arg(long)]
    extent: Option<f64>,
    /// Cartesian nodes per axis, comma separated.
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    morse_k: Option<usize>,
    /// Skip the autonomous reference solve.
    #[arg(long)]
    no_reference: bool,
    /// Report JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solution field; defaults to the report path with extension `field`.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Per-iteration CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

enum Outcome {
    Ok,
    CertificateFailure,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CertificateFailure) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let cfg = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::GroundState { pb, tol, nodes, extent, out } => ground_state(&cfg, pb, tol, nodes, extent, out),
        Command::ScalingTable { pb, rho, out } => scaling_table(&cfg, pb, rho, out),
        Command::Check { pb, potential, rho, assumption, out } => check(&cfg, pb, potential, rho, assumption, out),
        Command::SolveRadial(a) => solve(&cfg, a, true),
        Command::Solve(a) => solve(&cfg, a, false),
        Command::Verify { solution, potential, power, out } => verify(&cfg, solution, potential, power, out),
        Command::Export { input, format, out } => export(&input, &format, out),
    }
}

fn problem(cfg: &Settings, pb: &Problem) -> Result<(usize, f64)> {
    let dim: usize = cfg.require("dim", pb.dim)?;
    let power: f64 = cfg.require("power", pb.power)?;
    check_admissible(dim, power)?;
    Ok((dim, power))
}

fn ground(dim: usize, power: f64) -> Result<GroundState> {
    Ok(solve_ground_state(dim, power, &GroundStateConfig::default())?)
}

fn potential(cfg: &Settings, flag: Option<String>) -> Result<PotentialSpec> {
    let Some(spec) = cfg.get::<String>("potential", flag)? else { return Ok(PotentialSpec::Zero) };
    let path = Path::new(&spec);
    if path.is_file() {
        return PotentialSpec::load(path).with_context(|| format!("potential file {spec}"));
    }
    if spec.contains('=') {
        return Ok(PotentialSpec::parse(&spec, None)?);
    }
    if spec.eq_ignore_ascii_case("zero") {
        return Ok(PotentialSpec::Zero);
    }
    bail!("potential {spec:?} is neither a readable file nor an inline key=value spec")
}

fn with_schema<T: Serialize>(command: &str, body: &T) -> Result<Value> {
    let mut v = serde_json::to_value(body)?;
    match v.as_object_mut() {
        Some(obj) => {
            obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
            obj.insert("command".into(), json!(command));
            Ok(v)
        }
        None => Ok(json!({ "schema_version": SCHEMA_VERSION, "command": command, "value": v })),
    }
}

fn emit(v: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(v)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn ground_state(cfg: &Settings, pb: Problem, tol: Option<f64>, nodes: Option<usize>, extent: Option<f64>, out: Option<PathBuf>) -> Result<Outcome> {
    let (dim, power) = problem(cfg, &pb)?;
    let mut gc = GroundStateConfig::default();
    if let Some(t) = cfg.get("tol", tol)? {
        gc.tol = t;
    }
    if let Some(n) = cfg.get("nodes", nodes)? {
        gc.nodes = n;
    }
    if let Some(r) = cfg.get("extent", extent)? {
        gc.r_max = r;
    }
    let gs = solve_ground_state(dim, power, &gc)?;
    let s = &gs.summary;
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "ground-state",
        "dim": s.dim,
        "power": s.power,
        "rho0": s.rho0,
        "m_rho0": s.m_rho0,
        "amplitude": s.amplitude,
        "residual": s.residual_sup,
        "residual_l2": s.residual_l2,
        "kinetic": s.kinetic,
        "potential_p": s.potential_p,
        "decay_rate": s.decay_rate,
        "tail_start": s.tail_start,
    });
    if let Some(p) = cfg.get::<PathBuf>("out", out)? {
        save_field(&gs.profile, &p)?;
        let mut side = p.clone().into_os_string();
        side.push(".json");
        emit(&summary, Some(Path::new(&side)))?;
    }
    emit(&summary, None)?;
    Ok(Outcome::Ok)
}

fn scaling_table(cfg: &Settings, pb: Problem, rho: Option<String>, out: Option<PathBuf>) -> Result<Outcome> {
    let (dim, power) = problem(cfg, &pb)?;
    let rhos: Vec<f64> = parse_list(&cfg.require::<String>("rho", rho)?)?;
    if rhos.is_empty() {
        bail!("--rho needs at least one mass");
    }
    let sp = ScalingParams::from_ground_state(&ground(dim, power)?);
    let mut csv = String::from("rho,mu,lambda_rho,m_rho,q\n");
    for r in rhos {
        let row = sp.row(r)?;
        let _ = writeln!(csv, "{},{},{},{},{}", row.rho, row.mu, row.lambda, row.m, row.q);
    }
    match cfg.get::<PathBuf>("out", out)? {
        Some(p) => std::fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(Outcome::Ok)
}

fn check(cfg: &Settings, pb: Problem, pot: Option<String>, rho: Option<f64>, assumption: Option<String>, out: Option<PathBuf>) -> Result<Outcome> {
    let (dim, power) = problem(cfg, &pb)?;
    let v = potential(cfg, pot)?;
    v.check_dim(dim)?;
    let rho: f64 = cfg.require("rho", rho)?;
    let gs = ground(dim, power)?;
    let sp = ScalingParams::from_ground_state(&gs);
    let which = cfg.get::<String>("assumption", assumption)?.unwrap_or_else(|| "auto".into()).to_ascii_lowercase();
    let v2 = |v: &PotentialSpec| -> Result<AssumptionReport> { Ok(check_v2(v, rho, &sp, &make_z_rho(&gs, rho)?)?) };
    let report = match which.as_str() {
        "v1" => check_v1(&v, rho, &sp)?,
        "v2" => v2(&v)?,
        "auto" if v.is_bounded() => check_v1(&v, rho, &sp)?,
        "auto" => v2(&v)?,
        other => bail!("unknown assumption {other:?}; use v1, v2 or auto"),
    };
    let passed = report.passed();
    emit(&with_schema("check", &report)?, cfg.get::<PathBuf>("out", out)?.as_deref())?;
    Ok(if passed { Outcome::Ok } else { Outcome::CertificateFailure })
}

fn solve(cfg: &Settings, a: SolveArgs, radial: bool) -> Result<Outcome> {
    let (dim, power) = problem(cfg, &a.pb)?;
    let v = potential(cfg, a.potential.clone())?;
    let gs = ground(dim, power)?;
    let rho = cfg.get("rho", a.rho)?.unwrap_or_else(|| gs.rho0());
    let mut sc = SolveConfig::default();
    if let Some(t) = cfg.get("tol", a.tol)? {
        sc.tol = t;
    }
    if let Some(m) = cfg.get("max-iter", a.max_iter)? {
        sc.max_iter = m;
    }
    if let Some(t) = cfg.get("descent-tol", a.descent_tol)? {
        sc.descent_tol = t;
    }
    if let Some(n) = cfg.get("nodes", a.nodes)? {
        sc.radial_nodes = n;
    }
    if let Some(e) = cfg.get("extent", a.extent)? {
        sc.radial_extent = e;
    }
    if let Some(s) = cfg.get::<String>("shape", a.shape.clone())? {
        let mut shape: Vec<usize> = parse_list(&s)?;
        if shape.len() == 1 {
            shape = vec![shape[0]; dim];
        }
        sc.shape = Some(shape);
    }
    if let Some(h) = cfg.get("half-width", a.half_width)? {
        sc.half_width = Some(h);
    }
    sc.morse_k = cfg.get("morse-k", a.morse_k)?;
    if a.no_reference {
        sc.reference = false;
    } else if let Some(r) = cfg.get::<bool>("reference", None)? {
        sc.reference = r;
    }
    let report = if radial { radial_mountain_pass(&gs, &v, rho, &sc)? } else { linking_solve(&gs, &v, rho, &sc)? };

    let out = cfg.get::<PathBuf>("out", a.out)?;
    let solution = cfg.get::<PathBuf>("solution", a.solution)?.or_else(|| out.as_ref().map(|p| p.with_extension("field")));
    if let Some(p) = &solution {
        save_field(report.solution(), p)?;
    }
    if let Some(p) = cfg.get::<PathBuf>("trace", a.trace)? {
        std::fs::write(&p, trace_csv(&report)).with_context(|| format!("writing {}", p.display()))?;
    }
    let mut body = with_schema(if radial { "solve-radial" } else { "solve" }, &report)?;
    if let (Some(p), Some(obj)) = (&solution, body.as_object_mut()) {
        obj.insert("solution_file".into(), json!(p.display().to_string()));
    }
    emit(&body, out.as_deref())?;
    Ok(if report.certified { Outcome::Ok } else { Outcome::CertificateFailure })
}

fn trace_csv(r: &SolveReport) -> String {
    let nb = if r.mode == "radial" { 0 } else { r.dim };
    let axes = ["x", "y", "z"];
    let mut s = String::from("iter,F,residual,lambda,h");
    for a in axes.iter().take(nb) {
        let _ = write!(s, ",beta_{a}");
    }
    s.push('\n');
    for row in &r.trace {
        let _ = write!(s, "{},{},{},{},{}", row.iter, row.energy, row.residual, row.lambda, row.h);
        for k in 0..nb {
            match &row.beta {
                Some(b) => {
                    let _ = write!(s, ",{}", b[k]);
                }
                None => s.push(','),
            }
        }
        s.push('\n');
    }
    s
}

fn read_field(path: &Path) -> Result<Field> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let fj: FieldJson = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        fj.into_field()
    } else {
        Ok(parse_field(&text)?)
    }
}

fn verify(cfg: &Settings, solution: Option<PathBuf>, pot: Option<String>, power: Option<f64>, out: Option<PathBuf>) -> Result<Outcome> {
    let path = cfg.require::<PathBuf>("solution", solution)?;
    let u = read_field(&path)?;
    let dim = u.grid().dim();
    let p: f64 = cfg.require("power", power)?;
    check_admissible(dim, p)?;
    let v = potential(cfg, pot)?;
    v.check_dim(dim)?;
    let vf = v.sample(u.grid())?;
    let (q, ledger) = identity_ledger(&u, &vf, p)?;
    let mass: f64 = u.grid().weights().iter().zip(u.values()).map(|(w, x)| w * x * x).sum();
    let rho = mass.sqrt();
    let energy = q.energy(p);
    let lambda = q.multiplier(mass);
    let (g, _) = projected_gradient(&u, &vf, p, rho)?;
    let ps: f64 = u.grid().weights().iter().zip(g.values()).map(|(w, x)| w * x * x).sum::<f64>().sqrt();
    let sp = ScalingParams::from_ground_state(&ground(dim, p)?);
    let m_rho = sp.m(rho)?;
    let lambda_rho = sp.lambda(rho)?;
    let tol = 1e-5 * m_rho;
    let closes = ledger.energy.abs() <= tol && ledger.multiplier.abs() <= tol && ledger.pohozaev.abs() <= tol;
    let body = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "verify",
        "dim": dim,
        "power": p,
        "rho": rho,
        "potential": v.describe(),
        "quadruple": q,
        "energy": energy,
        "lambda": lambda,
        "pohozaev_residual": ledger.pohozaev,
        "ps_residual": ps,
        "ps_residual_scaled": ps / (lambda_rho * rho),
        "ledger": ledger,
        "m_rho": m_rho,
        "ledger_tolerance": tol,
        "ledger_closes": closes,
    });
    emit(&body, cfg.get::<PathBuf>("out", out)?.as_deref())?;
    Ok(if closes { Outcome::Ok } else { Outcome::CertificateFailure })
}

fn export(input: &Path, format: &str, out: Option<PathBuf>) -> Result<Outcome> {
    let u = read_field(input)?;
    let text = match format {
        "field" => normsol::io::field_to_string(&u),
        "json" => serde_json::to_string(&FieldJson::from_field(&u))? + "\n",
        "csv" => {
            let dim = u.grid().dim();
            let cols = if u.grid().is_radial() { vec!["r"] } else { ["x", "y", "z"][..dim].to_vec() };
            let mut s = cols.join(",") + ",u\n";
            let mut x = vec![0.0; dim];
            for (i, v) in u.values().iter().enumerate() {
                u.grid().point(i, &mut x);
                let n = if u.grid().is_radial() { 1 } else { dim };
                for c in &x[..n] {
                    let _ = write!(s, "{c},");
                }
                let _ = writeln!(s, "{v}");
            }
            s
        }
        other => bail!("unknown export format {other:?}; use field, json or csv"),
    };
    match out {
        Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(Outcome::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use normsol::io::load_field;

    #[test]
    fn config_values_yield_to_flags() {
        let s = Settings::parse("dim = 3\npower = 4 # cubic\nrho=2").unwrap();
        assert_eq!(s.get::<usize>("dim", None).unwrap(), Some(3));
        assert_eq!(s.get::<usize>("dim", Some(2)).unwrap(), Some(2));
        assert_eq!(s.require::<f64>("rho", None).unwrap(), 2.0);
        assert!(s.require::<f64>("tol", None).is_err());
        assert!(Settings::parse("colour = red").is_err());
    }

    #[test]
    fn field_json_round_trip() {
        let g = std::sync::Arc::new(normsol::Grid::from(normsol::CartesianGrid::cube(2, 5, 1.0).unwrap()));
        let u = Field::from_fn(g, |x| (x[0] * 0.3).sin() + x[1] / 3.0).unwrap();
        let text = serde_json::to_string(&FieldJson::from_field(&u)).unwrap();
        let back = serde_json::from_str::<FieldJson>(&text).unwrap().into_field().unwrap();
        assert_eq!(back.values(), u.values());
        assert_eq!(back.grid(), u.grid());
    }

    #[test]
    fn reads_inline_potential() {
        let s = Settings::default();
        let v = potential(&s, Some("family=gaussian,amplitude=0.1,width=2".into())).unwrap();
        assert_eq!(v.family(), "gaussian");
        assert!(potential(&s, Some("/nonexistent/file".into())).is_err());
    }

    #[test]
    fn loads_text_fields() {
        let dir = std::env::temp_dir().join(format!("normsol-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let g = std::sync::Arc::new(normsol::Grid::from(normsol::RadialGrid::new(3, 2.0, 9).unwrap()));
        let u = Field::from_fn(g, |x| (-x[0]).exp()).unwrap();
        let p = dir.join("u.field");
        save_field(&u, &p).unwrap();
        assert_eq!(read_field(&p).unwrap().values(), load_field(&p).unwrap().values());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
