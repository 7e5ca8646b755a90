//! Acceptance criteria 1-10. One PASS/FAIL line per criterion; the test fails
//! if any criterion does. Run with `--nocapture` to see the lines.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{cube, ground, rel, rng, Bumps};
use normsol::barycenter::barycenter;
use normsol::field::{grad_seminorm_sq, inner, norm_l2, norm_lp};
use normsol::functionals::{energy, energy_inf, identity_ledger, l2_gradient, pohozaev_residual};
use normsol::ground_state::{ground_state_1d_exact, solve_ground_state, GroundStateConfig};
use normsol::hypothesis::{aubin_talenti, check_v1, check_v2, multiplier_upper_bound, v1_thresholds};
use normsol::potential::PotentialSpec;
use normsol::scaling::{dilate, dilation_energy_derivative, make_z_rho, ScalingParams};
use normsol::solver::{linking_solve, radial_mountain_pass, SolveConfig, SolveReport};
use normsol::{Field, Grid, RadialGrid};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn gaussian(a: f64, c: &[f64]) -> PotentialSpec {
    PotentialSpec::Gaussian { amplitude: a, width: 1.0, center: c.to_vec() }
}

// The ledger closes within 1e-5 m_rho on the returned solution.
fn ledger_closes(r: &SolveReport, v: &PotentialSpec, m: f64) -> Result<f64, String> {
    let t = Instant::now();
    let u = r.solution();
    let vf = v.sample(u.grid()).map_err(|e| e.to_string())?;
    let (_, l) = identity_ledger(u, &vf, r.power).map_err(|e| e.to_string())?;
    let worst = l.energy.abs().max(l.multiplier.abs()).max(l.pohozaev.abs());
    ensure(worst <= 1e-5 * m, format!("{} ledger {:?} > {:.3e}", r.mode, l, 1e-5 * m))?;
    ensure(t.elapsed() < Duration::from_secs(5), "ledger check over 5 s")?;
    Ok(worst / m)
}

// lambda > 0, m < F <= m + |V|_inf rho^2 / 2, lambda <= multiplier bound.
fn bounded_certificates(r: &SolveReport, v: &PotentialSpec, s: &ScalingParams) -> Result<String, String> {
    let m = s.m(r.rho).unwrap();
    let v_inf = v.norms(s.dim).unwrap().v_inf.value;
    let top = m + 0.5 * v_inf * r.rho * r.rho;
    let bound = multiplier_upper_bound(s, r.rho).unwrap();
    ensure(r.converged, format!("not converged after {} iterations", r.iterations))?;
    ensure(r.lambda > 0.0, format!("lambda {} <= 0", r.lambda))?;
    ensure(m < r.energy && r.energy <= top, format!("F {} outside ({m}, {top}]", r.energy))?;
    ensure(r.lambda <= bound, format!("lambda {} above bound {bound}", r.lambda))?;
    Ok(format!("F = {:.6}, m = {m:.6}, upper = {top:.6}, lambda = {:.5} <= {bound:.4}", r.energy, r.lambda))
}

fn c1() -> Outcome {
    let gs = solve_ground_state(1, 8.0, &GroundStateConfig::default()).map_err(|e| e.to_string())?;
    let g = gs.radial_grid();
    let worst = g.nodes().iter().zip(gs.profile.values()).map(|(r, u)| (u - ground_state_1d_exact(8.0, *r)).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-6, format!("max nodal error {worst:.2e}"))?;
    Ok(format!("max nodal error {worst:.2e}"))
}

fn c2() -> Outcome {
    let gs = ground(3, 4.0);
    let s = ScalingParams::from_ground_state(&gs);
    ensure(s.q() == 2.0, format!("q = {}", s.q()))?;
    let mut worst_q = 0.0f64;
    for f in [0.5, 1.0, 2.0] {
        let rho = f * s.rho0;
        let row = s.row(rho).unwrap();
        let algebra = [rel(row.lambda, f.powi(-4)), rel(row.m, s.m_rho0 * f.powi(-2)), rel(row.m * row.q, row.lambda * rho * rho)];
        ensure(algebra.iter().all(|e| *e <= 1e-12), format!("rho = {f} rho0: algebra {algebra:?}"))?;
        let z = make_z_rho(&gs, rho).unwrap();
        let quad = rel(norm_l2(&z), rho).max(rel(energy_inf(&z, 4.0).unwrap(), row.m));
        ensure(quad <= 1e-6, format!("rho = {f} rho0: quadrature {quad:.2e}"))?;
        worst_q = worst_q.max(quad);
    }
    Ok(format!("q = 2, quadrature agreement {worst_q:.2e}"))
}

fn c3() -> Outcome {
    let mut worst = 0.0f64;
    for (n, p) in [(1usize, 8.0), (2, 5.0), (3, 4.0)] {
        let gs = ground(n, p);
        let u = &gs.profile;
        let (k, l2, lp) = (grad_seminorm_sq(u).unwrap(), norm_l2(u).powi(2), norm_lp(u, p).unwrap().powf(p));
        let nf = n as f64;
        let first = rel(k + l2, lp);
        let pohozaev = rel((nf - 2.0) / 2.0 * k + nf / 2.0 * l2, nf / p * lp);
        let i1 = 0.5 * k + 0.5 * l2 - lp / p;
        let mass = rel(l2, (2.0 * nf - p * (nf - 2.0)) / (p - 2.0) * i1);
        let e = first.max(pohozaev).max(mass);
        ensure(e <= 1e-5, format!("(N, p) = ({n}, {p}): {first:.2e} {pohozaev:.2e} {mass:.2e}"))?;
        worst = worst.max(e);
    }
    Ok(format!("worst relative defect {worst:.2e}"))
}

fn c4() -> Outcome {
    let gs = ground(3, 4.0);
    let s = ScalingParams::from_ground_state(&gs);
    let mut worst = 0.0f64;
    for f in [0.5, 1.0, 2.0] {
        let rho = f * s.rho0;
        let m = s.m(rho).unwrap();
        let z = make_z_rho(&gs, rho).unwrap();
        let zero = PotentialSpec::Zero.sample(z.grid()).unwrap();
        let poh = pohozaev_residual(&z, &zero, 4.0).unwrap().abs();
        ensure(poh <= 1e-5 * m, format!("Z_rho at {f} rho0: Pohozaev {poh:.2e}"))?;
        worst = worst.max(poh / m);
    }
    let rho = s.rho0;
    let m = s.m(rho).unwrap();
    let cfg = SolveConfig::default();
    let mut ledgers = Vec::new();
    let v = gaussian(0.5 * v1_thresholds(&s, rho).unwrap().0, &[]);
    for v in [PotentialSpec::Zero, v] {
        let r = radial_mountain_pass(&gs, &v, rho, &cfg).map_err(|e| e.to_string())?;
        ensure(r.converged, "radial solve did not converge")?;
        ledgers.push(ledger_closes(&r, &v, m)?);
    }
    let gs2 = ground(2, 5.0);
    let s2 = ScalingParams::from_ground_state(&gs2);
    let v2 = gaussian(0.08, &[0.5, -0.25]);
    let r = linking_solve(&gs2, &v2, 3.0, &cfg).map_err(|e| e.to_string())?;
    ensure(r.converged, "2D linking solve did not converge")?;
    ledgers.push(ledger_closes(&r, &v2, s2.m(3.0).unwrap())?);
    Ok(format!("Z_rho Pohozaev / m <= {worst:.2e}; ledger / m on three solves {:.1e}, {:.1e}, {:.1e}", ledgers[0], ledgers[1], ledgers[2]))
}

fn c5() -> Outcome {
    let mut r = rng(1);
    let mut worst = [0.0f64; 3];
    for trial in 0..20 {
        let dim = 2 + trial % 2;
        let (n, half) = if dim == 2 { (81, 10.0) } else { (41, 5.0) };
        let g = cube(dim, n, half);
        let dx = 2.0 * half / (n - 1) as f64;

        let k = r.gen_range(1..=3);
        let terms = (0..k).map(|i| (if i == 0 { 1.0 } else { r.gen_range(-0.4..0.4) }, r.gen_range(0.8..2.0), vec![0.0; dim])).collect();
        let beta = barycenter(&Bumps { terms }.field(&g)).map_err(|e| e.to_string())?;
        let b = beta.iter().map(|x| x * x).sum::<f64>().sqrt();
        ensure(b <= 1e-8 * 2.0 * half, format!("radial field {trial}: |beta| = {b:.2e}"))?;
        worst[0] = worst[0].max(b / (2.0 * half));

        let u = Bumps::random(&mut r, dim, if dim == 2 { 2.0 } else { 0.8 });
        let z: Vec<f64> = (0..dim).map(|_| r.gen_range(-6i32..=6) as f64 * dx).collect();
        let b0 = barycenter(&u.field(&g)).unwrap();
        let b1 = barycenter(&u.shifted(&z).field(&g)).unwrap();
        let d = b0.iter().zip(&b1).zip(&z).map(|((a, b), z)| (b - a - z).powi(2)).sum::<f64>().sqrt();
        ensure(d <= dx, format!("shift {trial}: off by {d:.3} > cell {dx}"))?;
        worst[1] = worst[1].max(d / dx);

        let f = u.field(&g);
        let t = r.gen_range(0.01..100.0);
        let tf = f.with_values(f.values().iter().map(|v| t * v).collect()).unwrap();
        let bt = barycenter(&tf).unwrap();
        let d = b0.iter().zip(&bt).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(d <= 1e-12 * 2.0 * half, format!("scaling {trial}: moved {d:.2e}"))?;
        worst[2] = worst[2].max(d);
    }
    Ok(format!("60 fields; radial |beta|/extent {:.1e}, shift error {:.2} cells, scaling drift {:.1e}", worst[0], worst[1], worst[2]))
}

fn single_crossing(mut pass: impl FnMut(f64) -> bool, hi: f64) -> Result<f64, String> {
    let samples: Vec<bool> = (1..=200).map(|i| pass(hi * i as f64 / 200.0)).collect();
    let first_fail = samples.iter().position(|p| !p).ok_or("no failure at the top of the range")?;
    ensure(first_fail > 0, "fails at the smallest amplitude")?;
    ensure(samples[first_fail..].iter().all(|p| !p), "pass region is not an interval")?;
    let (mut lo, mut up) = (hi * first_fail as f64 / 200.0, hi * (first_fail + 1) as f64 / 200.0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + up);
        if pass(mid) {
            lo = mid;
        } else {
            up = mid;
        }
    }
    ensure(pass(lo) && !pass(up), "bisection lost the crossing")?;
    Ok(lo)
}

fn c6() -> Outcome {
    let a3 = aubin_talenti(3).unwrap();
    ensure((a3 - 0.42727).abs() <= 1e-4, format!("A(3) = {a3}"))?;
    let gs = ground(3, 4.0);
    let s = ScalingParams::from_ground_state(&gs);
    for a in [0.005, 0.02, 0.05, 0.1, 0.3] {
        let mut rho = 4.0 * s.rho0;
        for _ in 0..8 {
            if check_v1(&gaussian(a, &[]), rho, &s).unwrap().passed() {
                ensure(check_v1(&gaussian(a, &[]), 0.5 * rho, &s).unwrap().passed(), format!("amplitude {a}: pass at {rho} but not at half"))?;
            }
            rho *= 0.7;
        }
    }
    let rho = 0.8 * s.rho0;
    let (rv, _) = v1_thresholds(&s, rho).unwrap();
    let crit = single_crossing(|a| check_v1(&gaussian(a, &[]), rho, &s).unwrap().passed(), 3.0 * rv)?;
    Ok(format!("A(3) = {a3:.6}, Gaussian amplitude threshold {crit:.5e} at rho = 0.8 rho0"))
}

fn c7() -> Outcome {
    let gs = ground(3, 4.0);
    let s = ScalingParams::from_ground_state(&gs);
    let rho = s.rho0;
    let (m, lam) = (s.m(rho).unwrap(), s.lambda(rho).unwrap());
    let cfg = SolveConfig { radial_nodes: 4096, ..SolveConfig::default() };
    let r = radial_mountain_pass(&gs, &PotentialSpec::Zero, rho, &cfg).map_err(|e| e.to_string())?;
    ensure(r.converged, "not converged")?;
    ensure((r.energy - m).abs() <= 1e-3 * m, format!("F = {} vs m = {m}", r.energy))?;
    ensure((r.lambda - lam).abs() <= 1e-2 * lam, format!("lambda = {} vs {lam}", r.lambda))?;
    ensure(r.ps_residual_scaled <= 1e-6, format!("scaled PS residual {:.2e}", r.ps_residual_scaled))?;
    Ok(format!(
        "F/m - 1 = {:.1e}, lambda/lambda_rho - 1 = {:.1e}, scaled PS residual {:.1e}",
        r.energy / m - 1.0,
        r.lambda / lam - 1.0,
        r.ps_residual_scaled
    ))
}

fn c8() -> Outcome {
    let gs = ground(3, 4.0);
    let s = ScalingParams::from_ground_state(&gs);
    let rho = s.rho0;
    let (rv, rw) = v1_thresholds(&s, rho).unwrap();
    let v = gaussian(0.5 * rv.min(rw * (2.0 * std::f64::consts::E).sqrt()), &[]);
    ensure(check_v1(&v, rho, &s).unwrap().passed(), "potential not certified")?;
    let r = radial_mountain_pass(&gs, &v, rho, &SolveConfig::default()).map_err(|e| e.to_string())?;
    bounded_certificates(&r, &v, &s)
}

fn c9() -> Outcome {
    let gs = ground(3, 4.0);
    let s = ScalingParams::from_ground_state(&gs);
    let rho = s.rho0;
    let m = s.m(rho).unwrap();
    let cfg = SolveConfig { shape: Some(vec![96; 3]), ..SolveConfig::default() };
    let centre = [1.125, 0.625, 0.125];
    let v = gaussian(0.08, &centre);
    let r = linking_solve(&gs, &v, rho, &cfg).map_err(|e| e.to_string())?;
    let bounded = bounded_certificates(&r, &v, &s)?;
    let beta = r.barycenter.clone().ok_or("no barycenter")?;
    let cell = (r.grid.hi[0] - r.grid.lo[0]) / (r.grid.shape[0] - 1) as f64;
    let off = beta.iter().zip(&centre).map(|(b, c)| (b - c).powi(2)).sum::<f64>().sqrt();
    ensure(off <= 2.0 * cell, format!("barycenter {beta:?} is {off:.3} from the center, cell {cell:.3}"))?;

    let pole = PotentialSpec::Pole { amplitude: 0.02, alpha: 1.0, cutoff: 2.0, center: vec![] };
    let z = make_z_rho(&gs, rho).unwrap();
    ensure(check_v2(&pole, rho, &s, &z).unwrap().passed(), "pole potential fails (V2)")?;
    let rp = linking_solve(&gs, &pole, rho, &cfg).map_err(|e| e.to_string())?;
    ensure(rp.converged, "pole solve not converged")?;
    ensure(rp.lambda > 0.0, format!("pole lambda {}", rp.lambda))?;
    ensure(rp.energy < 5.0 / 3.0 * m, format!("pole F = {} >= 5/3 m = {}", rp.energy, 5.0 / 3.0 * m))?;
    Ok(format!("{bounded}; barycenter off by {:.2} cells; pole F/m = {:.4}", off / cell, rp.energy / m))
}

fn axpy(u: &Field, t: f64, phi: &Field) -> Field {
    u.with_values(u.values().iter().zip(phi.values()).map(|(a, b)| a + t * b).collect()).unwrap()
}

fn c10() -> Outcome {
    let mut r = rng(10);
    let g2 = cube(2, 64, 7.0);
    let g3 = cube(3, 32, 6.0);
    let rad = Arc::new(Grid::Radial(RadialGrid::new(3, 14.0, 2000).unwrap()));
    let mut worst = [0.0f64; 2];
    for trial in 0..10 {
        let (grid, dim, p) = if trial % 2 == 0 { (&g2, 2, 5.0) } else { (&g3, 3, 4.0) };
        let u = Bumps::random(&mut r, dim, 2.0).field(grid);
        let phi = Bumps::random(&mut r, dim, 2.0).field(grid);
        let spec = gaussian(0.3, &vec![0.4; dim]);
        let v = spec.sample(grid).unwrap();
        let an = inner(&l2_gradient(&u, &v, p).unwrap(), &phi).unwrap();
        let eps = 1e-4 * norm_l2(&u) / norm_l2(&phi);
        let f = |t: f64| energy(&axpy(&u, t, &phi), &v, p).unwrap().total;
        let fd = (f(eps) - f(-eps)) / (2.0 * eps);
        let e = (fd - an).abs() / an.abs();
        ensure(e <= 1e-4, format!("field {trial}: l2_gradient {an} vs {fd}"))?;
        worst[0] = worst[0].max(e);

        // dilations act on radial profiles
        let terms = (0..r.gen_range(1..=3)).map(|i| (if i == 0 { 1.0 } else { r.gen_range(-0.4..0.4) }, r.gen_range(0.8..2.0), vec![0.0])).collect();
        let w = Bumps { terms }.field(&rad);
        let vr = gaussian(r.gen_range(-0.3..0.3), &[]).sample(&rad).unwrap();
        let h = r.gen_range(-0.3..0.3);
        let d = dilation_energy_derivative(&w, h, &vr, 4.0).unwrap();
        let eps = 1e-3;
        let f = |t: f64| energy(&dilate(&w, t).unwrap(), &vr, 4.0).unwrap().total;
        let fd = (f(h + eps) - f(h - eps)) / (2.0 * eps);
        let e = (fd - d).abs() / d.abs();
        ensure(e <= 1e-4, format!("field {trial}: dilation derivative {d} vs {fd}"))?;
        worst[1] = worst[1].max(e);
    }
    Ok(format!("worst relative gap: gradient {:.1e}, dilation {:.1e}", worst[0], worst[1]))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("ground-state oracle", c1, 5),
        ("scaling laws", c2, 10),
        ("ground-state identities", c3, 30),
        ("Pohozaev residual and ledger", c4, 120),
        ("barycenter properties", c5, 30),
        ("hypothesis certification", c6, 20),
        ("radial solve without potential", c7, 60),
        ("radial solve with certified Gaussian", c8, 120),
        ("linking solve on 96^3", c9, 1800),
        ("gradient fidelity", c10, 30),
    ];
    let mut failed = Vec::new();
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = run();
        let dt = t.elapsed();
        let out = out.and_then(|s| if dt <= Duration::from_secs(*budget) { Ok(s) } else { Err(format!("{s}; over the {budget} s budget")) });
        match out {
            Ok(s) => println!("criterion {}: PASS  {name} [{:.1} s] {s}", k + 1, dt.as_secs_f64()),
            Err(s) => {
                println!("criterion {}: FAIL  {name} [{:.1} s] {s}", k + 1, dt.as_secs_f64());
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
