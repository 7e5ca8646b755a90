mod common;

use std::sync::Arc;

use common::{cube, ground, rel, rng, Bumps};
use normsol::field::{inner, norm_l2};
use normsol::functionals::{energy, energy_inf, identity_ledger, l2_gradient, multiplier, pohozaev_residual, projected_gradient, quadruple};
use normsol::potential::PotentialSpec;
use normsol::scaling::{dilate, dilation_energy_derivative, make_z_rho, ScalingParams};
use normsol::{Field, Grid, RadialGrid};

fn gaussian(a: f64, c: &[f64]) -> PotentialSpec {
    PotentialSpec::Gaussian { amplitude: a, width: 1.0, center: c.to_vec() }
}

fn axpy(u: &Field, t: f64, phi: &Field) -> Field {
    u.with_values(u.values().iter().zip(phi.values()).map(|(a, b)| a + t * b).collect()).unwrap()
}

fn gateaux(u: &Field, phi: &Field, v: &PotentialSpec, p: f64) -> (f64, f64) {
    let vf = v.sample(u.grid()).unwrap();
    let g = l2_gradient(u, &vf, p).unwrap();
    let analytic = inner(&g, phi).unwrap();
    let eps = 1e-4 * norm_l2(u) / norm_l2(phi);
    let f = |t: f64| energy(&axpy(u, t, phi), &vf, p).unwrap().total;
    ((f(eps) - f(-eps)) / (2.0 * eps), analytic)
}

#[test]
fn zero_field() {
    let g = cube(2, 33, 4.0);
    let u = Field::zeros(g.clone());
    let v = gaussian(0.3, &[]).sample(&g).unwrap();
    let e = energy(&u, &v, 5.0).unwrap();
    assert_eq!((e.kinetic, e.potential, e.nonlinear, e.total), (0.0, 0.0, 0.0, 0.0));
    assert!(l2_gradient(&u, &v, 5.0).unwrap().values().iter().all(|x| *x == 0.0));
    assert_eq!(pohozaev_residual(&u, &v, 5.0).unwrap(), 0.0);
}

#[test]
fn soliton_is_a_constrained_critical_point() {
    for (n, p) in [(1usize, 8.0), (2, 5.0), (3, 4.0)] {
        let gs = ground(n, p);
        let s = ScalingParams::from_ground_state(&gs);
        let rho = 0.8 * s.rho0;
        let z = make_z_rho(&gs, rho).unwrap();
        let m = s.m(rho).unwrap();
        let lam = s.lambda(rho).unwrap();
        let zero = PotentialSpec::Zero.sample(z.grid()).unwrap();
        assert!(rel(energy(&z, &zero, p).unwrap().total, m) < 1e-6);
        assert!(rel(multiplier(&z, &zero, p, rho).unwrap(), lam) < 1e-5);
        // weak form against smooth radial tests; in 2D the first two nodes
        // carry an O(h) pointwise defect of the symmetric stencil
        let g = l2_gradient(&z, &zero, p).unwrap();
        let res = axpy(&g, lam, &z);
        let mu = s.mu(rho).unwrap();
        for width in [0.5, 1.0, 2.0] {
            let phi = Field::from_fn(z.grid().clone(), |x| (-(x[0] / (width * mu)).powi(2)).exp()).unwrap();
            let weak = inner(&res, &phi).unwrap().abs();
            assert!(weak < 1e-6 * lam * rho * norm_l2(&phi), "N={n} width {width} weak defect {weak}");
        }
        let tail: f64 = (0..z.len()).filter(|&i| z.grid().radius(i) > 0.01 * mu).map(|i| z.grid().weights()[i] * res.values()[i].powi(2)).sum();
        assert!(tail.sqrt() < 1e-5 * lam * rho, "N={n} defect {}", tail.sqrt());
        let (pg, _) = projected_gradient(&z, &zero, p, rho).unwrap();
        let tail: f64 = (0..z.len()).filter(|&i| z.grid().radius(i) > 0.01 * mu).map(|i| z.grid().weights()[i] * pg.values()[i].powi(2)).sum();
        assert!(tail.sqrt() < 1e-5 * lam * rho);
        let q = quadruple(&z, &zero, p).unwrap();
        assert_eq!((q.c, q.d), (0.0, 0.0));
        let nf = n as f64;
        assert!((q.a - nf * (p - 2.0) / (2.0 * p) * q.b).abs() < 1e-5 * q.a);
        assert!(pohozaev_residual(&z, &zero, p).unwrap().abs() < 1e-5 * m);
        let (_, ledger) = identity_ledger(&z, &zero, p).unwrap();
        assert!(ledger.energy.abs() < 1e-5 * m && ledger.multiplier.abs() < 1e-5 * m && ledger.pohozaev.abs() < 1e-5 * m);

        // a Gaussian potential adds its own term and nothing else
        let vg = gaussian(0.2, &[]).sample(z.grid()).unwrap();
        let e = energy(&z, &vg, p).unwrap();
        let c = quadruple(&z, &vg, p).unwrap().c;
        assert!(rel(e.total, m + 0.5 * c) < 1e-6);
    }
}

#[test]
fn ground_state_at_unit_frequency() {
    for (n, p) in [(1usize, 8.0), (2, 5.0), (3, 4.0)] {
        let gs = ground(n, p);
        let u = &gs.profile;
        let nf = n as f64;
        let mass = norm_l2(u).powi(2);
        let i1 = energy_inf(u, p).unwrap() + 0.5 * mass;
        assert!(rel(i1, gs.m_rho0() + 0.5 * gs.rho0().powi(2)) < 1e-6);
        assert!(rel(mass, (2.0 * nf - p * (nf - 2.0)) / (p - 2.0) * i1) < 1e-6, "N={n}");
    }
}

#[test]
fn definitional_identities() {
    let gs = ground(3, 4.0);
    let rho = gs.rho0();
    let z = dilate(&make_z_rho(&gs, rho).unwrap(), 0.3).unwrap();
    let zero = PotentialSpec::Zero.sample(z.grid()).unwrap();
    let q = quadruple(&z, &zero, 4.0).unwrap();
    let mass = norm_l2(&z).powi(2);
    let lam = multiplier(&z, &zero, 4.0, rho).unwrap();
    assert!((lam - (q.b - q.a) / mass).abs() <= 1e-12 * lam.abs());

    let v1 = gaussian(0.1, &[]).sample(z.grid()).unwrap();
    let v2 = gaussian(0.2, &[]).sample(z.grid()).unwrap();
    let (c1, c2) = (quadruple(&z, &v1, 4.0).unwrap().c, quadruple(&z, &v2, 4.0).unwrap().c);
    let dl = multiplier(&z, &v2, 4.0, rho).unwrap() - multiplier(&z, &v1, 4.0, rho).unwrap();
    assert!((dl + (c2 - c1) / mass).abs() < 1e-12 * lam);

    let e = energy(&z, &v1, 4.0).unwrap();
    let q1 = quadruple(&z, &v1, 4.0).unwrap();
    assert!((2.0 * e.total - (q1.a + q1.c - 0.5 * q1.b)).abs() < 1e-12 * q1.a);
    assert_eq!(e.total, e.kinetic + e.potential - e.nonlinear);
}

#[test]
fn gateaux_consistency_on_random_fields() {
    let mut r = rng(11);
    let g2 = cube(2, 64, 7.0);
    let g3 = cube(3, 28, 6.0);
    let rad = Arc::new(Grid::Radial(RadialGrid::new(3, 12.0, 600).unwrap()));
    for trial in 0..12 {
        let (grid, dim) = match trial % 3 {
            0 => (&g2, 2),
            1 => (&g3, 3),
            _ => (&rad, 3),
        };
        let (u, phi) = if grid.is_radial() {
            let a = Bumps { terms: vec![(1.0 + 0.1 * trial as f64, 1.3, vec![0.0])] };
            let b = Bumps { terms: vec![(0.7, 0.9 + 0.05 * trial as f64, vec![0.0]), (-0.2, 2.0, vec![0.0])] };
            (a.field(grid), b.field(grid))
        } else {
            (Bumps::random(&mut r, dim, 2.0).field(grid), Bumps::random(&mut r, dim, 2.0).field(grid))
        };
        let p = if dim == 2 { 5.0 } else { 4.0 };
        let c = if grid.is_radial() { vec![] } else { vec![0.4; dim] };
        for v in [PotentialSpec::Zero, gaussian(0.3, &c)] {
            let (fd, an) = gateaux(&u, &phi, &v, p);
            assert!((fd - an).abs() <= 1e-4 * an.abs().max(1e-3), "trial {trial}: fd {fd} analytic {an}");
        }
    }
}

#[test]
fn projection_properties() {
    let mut r = rng(5);
    let g = cube(2, 48, 6.0);
    let v = gaussian(0.4, &[1.0, 0.0]).sample(&g).unwrap();
    for _ in 0..10 {
        let u = Bumps::random(&mut r, 2, 2.0).field(&g);
        let rho = norm_l2(&u);
        let (pg, lam) = projected_gradient(&u, &v, 5.0, rho).unwrap();
        let n = norm_l2(&pg);
        assert!(inner(&pg, &u).unwrap().abs() <= 1e-10 * n * rho);
        let full = norm_l2(&l2_gradient(&u, &v, 5.0).unwrap());
        assert!(n <= full + lam.abs() * rho + 1e-12);
    }
}

#[test]
fn holder_bound_on_d() {
    let gs = ground(3, 4.0);
    let z = make_z_rho(&gs, gs.rho0()).unwrap();
    let spec = gaussian(0.5, &[]);
    let v = spec.sample(z.grid()).unwrap();
    let q = quadruple(&z, &v, 4.0).unwrap();
    let w_inf = spec.norms(3).unwrap().w_inf.value;
    assert!(q.d.abs() <= w_inf * norm_l2(&z) * q.a.sqrt());
}

#[test]
fn dilation_derivative_is_the_pohozaev_functional() {
    let gs = ground(3, 4.0);
    let z = make_z_rho(&gs, gs.rho0()).unwrap();
    let zero = PotentialSpec::Zero.sample(z.grid()).unwrap();
    assert!(dilation_energy_derivative(&z, 0.0, &zero, 4.0).unwrap().abs() < 1e-5);
    let h = 0.2;
    let d = dilation_energy_derivative(&z, h, &zero, 4.0).unwrap();
    let eps = 1e-3;
    let f = |t: f64| energy_inf(&dilate(&z, t).unwrap(), 4.0).unwrap();
    let fd = (f(h + eps) - f(h - eps)) / (2.0 * eps);
    assert!(rel(d, fd) < 1e-4, "{d} vs {fd}");
    assert_eq!(d, pohozaev_residual(&dilate(&z, h).unwrap(), &zero, 4.0).unwrap());
}
