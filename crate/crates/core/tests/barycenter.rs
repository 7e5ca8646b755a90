mod common;

use common::{cube, rng, Bumps};
use normsol::barycenter::{barycenter, local_average};
use normsol::Field;
use rand::Rng;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn local_average_basics() {
    let g = cube(2, 41, 5.0);
    let c = Field::from_fn(g.clone(), |_| -1.5).unwrap();
    let nu = local_average(&c).unwrap();
    let mut x = [0.0; 2];
    for i in 0..g.len() {
        g.point(i, &mut x);
        if x[0].abs() < 3.9 && x[1].abs() < 3.9 {
            assert!((nu.values()[i] - 1.5).abs() < 1e-14);
        }
    }
    let u = Bumps { terms: vec![(1.0, 0.7, vec![0.0, 0.0])] }.field(&g);
    let nu = local_average(&u).unwrap();
    let top = nu.values().iter().cloned().fold(f64::MIN, f64::max);
    let centre = g.len() / 2;
    assert_eq!(nu.values()[centre], top);
    let twice = local_average(&u.with_values(u.values().iter().map(|v| 2.0 * v).collect()).unwrap()).unwrap();
    for (a, b) in twice.values().iter().zip(nu.values()) {
        assert_eq!(*a, 2.0 * b);
    }
    assert!(local_average(&Field::zeros(cube(2, 11, 5.0))).is_err());
}

#[test]
fn radial_fields_sit_at_the_origin() {
    let mut r = rng(1);
    for trial in 0..20 {
        let dim = 2 + trial % 2;
        let (n, half) = if dim == 2 { (81, 10.0) } else { (41, 5.0) };
        let g = cube(dim, n, half);
        let k = r.gen_range(1..=3);
        let terms = (0..k).map(|i| (if i == 0 { 1.0 } else { r.gen_range(-0.4..0.4) }, r.gen_range(0.8..2.0), vec![0.0; dim])).collect();
        let beta = barycenter(&Bumps { terms }.field(&g)).unwrap();
        assert!(beta.iter().all(|b| b.abs() <= 1e-8 * 2.0 * half), "{beta:?}");
    }
}

#[test]
fn lattice_shifts_move_the_barycenter() {
    let mut r = rng(2);
    for trial in 0..20 {
        let dim = 2 + trial % 2;
        let (n, half) = if dim == 2 { (81, 10.0) } else { (41, 5.0) };
        let reach = if dim == 2 { 2.0 } else { 0.8 };
        let g = cube(dim, n, half);
        let dx = 2.0 * half / (n - 1) as f64;
        let u = Bumps::random(&mut r, dim, reach);
        let z: Vec<f64> = (0..dim).map(|_| r.gen_range(-6i32..=6) as f64 * dx).collect();
        let b0 = barycenter(&u.field(&g)).unwrap();
        let b1 = barycenter(&u.shifted(&z).field(&g)).unwrap();
        let want: Vec<f64> = b0.iter().zip(&z).map(|(b, z)| b + z).collect();
        assert!(dist(&b1, &want) <= dx, "trial {trial}: {b1:?} vs {want:?}");
    }
}

#[test]
fn scaling_invariance() {
    let mut r = rng(3);
    let g = cube(2, 81, 10.0);
    for _ in 0..20 {
        let u = Bumps::random(&mut r, 2, 2.5).field(&g);
        let b = barycenter(&u).unwrap();
        for t in [0.25, 8.0, -1.0, -2.0] {
            let tu = u.with_values(u.values().iter().map(|v| t * v).collect()).unwrap();
            assert_eq!(barycenter(&tu).unwrap(), b);
        }
        let t = r.gen_range(-5.0..-0.1);
        let tu = u.with_values(u.values().iter().map(|v| t * v).collect()).unwrap();
        assert!(dist(&barycenter(&tu).unwrap(), &b) <= 1e-12 * 20.0);
    }
}

#[test]
fn perturbations_move_it_continuously() {
    let mut r = rng(4);
    let g = cube(2, 81, 10.0);
    let u = Bumps { terms: vec![(1.0, 1.2, vec![0.3, -0.2]), (0.4, 1.0, vec![-1.0, 1.0])] }.field(&g);
    let phi = Bumps::random(&mut r, 2, 2.0).field(&g);
    let b = barycenter(&u).unwrap();
    let mut prev = f64::INFINITY;
    let mut delta = 0.2;
    for _ in 0..8 {
        let v = u.with_values(u.values().iter().zip(phi.values()).map(|(a, p)| a + delta * p).collect()).unwrap();
        let moved = dist(&barycenter(&v).unwrap(), &b);
        assert!(moved < prev, "delta {delta}: {moved} after {prev}");
        assert!(moved <= 50.0 * delta);
        prev = moved;
        delta *= 0.5;
    }
}

#[test]
fn zero_field_is_rejected() {
    assert!(barycenter(&Field::zeros(cube(2, 41, 5.0))).is_err());
}
