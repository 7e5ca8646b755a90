#![allow(dead_code)]

use std::sync::Arc;

use normsol::ground_state::{solve_ground_state, GroundState, GroundStateConfig};
use normsol::{CartesianGrid, Field, Grid};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ground(dim: usize, p: f64) -> GroundState {
    solve_ground_state(dim, p, &GroundStateConfig::default()).expect("ground state")
}

pub fn cube(dim: usize, n: usize, half: f64) -> Arc<Grid> {
    Arc::new(Grid::Cartesian(CartesianGrid::cube(dim, n, half).unwrap()))
}

/// A sum of a few Gaussian bumps with random centers, widths and signs,
/// kept well inside `reach`.
#[derive(Clone, Debug)]
pub struct Bumps {
    pub terms: Vec<(f64, f64, Vec<f64>)>,
}

impl Bumps {
    pub fn random(r: &mut impl Rng, dim: usize, reach: f64) -> Self {
        let k = r.gen_range(1..=3);
        let terms = (0..k)
            .map(|i| {
                let amp = if i == 0 { r.gen_range(0.8..1.5) } else { r.gen_range(-0.5..0.5) };
                let width = r.gen_range(0.8..1.6);
                let c = (0..dim).map(|_| r.gen_range(-reach..reach)).collect();
                (amp, width, c)
            })
            .collect();
        Self { terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(a, w, c)| {
                let d2: f64 = x.iter().zip(c).map(|(x, c)| (x - c).powi(2)).sum();
                a * (-d2 / (w * w)).exp()
            })
            .sum()
    }

    pub fn shifted(&self, z: &[f64]) -> Self {
        let terms = self.terms.iter().map(|(a, w, c)| (*a, *w, c.iter().zip(z).map(|(c, z)| c + z).collect())).collect();
        Self { terms }
    }

    pub fn field(&self, grid: &Arc<Grid>) -> Field {
        let mut f = Field::from_fn(grid.clone(), |x| self.eval(x)).unwrap();
        grid.apply_constraints(f.values_mut());
        f
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
