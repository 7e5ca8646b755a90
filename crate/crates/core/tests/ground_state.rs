use normsol::ground_state::{ground_state_1d_exact, solve_ground_state, GroundStateConfig};

#[test]
fn one_dimensional_closed_form() {
    let gs = solve_ground_state(1, 8.0, &GroundStateConfig::default()).unwrap();
    let g = gs.radial_grid();
    let mut worst = 0.0f64;
    for (r, u) in g.nodes().iter().zip(gs.profile.values()) {
        worst = worst.max((u - ground_state_1d_exact(8.0, *r)).abs());
    }
    println!("{:?} worst {worst:e}", gs.summary);
    assert!(worst < 1e-6);
}

#[test]
fn three_dimensional_cubic() {
    let gs = solve_ground_state(3, 4.0, &GroundStateConfig::default()).map_err(|e| e.to_string()).unwrap();
    println!("{:?}", gs.summary);
}
