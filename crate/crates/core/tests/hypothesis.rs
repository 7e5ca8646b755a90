mod common;

use common::{ground, rel};
use normsol::hypothesis::{aubin_talenti, check_v1, check_v2, energy_upper_bounds, multiplier_upper_bound, v1_thresholds, Status};
use normsol::potential::PotentialSpec;
use normsol::scaling::{make_z_rho, ScalingParams};

fn gaussian(a: f64) -> PotentialSpec {
    PotentialSpec::Gaussian { amplitude: a, width: 1.0, center: vec![] }
}

fn pole(b: f64) -> PotentialSpec {
    PotentialSpec::Pole { amplitude: b, alpha: 1.0, cutoff: 2.0, center: vec![] }
}

#[test]
fn aubin_talenti_values() {
    assert!((aubin_talenti(3).unwrap() - 0.42727).abs() < 1e-4);
    let want4 = (8.0 * std::f64::consts::PI).powf(-0.5) * 6f64.powf(0.25);
    assert!(rel(aubin_talenti(4).unwrap(), want4) < 1e-12);
    for n in 3..10 {
        assert!(aubin_talenti(n + 1).unwrap() < aubin_talenti(n).unwrap());
    }
    assert!(aubin_talenti(2).is_err());
}

#[test]
fn v1_on_zero_and_small_gaussians() {
    let gs = ground(3, 4.0);
    let s = ScalingParams::from_ground_state(&gs);
    let rho = s.rho0;
    let r = check_v1(&PotentialSpec::Zero, rho, &s).unwrap();
    assert_eq!(r.verdict, Status::Fail);
    assert!(r.notes.iter().any(|n| n.contains("autonomous")));

    let (rv, rw) = v1_thresholds(&s, rho).unwrap();
    // |W|_inf of a unit-width Gaussian is A / sqrt(2e)
    let a = 0.5 * rv.min(rw * (2.0 * std::f64::consts::E).sqrt());
    let r = check_v1(&gaussian(a), rho, &s).unwrap();
    assert!(r.passed(), "{r:?}");
    for row in &r.rows {
        assert_eq!(row.margin, row.rhs - row.lhs);
        assert_eq!(row.status == Status::Pass, if row.strict { row.lhs < row.rhs } else { row.lhs <= row.rhs });
    }
    // both arrangements of the weighted bound give the same threshold
    assert!(rel(r.auxiliary[0].rhs, r.rows[2].rhs) < 1e-12, "{:?} {:?}", r.auxiliary, r.rows);
    let big = check_v1(&gaussian(4.0 * a), rho, &s).unwrap();
    assert_eq!(big.verdict, Status::Fail);
    let na = check_v1(&pole(0.01), rho, &s).unwrap();
    assert_eq!(na.verdict, Status::NotApplicable);
}

#[test]
fn v1_is_monotone_in_mass() {
    let gs = ground(3, 4.0);
    let s = ScalingParams::from_ground_state(&gs);
    for a in [0.005, 0.02, 0.05, 0.1, 0.3] {
        let v = gaussian(a);
        let mut rho = 4.0 * s.rho0;
        for _ in 0..8 {
            if check_v1(&v, rho, &s).unwrap().passed() {
                assert!(check_v1(&v, 0.5 * rho, &s).unwrap().passed(), "a={a} rho={rho}");
            }
            rho *= 0.7;
        }
    }
}

fn single_crossing(mut pass: impl FnMut(f64) -> bool, hi: f64) -> f64 {
    let samples: Vec<bool> = (1..=200).map(|i| pass(hi * i as f64 / 200.0)).collect();
    let first_fail = samples.iter().position(|p| !p).expect("fails at the top");
    assert!(first_fail > 0, "passes at the smallest amplitude");
    assert!(samples[first_fail..].iter().all(|p| !p), "pass region is not an interval");
    let (mut lo, mut up) = (hi * first_fail as f64 / 200.0, hi * (first_fail + 1) as f64 / 200.0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + up);
        if pass(mid) {
            lo = mid;
        } else {
            up = mid;
        }
    }
    assert!(pass(lo) && !pass(up));
    lo
}

#[test]
fn amplitude_thresholds_are_single_crossings() {
    let gs = ground(3, 4.0);
    let s = ScalingParams::from_ground_state(&gs);
    let rho = 0.8 * s.rho0;
    let z = make_z_rho(&gs, rho).unwrap();
    let (rv, _) = v1_thresholds(&s, rho).unwrap();
    let a = single_crossing(|a| check_v1(&gaussian(a), rho, &s).unwrap().passed(), 3.0 * rv);
    assert!(a <= rv);
    let pd = |a: f64| PotentialSpec::PowerDecay { amplitude: a, width: 1.5, decay: 3.0 };
    single_crossing(|a| check_v1(&pd(a), rho, &s).unwrap().passed(), 3.0 * rv);
    let b = single_crossing(|b| check_v2(&pole(b), rho, &s, &z).unwrap().passed(), 1.0);
    assert!(b > 0.0);
    single_crossing(|b| check_v2(&gaussian(b), rho, &s, &z).unwrap().passed(), 2.0);
}

#[test]
fn v2_reports() {
    let gs = ground(3, 4.0);
    let s = ScalingParams::from_ground_state(&gs);
    let rho = s.rho0;
    let z = make_z_rho(&gs, rho).unwrap();
    let r = check_v2(&PotentialSpec::Zero, rho, &s, &z).unwrap();
    assert_eq!(r.rows[1].status, Status::Pass);
    assert_eq!(r.rows[0].lhs, 0.0);
    assert!(r.rows[0].note.is_some());
    assert!(check_v2(&pole(0.02), rho, &s, &z).unwrap().passed());
    let n1 = pole(0.02).norms(3).unwrap();
    let n2 = pole(0.04).norms(3).unwrap();
    assert!(rel(n2.v_half_dim.value, 2.0 * n1.v_half_dim.value) < 1e-14);
    assert!(rel(n2.w_dim.value, 2.0 * n1.w_dim.value) < 1e-14);
    let r2 = check_v2(&pole(0.04), rho, &s, &z).unwrap();
    assert!(rel(r2.rows[0].lhs, 2.0 * check_v2(&pole(0.02), rho, &s, &z).unwrap().rows[0].lhs) < 1e-14);

    let g2 = ground(2, 5.0);
    let s2 = ScalingParams::from_ground_state(&g2);
    let z2 = make_z_rho(&g2, s2.rho0).unwrap();
    assert_eq!(check_v2(&gaussian(0.01), s2.rho0, &s2, &z2).unwrap().verdict, Status::NotApplicable);
}

#[test]
fn multiplier_bound() {
    let gs = ground(3, 4.0);
    let s = ScalingParams::from_ground_state(&gs);
    let r0 = s.rho0;
    assert!(rel(multiplier_upper_bound(&s, r0).unwrap(), 20.0 / 3.0 * s.m_rho0 / (r0 * r0)) < 1e-14);
    for f in [0.3, 1.0, 2.5] {
        let rho = f * r0;
        let b = multiplier_upper_bound(&s, rho).unwrap();
        assert!(b > s.lambda(rho).unwrap());
        let b2 = multiplier_upper_bound(&s, 2.0 * rho).unwrap();
        assert!(rel(b2 / b, 2f64.powf(-s.q() - 2.0)) < 1e-12);
    }
}

#[test]
fn energy_bounds() {
    let gs = ground(3, 4.0);
    let s = ScalingParams::from_ground_state(&gs);
    let rho = s.rho0;
    let m = s.m(rho).unwrap();
    let z = make_z_rho(&gs, rho).unwrap();
    let e0 = energy_upper_bounds(&PotentialSpec::Zero, rho, &s, None).unwrap();
    assert_eq!((e0.bounded, e0.pole), (Some(m), Some(m)));
    let (rv, rw) = v1_thresholds(&s, rho).unwrap();
    let a = 0.5 * rv.min(rw * (2.0 * std::f64::consts::E).sqrt());
    let eb = energy_upper_bounds(&gaussian(a), rho, &s, None).unwrap();
    assert!(check_v1(&gaussian(a), rho, &s).unwrap().passed());
    assert!(eb.bounded.unwrap() < 2.0 * m);
    let ep = energy_upper_bounds(&pole(0.02), rho, &s, Some(&z)).unwrap();
    assert!(rel(ep.pole.unwrap(), 5.0 / 3.0 * m) < 1e-14);
    assert_eq!(ep.bounded, None);
}

#[test]
fn sup_threshold_grows_towards_the_mass_critical_power() {
    let ps = [4.0, 3.8, 3.6, 3.45];
    let params: Vec<ScalingParams> = ps.iter().map(|p| ScalingParams::from_ground_state(&ground(3, *p))).collect();
    let rho = 0.5 * params.iter().map(|s| s.rho0).fold(f64::INFINITY, f64::min);
    let rhs: Vec<f64> = params.iter().map(|s| v1_thresholds(s, rho).unwrap().0).collect();
    assert!(rhs.windows(2).all(|w| w[1] > w[0]), "{rhs:?}");
}
