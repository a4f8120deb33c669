//! Shooting enumeration against frozen values and the quadrant picture.

use pqlap::shooting::{eigenvalue_shooting, find_solutions_default, ShootConfig};
use pqlap::special::pi_p;
use pqlap::Params;

const LAM1P: f64 = 422.0089738602162;
const PI2: f64 = 9.869604401089358;
const BETA_STAR_GRID: f64 = 11.321617828096167;

#[test]
fn fig3_point_has_exactly_three_solutions() {
    let params = Params::new(6.0, 2.0, LAM1P - 0.1, BETA_STAR_GRID + 0.1).unwrap();
    let sols = find_solutions_default(&params).unwrap();
    assert_eq!(sols.len(), 3);

    let frozen = [
        (0.982144450089923, 0.403168762333892, -2.491289591804888e-2),
        (1.676689735067881, 0.784609529545124, -2.057501886577110e-2),
        (2.389298413783208, 1.135256965592028, -2.209489455662054e-2),
    ];
    for (s, (slope, linf, energy)) in sols.iter().zip(frozen) {
        assert!((s.slope - slope).abs() <= 1e-6 * slope, "slope {}", s.slope);
        assert!((s.linf - linf).abs() <= 1e-5, "linf {}", s.linf);
        assert!((s.energy - energy).abs() <= 1e-6, "energy {}", s.energy);
        assert!(s.residual <= 1e-8);
        assert!(s.symmetry_defect <= 1e-6 * s.linf);
        assert!(s.energy < 0.0);
        assert!(s.u.is_positive_interior());
    }
    for i in 0..3 {
        for j in i + 1..3 {
            assert!((sols[i].linf - sols[j].linf).abs() > 1e-2);
        }
    }
}

#[test]
fn spectral_corner_is_empty() {
    let params = Params::new(6.0, 2.0, LAM1P, PI2).unwrap();
    assert!(find_solutions_default(&params).unwrap().is_empty());
}

#[test]
fn quadrant_picture_matches_the_propositions() {
    // closed lower-left quadrant: nothing
    let ps = Params::new(6.0, 2.0, 200.0, 5.0).unwrap();
    assert!(find_solutions_default(&ps).unwrap().is_empty());

    // alpha above lambda1(p), beta below lambda1(q): positive energy
    let ps = Params::new(6.0, 2.0, 500.0, 5.0).unwrap();
    let sols = find_solutions_default(&ps).unwrap();
    assert!(!sols.is_empty());
    assert!(sols.iter().all(|s| s.energy > 0.0));

    // alpha below lambda1(p), beta above lambda1(q): negative energy
    let ps = Params::new(6.0, 2.0, 300.0, 11.0).unwrap();
    let sols = find_solutions_default(&ps).unwrap();
    assert!(!sols.is_empty());
    assert!(sols.iter().all(|s| s.energy < 0.0));
}

#[test]
fn nonpositive_alpha_gives_a_unique_solution() {
    for alpha in [-50.0, 0.0] {
        let ps = Params::new(6.0, 2.0, alpha, 11.0).unwrap();
        let sols = find_solutions_default(&ps).unwrap();
        assert_eq!(sols.len(), 1, "alpha = {alpha}");
        assert!(sols[0].energy < 0.0);
    }
}

#[test]
fn eigenvalue_shooting_matches_the_closed_forms() {
    let cfg = ShootConfig::default();
    let lam2 = eigenvalue_shooting(2.0, &cfg).unwrap();
    assert!((lam2 - PI2).abs() <= 1e-8, "lambda1(2) = {lam2}");

    let lam6 = eigenvalue_shooting(6.0, &cfg).unwrap();
    let closed = 5.0 * pi_p(6.0).unwrap().powi(6);
    assert!(
        (lam6 - closed).abs() <= 1e-6 * closed,
        "lambda1(6) = {lam6} vs {closed}"
    );
}
