use pqlap::critical::{alpha_star_on, beta_star_curve, beta_star_on};
use pqlap::fiber::{g_beta, h_alpha};
use pqlap::shooting::{eigenvalue_shooting, find_solutions_default, ShootConfig};
use pqlap::special::eigenpair;
use pqlap::{Grid, Params};
use std::time::Instant;

const LAM1P: f64 = 422.0089738602162;
const PI2: f64 = 9.869604401089358;
const BSTAR_TRUE: f64 = 11.3217808822533;

fn main() {
    // fig3 exact values
    let ps = Params::new(6.0, 2.0, LAM1P - 0.1, 11.321617828096167 + 0.1).unwrap();
    let t = Instant::now();
    let sols = find_solutions_default(&ps).unwrap();
    println!("fig3: {} sols [{:.1}s]", sols.len(), t.elapsed().as_secs_f64());
    for s in &sols {
        println!(
            "  slope {:.15} linf {:.15} E {:.15e} res {:.2e} sym {:.2e} grid {}",
            s.slope, s.linf, s.energy, s.residual, s.symmetry_defect, s.u.grid().n_nodes()
        );
    }

    // corner and quadrants
    for (a, b) in [(LAM1P, PI2), (200.0, 5.0), (500.0, 5.0), (300.0, 11.0), (-50.0, 11.0), (0.0, PI2 + 1.0)] {
        let ps = Params::new(6.0, 2.0, a, b).unwrap();
        let t = Instant::now();
        let sols = find_solutions_default(&ps).unwrap();
        let es: Vec<f64> = sols.iter().map(|s| s.energy).collect();
        println!("({a}, {b}): {} sols E {:?} [{:.1}s]", sols.len(), es, t.elapsed().as_secs_f64());
    }

    // eigenvalue gaps
    let cfg = ShootConfig::default();
    let e2 = eigenvalue_shooting(2.0, &cfg).unwrap();
    let e6 = eigenvalue_shooting(6.0, &cfg).unwrap();
    println!("eig2 gap {:.3e}  eig6 {:.15} gap rel {:.3e}", (e2 - PI2).abs(), e6, (e6 - LAM1P).abs() / LAM1P);

    // critical values on two grids
    let g1 = Grid::default();
    let g2 = Grid::new(4097).unwrap();
    let b1 = beta_star_on(6.0, 2.0, &g1).unwrap();
    let b2 = beta_star_on(6.0, 2.0, &g2).unwrap();
    println!("beta* 2049 {:.15} err {:.3e}", b1, (b1 - BSTAR_TRUE).abs());
    println!("beta* 4097 {:.15} err {:.3e}", b2, (b2 - BSTAR_TRUE).abs());
    let a1 = alpha_star_on(6.0, 2.0, &g1).unwrap();
    println!("alpha* 2049 {:.15} vs pi^6 rel {:.3e}", a1, (a1 - std::f64::consts::PI.powi(6)).abs() / a1);

    // identity residuals
    let phip = eigenpair(6.0, &g1).unwrap();
    let phiq = eigenpair(2.0, &g1).unwrap();
    let gb = g_beta(&phip.phi, &Params::new(6.0, 2.0, 0.0, b1).unwrap());
    let ha = h_alpha(&phiq.phi, &Params::new(6.0, 2.0, a1, PI2 + 1.0).unwrap());
    let gscale = phip.phi.dnorm_pow(2.0);
    let hscale = phiq.phi.dnorm_pow(6.0);
    println!("G_b*(phi_p) rel {:.3e}  H_a*(phi_q) rel {:.3e}", gb.abs() / gscale, ha.abs() / hscale);

    // curve samples
    for a in [LAM1P, 600.0, 800.0, 1000.0] {
        let t = Instant::now();
        let s = beta_star_curve(a, 6.0, 2.0, &g1).unwrap();
        println!(
            "curve({a}): {:.15} conv {} iters {} spread {:.3e} [{:.1}s]",
            s.beta_star_alpha, s.converged, s.iterations, s.start_spread, t.elapsed().as_secs_f64()
        );
    }
}
