//! Sweep threading, fold detection, the persistence threshold, and region labels.

use pqlap::bifurcation::{
    beta_ps_estimate, classify_region, region_map, sweep_beta, sweep_beta_with, RegionLabel, Sweep,
};
use pqlap::critical::beta_star_curve;
use pqlap::shooting::{find_solutions, DEFAULT_N_SCAN, DEFAULT_SCAN};
use pqlap::shooting::ShootConfig;
use pqlap::special::pi_p;
use pqlap::{Grid, Params};

const LAM1P: f64 = 422.0089738602162;
const PI2: f64 = 9.869604401089358;
const BETA_STAR_GRID: f64 = 11.321617828096167;

fn base() -> Params {
    Params::new(6.0, 2.0, 100.0, PI2 + 1.0).unwrap()
}

/// Solution count at each sampled beta, in beta order. Betas where the
/// enumeration found nothing do not appear.
fn per_beta_counts(sw: &Sweep) -> Vec<(f64, usize)> {
    let mut betas: Vec<f64> = sw
        .branches
        .iter()
        .flat_map(|b| b.samples.iter().map(|s| s.beta))
        .collect();
    betas.sort_by(f64::total_cmp);
    betas.dedup();
    betas
        .iter()
        .map(|&bb| {
            let c = sw
                .branches
                .iter()
                .flat_map(|br| br.samples.iter())
                .filter(|s| s.beta == bb)
                .count();
            (bb, c)
        })
        .collect()
}

fn assert_s_shape(sw: &Sweep, fold_windows: [(f64, f64); 2]) {
    assert!(sw.failures.is_empty(), "failures: {:?}", sw.failures);
    assert_eq!(sw.folds.len(), 2, "folds: {:?}", sw.folds);
    for (f, (lo, hi)) in sw.folds.iter().zip(fold_windows) {
        assert!(lo < *f && *f < hi, "fold {f} outside ({lo}, {hi})");
    }
    let counts = per_beta_counts(sw);
    assert_eq!(counts.first().map(|c| c.1), Some(1));
    assert_eq!(counts.last().map(|c| c.1), Some(1));
    assert!(counts.iter().all(|&(_, c)| c == 1 || c == 3), "{counts:?}");
    // the count-3 betas form one contiguous run
    let triple: Vec<usize> = counts
        .iter()
        .enumerate()
        .filter(|(_, &(_, c))| c == 3)
        .map(|(i, _)| i)
        .collect();
    assert!(!triple.is_empty());
    assert_eq!(triple[triple.len() - 1] - triple[0] + 1, triple.len());
}

#[test]
fn fig3_sweep_shows_the_s_shape() {
    let sw = sweep_beta(
        LAM1P - 0.1,
        (PI2 + 0.05, BETA_STAR_GRID + 0.5),
        40,
        &base(),
    )
    .unwrap();
    assert_s_shape(&sw, [(11.35, 11.46), (11.46, 11.60)]);
    assert_eq!(sw.branches.len(), 3);
}

#[test]
fn fold_pair_survives_doubling_and_tighter_tolerances() {
    let range = (PI2 + 0.05, BETA_STAR_GRID + 0.5);
    let fine = sweep_beta(LAM1P - 0.1, range, 80, &base()).unwrap();
    assert_s_shape(&fine, [(11.37, 11.45), (11.47, 11.57)]);

    let tight = ShootConfig {
        rtol: 5e-11,
        atol: 5e-13,
        x_max: 50.0,
    };
    let sw = sweep_beta_with(LAM1P - 0.1, range, 40, &base(), &tight).unwrap();
    assert_s_shape(&sw, [(11.35, 11.46), (11.46, 11.60)]);
}

#[test]
fn alpha_zero_sweep_is_a_single_branch() {
    let sw = sweep_beta(0.0, (PI2 + 0.3, PI2 + 2.0), 8, &base()).unwrap();
    assert!(sw.failures.is_empty());
    assert!(sw.folds.is_empty());
    assert_eq!(sw.branches.len(), 1);
    assert_eq!(sw.branches[0].samples.len(), 8);
    assert!(sw.branches[0].samples.iter().all(|s| s.energy < 0.0));
}

#[test]
fn subcritical_quadrant_sweep_is_empty() {
    let sw = sweep_beta(200.0, (5.0, 9.5), 6, &base()).unwrap();
    assert!(sw.branches.is_empty());
    assert!(sw.folds.is_empty());
    assert!(sw.failures.is_empty());
}

#[test]
fn persistence_gap_at_the_p_eigenvalue() {
    let bps = beta_ps_estimate(LAM1P, &base(), 1e-4).unwrap();
    assert!(bps - BETA_STAR_GRID > 1e-3, "gap {:.3e}", bps - BETA_STAR_GRID);
    assert!(bps > 11.50 && bps < 11.55, "bps {bps}");
}

#[test]
fn persistence_threshold_is_nonincreasing() {
    let b450 = beta_ps_estimate(450.0, &base(), 1e-4).unwrap();
    let b500 = beta_ps_estimate(500.0, &base(), 1e-4).unwrap();
    assert!(b450 > 10.95 && b450 < 11.05, "bps(450) = {b450}");
    assert!(b500 > 10.51 && b500 < 10.61, "bps(500) = {b500}");
    assert!(b500 <= b450 + 2e-4);
    // the threshold sits above the critical curve
    let grid = Grid::default();
    let c450 = beta_star_curve(450.0, 6.0, 2.0, &grid).unwrap().beta_star_alpha;
    let c500 = beta_star_curve(500.0, 6.0, 2.0, &grid).unwrap().beta_star_alpha;
    assert!(b450 > c450 && b500 > c500);
}

#[test]
fn persistence_threshold_collapses_past_alpha_star() {
    let bps = beta_ps_estimate(1000.0, &base(), 1e-4).unwrap();
    assert!((bps - PI2).abs() < 1e-6, "bps(1000) = {bps}");
}

#[test]
fn classifier_matches_the_multiplicity_theorems() {
    // two solutions of opposite energy sign between lambda1(q) and beta*(alpha)
    let l = classify_region(425.0, 10.5, &base()).unwrap();
    assert_eq!(l, RegionLabel::TwoMixedEnergy);
    // two negative-energy solutions between beta*(alpha) and the threshold
    let l = classify_region(425.0, 11.38, &base()).unwrap();
    assert_eq!(l, RegionLabel::TwoNegativeEnergy);
    // closed lower-left quadrant is empty
    let l = classify_region(200.0, 5.0, &base()).unwrap();
    assert_eq!(l, RegionLabel::NoSolution);
    // alpha pinned on the eigenvalue is flagged, not classified
    let l = classify_region(LAM1P, 11.0, &base()).unwrap();
    assert_eq!(l, RegionLabel::Boundary);
}

#[test]
fn region_map_resolves_the_triple_pocket() {
    let cells = region_map((LAM1P - 0.7, LAM1P + 0.3), (11.30, 11.60), 6, 6, &base()).unwrap();
    assert_eq!(cells.len(), 36);
    // alpha-major, beta-minor ordering
    for w in cells.windows(2) {
        assert!(
            w[0].alpha < w[1].alpha || (w[0].alpha == w[1].alpha && w[0].beta < w[1].beta)
        );
    }
    assert!(cells.iter().all(|c| c.label != RegionLabel::Failed));
    assert!(cells.iter().all(|c| c.label != RegionLabel::Boundary));
    for alpha in (0..6).map(|i| LAM1P - 0.7 + i as f64 * 0.2) {
        let col: Vec<RegionLabel> = cells
            .iter()
            .filter(|c| (c.alpha - alpha).abs() < 1e-9)
            .map(|c| c.label)
            .collect();
        assert_eq!(col.len(), 6);
        if alpha < LAM1P {
            // single-solution background with the fold pocket cutting through
            assert!(col
                .iter()
                .all(|&l| l == RegionLabel::ExistsNegativeEnergy
                    || l == RegionLabel::ThreeNegativeEnergy));
            assert!(col.contains(&RegionLabel::ThreeNegativeEnergy), "{col:?}");
            assert!(col.contains(&RegionLabel::ExistsNegativeEnergy));
        } else {
            // two solutions up to the persistence threshold, nothing above
            assert!(col
                .iter()
                .all(|&l| l == RegionLabel::TwoNegativeEnergy || l == RegionLabel::NoSolution));
            let last_two = col
                .iter()
                .rposition(|&l| l == RegionLabel::TwoNegativeEnergy)
                .expect("pocket present");
            let first_none = col
                .iter()
                .position(|&l| l == RegionLabel::NoSolution)
                .expect("threshold inside the window");
            assert!(last_two < first_none);
        }
    }
}

#[test]
fn region_map_finds_no_triples_for_moderate_p() {
    let lam13 = 2.0 * pi_p(3.0).unwrap().powi(3);
    let base32 = Params::new(3.0, 2.0, 10.0, 10.5).unwrap();

    let sw = sweep_beta(lam13 - 0.1, (PI2 + 0.05, 10.63), 12, &base32).unwrap();
    assert!(sw.folds.is_empty(), "folds: {:?}", sw.folds);
    assert!(per_beta_counts(&sw).iter().all(|&(_, c)| c == 1));

    let cells = region_map((lam13 - 1.5, lam13 + 0.5), (10.0, 10.53), 2, 2, &base32).unwrap();
    let labels: Vec<RegionLabel> = cells.iter().map(|c| c.label).collect();
    assert_eq!(
        labels,
        vec![
            RegionLabel::ExistsNegativeEnergy,
            RegionLabel::ExistsNegativeEnergy,
            RegionLabel::TwoMixedEnergy,
            RegionLabel::NoSolution,
        ]
    );

    // for p < 2q the pocket above the critical curve all but closes
    let grid = Grid::default();
    let bps = beta_ps_estimate(lam13 + 2.0, &base32, 1e-4).unwrap();
    let bst = beta_star_curve(lam13 + 2.0, 3.0, 2.0, &grid)
        .unwrap()
        .beta_star_alpha;
    assert!(bps >= bst - 1e-4);
    assert!(bps - bst < 2e-3, "gap {:.3e}", bps - bst);
}

#[test]
fn labels_survive_halved_shooting_tolerances() {
    let grid = Grid::default();
    let tight = ShootConfig {
        rtol: 5e-11,
        atol: 5e-13,
        x_max: 50.0,
    };
    for (alpha, beta) in [(425.0, 10.5), (425.0, 11.38), (LAM1P - 0.1, 11.48)] {
        let ps = Params::new(6.0, 2.0, alpha, beta).unwrap();
        let a = find_solutions(&ps, DEFAULT_SCAN, DEFAULT_N_SCAN, &grid, &ShootConfig::default())
            .unwrap();
        let b = find_solutions(&ps, DEFAULT_SCAN, DEFAULT_N_SCAN, &grid, &tight).unwrap();
        assert_eq!(a.len(), b.len(), "count changed at ({alpha}, {beta})");
        for (x, y) in a.iter().zip(&b) {
            assert!((x.slope - y.slope).abs() <= 1e-6 * x.slope);
            assert_eq!(x.energy < 0.0, y.energy < 0.0);
        }
    }
}
