//! Parameter sweeps: β-bifurcation branches with fold detection, the
//! Palais–Smale threshold estimate β_ps(α), and classification of the
//! (α,β) plane by solution count and energy signs.

use rayon::prelude::*;
use serde::Serialize;

use crate::critical;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::Params;
use crate::shooting::{self, Solution};
use crate::special;

/// One solution snapshot on a branch.
#[derive(Debug, Clone, Serialize)]
pub struct BranchSample {
    pub beta: f64,
    pub slope: f64,
    pub linf: f64,
    pub energy: f64,
    pub branch_id: usize,
}

/// A maximal run of solutions connected by nearest-slope continuation.
/// Samples pass the shooting gates at build time, and consecutive slopes
/// within a branch jump by less than 20% relative.
#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub alpha: f64,
    pub samples: Vec<BranchSample>,
}

/// β where the enumeration failed, with the error text.
#[derive(Debug, Clone, Serialize)]
pub struct SweepFailure {
    pub beta: f64,
    pub message: String,
}

/// Output of a β-sweep: threaded branches, fold locations (midpoints of
/// consecutive β samples where the solution count changed), and failed
/// samples, which are recorded and skipped rather than dropped.
#[derive(Debug, Clone, Serialize)]
pub struct Sweep {
    pub branches: Vec<Branch>,
    pub folds: Vec<f64>,
    pub failures: Vec<SweepFailure>,
}

/// Region of the (α,β) plane by solution count and energy signs. `Failed`
/// marks a cell whose classification errored inside a map; it is a solver
/// outcome, never a claim about the problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegionLabel {
    NoSolution,
    ExistsPositiveEnergy,
    ExistsNegativeEnergy,
    TwoMixedEnergy,
    TwoNegativeEnergy,
    ThreeNegativeEnergy,
    Boundary,
    Failed,
}

impl RegionLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionLabel::NoSolution => "NoSolution",
            RegionLabel::ExistsPositiveEnergy => "ExistsPositiveEnergy",
            RegionLabel::ExistsNegativeEnergy => "ExistsNegativeEnergy",
            RegionLabel::TwoMixedEnergy => "TwoMixedEnergy",
            RegionLabel::TwoNegativeEnergy => "TwoNegativeEnergy",
            RegionLabel::ThreeNegativeEnergy => "ThreeNegativeEnergy",
            RegionLabel::Boundary => "Boundary",
            RegionLabel::Failed => "Failed",
        }
    }
}

/// One cell of a region map.
#[derive(Debug, Clone, Serialize)]
pub struct RegionCell {
    pub alpha: f64,
    pub beta: f64,
    pub label: RegionLabel,
}

/// Absolute half-width of the guard band around region boundaries. Counts
/// flip across λ₁(p), λ₁(q), β*(α) and β_ps(α), and within this band the
/// enumeration is too marginal to certify a label.
pub const BOUNDARY_TOL: f64 = 1e-2;

/// Default absolute tolerance of the β_ps bisection.
pub const BPS_TOL: f64 = 1e-4;

/// How far above β*(α) the upward search for an empty β may go.
const BPS_CAP: f64 = 1e3;

fn lambda1(r: f64) -> Result<f64> {
    Ok((r - 1.0) * special::pi_p(r)?.powf(r))
}

/// Sweep β at fixed α and thread the per-β solution sets into branches by
/// nearest-slope continuation. Per-β enumerations run in parallel; the
/// threading itself is sequential and deterministic.
pub fn sweep_beta(
    alpha: f64,
    beta_range: (f64, f64),
    n_beta: usize,
    base: &Params,
) -> Result<Sweep> {
    sweep_beta_with(alpha, beta_range, n_beta, base, &shooting::ShootConfig::default())
}

/// [`sweep_beta`] with explicit integrator tolerances, for checking that the
/// fold structure is not a tolerance artifact.
pub fn sweep_beta_with(
    alpha: f64,
    beta_range: (f64, f64),
    n_beta: usize,
    base: &Params,
    cfg: &shooting::ShootConfig,
) -> Result<Sweep> {
    let (lo, hi) = beta_range;
    if !(lo < hi) {
        return Err(Error::domain("beta range must satisfy lo < hi"));
    }
    if n_beta < 2 {
        return Err(Error::domain("sweep needs at least two beta samples"));
    }
    let grid = Grid::default();
    let betas: Vec<f64> = (0..n_beta)
        .map(|k| lo + (hi - lo) * k as f64 / (n_beta - 1) as f64)
        .collect();
    let runs: Vec<(f64, Result<Vec<Solution>>)> = betas
        .par_iter()
        .map(|&beta| {
            let run = Params::new(base.p, base.q, alpha, beta).and_then(|ps| {
                shooting::find_solutions(
                    &ps,
                    shooting::DEFAULT_SCAN,
                    shooting::DEFAULT_N_SCAN,
                    &grid,
                    cfg,
                )
            });
            (beta, run)
        })
        .collect();
    Ok(thread_branches(alpha, runs))
}

/// Nearest-slope continuation. Solutions are sorted by slope first, so the
/// assignment does not depend on enumeration order; matching is greedy on
/// the relative slope gap with a 20% jump cap, unmatched solutions open new
/// branches and unmatched branches close.
fn thread_branches(alpha: f64, runs: Vec<(f64, Result<Vec<Solution>>)>) -> Sweep {
    let mut branches: Vec<Branch> = Vec::new();
    let mut active: Vec<(usize, f64)> = Vec::new();
    let mut folds: Vec<f64> = Vec::new();
    let mut failures: Vec<SweepFailure> = Vec::new();
    let mut prev: Option<(f64, usize)> = None;
    for (beta, run) in runs {
        let mut sols = match run {
            Ok(s) => s,
            Err(e) => {
                failures.push(SweepFailure {
                    beta,
                    message: e.to_string(),
                });
                continue;
            }
        };
        sols.sort_by(|a, b| a.slope.total_cmp(&b.slope));

        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ai, &(_, s_old)) in active.iter().enumerate() {
            for (sj, sol) in sols.iter().enumerate() {
                let rel = (sol.slope - s_old).abs() / s_old.abs().max(1e-12);
                if rel < 0.2 {
                    pairs.push((rel, ai, sj));
                }
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut branch_of = vec![usize::MAX; sols.len()];
        let mut active_taken = vec![false; active.len()];
        for (_, ai, sj) in pairs {
            if !active_taken[ai] && branch_of[sj] == usize::MAX {
                active_taken[ai] = true;
                branch_of[sj] = active[ai].0;
            }
        }
        let mut next_active: Vec<(usize, f64)> = Vec::new();
        for (sj, sol) in sols.iter().enumerate() {
            let id = if branch_of[sj] != usize::MAX {
                branch_of[sj]
            } else {
                branches.push(Branch {
                    alpha,
                    samples: Vec::new(),
                });
                branches.len() - 1
            };
            branches[id].samples.push(BranchSample {
                beta,
                slope: sol.slope,
                linf: sol.linf,
                energy: sol.energy,
                branch_id: id,
            });
            next_active.push((id, sol.slope));
        }
        active = next_active;

        if let Some((pb, pc)) = prev {
            if pc != sols.len() {
                folds.push(0.5 * (pb + beta));
            }
        }
        prev = Some((beta, sols.len()));
    }
    Sweep {
        branches,
        folds,
        failures,
    }
}

/// Estimate β_ps(α) = sup{β : the problem has a positive solution} by
/// bisection between β*(α), where solutions exist, and an empty β found by
/// doubling upward. Returns the midpoint of the final bracket; if even
/// β*(α) is empty the threshold has collapsed onto the curve and that value
/// is returned (the α ≥ α* regime, where β_ps = λ₁(q)).
pub fn beta_ps_estimate(alpha: f64, base: &Params, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let grid = Grid::default();
    let start = critical::beta_star_curve(alpha, base.p, base.q, &grid)?.beta_star_alpha;
    let exists = |beta: f64| -> Result<bool> {
        let ps = Params::new(base.p, base.q, alpha, beta)?;
        match shooting::find_solutions_default(&ps) {
            Ok(v) => Ok(!v.is_empty()),
            // a marginal sample (poorly conditioned time-map root) gets one
            // retry under tighter integration; a second failure propagates
            // rather than skewing the bracket
            Err(_) => {
                let tight = shooting::ShootConfig {
                    rtol: 2.5e-11,
                    atol: 2.5e-13,
                    ..Default::default()
                };
                shooting::find_solutions(
                    &ps,
                    shooting::DEFAULT_SCAN,
                    shooting::DEFAULT_N_SCAN,
                    &grid,
                    &tight,
                )
                .map(|v| !v.is_empty())
            }
        }
    };
    let mut lo = start;
    if !exists(lo)? {
        return Ok(lo);
    }
    let mut width = tol.max(0.05);
    let mut hi = lo + width;
    loop {
        if hi - start > BPS_CAP {
            return Err(Error::convergence(format!(
                "threshold exceeds cap: solutions persist beyond beta = {hi:.3e}"
            )));
        }
        if !exists(hi)? {
            break;
        }
        lo = hi;
        width *= 2.0;
        hi = lo + width;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if exists(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Curve values a classification compares against: β*(α) where the curve is
/// defined, and the β_ps estimate where it is finite and relevant (α above
/// λ₁(p); at or beyond α* the paper identity β_ps = λ₁(q) replaces the
/// bisection).
fn column_boundaries(alpha: f64, base: &Params) -> Result<(Option<f64>, Option<f64>)> {
    let (p, q) = (base.p, base.q);
    let lam1p = lambda1(p)?;
    let grid = Grid::default();
    let bstar = match critical::beta_star_curve(alpha, p, q, &grid) {
        Ok(s) => Some(s.beta_star_alpha),
        Err(Error::Domain(_)) => None,
        Err(e) => return Err(e),
    };
    let bps = if alpha > lam1p + BOUNDARY_TOL {
        let astar = critical::alpha_star_on(p, q, &grid)?;
        if alpha >= astar {
            Some(lambda1(q)?)
        } else {
            match beta_ps_estimate(alpha, base, BPS_TOL) {
                Ok(v) => Some(v),
                Err(Error::Convergence(_)) => None,
                Err(e) => return Err(e),
            }
        }
    } else {
        None
    };
    Ok((bstar, bps))
}

fn classify_core(
    alpha: f64,
    beta: f64,
    base: &Params,
    bstar: Option<f64>,
    bps: Option<f64>,
) -> Result<RegionLabel> {
    let near = |x: f64, c: f64| (x - c).abs() <= BOUNDARY_TOL;
    if near(alpha, lambda1(base.p)?) || near(beta, lambda1(base.q)?) {
        return Ok(RegionLabel::Boundary);
    }
    if bstar.is_some_and(|b| near(beta, b)) || bps.is_some_and(|b| near(beta, b)) {
        return Ok(RegionLabel::Boundary);
    }
    let ps = Params::new(base.p, base.q, alpha, beta)?;
    let sols = shooting::find_solutions_default(&ps)?;
    let neg = sols.iter().filter(|s| s.energy < 0.0).count();
    Ok(match (sols.len(), neg) {
        (0, _) => RegionLabel::NoSolution,
        (1, 1) => RegionLabel::ExistsNegativeEnergy,
        (1, 0) => RegionLabel::ExistsPositiveEnergy,
        (2, 2) => RegionLabel::TwoNegativeEnergy,
        (2, 1) => RegionLabel::TwoMixedEnergy,
        (3, 3) => RegionLabel::ThreeNegativeEnergy,
        // other sign patterns only arise inside a transition sliver the
        // guard band missed
        _ => RegionLabel::Boundary,
    })
}

/// Classify one point of the (α,β) plane by solution count and energy
/// signs, with a guard band around λ₁(p), λ₁(q), β*(α) and the β_ps
/// estimate where counts flip.
pub fn classify_region(alpha: f64, beta: f64, base: &Params) -> Result<RegionLabel> {
    let (bstar, bps) = column_boundaries(alpha, base)?;
    classify_core(alpha, beta, base, bstar, bps)
}

/// Classify the product grid, α-major then β ascending. Columns run in
/// parallel and share one boundary resolution per α; per-cell errors become
/// `Failed` cells, never an abort.
pub fn region_map(
    alpha_range: (f64, f64),
    beta_range: (f64, f64),
    n_alpha: usize,
    n_beta: usize,
    base: &Params,
) -> Result<Vec<RegionCell>> {
    if !(alpha_range.0 < alpha_range.1) || !(beta_range.0 < beta_range.1) {
        return Err(Error::domain("region ranges must satisfy lo < hi"));
    }
    if n_alpha < 2 || n_beta < 2 {
        return Err(Error::domain("region map needs at least a 2x2 grid"));
    }
    let alphas: Vec<f64> = (0..n_alpha)
        .map(|i| alpha_range.0 + (alpha_range.1 - alpha_range.0) * i as f64 / (n_alpha - 1) as f64)
        .collect();
    let betas: Vec<f64> = (0..n_beta)
        .map(|j| beta_range.0 + (beta_range.1 - beta_range.0) * j as f64 / (n_beta - 1) as f64)
        .collect();
    let columns: Vec<Vec<RegionCell>> = alphas
        .par_iter()
        .map(|&alpha| {
            let (bstar, bps) = column_boundaries(alpha, base).unwrap_or((None, None));
            betas
                .iter()
                .map(|&beta| RegionCell {
                    alpha,
                    beta,
                    label: classify_core(alpha, beta, base, bstar, bps)
                        .unwrap_or(RegionLabel::Failed),
                })
                .collect()
        })
        .collect();
    Ok(columns.into_iter().flatten().collect())
}
