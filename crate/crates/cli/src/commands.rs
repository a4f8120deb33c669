use crate::config::{Resolver, RunConfig};
use clap::Args;
use pqlap::bifurcation::{region_map, sweep_beta_with};
use pqlap::critical::{beta_star_curve_seeded, beta_star_on};
use pqlap::fiber::{self, FiberReport};
use pqlap::shooting::{
    find_solutions, ShootConfig, Solution, DEFAULT_N_SCAN, DEFAULT_SCAN,
};
use pqlap::special::{self, eigenpair};
use pqlap::variational::{global_minimize_seeded, minimize_truncated, mountain_pass, supersolution_defect};
use pqlap::{Error, Grid, Params, Result};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Args, Debug)]
pub struct ProblemOpts {
    /// larger exponent (default 6)
    #[arg(long)]
    pub p: Option<f64>,
    /// smaller exponent (default 2)
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Args, Debug)]
pub struct NumericOpts {
    /// nodes in the output grid (odd)
    #[arg(long)]
    pub grid: Option<usize>,
    /// relative tolerance of the shooting integrator
    #[arg(long)]
    pub rtol: Option<f64>,
    /// absolute tolerance of the shooting integrator
    #[arg(long)]
    pub atol: Option<f64>,
    /// give up on a trajectory past this point
    #[arg(long)]
    pub x_max: Option<f64>,
    /// lower end of the initial-slope scan
    #[arg(long)]
    pub s_lo: Option<f64>,
    /// upper end of the initial-slope scan
    #[arg(long)]
    pub s_hi: Option<f64>,
    /// slope samples in the scan
    #[arg(long)]
    pub n_scan: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EigArgs {
    /// exponent of the r-Laplacian
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug)]
pub struct FiberArgs {
    #[command(flatten)]
    pub prob: ProblemOpts,
    /// probe direction: phi-q or phi-p
    #[arg(long)]
    pub direction: Option<String>,
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    /// samples along alpha (default 17)
    #[arg(long)]
    pub n_alpha: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ShootArgs {
    #[command(flatten)]
    pub prob: ProblemOpts,
    #[command(flatten)]
    pub num: NumericOpts,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub prob: ProblemOpts,
    /// global or truncated
    #[arg(long)]
    pub method: Option<String>,
    /// beta at which the supersolution for the truncated method is taken
    #[arg(long)]
    pub w_beta: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug)]
pub struct MpassArgs {
    #[command(flatten)]
    pub prob: ProblemOpts,
}

#[derive(Args, Debug)]
pub struct BifurcateArgs {
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta_min: Option<f64>,
    #[arg(long)]
    pub beta_max: Option<f64>,
    /// beta samples (default 41)
    #[arg(long)]
    pub n_beta: Option<usize>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
}

#[derive(Args, Debug)]
pub struct MapArgs {
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub beta_min: Option<f64>,
    #[arg(long)]
    pub beta_max: Option<f64>,
    /// cells along alpha (default 9)
    #[arg(long)]
    pub n_alpha: Option<usize>,
    /// cells along beta (default 9)
    #[arg(long)]
    pub n_beta: Option<usize>,
}

#[derive(Args, Debug)]
pub struct Fig3Args {
    #[arg(long)]
    pub grid: Option<usize>,
}

/// One solution as it appears in JSON output.
#[derive(Serialize)]
pub struct SolutionRow {
    pub slope: f64,
    pub linf: f64,
    pub energy: f64,
    pub residual: f64,
    pub symmetry_defect: f64,
    pub grid_nodes: usize,
}

impl From<&Solution> for SolutionRow {
    fn from(s: &Solution) -> Self {
        SolutionRow {
            slope: s.slope,
            linf: s.linf,
            energy: s.energy,
            residual: s.residual,
            symmetry_defect: s.symmetry_defect,
            grid_nodes: s.u.grid().n_nodes(),
        }
    }
}

fn fmt17(x: f64) -> String {
    format!("{:.16e}", x)
}

fn json_doc<T: Serialize>(doc: &T) -> Result<String> {
    serde_json::to_string_pretty(doc)
        .map(|s| s + "\n")
        .map_err(|e| Error::domain(format!("serialization: {e}")))
}

fn config_comment(cfg: &RunConfig) -> Result<String> {
    serde_json::to_string(cfg)
        .map(|s| format!("# config: {s}\n"))
        .map_err(|e| Error::domain(format!("serialization: {e}")))
}

/// Sup distance between two solutions relative to the larger peak; the finer
/// grid is restricted onto the coarser one first.
fn sup_gap(a: &Solution, b: &Solution) -> Result<f64> {
    let (fine, coarse) = if a.u.grid().n_nodes() >= b.u.grid().n_nodes() {
        (&a.u, &b.u)
    } else {
        (&b.u, &a.u)
    };
    let fine = fine.downsample_to(coarse.grid())?;
    let d = fine
        .values()
        .iter()
        .zip(coarse.values())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok(d / a.linf.max(b.linf))
}

fn resolve_problem(res: &Resolver, a: &ProblemOpts, cfg: &mut RunConfig) -> Result<Params> {
    let p = res.f64("p", a.p, 6.0)?;
    let q = res.f64("q", a.q, 2.0)?;
    let alpha = res.f64_req("alpha", a.alpha)?;
    let beta = res.f64_req("beta", a.beta)?;
    cfg.p = Some(p);
    cfg.q = Some(q);
    cfg.alpha = Some(alpha);
    cfg.beta = Some(beta);
    Params::new(p, q, alpha, beta)
}

fn resolve_shoot_config(cfg: &RunConfig) -> Result<ShootConfig> {
    if !(cfg.rtol > 0.0 && cfg.atol > 0.0 && cfg.x_max > 0.0) {
        return Err(Error::domain("tolerances and x-max must be positive"));
    }
    Ok(ShootConfig {
        rtol: cfg.rtol,
        atol: cfg.atol,
        x_max: cfg.x_max,
    })
}

pub fn eig(res: &Resolver, a: &EigArgs, mut cfg: RunConfig) -> Result<(RunConfig, String)> {
    let r = res.f64_req("r", a.r)?;
    cfg.r = Some(r);
    cfg.grid = res.usize("grid", a.grid, cfg.grid)?;
    let grid = Grid::new(cfg.grid)?;
    let pair = eigenpair(r, &grid)?;

    #[derive(Serialize)]
    struct Doc<'c> {
        config: &'c RunConfig,
        r: f64,
        pi_r: f64,
        lambda1: f64,
        lambda1_grid: f64,
    }
    let doc = Doc {
        config: &cfg,
        r,
        pi_r: special::pi_p(r)?,
        lambda1: pair.lambda1,
        lambda1_grid: pair.phi.dnorm_pow(r) / pair.phi.norm_pow(r),
    };
    let text = json_doc(&doc)?;
    Ok((cfg, text))
}

pub fn fiber_cmd(res: &Resolver, a: &FiberArgs, mut cfg: RunConfig) -> Result<(RunConfig, String)> {
    let params = resolve_problem(res, &a.prob, &mut cfg)?;
    let direction = res.string("direction", a.direction.clone(), "phi-q")?;
    cfg.direction = Some(direction.clone());
    cfg.grid = res.usize("grid", a.grid, cfg.grid)?;
    let grid = Grid::new(cfg.grid)?;
    let probe = match direction.as_str() {
        "phi-q" => eigenpair(params.q, &grid)?.phi,
        "phi-p" => eigenpair(params.p, &grid)?.phi,
        other => {
            return Err(Error::domain(format!(
                "direction must be phi-q or phi-p, got {other}"
            )))
        }
    };

    #[derive(Serialize)]
    struct Doc<'c> {
        config: &'c RunConfig,
        direction: String,
        report: FiberReport,
    }
    let doc = Doc {
        config: &cfg,
        direction,
        report: fiber::report(&probe, &params),
    };
    let text = json_doc(&doc)?;
    Ok((cfg, text))
}

pub fn critical_curve(res: &Resolver, a: &CurveArgs, mut cfg: RunConfig) -> Result<(RunConfig, String)> {
    let p = res.f64("p", a.p, 6.0)?;
    let q = res.f64("q", a.q, 2.0)?;
    let lo = res.f64_req("alpha_min", a.alpha_min)?;
    let hi = res.f64_req("alpha_max", a.alpha_max)?;
    let n = res.usize("n_alpha", a.n_alpha, 17)?;
    if !(lo <= hi) || n < 1 || (lo < hi && n < 2) {
        return Err(Error::domain("need alpha-min <= alpha-max and enough samples"));
    }
    cfg.p = Some(p);
    cfg.q = Some(q);
    cfg.alpha_min = Some(lo);
    cfg.alpha_max = Some(hi);
    cfg.n_alpha = Some(n);
    cfg.grid = res.usize("grid", a.grid, cfg.grid)?;
    let grid = Grid::new(cfg.grid)?;
    let seed = cfg.seed;

    let alphas: Vec<f64> = if n == 1 {
        vec![lo]
    } else {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    };
    let samples = alphas
        .par_iter()
        .map(|&alpha| beta_star_curve_seeded(alpha, p, q, &grid, seed))
        .collect::<Result<Vec<_>>>()?;

    let mut text = config_comment(&cfg)?;
    text.push_str("alpha,beta_star,converged,iterations,start_spread\n");
    for s in &samples {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt17(s.alpha),
            fmt17(s.beta_star_alpha),
            s.converged,
            s.iterations,
            fmt17(s.start_spread),
        ));
    }
    Ok((cfg, text))
}

fn run_shoot(params: &Params, cfg: &RunConfig) -> Result<Vec<Solution>> {
    let grid = Grid::new(cfg.grid)?;
    let shoot_cfg = resolve_shoot_config(cfg)?;
    let scan = (cfg.s_lo.unwrap_or(DEFAULT_SCAN.0), cfg.s_hi.unwrap_or(DEFAULT_SCAN.1));
    let n_scan = cfg.n_scan.unwrap_or(DEFAULT_N_SCAN);
    find_solutions(params, scan, n_scan, &grid, &shoot_cfg)
}

pub fn shoot(res: &Resolver, a: &ShootArgs, mut cfg: RunConfig) -> Result<(RunConfig, String)> {
    let params = resolve_problem(res, &a.prob, &mut cfg)?;
    cfg.grid = res.usize("grid", a.num.grid, cfg.grid)?;
    cfg.rtol = res.f64("rtol", a.num.rtol, cfg.rtol)?;
    cfg.atol = res.f64("atol", a.num.atol, cfg.atol)?;
    cfg.x_max = res.f64("x_max", a.num.x_max, cfg.x_max)?;
    cfg.s_lo = Some(res.f64("s_lo", a.num.s_lo, DEFAULT_SCAN.0)?);
    cfg.s_hi = Some(res.f64("s_hi", a.num.s_hi, DEFAULT_SCAN.1)?);
    cfg.n_scan = Some(res.usize("n_scan", a.num.n_scan, DEFAULT_N_SCAN)?);
    let sols = run_shoot(&params, &cfg)?;

    #[derive(Serialize)]
    struct Doc<'c> {
        config: &'c RunConfig,
        count: usize,
        solutions: Vec<SolutionRow>,
    }
    let doc = Doc {
        config: &cfg,
        count: sols.len(),
        solutions: sols.iter().map(SolutionRow::from).collect(),
    };
    let text = json_doc(&doc)?;
    Ok((cfg, text))
}

pub fn solve(res: &Resolver, a: &SolveArgs, mut cfg: RunConfig) -> Result<(RunConfig, String)> {
    let params = resolve_problem(res, &a.prob, &mut cfg)?;
    let method = res.string("method", a.method.clone(), "global")?;
    cfg.method = Some(method.clone());
    cfg.grid = res.usize("grid", a.grid, cfg.grid)?;

    let (solution, defect) = match method.as_str() {
        "global" => (global_minimize_seeded(&params, cfg.seed)?, None),
        "truncated" => {
            let w_beta = res.f64("w_beta", a.w_beta, params.beta + 0.05)?;
            cfg.w_beta = Some(w_beta);
            let wp = Params::new(params.p, params.q, params.alpha, w_beta)?;
            let above = run_shoot(&wp, &cfg)?;
            let w = above.last().ok_or_else(|| {
                Error::domain(format!("no shooting solution at w-beta = {w_beta} to truncate under"))
            })?;
            let defect = supersolution_defect(&w.u, &params);
            (minimize_truncated(&w.u, &params)?, Some(defect))
        }
        other => {
            return Err(Error::domain(format!(
                "method must be global or truncated, got {other}"
            )))
        }
    };

    #[derive(Serialize)]
    struct Doc<'c> {
        config: &'c RunConfig,
        method: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        supersolution_defect: Option<f64>,
        solution: SolutionRow,
    }
    let doc = Doc {
        config: &cfg,
        method,
        supersolution_defect: defect,
        solution: SolutionRow::from(&solution),
    };
    let text = json_doc(&doc)?;
    Ok((cfg, text))
}

pub fn mpass(res: &Resolver, a: &MpassArgs, mut cfg: RunConfig) -> Result<(RunConfig, String)> {
    let params = resolve_problem(res, &a.prob, &mut cfg)?;
    let ground = global_minimize_seeded(&params, cfg.seed)?;
    let saddle = mountain_pass(&ground, &params)?;

    #[derive(Serialize)]
    struct Doc<'c> {
        config: &'c RunConfig,
        ground: SolutionRow,
        mountain_pass: SolutionRow,
        sup_separation: f64,
    }
    let doc = Doc {
        config: &cfg,
        ground: SolutionRow::from(&ground),
        mountain_pass: SolutionRow::from(&saddle),
        sup_separation: sup_gap(&ground, &saddle)?,
    };
    let text = json_doc(&doc)?;
    Ok((cfg, text))
}

pub fn bifurcate(res: &Resolver, a: &BifurcateArgs, mut cfg: RunConfig) -> Result<(RunConfig, String)> {
    let p = res.f64("p", a.p, 6.0)?;
    let q = res.f64("q", a.q, 2.0)?;
    let alpha = res.f64_req("alpha", a.alpha)?;
    let lo = res.f64_req("beta_min", a.beta_min)?;
    let hi = res.f64_req("beta_max", a.beta_max)?;
    let n = res.usize("n_beta", a.n_beta, 41)?;
    cfg.p = Some(p);
    cfg.q = Some(q);
    cfg.alpha = Some(alpha);
    cfg.beta_min = Some(lo);
    cfg.beta_max = Some(hi);
    cfg.n_beta = Some(n);
    cfg.rtol = res.f64("rtol", a.rtol, cfg.rtol)?;
    cfg.atol = res.f64("atol", a.atol, cfg.atol)?;
    cfg.x_max = res.f64("x_max", a.x_max, cfg.x_max)?;
    let shoot_cfg = resolve_shoot_config(&cfg)?;
    let base = Params::new(p, q, alpha, lo)?;
    let sweep = sweep_beta_with(alpha, (lo, hi), n, &base, &shoot_cfg)?;

    let mut text = config_comment(&cfg)?;
    for f in &sweep.folds {
        text.push_str(&format!("# fold: {}\n", fmt17(*f)));
    }
    for f in &sweep.failures {
        text.push_str(&format!("# failure: beta={} {}\n", fmt17(f.beta), f.message));
    }
    text.push_str("beta,branch_id,slope,linf,energy\n");
    for branch in &sweep.branches {
        for s in &branch.samples {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt17(s.beta),
                s.branch_id,
                fmt17(s.slope),
                fmt17(s.linf),
                fmt17(s.energy),
            ));
        }
    }
    Ok((cfg, text))
}

pub fn region_map_cmd(res: &Resolver, a: &MapArgs, mut cfg: RunConfig) -> Result<(RunConfig, String)> {
    let p = res.f64("p", a.p, 6.0)?;
    let q = res.f64("q", a.q, 2.0)?;
    let a_lo = res.f64_req("alpha_min", a.alpha_min)?;
    let a_hi = res.f64_req("alpha_max", a.alpha_max)?;
    let b_lo = res.f64_req("beta_min", a.beta_min)?;
    let b_hi = res.f64_req("beta_max", a.beta_max)?;
    let n_alpha = res.usize("n_alpha", a.n_alpha, 9)?;
    let n_beta = res.usize("n_beta", a.n_beta, 9)?;
    cfg.p = Some(p);
    cfg.q = Some(q);
    cfg.alpha_min = Some(a_lo);
    cfg.alpha_max = Some(a_hi);
    cfg.beta_min = Some(b_lo);
    cfg.beta_max = Some(b_hi);
    cfg.n_alpha = Some(n_alpha);
    cfg.n_beta = Some(n_beta);
    let base = Params::new(p, q, 0.0, 1.0)?;
    let cells = region_map((a_lo, a_hi), (b_lo, b_hi), n_alpha, n_beta, &base)?;

    let mut text = config_comment(&cfg)?;
    text.push_str("alpha,beta,label\n");
    for c in &cells {
        text.push_str(&format!(
            "{},{},{}\n",
            fmt17(c.alpha),
            fmt17(c.beta),
            c.label.as_str(),
        ));
    }
    Ok((cfg, text))
}

pub fn repro_fig3(res: &Resolver, a: &Fig3Args, mut cfg: RunConfig) -> Result<(RunConfig, String)> {
    cfg.grid = res.usize("grid", a.grid, cfg.grid)?;
    let grid = Grid::new(cfg.grid)?;
    let lambda1_p = 5.0 * special::pi_p(6.0)?.powi(6);
    let beta_star = beta_star_on(6.0, 2.0, &grid)?;
    let alpha = lambda1_p - 0.1;
    let beta = beta_star + 0.1;
    cfg.p = Some(6.0);
    cfg.q = Some(2.0);
    cfg.alpha = Some(alpha);
    cfg.beta = Some(beta);
    let params = Params::new(6.0, 2.0, alpha, beta)?;
    let sols = run_shoot(&params, &cfg)?;

    let mut min_gap = f64::INFINITY;
    for i in 0..sols.len() {
        for j in i + 1..sols.len() {
            min_gap = min_gap.min((sols[i].linf - sols[j].linf).abs());
        }
    }

    #[derive(Serialize)]
    struct Doc<'c> {
        config: &'c RunConfig,
        lambda1_p: f64,
        beta_star: f64,
        alpha: f64,
        beta: f64,
        count: usize,
        solutions: Vec<SolutionRow>,
        #[serde(skip_serializing_if = "Option::is_none")]
        min_pairwise_gap: Option<f64>,
        all_energies_negative: bool,
    }
    let doc = Doc {
        config: &cfg,
        lambda1_p,
        beta_star,
        alpha,
        beta,
        count: sols.len(),
        solutions: sols.iter().map(SolutionRow::from).collect(),
        min_pairwise_gap: (sols.len() > 1).then_some(min_gap),
        all_energies_negative: !sols.is_empty() && sols.iter().all(|s| s.energy < 0.0),
    };
    let text = json_doc(&doc)?;
    Ok((cfg, text))
}
