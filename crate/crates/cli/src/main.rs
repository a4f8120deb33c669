mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::{
    BifurcateArgs, CurveArgs, EigArgs, FiberArgs, Fig3Args, MapArgs, MpassArgs, ShootArgs,
    SolveArgs,
};
use config::{Resolver, RunConfig};
use pqlap::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pqlap",
    version,
    about = "Positive solutions of the (p,q)-Laplacian Dirichlet problem on (0,1)"
)]
struct Cli {
    /// JSON file supplying option defaults; explicit flags win
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<std::path::PathBuf>,
    /// write the output document here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<String>,
    /// seed for randomized multistarts
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// cap on worker threads in sweeps (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// First Dirichlet eigenpair of the r-Laplacian
    Eig(EigArgs),
    /// Energy split, fiber scaling, and fibered functional along a probe direction
    Fiber(FiberArgs),
    /// Sample the critical curve beta*(alpha) to CSV
    CriticalCurve(CurveArgs),
    /// Enumerate positive solutions by shooting
    Shoot(ShootArgs),
    /// Variational minimizer, global or truncated under a supersolution
    Solve(SolveArgs),
    /// Mountain-pass solution grown from the global minimizer
    Mpass(MpassArgs),
    /// Sweep beta at fixed alpha: branches, folds, failures to CSV
    Bifurcate(BifurcateArgs),
    /// Classify solution multiplicity over an (alpha, beta) rectangle to CSV
    RegionMap(MapArgs),
    /// The three-solution benchmark configuration
    ReproFig3(Fig3Args),
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Eig(_) => "eig",
        Cmd::Fiber(_) => "fiber",
        Cmd::CriticalCurve(_) => "critical-curve",
        Cmd::Shoot(_) => "shoot",
        Cmd::Solve(_) => "solve",
        Cmd::Mpass(_) => "mpass",
        Cmd::Bifurcate(_) => "bifurcate",
        Cmd::RegionMap(_) => "region-map",
        Cmd::ReproFig3(_) => "repro-fig3",
    }
}

fn main() {
    std::process::exit(run(std::env::args_os()));
}

fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    64
                }
            };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e @ Error::Domain(_)) => {
            eprintln!("error: {e}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let res = Resolver::new(cli.config.as_deref())?;
    let seed = res.u64("seed", cli.seed, 0)?;
    let threads = res.usize_opt("threads", cli.threads)?;
    let out = res.string_opt("out", cli.out)?;
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::domain("threads must be at least 1"));
        }
        // results do not depend on the cap, so a pre-built pool is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let mut base = RunConfig::new(command_name(&cli.cmd));
    base.seed = seed;
    base.threads = threads;
    base.out = out.clone();

    let (_cfg, text) = match &cli.cmd {
        Cmd::Eig(a) => commands::eig(&res, a, base)?,
        Cmd::Fiber(a) => commands::fiber_cmd(&res, a, base)?,
        Cmd::CriticalCurve(a) => commands::critical_curve(&res, a, base)?,
        Cmd::Shoot(a) => commands::shoot(&res, a, base)?,
        Cmd::Solve(a) => commands::solve(&res, a, base)?,
        Cmd::Mpass(a) => commands::mpass(&res, a, base)?,
        Cmd::Bifurcate(a) => commands::bifurcate(&res, a, base)?,
        Cmd::RegionMap(a) => commands::region_map_cmd(&res, a, base)?,
        Cmd::ReproFig3(a) => commands::repro_fig3(&res, a, base)?,
    };

    match out {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| Error::domain(format!("cannot write {path}: {e}")))?,
        None => print!("{text}"),
    }
    Ok(())
}
