use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use henon_cli::commands::{self, CatalogParams, Format, SolveOptions};
use henon_cli::config::{parse_catalog, Axis, Method, RunConfig};
use henon_cli::Failure;

#[derive(Parser)]
#[command(name = "henon", version, about = "Orlicz g-Laplacian Hénon problem toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// TOML run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    /// G as `family:key=value,...`, e.g. `power:p=2,c=0.5`.
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file (a directory for `solve`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Indices, Δ2 constant and conjugate samples of a catalog N-function.
    Catalog {
        family: String,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
    },
    /// Classify a problem against the existence and nonexistence criteria.
    Classify {
        #[command(flatten)]
        common: Common,
    },
    /// Compute a positive radial solution.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[arg(long)]
        grid_size: Option<usize>,
        #[arg(long)]
        eps_reg: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Solve even when the classification rules it out.
        #[arg(long)]
        force: bool,
    },
    /// Run diagnostics on a profile file (`r,u,du` CSV or JSON).
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        profile: PathBuf,
        /// Subset of pohozaev,strauss,residual,levels; all by default.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
        /// `henon` or `constant:<value>`.
        #[arg(long, default_value = "henon")]
        source: String,
    },
    /// Classify every point of an (alpha, q) grid with H = t^q.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `min,max,count`
        #[arg(long)]
        alpha_range: Option<String>,
        /// `min,max,count`
        #[arg(long)]
        q_range: Option<String>,
        /// Evaluate grid points one after another.
        #[arg(long)]
        serial: bool,
        /// Worker threads for the parallel sweep (0 = rayon default).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let s = &mut cfg.spec;
    s.n = common.n.or(s.n);
    s.alpha = common.alpha.or(s.alpha);
    if let Some(g) = &common.g {
        s.g = Some(parse_catalog(g, "--g")?);
    }
    if let Some(h) = &common.h {
        s.h = Some(parse_catalog(h, "--h")?);
    }
    if let Some(r) = &common.r {
        s.r = Some(parse_catalog(r, "--r")?);
    }
    cfg.seed = common.seed.or(cfg.seed);
    if let Some(seed) = cfg.seed {
        cfg.solver.seed = seed;
    }
    Ok(cfg)
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::config(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Catalog { family, p, q, r, s, c } => {
            print!("{}", commands::catalog(&family, &CatalogParams { p, q, r, s, c })?);
        }
        Command::Classify { common } => {
            let cfg = load(&common)?;
            emit(&commands::classify_cmd(&cfg, common.format)?, common.out.as_ref())?;
        }
        Command::Solve { common, method, grid_size, eps_reg, tol, force } => {
            let mut cfg = load(&common)?;
            cfg.solve.grid_size = grid_size.or(cfg.solve.grid_size);
            if let Some(e) = eps_reg {
                cfg.solver.epsilon_reg = e;
            }
            if let Some(t) = tol {
                cfg.solver.residual_tol = t;
            }
            let opts = SolveOptions {
                method: method.or(cfg.solve.method).unwrap_or(Method::Shooting),
                force: force || cfg.solve.force.unwrap_or(false),
                out: common.out.as_deref(),
            };
            print!("{}", commands::solve_cmd(&cfg, &opts)?);
        }
        Command::Verify { common, profile, checks, source } => {
            let cfg = load(&common)?;
            let u = commands::load_profile(&profile)?;
            emit(&commands::verify_cmd(&cfg, &u, &checks, &source)?, common.out.as_ref())?;
        }
        Command::Sweep { common, alpha_range, q_range, serial, threads } => {
            let mut cfg = load(&common)?;
            if let Some(a) = alpha_range {
                cfg.sweep.alpha = Some(Axis::parse(&a, "--alpha-range")?);
            }
            if let Some(q) = q_range {
                cfg.sweep.q = Some(Axis::parse(&q, "--q-range")?);
            }
            let text = if serial {
                commands::sweep_cmd(&cfg, false)?
            } else {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| Failure::config(format!("thread pool: {e}")))?;
                pool.install(|| commands::sweep_cmd(&cfg, true))?
            };
            emit(&text, common.out.as_ref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
