use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dbarstrip::damping::{build_damping_closed_form, build_damping_poisson, nontrivial_element, DampingConfig};
use dbarstrip::geometry::parse_strip_spec;
use dbarstrip::numerics::GridFunction;
use dbarstrip::runge::{runge_approximate, RungeConfig, RungeSetup};
use dbarstrip::solver::{
    solve_dbar, solve_laplace, source_grid, surjectivity_dashboard, DashboardConfig, Manufactured, SolveConfig,
    SolveRequest,
};
use dbarstrip::weights::{check_condition, parse_system_spec, parse_weight_spec, Condition};
use dbarstrip::{exec::Exec, quadrature::QuadConfig, Error};
use serde_json::json;
use std::path::{Path, PathBuf};

/// Weighted ∂̄ and Laplace solvers on generalized strips.
#[derive(Parser)]
#[command(name = "dbarstrip", version)]
struct Cli {
    /// Run every kernel on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify a weight system against (α), (ε)₀ and (N).
    Check {
        /// e.g. `arg(power:a=0.5)`, `val(powerlog:a=1,b=0)`
        #[arg(long)]
        weights: String,
    },
    /// Build a damping function and print its certificate.
    BuildDamping {
        /// A single weight, e.g. `power:a=0.5`.
        #[arg(long)]
        weight: String,
        #[arg(long)]
        h: f64,
        /// closed, poisson or auto
        #[arg(long, default_value = "auto")]
        method: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve ∂̄f = g.
    SolveDbar(SolveArgs),
    /// Solve Δu = g.
    SolveLaplace(SolveArgs),
    /// Weighted Runge approximation of the explicit non-trivial element.
    RungeApprox {
        #[arg(long, default_value = "const:h=1")]
        strip: String,
        #[arg(long)]
        weights: String,
        #[arg(long = "N", default_value_t = 1)]
        n: usize,
        #[arg(long = "M")]
        m: Option<usize>,
        #[arg(long = "K")]
        k: Option<usize>,
        #[arg(long, default_value_t = 2.0)]
        a: f64,
        #[arg(long, default_value_t = 3.0)]
        b: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// The rational damped sum (JSON).
        #[arg(long)]
        out: PathBuf,
        /// The certificate (JSON); printed when absent.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Evaluate the equivalent surjectivity statements side by side.
    Dashboard {
        #[arg(long, default_value = "const:h=1")]
        strip: String,
        #[arg(long)]
        weights: String,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value = "const:h=1")]
    strip: String,
    #[arg(long)]
    weights: String,
    #[arg(long = "N")]
    n: usize,
    #[arg(long = "M")]
    m: usize,
    #[arg(long = "aN")]
    a_n: f64,
    #[arg(long = "aM")]
    a_m: f64,
    /// CSV grid function or a built-in id (dbar-conj, laplace-conj2, zero).
    #[arg(long)]
    source: String,
    #[arg(long, default_value_t = 1e-2)]
    tol: f64,
    /// Grid step for built-in sources.
    #[arg(long, default_value_t = 0.1)]
    hx: f64,
    /// Half-width of the grid for built-in sources.
    #[arg(long = "X", default_value_t = 8.0)]
    x_max: f64,
    /// Writes `<out>.json` (report) and `<out>.csv` (solution).
    #[arg(long)]
    out: PathBuf,
}

fn write_json(path: Option<&Path>, v: &serde_json::Value) -> Result<()> {
    let s = serde_json::to_string_pretty(v)?;
    match path {
        Some(p) => std::fs::write(p, s).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{s}"),
    }
    Ok(())
}

fn with_ext(p: &Path, ext: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn solve(args: &SolveArgs, laplace: bool, exec: Exec) -> Result<bool> {
    let ws = parse_system_spec(&args.weights)?;
    let source = if Path::new(&args.source).is_file() {
        GridFunction::read_csv(Path::new(&args.source))?
    } else {
        let m = Manufactured::parse(&args.source)?;
        let strip = parse_strip_spec(&args.strip)?;
        m.source(&source_grid(&strip, args.a_m, args.x_max, args.hx)?)?
    };
    let req = SolveRequest::new(&ws, args.n, args.m, args.a_n, args.a_m, source).with_tol(args.tol);
    let cfg = SolveConfig::default().with_exec(exec);
    let rep = if laplace { solve_laplace(&req, &cfg)? } else { solve_dbar(&req, &cfg)? };
    write_json(Some(&with_ext(&args.out, "json")), &rep.summary())?;
    rep.solution.write_csv(&with_ext(&args.out, "csv"))?;
    eprintln!("residual {:e} (tol {:e}) accepted {}", rep.residual.value, rep.tol, rep.accepted);
    Ok(rep.accepted)
}

fn run(cli: Cli) -> Result<bool> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    match cli.cmd {
        Cmd::Check { weights } => {
            let ws = parse_system_spec(&weights)?;
            let quad = QuadConfig::default();
            let reports: Vec<_> = [Condition::Alpha, Condition::Eps0, Condition::NSystem]
                .iter()
                .map(|&c| check_condition(&ws, c, &quad))
                .collect();
            write_json(None, &json!({ "system": ws.describe(), "reports": reports }))?;
            Ok(true)
        }
        Cmd::BuildDamping { weight, h, method, out } => {
            let w = parse_weight_spec(&weight)?;
            let cfg = DampingConfig::default();
            let q = match method.as_str() {
                "closed" => build_damping_closed_form(&w, h, &cfg)?,
                "poisson" => build_damping_poisson(&w, h, &cfg)?,
                "auto" => match build_damping_closed_form(&w, h, &cfg) {
                    Err(Error::UnsupportedFamily(_)) => build_damping_poisson(&w, h, &cfg)?,
                    r => r?,
                },
                m => bail!("unknown method `{m}` (closed, poisson, auto)"),
            };
            let ok = q.certificate.min_margin >= 0.0;
            write_json(
                out.as_deref(),
                &json!({
                    "descriptor": q.descriptor(),
                    "ln_abs_q0": q.ln_abs_q0(),
                    "min_margin": q.certificate.min_margin,
                    "holomorphy_residual": q.certificate.holomorphy_residual,
                    "certified": ok,
                    "grid": q.certificate.points,
                }),
            )?;
            Ok(ok)
        }
        Cmd::SolveDbar(a) => solve(&a, false, exec),
        Cmd::SolveLaplace(a) => solve(&a, true, exec),
        Cmd::RungeApprox { strip, weights, n, m, k, a, b, eps, out, certificate } => {
            let strip = parse_strip_spec(&strip)?;
            let ws = parse_system_spec(&weights)?;
            let cfg = RungeConfig { exec, ..Default::default() };
            let setup = RungeSetup::new(&strip, &ws, n, m, k, a, b, &cfg)?;
            let f = nontrivial_element(&ws, &strip.scaled(a))?;
            let (sum, cert) = runge_approximate(&f, &setup, eps, &cfg)?;
            std::fs::write(&out, sum.to_json()?).with_context(|| format!("writing {}", out.display()))?;
            write_json(certificate.as_deref(), &serde_json::to_value(&cert)?)?;
            eprintln!(
                "achieved {:e} (eps {:e}) with {} terms, accepted {}",
                cert.achieved, eps, cert.nodes, cert.accepted
            );
            Ok(cert.accepted)
        }
        Cmd::Dashboard { strip, weights } => {
            let strip = parse_strip_spec(&strip)?;
            let ws = parse_system_spec(&weights)?;
            let mut cfg = DashboardConfig::default();
            cfg.solve.exec = exec;
            let rep = surjectivity_dashboard(&ws, &strip, &cfg);
            write_json(None, &serde_json::to_value(&rep)?)?;
            Ok(rep.agree)
        }
    }
}

fn main() {
    match run(Cli::parse()) {
        Ok(true) => {}
        Ok(false) => std::process::exit(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
