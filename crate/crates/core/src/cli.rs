//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed, 2 invalid arguments or configuration,
//! 3 a solve did not converge (outputs are still written).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::checks::{geometry_suite, identity_suite, TauChoice};
use crate::error::{Error, Result};
use crate::geometry::ModelParams;
use crate::solver::{
    fixed_point_solve, is_monotone_decreasing, r2_sweep, scale_blocks, weighted_norm_on, AnnulusField, AnnulusSpec,
    GridPolicy, IterationConfig, PolarGrid, Sign, SolveReport, SweepRow,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Relative rise allowed between consecutive sweep deviations.
pub const MONOTONE_SLACK: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(name = "cmc-lab", version, about = "H = 1/2 horizontal graphs in PSL~2(R, tau)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Frame, connection, bracket and Killing checks at random points.
    CheckGeometry(Flags),
    /// Mean-curvature, linearization and Laplace-Beltrami identities on random jets.
    CheckIdentities(Flags),
    /// Solve the barrier Dirichlet problem on one annulus.
    Solve(Flags),
    /// Solve for R2 = factor * R1 over several factors.
    Sweep(Flags),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SignArg {
    Plus,
    Minus,
}

/// Shared flags. Every flag can also be set in the `--config` file as `key = value`
/// using the flag name without dashes; flags take precedence.
#[derive(Debug, Default, Clone, Args)]
struct Flags {
    /// Bundle curvature [default: 0.25; checks draw tau in [-2, 2] unless given]
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    /// Inner radius [default: 1]
    #[arg(long)]
    r1: Option<f64>,
    /// Outer radius, at least 2 r1 [default: 8]
    #[arg(long)]
    r2: Option<f64>,
    /// Boundary perturbation epsilon in [0, 1) [default: 0.02]
    #[arg(long)]
    eps: Option<f64>,
    /// Barrier sign [default: plus]
    #[arg(long, value_enum)]
    sign: Option<SignArg>,
    /// Radial nodes [default: 64]
    #[arg(long)]
    nr: Option<usize>,
    /// Angular nodes [default: 256]
    #[arg(long)]
    ntheta: Option<usize>,
    /// Iteration limit [default: 200]
    #[arg(long)]
    max_iters: Option<usize>,
    /// Sup-norm update tolerance [default: 1e-10]
    #[arg(long)]
    tol: Option<f64>,
    /// Damping theta in (0, 1] [default: 1]
    #[arg(long)]
    damping: Option<f64>,
    /// Hoelder exponent of the weighted norm [default: 0.5]
    #[arg(long)]
    alpha: Option<f64>,
    /// Random seed [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Random samples for the check suites [default: 1000]
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory (created if missing)
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Concurrent sweep members [default: available parallelism]
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated R2/R1 factors for sweep [default: 4,8,16,32,64]
    #[arg(long)]
    factors: Option<String>,
}

const CONFIG_KEYS: &[&str] = &[
    "tau", "r1", "r2", "eps", "sign", "nr", "ntheta", "max-iters", "tol", "damping", "alpha", "seed", "samples",
    "out", "workers", "factors",
];

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: String,
    /// `None` when a check suite should draw `tau` at random.
    pub tau: Option<f64>,
    pub r1: f64,
    pub r2: f64,
    pub eps: f64,
    pub sign: Sign,
    pub nr: usize,
    pub ntheta: usize,
    pub iteration: IterationConfig,
    pub seed: u64,
    pub samples: usize,
    pub out: Option<PathBuf>,
    pub workers: usize,
    pub factors: Vec<f64>,
}

impl RunConfig {
    pub fn spec(&self) -> Result<AnnulusSpec> {
        AnnulusSpec::new(self.r1, self.r2, self.eps, self.sign, ModelParams::new(self.tau.unwrap_or(0.25))?)
    }

    pub fn grid(&self) -> Result<PolarGrid> {
        PolarGrid::new(self.r1, self.r2, self.nr, self.ntheta)
    }
}

fn config_error(field: &str, reason: impl Into<String>) -> Error {
    Error::Config { field: field.into(), reason: reason.into() }
}

/// Parse a `key = value` file. Blank lines and `#` comments are skipped; unknown or
/// repeated keys are errors.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(config_error(&format!("line {}", n + 1), "expected key = value"));
        };
        let key = k.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(config_error(&key, "unknown key"));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(config_error(&key, "given more than once"));
        }
    }
    Ok(map)
}

fn from_file<T: std::str::FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|e| config_error(key, format!("cannot parse {v:?}: {e}"))))
        .transpose()
}

fn parse_factors(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| config_error("factors", format!("cannot parse {p:?}: {e}"))))
        .collect()
}

fn parse_sign(s: &str) -> Result<Sign> {
    match s {
        "plus" | "+" => Ok(Sign::Plus),
        "minus" | "-" => Ok(Sign::Minus),
        _ => Err(config_error("sign", format!("expected plus or minus, got {s:?}"))),
    }
}

fn resolve(command: &str, flags: Flags) -> Result<RunConfig> {
    let file = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_error("config", format!("cannot read {}: {e}", path.display())))?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    macro_rules! pick {
        ($field:ident, $key:expr, $default:expr) => {
            match flags.$field {
                Some(v) => v,
                None => from_file(&file, $key)?.unwrap_or($default),
            }
        };
    }
    let tau = match flags.tau {
        Some(t) => Some(t),
        None => from_file::<f64>(&file, "tau")?,
    };
    let sign = match (flags.sign, file.get("sign")) {
        (Some(SignArg::Plus), _) => Sign::Plus,
        (Some(SignArg::Minus), _) => Sign::Minus,
        (None, Some(s)) => parse_sign(s)?,
        (None, None) => Sign::Plus,
    };
    let factors = match (&flags.factors, file.get("factors")) {
        (Some(s), _) | (None, Some(s)) => parse_factors(s)?,
        (None, None) => vec![4.0, 8.0, 16.0, 32.0, 64.0],
    };
    let out = flags.out.clone().or_else(|| file.get("out").map(PathBuf::from));
    let default_workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let cfg = RunConfig {
        command: command.into(),
        tau,
        r1: pick!(r1, "r1", 1.0),
        r2: pick!(r2, "r2", 8.0),
        eps: pick!(eps, "eps", 0.02),
        sign,
        nr: pick!(nr, "nr", 64),
        ntheta: pick!(ntheta, "ntheta", 256),
        iteration: IterationConfig {
            max_iters: pick!(max_iters, "max-iters", 200),
            tol: pick!(tol, "tol", 1e-10),
            damping: pick!(damping, "damping", 1.0),
            alpha: pick!(alpha, "alpha", 0.5),
            ..IterationConfig::default()
        },
        seed: pick!(seed, "seed", 42),
        samples: pick!(samples, "samples", 1000),
        out,
        workers: pick!(workers, "workers", default_workers),
        factors,
    };
    if let Some(t) = cfg.tau {
        if !t.is_finite() {
            return Err(config_error("tau", "must be finite"));
        }
    }
    if cfg.workers == 0 {
        return Err(config_error("workers", "must be at least 1"));
    }
    Ok(cfg)
}

/// Run the command line `args` (including the program name). Reports go to `out`,
/// diagnostics to `err`; the return value is the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let (name, flags) = match cli.command {
        Command::CheckGeometry(f) => ("check-geometry", f),
        Command::CheckIdentities(f) => ("check-identities", f),
        Command::Solve(f) => ("solve", f),
        Command::Sweep(f) => ("sweep", f),
    };
    let result = resolve(name, flags).and_then(|cfg| match name {
        "check-geometry" | "check-identities" => cmd_check(&cfg, out),
        "solve" => cmd_solve(&cfg, out),
        _ => cmd_sweep(&cfg, out),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Argument(_) | Error::Config { .. } | Error::Precondition(_) => EXIT_USAGE,
                Error::Domain(_) if name == "solve" || name == "sweep" => EXIT_NOT_CONVERGED,
                _ => EXIT_CHECK_FAILED,
            }
        }
    }
}

fn write_outputs(dir: &Path, files: &[(&str, &str)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, contents) in files {
        std::fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

fn cmd_check(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let tau = cfg.tau.map_or(TauChoice::Random, TauChoice::Fixed);
    let report = if cfg.command == "check-geometry" {
        geometry_suite(cfg.seed, cfg.samples, tau)?
    } else {
        identity_suite(cfg.seed, cfg.samples, tau)?
    };
    let text = format!("command: {}\n{}", cfg.command, report.render());
    out.write_all(text.as_bytes())?;
    if let Some(dir) = &cfg.out {
        write_outputs(dir, &[("report.txt", &text)])?;
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// CSV of a solved field: `r,theta,x,t,f,residual_eq1`, row-major in (r, θ).
pub fn solution_csv(solution: &AnnulusField, residual: &AnnulusField) -> String {
    let g = solution.grid;
    let mut s = String::from("r,theta,x,t,f,residual_eq1\n");
    for i in 0..g.n_r() {
        for j in 0..g.n_theta() {
            let (x, t) = g.xt(i, j);
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                g.radius(i),
                g.theta(j),
                x,
                t,
                solution.get(i, j),
                residual.get(i, j)
            );
        }
    }
    s
}

fn sign_name(sign: Sign) -> &'static str {
    match sign {
        Sign::Plus => "plus",
        Sign::Minus => "minus",
    }
}

fn spec_lines(cfg: &RunConfig, spec: &AnnulusSpec) -> String {
    format!(
        "command: {}\nseed: {}\ntau: {}\nr1: {}\nr2: {}\neps: {}\nsign: {}\nmax_iters: {}\ntol: {:e}\ndamping: {}\nalpha: {}\n",
        cfg.command,
        cfg.seed,
        spec.params.tau,
        spec.r1,
        spec.r2,
        spec.epsilon,
        sign_name(spec.sign),
        cfg.iteration.max_iters,
        cfg.iteration.tol,
        cfg.iteration.damping,
        cfg.iteration.alpha,
    )
}

/// Structured-text report of a single solve.
pub fn solve_report_text(cfg: &RunConfig, spec: &AnnulusSpec, report: &SolveReport) -> Result<String> {
    let g = report.solution.grid;
    let (lo, hi) = spec.bounds();
    let mut s = spec_lines(cfg, spec);
    let _ = write!(
        s,
        "n_r: {}\nn_theta: {}\nconverged: {}\niterations: {}\nnewton_iterations: {}\nfinal_update: {:e}\n\
         bounds: [{}, {}]\nmin_f: {}\nmax_f: {}\nbounds_ok: {}\nresidual_eq1_sup: {:e}\n\
         weighted_norm_of_u: {:e}\nsqrt_eps: {:e}\nadmissible: {}\n",
        g.n_r(),
        g.n_theta(),
        report.converged,
        report.iterations,
        report.newton_iterations,
        report.update_norms.last().copied().unwrap_or(0.0),
        lo,
        hi,
        report.solution.min(),
        report.solution.max(),
        report.bounds_ok,
        report.nonlinear_residual_maxnorm,
        report.weighted_norm_of_u,
        spec.epsilon.sqrt(),
        report.admissible,
    );
    if let Ok(blocks) = scale_blocks(&g, spec) {
        let h = crate::solver::barrier_field(g, spec)?;
        let u = report.solution.zip_with(&h, |a, b| a - b);
        for (k, b) in blocks.iter().enumerate() {
            let parts = weighted_norm_on(&u, cfg.iteration.alpha, &b.nodes)?;
            let _ = writeln!(s, "block_{}: r in [{}, {}] weighted_norm {:e}", k + 1, b.lo, b.hi, parts.total);
        }
    }
    s += "trace:\n";
    for (k, u) in report.update_norms.iter().enumerate() {
        let _ = writeln!(s, "  {} {:e}", k + 1, u);
    }
    Ok(s)
}

fn cmd_solve(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let spec = cfg.spec()?;
    let grid = cfg.grid()?;
    cfg.iteration.validate()?;
    let report = fixed_point_solve(&spec, grid, &cfg.iteration)?;
    let text = solve_report_text(cfg, &spec, &report)?;
    out.write_all(text.as_bytes())?;
    if let Some(dir) = &cfg.out {
        let csv = solution_csv(&report.solution, &report.residual);
        write_outputs(dir, &[("solution.csv", &csv), ("report.txt", &text)])?;
    }
    Ok(if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

/// Convergence table of a sweep.
pub fn sweep_csv(rows: &[SweepRow], n_theta: usize) -> String {
    let mut s = String::from(
        "factor,r2,n_r,n_theta,deviation,barrier_deviation,ratio,iterations,residual,converged,admissible,weighted_norm_of_u,failure\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.factor,
            r.r2,
            r.n_r,
            n_theta,
            r.deviation,
            r.barrier_deviation,
            r.deviation / r.barrier_deviation,
            r.iterations,
            r.residual,
            r.converged,
            r.admissible,
            r.weighted_norm_of_u,
            r.failure.as_deref().unwrap_or("").replace(',', ";"),
        );
    }
    s
}

fn cmd_sweep(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let spec = cfg.spec()?;
    cfg.iteration.validate()?;
    if cfg.nr < 2 {
        return Err(config_error("nr", "must be at least 2"));
    }
    // keep the radial spacing of the configured grid for every member
    let policy = GridPolicy {
        intervals_per_log: (cfg.nr - 1) as f64 / (spec.r2 / spec.r1).ln(),
        n_theta: cfg.ntheta,
        min_nr: crate::solver::MIN_NR.max(16),
    };
    let rows = r2_sweep(&spec, &cfg.factors, &policy, &cfg.iteration, cfg.workers)?;
    let all_converged = rows.iter().all(|r| r.failure.is_none());
    let deviations: Vec<f64> = rows.iter().map(|r| r.deviation).collect();
    let monotone = all_converged && is_monotone_decreasing(&deviations, MONOTONE_SLACK);

    let csv = sweep_csv(&rows, cfg.ntheta);
    let mut text = spec_lines(cfg, &spec);
    let _ = write!(
        text,
        "factors: {}\nworkers: {}\nall_converged: {}\nmonotone: {}\ntable:\n",
        cfg.factors.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(","),
        cfg.workers,
        all_converged,
        monotone
    );
    for line in csv.lines() {
        let _ = writeln!(text, "  {line}");
    }
    out.write_all(text.as_bytes())?;
    if let Some(dir) = &cfg.out {
        write_outputs(dir, &[("sweep.csv", &csv), ("report.txt", &text)])?;
    }
    Ok(if !all_converged {
        EXIT_NOT_CONVERGED
    } else if monotone {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}
