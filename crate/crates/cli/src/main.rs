//! `fredholm-disk`: classify, solve, and probe the weighted operators from the
//! command line.
//!
//! Reports are pretty JSON tagged with the schema version and carry no
//! timestamps, so identical inputs give identical bytes. Run information goes
//! to a `<out>.meta.json` sidecar instead.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use fredholm_disk::fredholm::{classify, cokernel_basis_field, kernel_basis_field};
use fredholm_disk::green::project_kernel;
use fredholm_disk::io::{to_report_json, write_profiles, GridConfig, RhsSpec};
use fredholm_disk::special::{bessel_i, bessel_i_scaled, bessel_k, bessel_k_scaled};
use fredholm_disk::suite::kernel_annihilation;
use fredholm_disk::weyl::{weyl_grid, weyl_sequence, WeylParams, WeylSide};
use fredholm_disk::{
    run_suite, solve_field, BesselOrder, Error, Field2D, OperatorKind, Suite, WeightPair, WeightedNorm,
};
use serde_json::{json, Value};

const THREADS_VAR: &str = "FREDHOLM_DISK_THREADS";

#[derive(Debug, Parser)]
#[command(name = "fredholm-disk", version, about = "Weighted Fredholm theory for singular operators on the plane")]
struct Cli {
    /// JSON file with any of r_min, r_max, n_r, n_theta.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    grid: GridFlags,
    #[command(subcommand)]
    command: Command,
}

/// Per-key overrides applied after the config file.
#[derive(Debug, Args)]
struct GridFlags {
    #[arg(long, global = true)]
    r_min: Option<f64>,
    #[arg(long, global = true)]
    r_max: Option<f64>,
    #[arg(long, global = true)]
    n_r: Option<usize>,
    #[arg(long, global = true)]
    n_theta: Option<usize>,
}

#[derive(Debug, Args)]
struct OpArgs {
    /// helmholtz, shifted, or euler.
    #[arg(long)]
    op: OperatorKind,
    #[arg(long, allow_hyphen_values = true)]
    sigma: f64,
    #[arg(long, allow_hyphen_values = true)]
    gamma: f64,
}

impl OpArgs {
    fn weights(&self) -> Result<WeightPair, Error> {
        WeightPair::new(self.sigma, self.gamma)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fredholm status, index, and kernel/cokernel bases.
    Classify {
        #[command(flatten)]
        op: OpArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve L u = f for a built-in or CSV right-hand side.
    Solve {
        #[command(flatten)]
        op: OpArgs,
        /// `zero`, `manufactured:<family>[:n=..,key=..]`, or `csv:<path>`.
        #[arg(long)]
        rhs: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV of the solution's mode profiles.
        #[arg(long)]
        profiles: Option<PathBuf>,
    },
    /// Sample the kernel and cokernel bases and check they are annihilated.
    Kernel {
        #[command(flatten)]
        op: OpArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory receiving one profile CSV per basis element.
        #[arg(long)]
        profiles_dir: Option<PathBuf>,
    },
    /// Ratio sequence of a cut-off homogeneous solution.
    Weyl {
        #[command(flatten)]
        op: OpArgs,
        #[arg(long)]
        mode: u32,
        #[arg(long, default_value = "interior")]
        side: WeylSide,
        #[arg(long, default_value_t = 8)]
        jmax: u32,
        /// CSV with columns j,ratio.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite; exits nonzero if any check fails.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate I and K of order NU at Z.
    Bessel {
        #[arg(long)]
        order: f64,
        #[arg(long)]
        z: f64,
        /// Print e^{-z} I and e^{z} K instead.
        #[arg(long)]
        scaled: bool,
    },
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = match error.root() {
            Error::ResonantWeight(_) => 2,
            Error::SolvabilityViolated { .. } => 3,
            Error::Parse(_)
            | Error::UnknownFamily(_)
            | Error::InvalidWeight(_)
            | Error::InvalidGrid(_)
            | Error::Io(_)
            | Error::OrderOutOfRange(_)
            | Error::NonPositiveArgument(_)
            | Error::NonPositiveRadius(_) => 1,
            _ => 4,
        };
        Self { code, error }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e.root() {
        Error::NonPositiveArgument(_) => "non_positive_argument",
        Error::OrderOutOfRange(_) => "order_out_of_range",
        Error::Overflow { .. } => "overflow",
        Error::Underflow { .. } => "underflow",
        Error::InvalidWeight(_) => "invalid_weight",
        Error::NonPositiveRadius(_) => "non_positive_radius",
        Error::InvalidGrid(_) => "invalid_grid",
        Error::GridTooCoarse(_) => "grid_too_coarse",
        Error::GridTooNarrow(_) => "grid_too_narrow",
        Error::ShapeMismatch(_) => "shape_mismatch",
        Error::TailTruncation { .. } => "tail_truncation",
        Error::ResonantWeight(_) => "resonant_weight",
        Error::SolvabilityViolated { .. } => "solvability_violated",
        Error::UnknownFamily(_) => "unknown_family",
        Error::ZeroDenominator => "zero_denominator",
        Error::InMode { .. } => "in_mode",
        Error::Parse(_) => "parse",
        Error::Io(_) => "io",
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}

fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let started = Instant::now();
    match execute(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if let Err(f) = write_meta(&cli, &argv, &outcome, started) {
                return report_failure(f);
            }
            outcome.code
        }
        Err(f) => report_failure(f),
    }
}

fn report_failure(f: Failure) -> u8 {
    let body = json!({ "error": error_kind(&f.error), "message": f.error.to_string(), "exit_code": f.code });
    eprintln!("{body}");
    f.code
}

/// What a successful command produced.
struct Outcome {
    code: u8,
    summary: String,
    out: Option<PathBuf>,
}

impl Outcome {
    fn new(summary: String, out: Option<&PathBuf>) -> Self {
        Self { code: 0, summary, out: out.cloned() }
    }
}

fn execute(cli: &Cli) -> Result<Outcome, Failure> {
    configure_threads()?;
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Classify { op, out } => cmd_classify(op, out.as_ref()),
        Command::Solve { op, rhs, out, profiles } => cmd_solve(&cfg, op, rhs, out.as_ref(), profiles.as_ref()),
        Command::Kernel { op, out, profiles_dir } => cmd_kernel(&cfg, op, out.as_ref(), profiles_dir.as_ref()),
        Command::Weyl { op, mode, side, jmax, out } => cmd_weyl(&cfg, op, *mode, *side, *jmax, out.as_ref()),
        Command::Verify { suite, out } => cmd_verify(&cfg, *suite, out.as_ref()),
        Command::Bessel { order, z, scaled } => cmd_bessel(*order, *z, *scaled),
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Parse(format!("{THREADS_VAR} must be a positive integer, got `{raw}`")))?;
    // a second call in the same process finds the pool already built; keep it
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn load_config(cli: &Cli) -> Result<GridConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            GridConfig::from_json(&text)?
        }
        None => GridConfig::default(),
    };
    let g = &cli.grid;
    cfg.r_min = g.r_min.unwrap_or(cfg.r_min);
    cfg.r_max = g.r_max.unwrap_or(cfg.r_max);
    cfg.n_r = g.n_r.unwrap_or(cfg.n_r);
    cfg.n_theta = g.n_theta.unwrap_or(cfg.n_theta);
    cfg.validate()?;
    Ok(cfg)
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())).into())
}

fn write_report(path: Option<&PathBuf>, body: &Value) -> Result<(), Failure> {
    match path {
        Some(p) => write_text(p, &to_report_json(body)?),
        None => Ok(()),
    }
}

fn create(path: &Path) -> Result<fs::File, Failure> {
    fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())).into())
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library types serialize")
}

fn grid_value(cfg: &GridConfig) -> Value {
    to_value(cfg)
}

fn cmd_classify(op: &OpArgs, out: Option<&PathBuf>) -> Result<Outcome, Failure> {
    let w = op.weights()?;
    let report = classify(op.op, w);
    write_report(out, &to_value(&report))?;
    if report.is_resonant() {
        return Err(Error::ResonantWeight(format!(
            "{} at (σ, γ) = ({}, {}) resonates in modes {:?}",
            op.op, op.sigma, op.gamma, report.resonant_modes
        ))
        .into());
    }
    let summary = format!(
        "{} σ={} γ={}: fredholm, index {}, kernel {}, cokernel {}",
        op.op,
        op.sigma,
        op.gamma,
        report.index,
        report.kernel_dim(),
        report.cokernel_dim()
    );
    Ok(Outcome::new(summary, out))
}

fn cmd_solve(
    cfg: &GridConfig,
    op: &OpArgs,
    rhs: &str,
    out: Option<&PathBuf>,
    profiles: Option<&PathBuf>,
) -> Result<Outcome, Failure> {
    let w = op.weights()?;
    let spec: RhsSpec = rhs.parse()?;
    let grid = Arc::new(cfg.grid()?);
    let rhs = spec.build(op.op, grid, cfg.n_theta)?;
    let result = solve_field(op.op, &rhs.f, w)?;
    let exact_error = rhs.exact.as_ref().map(|u| {
        let space = op.op.domain_space();
        let diff = result.solution.sub(u);
        let projected: Result<Vec<_>, _> = diff.modes().iter().map(|m| project_kernel(op.op, m, w)).collect();
        let err = projected
            .and_then(|ms| Field2D::from_modes(diff.grid().clone(), diff.n_theta(), ms))
            .map(|d| d.weighted_norm(space, w))
            .unwrap_or(f64::NAN);
        err / u.weighted_norm(space, w)
    });
    let moments: serde_json::Map<String, Value> =
        result.mode_moments.iter().map(|(n, m)| (n.to_string(), to_value(m))).collect();
    let violated = result.violated();
    let body = json!({
        "operator": op.op,
        "weights": w,
        "rhs": spec.to_string(),
        "grid": grid_value(cfg),
        "regime": to_value(&result.regime),
        "residual_norm": result.residual_norm,
        "relative_residual": result.relative_residual,
        "exact_relative_error": exact_error,
        "norms": to_value(&result.norms),
        "solvability_defects": to_value(&result.solvability_defects),
        "mode_moments": moments,
        "solvability_violated": violated,
        "warnings": result.warnings,
    });
    write_report(out, &body)?;
    if let Some(p) = profiles {
        write_profiles(create(p)?, &result.solution)?;
    }
    for warning in &result.warnings {
        eprintln!("warning: {warning}");
    }
    let mut summary = format!(
        "{} σ={} γ={} rhs={}: relative residual {:.3e}",
        op.op, op.sigma, op.gamma, spec, result.relative_residual
    );
    if let Some(e) = exact_error {
        summary.push_str(&format!(", error vs exact {e:.3e}"));
    }
    let mut outcome = Outcome::new(summary, out);
    if violated {
        // the report is written; the status tells the caller the projected rhs was solved instead
        let worst =
            result.mode_moments.iter().flat_map(|(n, ms)| ms.iter().map(move |m| (*n, m))).find(|(_, m)| m.violated);
        if let Some((mode, m)) = worst {
            let e = Error::SolvabilityViolated { mode, moment: m.moment.norm(), tolerance: m.tolerance };
            eprintln!("{}", json!({ "error": error_kind(&e), "message": e.to_string(), "exit_code": 3 }));
        }
        outcome.code = 3;
    }
    Ok(outcome)
}

fn cmd_kernel(
    cfg: &GridConfig,
    op: &OpArgs,
    out: Option<&PathBuf>,
    profiles_dir: Option<&PathBuf>,
) -> Result<Outcome, Failure> {
    let w = op.weights()?;
    let report = classify(op.op, w);
    if report.is_resonant() {
        return Err(Error::ResonantWeight(format!("{} at (σ, γ) = ({}, {})", op.op, op.sigma, op.gamma)).into());
    }
    let grid = Arc::new(cfg.grid()?);
    let (count, worst) = kernel_annihilation(op.op, w, &grid, cfg.n_theta)?;
    let ids = |els: &[fredholm_disk::BasisElement]| els.iter().map(|e| e.id()).collect::<Vec<_>>();
    let body = json!({
        "operator": op.op,
        "weights": w,
        "grid": grid_value(cfg),
        "index": report.index,
        "kernel": ids(&report.kernel_basis),
        "cokernel": ids(&report.cokernel_basis),
        "kernel_elements_checked": count,
        "worst_relative_annihilation": worst,
    });
    write_report(out, &body)?;
    if let Some(dir) = profiles_dir {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let kernel = kernel_basis_field(&report, &grid, cfg.n_theta)?;
        let cokernel = cokernel_basis_field(&report, &grid, cfg.n_theta)?;
        let elements = report.kernel_basis.iter().chain(&report.cokernel_basis);
        for (el, field) in elements.zip(kernel.iter().chain(&cokernel)) {
            let stem: String = el
                .id()
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
                .collect();
            let path = dir.join(format!("{stem}.csv"));
            write_profiles(create(&path)?, field)?;
        }
    }
    let summary = format!(
        "{} σ={} γ={}: kernel {}, cokernel {}, worst annihilation {:.3e}",
        op.op,
        op.sigma,
        op.gamma,
        report.kernel_dim(),
        report.cokernel_dim(),
        worst
    );
    Ok(Outcome::new(summary, out))
}

fn cmd_weyl(
    cfg: &GridConfig,
    op: &OpArgs,
    mode: u32,
    side: WeylSide,
    jmax: u32,
    out: Option<&PathBuf>,
) -> Result<Outcome, Failure> {
    let base = WeylParams { kind: op.op, mode, side, j: 1, weights: op.weights()? };
    // the support has to reach e^{±3 jmax}, so the configured radii are replaced
    let grid = Arc::new(weyl_grid(side, jmax, cfg.n_r)?);
    let seq = weyl_sequence(&base, jmax, grid)?;
    if let Some(p) = out {
        let mut text = String::from("j,ratio\n");
        for pt in &seq {
            text.push_str(&format!("{},{:?}\n", pt.j, pt.ratio));
        }
        write_text(p, &text)?;
    }
    let ratios: Vec<String> = seq.iter().map(|p| format!("{:.3e}", p.ratio)).collect();
    let summary = format!(
        "{} mode {mode} {side} σ={} γ={} detuning {:.3e}: ratios [{}]",
        op.op,
        op.sigma,
        op.gamma,
        base.detuning(),
        ratios.join(", ")
    );
    // the CSV is not a JSON report, so no sidecar
    Ok(Outcome { code: 0, summary, out: None })
}

fn cmd_verify(cfg: &GridConfig, suite: Suite, out: Option<&PathBuf>) -> Result<Outcome, Failure> {
    let grid = cfg.grid()?;
    let report = run_suite(suite, &grid, cfg.n_theta)?;
    if let Some(p) = out {
        let mut text = report.to_json();
        text.push('\n');
        write_text(p, &text)?;
    }
    let failures: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    for name in &failures {
        eprintln!("failed: {name}");
    }
    let summary =
        format!("suite {suite}: {}/{} checks passed", report.checks.len() - failures.len(), report.checks.len());
    let mut outcome = Outcome::new(summary, out);
    if !report.passed {
        outcome.code = 4;
    }
    Ok(outcome)
}

fn cmd_bessel(order: f64, z: f64, scaled: bool) -> Result<Outcome, Failure> {
    let nu = BesselOrder::new(order)?;
    let (i, k) =
        if scaled { (bessel_i_scaled(nu, z)?, bessel_k_scaled(nu, z)?) } else { (bessel_i(nu, z)?, bessel_k(nu, z)?) };
    let label = if scaled { "scaled " } else { "" };
    Ok(Outcome { code: 0, summary: format!("{label}I={i:e} {label}K={k:e}"), out: None })
}

fn write_meta(cli: &Cli, argv: &[std::ffi::OsString], outcome: &Outcome, started: Instant) -> Result<(), Failure> {
    let Some(out) = &outcome.out else { return Ok(()) };
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    let meta = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "argv": argv.iter().map(|a| a.to_string_lossy()).collect::<Vec<_>>(),
        "config_file": cli.config.as_ref().map(|p| p.display().to_string()),
        "threads": rayon::current_num_threads(),
        "exit_code": outcome.code,
        "elapsed_seconds": started.elapsed().as_secs_f64(),
        "finished_unix": SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    });
    write_text(Path::new(&name), &format!("{}\n", serde_json::to_string_pretty(&meta).expect("json")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_arguments_are_rejected() {
        assert!(Cli::try_parse_from(["x", "frobnicate"]).is_err());
        assert!(Cli::try_parse_from(["x", "classify", "--op", "laplace", "--sigma", "0", "--gamma", "0"]).is_err());
        assert!(Cli::try_parse_from([
            "x", "weyl", "--op", "euler", "--mode", "1", "--side", "north", "--sigma", "0", "--gamma", "0"
        ])
        .is_err());
        assert!(Cli::try_parse_from(["x", "verify", "--suite", "everything"]).is_err());
    }

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(Failure::from(Error::ResonantWeight(String::new())).code, 2);
        let e = Error::SolvabilityViolated { mode: 1, moment: 1.0, tolerance: 0.0 };
        assert_eq!(Failure::from(Error::InMode { mode: 1, source: Box::new(e) }).code, 3);
        assert_eq!(Failure::from(Error::GridTooCoarse(String::new())).code, 4);
        assert_eq!(Failure::from(Error::Parse(String::new())).code, 1);
    }

    #[test]
    fn negative_weights_parse() {
        let cli =
            Cli::try_parse_from(["x", "classify", "--op", "euler", "--sigma", "-0.5", "--gamma", "-2.5"]).unwrap();
        let Command::Classify { op, .. } = cli.command else { panic!() };
        assert_eq!((op.sigma, op.gamma), (-0.5, -2.5));
    }
}
