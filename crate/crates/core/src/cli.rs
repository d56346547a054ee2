//! The `moogvcf` command line.
//!
//! Exit codes: 0 success, 1 a requested check failed, 2 usage or input
//! error, 3 numerical failure. Output is assembled in memory and written
//! once, to `--out` when given and to standard output otherwise.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};
use crate::experiments::{certify_grid, run_gradcheck_with, run_sweep, SweepSpec, GRADCHECK_TOL, SCHEMA_VERSION};
use crate::integrators::{simulate, Method, StepConfig};
use crate::io::{fmt_f64, parse_grid, parse_vec4, CsvTable, OutputFormat};
use crate::lyapunov::{grad_v, MatrixFamily, Verdict, DEFAULT_VERDICT_TOL};
use crate::matrix::Vec4;
use crate::model::{matrix_a, FilterParams, ScaledState, State};
use crate::spectral::{eigvals_a_closed, eigvals_numeric, Spectrum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Relative residual accepted by the numeric eigenvalue oracle.
const EIG_RESIDUAL_TOL: f64 = 1e-10;
/// Half-width of the band around a known threshold in which `--expect`
/// accepts either verdict.
const EXPECT_BAND: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "moogvcf", version, about = "Stability analysis and simulation of the nonlinear Moog ladder filter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues of the linearised system, closed form and numeric.
    Eig(EigArgs),
    /// Negative-definiteness certificates over a resonance grid.
    Certify(CertifyArgs),
    /// Integrate the nonlinear system and record V and dV/dt.
    Simulate(SimulateArgs),
    /// Run a JSON sweep specification.
    Sweep(SweepArgs),
    /// Compare the Lyapunov gradient with finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
struct EigArgs {
    #[arg(long, allow_negative_numbers = true)]
    omega0: f64,
    #[arg(long, allow_negative_numbers = true)]
    r: f64,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    /// Comma-separated subset of As, Bs, QsWorstCase.
    #[arg(long, value_delimiter = ',', required = true)]
    families: Vec<String>,
    /// Resonance grid as lo:hi:step.
    #[arg(long)]
    r_grid: String,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    omega0: f64,
    /// Eigenvalue tolerance for the verdict.
    #[arg(long, default_value_t = DEFAULT_VERDICT_TOL, allow_negative_numbers = true)]
    tol: f64,
    /// Fail (exit 1) unless every verdict matches the known definiteness region.
    #[arg(long)]
    expect: bool,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, allow_negative_numbers = true)]
    omega0: f64,
    #[arg(long, allow_negative_numbers = true)]
    r: f64,
    /// Initial state x1,x2,x3,x4.
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    #[arg(long, allow_negative_numbers = true)]
    dt: f64,
    #[arg(long)]
    steps: usize,
    /// rk4 or dg.
    #[arg(long, default_value = "dg")]
    method: String,
    #[arg(long, default_value_t = StepConfig::DEFAULT_NEWTON_TOL, allow_negative_numbers = true)]
    newton_tol: f64,
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    points: usize,
}

/// Replaceable internals, so tests can check that a broken implementation
/// is caught by the command that guards it.
#[derive(Clone, Copy)]
pub struct Hooks {
    pub gradient: fn(&ScaledState, &FilterParams) -> Vec4,
}

fn analytic_gradient(w: &ScaledState, p: &FilterParams) -> Vec4 {
    grad_v(w, p).expect("gradient samples have r > 0")
}

impl Default for Hooks {
    fn default() -> Self {
        Hooks {
            gradient: analytic_gradient,
        }
    }
}

/// What a command produced: a body to emit and an exit code.
struct Outcome {
    body: String,
    out: Option<PathBuf>,
    code: i32,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Outcome {
            body,
            out: None,
            code: EXIT_OK,
        }
    }
}

/// Maps an error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::AtGridPoint { source, .. } => exit_code(source),
        Error::Range { .. } | Error::Invalid(_) | Error::Spec { .. } | Error::Domain(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_hooks(args, out, err, &Hooks::default())
}

pub fn run_with_hooks<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, hooks: &Hooks) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            // clap renders usage hints after the first line
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(err, "{first}");
            return EXIT_USAGE;
        }
    };

    let result = match cli.command {
        Command::Eig(a) => cmd_eig(&a),
        Command::Certify(a) => cmd_certify(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Gradcheck(a) => cmd_gradcheck(&a, hooks),
    };
    match result {
        Ok(outcome) => {
            if let Err(e) = emit(&outcome, out) {
                let _ = writeln!(err, "error: {e}");
                return EXIT_USAGE;
            }
            if outcome.code == EXIT_CHECK_FAILED {
                let _ = writeln!(err, "check failed");
            }
            outcome.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn emit(outcome: &Outcome, out: &mut dyn Write) -> std::io::Result<()> {
    match &outcome.out {
        Some(path) => write_file(path, &outcome.body),
        None => out.write_all(outcome.body.as_bytes()),
    }
}

fn write_file(path: &Path, body: &str) -> std::io::Result<()> {
    std::fs::write(path, body).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn complex_json(s: &Spectrum) -> serde_json::Value {
    s.eigenvalues
        .iter()
        .map(|z| json!({ "re": z.re, "im": z.im }))
        .collect()
}

fn cmd_eig(a: &EigArgs) -> Result<Outcome> {
    let p = FilterParams::new(a.omega0, a.r)?;
    let closed = eigvals_a_closed(&p);
    let numeric = eigvals_numeric(&matrix_a(&p), EIG_RESIDUAL_TOL)?;
    let body = match a.format {
        OutputFormat::Csv => {
            let mut t = CsvTable::new(&["k", "closed_re", "closed_im", "numeric_re", "numeric_im"]);
            for (k, (c, n)) in closed.eigenvalues.iter().zip(&numeric.eigenvalues).enumerate() {
                let mut row = vec![(k + 1).to_string()];
                row.extend([c.re, c.im, n.re, n.im].map(fmt_f64));
                t.push(row);
            }
            t.push(vec![
                "max_re".into(),
                fmt_f64(closed.max_real_part),
                String::new(),
                fmt_f64(numeric.max_real_part),
            ]);
            t.render()
        }
        OutputFormat::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "omega0": p.omega0(),
            "r": p.r(),
            "closed": complex_json(&closed),
            "numeric": complex_json(&numeric),
            "max_re_closed": closed.max_real_part,
            "max_re_numeric": numeric.max_real_part,
        })),
    };
    Ok(Outcome::ok(body))
}

fn to_json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values are serialisable");
    s.push('\n');
    s
}

/// Known resonance below which each family is negative definite.
pub fn expected_threshold(family: MatrixFamily) -> f64 {
    match family {
        MatrixFamily::As => 5.0 / 12.0,
        MatrixFamily::Bs | MatrixFamily::QsWorstCase => 1.0,
    }
}

fn matches_expectation(family: MatrixFamily, r: f64, verdict: Verdict) -> bool {
    let t = expected_threshold(family);
    if (r - t).abs() <= EXPECT_BAND {
        return verdict != Verdict::Indefinite || family == MatrixFamily::As;
    }
    (verdict == Verdict::NegativeDefinite) == (r < t)
}

fn cmd_certify(a: &CertifyArgs) -> Result<Outcome> {
    let families = a
        .families
        .iter()
        .map(|s| s.parse::<MatrixFamily>())
        .collect::<Result<Vec<_>>>()?;
    let grid = parse_grid(&a.r_grid)?;
    if grid.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::Invalid(format!("r grid '{}' leaves [0, 1]", a.r_grid)));
    }
    FilterParams::new(a.omega0, grid[0])?;
    if !(a.tol.is_finite() && a.tol >= 0.0) {
        return Err(Error::Range {
            field: "tol",
            value: a.tol,
            expected: "tol >= 0",
        });
    }

    let mut reports = Vec::new();
    let mut thresholds = Vec::new();
    for &family in &families {
        // the worst-case Q bound needs feedback, so r = 0 is skipped for it
        let r: Vec<f64> = match family {
            MatrixFamily::QsWorstCase => grid.iter().copied().filter(|&r| r > 0.0).collect(),
            _ => grid.clone(),
        };
        if r.is_empty() {
            continue;
        }
        let (rep, threshold) = certify_grid(family, &r, &[a.omega0], a.tol)?;
        reports.extend(rep);
        thresholds.extend(threshold);
    }
    let all_expected = reports
        .iter()
        .all(|rep| matches_expectation(rep.family, rep.r, rep.verdict));

    let body = match a.format {
        OutputFormat::Csv => {
            let mut t = CsvTable::new(&["family", "omega0", "r", "min_eig", "max_eig", "verdict"]);
            for rep in &reports {
                t.push(vec![
                    rep.family.to_string(),
                    fmt_f64(rep.omega0),
                    fmt_f64(rep.r),
                    fmt_f64(rep.min_eig),
                    fmt_f64(rep.max_eig),
                    rep.verdict.to_string(),
                ]);
            }
            for th in &thresholds {
                t.push(vec![
                    "threshold".into(),
                    th.family.to_string(),
                    fmt_f64(th.r_star),
                    fmt_f64(th.lo),
                    fmt_f64(th.hi),
                ]);
            }
            t.render()
        }
        OutputFormat::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "reports": reports,
            "thresholds": thresholds,
        })),
    };
    Ok(Outcome {
        body,
        out: None,
        code: if a.expect && !all_expected { EXIT_CHECK_FAILED } else { EXIT_OK },
    })
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Outcome> {
    let p = FilterParams::new(a.omega0, a.r)?;
    let method: Method = a.method.parse()?;
    let cfg = StepConfig::new(a.dt, method)?.with_newton(a.newton_tol, StepConfig::DEFAULT_NEWTON_MAX_ITER)?;
    let x0 = State::new(parse_vec4(&a.x0)?)?;
    if a.steps == 0 {
        return Err(Error::Invalid("--steps must be at least 1".into()));
    }
    let traj = simulate(&x0, &p, &cfg, a.steps)?;
    let dv = traj.v_increments();
    let with_dv = method == Method::DiscreteGradient;
    let dv_ok = !with_dv || dv.iter().all(|&d| d <= 10.0 * cfg.newton_tol);

    let body = match a.format {
        OutputFormat::Csv => {
            let mut header = vec!["t", "x1", "x2", "x3", "x4", "V", "Vdot"];
            if with_dv {
                header.push("dV");
            }
            let mut t = CsvTable::new(&header);
            for i in 0..traj.len() {
                let x = traj.states[i].0;
                let mut row: Vec<String> = [traj.times[i], x[0], x[1], x[2], x[3], traj.v[i], traj.vdot[i]]
                    .iter()
                    .map(|&v| fmt_f64(v))
                    .collect();
                if with_dv {
                    // no difference exists before the first step
                    row.push(if i == 0 { String::new() } else { fmt_f64(dv[i - 1]) });
                }
                t.push(row);
            }
            t.render()
        }
        OutputFormat::Json => {
            let mut v = json!({
                "schema_version": SCHEMA_VERSION,
                "omega0": p.omega0(),
                "r": p.r(),
                "method": method,
                "dt": cfg.dt,
                "steps": a.steps,
                "newton_tol": cfg.newton_tol,
                "t": traj.times,
                "x": traj.states.iter().map(|s| s.0).collect::<Vec<_>>(),
                "V": traj.v,
                "Vdot": traj.vdot,
            });
            if with_dv {
                v["dV"] = json!(dv);
            }
            to_json(&v)
        }
    };
    Ok(Outcome {
        body,
        out: a.out.clone(),
        code: if dv_ok { EXIT_OK } else { EXIT_CHECK_FAILED },
    })
}

fn cmd_sweep(a: &SweepArgs) -> Result<Outcome> {
    let text = std::fs::read_to_string(&a.spec)
        .map_err(|e| Error::Invalid(format!("{}: {e}", a.spec.display())))?;
    let spec = SweepSpec::from_json(&text)?;
    let result = run_sweep(&spec)?;
    let mut body = result.to_json();
    body.push('\n');
    Ok(Outcome {
        body,
        out: a.out.clone(),
        code: if result.all_passed() { EXIT_OK } else { EXIT_CHECK_FAILED },
    })
}

fn cmd_gradcheck(a: &GradcheckArgs, hooks: &Hooks) -> Result<Outcome> {
    let err = run_gradcheck_with(a.seed, a.points, hooks.gradient)?;
    let mut t = CsvTable::new(&["seed", "points", "max_rel_error"]);
    t.push(vec![a.seed.to_string(), a.points.to_string(), fmt_f64(err)]);
    Ok(Outcome {
        body: t.render(),
        out: None,
        code: if err < GRADCHECK_TOL { EXIT_OK } else { EXIT_CHECK_FAILED },
    })
}
