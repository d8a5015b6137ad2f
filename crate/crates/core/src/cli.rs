//! The `pmor` command line: reduce, eval, verify and example export.
//!
//! Exit codes: 0 success, 1 usage, 2 unreadable or malformed input,
//! 3 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{PmorError, Result};
use crate::examples::{self, ExampleId};
use crate::io;
use crate::rom::{build_offline_with, Transpose};
use crate::solver::{compute_basis, SolveRun, SolverConfig, StopReason};
use crate::verify::{self, Axis, FrequencyAxis, GridSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Samples used to screen interpolation data against the pencil spectrum.
const VALIDATION_SAMPLES: usize = 16;

#[derive(Debug, Parser)]
#[command(name = "pmor", version, about = "Parametric model reduction by interpolation along shift curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the basis series and write the reduced bundle.
    Reduce(ReduceArgs),
    /// Tabulate |H - Ĥ| (or |H|, |Ĥ|) over an (s, p) grid as CSV.
    Eval(EvalArgs),
    /// Check the interpolation conditions at sample parameters.
    Verify(VerifyArgs),
    /// Built-in benchmark problems.
    #[command(subcommand)]
    Example(ExampleCommand),
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    /// Model header (model.toml) or the directory holding it.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_degree: usize,
    /// Project with Wᴴ instead of Wᵀ.
    #[arg(long)]
    pub conjugate: bool,
    /// Output directory for bundle.txt, basis/ and report.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Bundle file or the reduce output directory.
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Interpolation data; needed for `--fix-s index:k`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Frequency axis, `lin:lo:hi:count` or `log:lo:hi:count`.
    #[arg(long, conflicts_with = "fix_s")]
    pub s: Option<Axis>,
    /// Put the frequency axis on the imaginary line.
    #[arg(long)]
    pub imag: bool,
    /// A single frequency: a complex literal or `index:k` for λ_k(p).
    #[arg(long)]
    pub fix_s: Option<FixedFrequency>,
    /// Parameter axis, one per parameter.
    #[arg(long = "p", conflicts_with = "fix_p")]
    pub p: Vec<Axis>,
    /// A fixed parameter value, one per parameter.
    #[arg(long)]
    pub fix_p: Vec<f64>,
    /// Write |H| and |Ĥ| instead of the errors.
    #[arg(long)]
    pub magnitudes: bool,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Parameter sample axes, one per parameter; the box center when absent.
    #[arg(long = "p")]
    pub p: Vec<Axis>,
    /// Fail with exit code 3 when any residual exceeds this value.
    #[arg(long)]
    pub max_residual: Option<f64>,
    /// JSON report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ExampleCommand {
    /// Write an example's model and interpolation data.
    Export { id: ExampleId, dir: PathBuf },
    /// List the built-in examples.
    List,
}

/// `index:k` (one-based) or a complex literal such as `0+8.8862j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedFrequency {
    Index(usize),
    Value(Complex64),
}

impl FromStr for FixedFrequency {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if let Some(k) = s.strip_prefix("index:") {
            return match k.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(FixedFrequency::Index(k)),
                _ => Err(format!("shift index must be a positive integer, got {k:?}")),
            };
        }
        io::parse_complex(s)
            .map(FixedFrequency::Value)
            .ok_or_else(|| format!("expected index:k or a complex number, got {s:?}"))
    }
}

#[derive(Debug, Serialize)]
struct ReduceReport {
    states: usize,
    order: usize,
    one_sided: bool,
    tol: f64,
    max_degree: usize,
    transpose: Transpose,
    v: SolveRun,
    w: Option<SolveRun>,
    v_terms: usize,
    w_terms: Option<usize>,
    bundle_terms: [usize; 4],
    min_validation_rcond: f64,
    wall_time_s: f64,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    samples: usize,
    max_residual: Option<f64>,
    failures: usize,
    records: Vec<verify::InterpolationRecord>,
}

fn exit_code(err: &PmorError) -> i32 {
    match err {
        e if e.is_numerical() => EXIT_NUMERICAL,
        PmorError::Parse(_) | PmorError::Io { .. } | PmorError::DuplicateTerm(_) | PmorError::DimensionMismatch { .. } => {
            EXIT_PARSE
        }
        PmorError::InvalidInput(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    configure_threads();
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let PmorError::SpectrumCollision { collisions } = &e {
                for c in collisions {
                    let _ = writeln!(
                        err,
                        "  {} shift {} = {} at p = {:?} (rcond {:.3e})",
                        c.side,
                        c.index + 1,
                        c.shift,
                        c.param,
                        c.rcond
                    );
                }
            }
            exit_code(&e)
        }
    }
}

/// Honors `PMOR_THREADS` (0 or unset: rayon's default).
fn configure_threads() {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var("PMOR_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            // A second call in the same process keeps the first pool.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Reduce(a) => reduce(&a, out),
        Command::Eval(a) => eval(&a, out),
        Command::Verify(a) => verify_cmd(&a, out),
        Command::Example(ExampleCommand::Export { id, dir }) => {
            io::export_example(&examples::build(id), &dir)?;
            emit(out, &format!("wrote {} to {}\n", id, dir.display()))
        }
        Command::Example(ExampleCommand::List) => {
            let names: Vec<&str> = ExampleId::ALL.iter().map(|id| id.name()).collect();
            emit(out, &format!("{}\n", names.join("\n")))
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|source| PmorError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn write_or_emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => io::write_text(p, text),
        None => emit(out, text),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| PmorError::invalid(e.to_string()))
}

fn reduce(a: &ReduceArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = SolverConfig {
        tol: a.tol,
        max_total_degree: a.max_degree,
        ..SolverConfig::default()
    };
    cfg.check()?;
    let sys = io::read_model(&a.model)?;
    let data = io::read_data(&a.data)?;
    let started = Instant::now();
    let validation = data.validate(&sys, VALIDATION_SAMPLES)?;
    let basis = compute_basis(&sys, &data, &cfg)?;
    let transpose = if a.conjugate { Transpose::Conjugate } else { Transpose::Plain };
    let bundle = build_offline_with(&sys, &basis, transpose)?;
    let wall = started.elapsed().as_secs_f64();

    std::fs::create_dir_all(&a.out).map_err(|source| PmorError::Io {
        path: a.out.clone(),
        source,
    })?;
    io::write_bundle_file(&a.out.join(io::BUNDLE_FILE), &bundle)?;
    io::write_basis(&basis, &a.out.join("basis"))?;
    let report = ReduceReport {
        states: sys.states(),
        order: bundle.order(),
        one_sided: basis.is_one_sided(),
        tol: cfg.tol,
        max_degree: cfg.max_total_degree,
        transpose,
        v: basis.v_run.clone(),
        w: basis.w_run.clone(),
        v_terms: basis.v.len(),
        w_terms: basis.w.as_ref().map(|w| w.len()),
        bundle_terms: [bundle.ehat.len(), bundle.ahat.len(), bundle.bhat.len(), bundle.chat.len()],
        min_validation_rcond: validation.min_rcond,
        wall_time_s: wall,
    };
    io::write_text(&a.out.join("report.json"), &to_json(&report)?)?;
    let w_note = match &basis.w_run {
        Some(w) => format!(", W: {} terms, {} at degree {}", w.retained_terms, w.stop_reason, w.degrees_computed),
        None => String::new(),
    };
    emit(
        out,
        &format!(
            "V: {} terms, {} at degree {}{}; order {}; {:.3} s\n",
            basis.v_run.retained_terms,
            basis.v_run.stop_reason,
            basis.v_run.degrees_computed,
            w_note,
            bundle.order(),
            wall
        ),
    )?;
    if basis.v_run.stop_reason == StopReason::DegreeCap {
        emit(out, "warning: degree cap reached before the tolerance was met\n")?;
    }
    Ok(())
}

fn eval(a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let sys = io::read_model(&a.model)?;
    let bundle = io::read_bundle(&a.bundle)?;
    let data = a.data.as_deref().map(io::read_data).transpose()?;
    let s = match (&a.s, a.fix_s) {
        (Some(axis), None) => FrequencyAxis::Sweep {
            axis: *axis,
            imaginary: a.imag,
        },
        (None, Some(FixedFrequency::Value(z))) => FrequencyAxis::Fixed(z),
        (None, Some(FixedFrequency::Index(k))) => {
            if data.is_none() {
                return Err(PmorError::invalid("--fix-s index:k needs --data"));
            }
            FrequencyAxis::Shift(k)
        }
        _ => return Err(PmorError::invalid("give exactly one of --s or --fix-s")),
    };
    let p_axes: Vec<Axis> = if a.p.is_empty() {
        a.fix_p.iter().map(|&v| Axis::single(v)).collect()
    } else {
        a.p.clone()
    };
    if p_axes.len() != sys.nparams() {
        return Err(PmorError::invalid(format!(
            "model has {} parameter(s) but {} --p/--fix-p value(s) were given",
            sys.nparams(),
            p_axes.len()
        )));
    }
    let grid = GridSpec { s, p_axes };
    let result = verify::error_grid(&sys, &bundle, &grid, data.as_ref())?;
    let csv = if a.magnitudes { result.magnitudes_csv() } else { result.to_csv() };
    write_or_emit(a.out.as_deref(), &csv, out)
}

fn verify_cmd(a: &VerifyArgs, out: &mut dyn Write) -> Result<()> {
    let sys = io::read_model(&a.model)?;
    let bundle = io::read_bundle(&a.bundle)?;
    let data = io::read_data(&a.data)?;
    let samples = if a.p.is_empty() {
        vec![sys.param_box().center()]
    } else {
        if a.p.len() != sys.nparams() {
            return Err(PmorError::invalid(format!(
                "model has {} parameter(s) but {} --p axes were given",
                sys.nparams(),
                a.p.len()
            )));
        }
        GridSpec {
            s: FrequencyAxis::Fixed(Complex64::new(0.0, 0.0)),
            p_axes: a.p.clone(),
        }
        .p_points()
    };
    let records = verify::check_interpolation(&sys, &data, &bundle, &samples)?;
    let max_residual = records.iter().filter_map(|r| r.residual).reduce(f64::max);
    let failures = records.iter().filter(|r| r.residual.is_none()).count();
    let report = VerifyReport {
        samples: samples.len(),
        max_residual,
        failures,
        records,
    };
    write_or_emit(a.out.as_deref(), &to_json(&report)?, out)?;
    if let Some(limit) = a.max_residual {
        let worst = if failures > 0 { f64::INFINITY } else { max_residual.unwrap_or(0.0) };
        if worst > limit {
            return Err(PmorError::ResidualTooLarge { worst, limit });
        }
    }
    Ok(())
}
