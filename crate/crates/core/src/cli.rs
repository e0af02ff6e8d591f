//! Command-line front end: `run`, `check` and `poset`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::{Pow, Zero};

use crate::checker::{verify, Verdict};
use crate::io::{certificate_from_json, emit_csv, to_document};
use crate::program::{FrameOptions, Program};
use crate::simulator::{simulate, SimOptions, Status};
use crate::syntax::poset::fmt_set;
use crate::syntax::ExplicitPoset;
use crate::Rational;

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECT: i32 = 1;
pub const EXIT_NO_SOLUTION: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_UNSUPPORTED: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "hydla", version, about = "Simulate and check Basic HydLa programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a program and print its trace.
    Run {
        file: PathBuf,
        #[arg(long, default_value = "10", value_parser = parse_rational)]
        until: Rational,
        #[arg(long, default_value_t = 100)]
        max_phases: usize,
        #[arg(long, default_value_t = 16)]
        branch_limit: usize,
        #[arg(long, default_value_t = 4)]
        zeno_window: usize,
        #[arg(long, default_value = "0", value_parser = parse_rational)]
        zeno_ratio_tol: Rational,
        /// Continue past an accumulation point with extrapolated left limits.
        #[arg(long)]
        post_zeno: bool,
        /// JSON file listing the poset elements and order pairs.
        #[arg(long)]
        explicit_poset: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sampling step for CSV output.
        #[arg(long, default_value = "1/10", value_parser = parse_rational)]
        step: Rational,
        /// Decimal places in CSV output.
        #[arg(long, default_value_t = 6)]
        precision: usize,
        #[command(flatten)]
        frames: FrameArgs,
    },
    /// Check a trajectory certificate against a program.
    Check {
        file: PathBuf,
        #[arg(long)]
        certificate: PathBuf,
        #[arg(long)]
        explicit_poset: Option<PathBuf>,
        #[command(flatten)]
        frames: FrameArgs,
    },
    /// Print the module-set poset and its Hasse edges.
    Poset {
        file: PathBuf,
        #[arg(long)]
        explicit_poset: Option<PathBuf>,
        /// Include the continuity frame modules.
        #[arg(long)]
        with_frames: bool,
        #[command(flatten)]
        frames: FrameArgs,
    },
}

#[derive(clap::Args, Debug, Clone, Default)]
pub struct FrameArgs {
    /// Do not add continuity frame modules.
    #[arg(long)]
    pub no_continuity: bool,
    /// Leave out the frame for one derivative, written `x,k` (repeatable).
    #[arg(long = "no-frame", value_parser = parse_frame)]
    pub no_frame: Vec<(String, u32)>,
}

impl FrameArgs {
    fn options(&self) -> FrameOptions {
        FrameOptions { disabled: self.no_continuity, exclude: self.no_frame.clone() }
    }
}

/// Accepts `n`, `n/d` and finite decimals such as `2.5`.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|e| format!("{s}: {e}"))?;
        let d: BigInt = d.trim().parse().map_err(|e| format!("{s}: {e}"))?;
        if d.is_zero() {
            return Err(format!("{s}: zero denominator"));
        }
        return Ok(Rational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(format!("{s}: not a number"));
    }
    let digits: BigInt = format!("0{int}{frac}").parse().map_err(|e| format!("{s}: {e}"))?;
    let scale: BigInt = Pow::pow(BigInt::from(10), frac.len());
    let r = Rational::new(digits, scale);
    Ok(if neg { -r } else { r })
}

fn parse_frame(s: &str) -> Result<(String, u32), String> {
    let (v, k) = s.split_once(',').ok_or_else(|| format!("{s}: expected x,k"))?;
    let k = k.trim().parse().map_err(|e| format!("{s}: {e}"))?;
    Ok((v.trim().to_string(), k))
}

struct Failure(i32, String);

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn load(file: &Path, explicit: Option<&PathBuf>, frames: &FrameArgs) -> Result<(String, Program), Failure> {
    let source = read(file)?;
    let poset = match explicit {
        Some(p) => {
            let text = read(p)?;
            Some(serde_json::from_str::<ExplicitPoset>(&text).map_err(|e| Failure(EXIT_INPUT, format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let program = Program::parse(&source, poset.as_ref()).map_err(|e| Failure(EXIT_INPUT, format!("{}:{e}", file.display())))?;
    Ok((source, program.inject_continuity_defaults(&frames.options())))
}

/// Exit code for a finished simulation: any branch that reached a normal
/// stop wins, then "no solution", then unsupported or underdetermined.
pub fn run_exit_code(statuses: &[Status]) -> i32 {
    let completed = |s: &Status| matches!(s, Status::Horizon | Status::Zeno { .. } | Status::BranchLimit | Status::PhaseLimit);
    if statuses.is_empty() || statuses.iter().any(completed) {
        EXIT_OK
    } else if statuses.iter().any(|s| matches!(s, Status::NoSolution { .. })) {
        EXIT_NO_SOLUTION
    } else {
        EXIT_UNSUPPORTED
    }
}

/// Runs a parsed command; output goes to `out`, diagnostics to `err`.
pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Run { file, until, max_phases, branch_limit, zeno_window, zeno_ratio_tol, post_zeno, explicit_poset, format, out: path, step, precision, frames } => {
            let opts = SimOptions { until, max_phases, branch_limit, zeno_window, zeno_ratio_tol, post_zeno };
            cmd_run(&file, explicit_poset.as_ref(), &frames, &opts, format, path.as_deref(), &step, precision, out, err)
        }
        Command::Check { file, certificate, explicit_poset, frames } => cmd_check(&file, &certificate, explicit_poset.as_ref(), &frames, out),
        Command::Poset { file, explicit_poset, with_frames, frames } => cmd_poset(&file, explicit_poset.as_ref(), with_frames, &frames, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with(args: impl IntoIterator<Item = String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli, out, err),
        Err(e) => {
            let _ = write!(err, "{e}");
            if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_OK
            }
        }
    }
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure(EXIT_INPUT, format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| Failure(EXIT_INPUT, e.to_string())),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    file: &Path,
    explicit: Option<&PathBuf>,
    frames: &FrameArgs,
    opts: &SimOptions,
    format: Format,
    path: Option<&Path>,
    step: &Rational,
    precision: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    if *step <= Rational::zero() {
        return Err(Failure(EXIT_INPUT, "--step must be positive".into()));
    }
    let (source, program) = load(file, explicit, frames)?;
    let branches = simulate(&program, opts);
    let text = match format {
        Format::Json => to_document(&source, opts, &branches).to_json(),
        Format::Csv => emit_csv(&branches, step, precision),
    };
    emit(&text, path, out)?;
    for (i, b) in branches.iter().enumerate() {
        let detail = match &b.status {
            Status::NoSolution { time, reason } | Status::Underdetermined { time, reason } | Status::Unsupported { time, reason } => {
                format!("{} at t = {time}: {reason}", b.status.name())
            }
            Status::Zeno { time } => format!("zeno: accumulation at t = {time}"),
            s => s.name().to_string(),
        };
        let _ = writeln!(err, "branch {i}: {detail}");
    }
    let statuses: Vec<Status> = branches.into_iter().map(|b| b.status).collect();
    Ok(run_exit_code(&statuses))
}

fn cmd_check(file: &Path, certificate: &Path, explicit: Option<&PathBuf>, frames: &FrameArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let (_, program) = load(file, explicit, frames)?;
    let text = read(certificate)?;
    let certs = certificate_from_json(&text).map_err(|e| Failure(EXIT_INPUT, format!("{}: {e}", certificate.display())))?;
    if certs.is_empty() {
        return Err(Failure(EXIT_INPUT, format!("{}: no branches", certificate.display())));
    }
    let mut code = EXIT_OK;
    for (i, cert) in certs.iter().enumerate() {
        let report = verify(&program, cert);
        let _ = writeln!(out, "branch {i}:\n{report}");
        code = code.max(match report.verdict {
            Verdict::Accept => EXIT_OK,
            Verdict::Reject => EXIT_REJECT,
            Verdict::Unsupported => EXIT_UNSUPPORTED,
        });
    }
    Ok(code)
}

fn cmd_poset(file: &Path, explicit: Option<&PathBuf>, with_frames: bool, frames: &FrameArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let (_, program) = load(file, explicit, frames)?;
    let poset = if with_frames { &program.poset } else { &program.user_poset };
    let mut text = String::new();
    for (i, e) in poset.elements().iter().enumerate() {
        text.push_str(&format!("{i}: {}\n", fmt_set(e)));
    }
    let mut edges = poset.hasse_edges();
    edges.sort();
    for (a, b) in edges {
        text.push_str(&format!("{a} < {b}\n"));
    }
    emit(&text, None, out)?;
    Ok(EXIT_OK)
}
