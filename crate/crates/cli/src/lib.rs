//! Command-line front end for `lp-kappa`.
//!
//! Exit codes: 0 when every check passes, 1 when any check fails, 2 on
//! usage or input errors.

pub mod output;
pub mod triple;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use lp_kappa::lp::{optimal_basis_set, DEFAULT_TOL};
use lp_kappa::mc::{run_experiment_with, Executor};
use lp_kappa::sampler::parse_seed;
use lp_kappa::symmetry::{apply_sign, sign_fix};
use lp_kappa::verify::{run_suite, Suite, VerifyOptions};
use lp_kappa::{kappa, lp, Basis, DataTriple, Experiment, McConfig, Verdict};

pub use output::{csv_string, format_real, read_csv, write_csv, CSV_HEADER};
pub use triple::{parse_triple_file, ParseError};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lp-kappa",
    version,
    about = "Condition numbers of linear programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Condition report of a triple file.
    Cond {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Classification of every basis.
    Basis {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Sign vector making the given basis the unique optimal one.
    Signfix {
        #[arg(long)]
        input: PathBuf,
        /// 1-based, comma separated.
        #[arg(long)]
        basis: String,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// One Monte Carlo experiment.
    Mc {
        #[arg(long)]
        experiment: String,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: u64,
        /// Decimal or 0x-prefixed hex.
        #[arg(long, default_value = "0")]
        seed: String,
        #[arg(long)]
        basis: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The acceptance grid.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value = "0")]
        seed: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Forces one bound to zero so the run must fail.
        #[arg(long)]
        inject_failure: bool,
    },
}

struct Failure(i32, String);

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure(EXIT_USAGE, msg.to_string())
}

fn read_triple(path: &Path) -> Result<DataTriple, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse_triple_file(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse_basis(text: &str, m: usize, n: usize) -> Result<Basis, Failure> {
    let ix = text
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| usage(format!("invalid basis '{text}'")))?;
    Basis::from_one_based(&ix, m, n).map_err(usage)
}

fn seed_arg(text: &str) -> Result<u64, Failure> {
    parse_seed(text).ok_or_else(|| usage(format!("invalid seed '{text}'")))
}

fn opt_real(x: Option<f64>) -> String {
    x.map(format_real).unwrap_or_else(|| "undefined".into())
}

fn cond(out: &mut impl Write, input: &Path, tol: f64) -> Result<i32, Failure> {
    let d = read_triple(input)?;
    let r = kappa(&d, tol).map_err(usage)?;
    let basis = r
        .basis
        .as_ref()
        .map_or("none".to_string(), |b| b.to_string());
    let _ = writeln!(out, "verdict: {}", r.verdict);
    let _ = writeln!(out, "basis: {basis}");
    let _ = writeln!(out, "norm_12: {}", format_real(r.norm_d));
    let _ = writeln!(out, "rho: {}", opt_real(r.rho));
    let _ = writeln!(out, "kappa: {}", opt_real(r.kappa));
    if !r.rho_per_submatrix.is_empty() {
        let _ = writeln!(out, "submatrix,rho_sing");
        for (kind, rho) in &r.rho_per_submatrix {
            let _ = writeln!(out, "{kind},{}", format_real(*rho));
        }
    }
    Ok(EXIT_PASS)
}

fn basis_table(out: &mut impl Write, input: &Path, tol: f64) -> Result<i32, Failure> {
    let d = read_triple(input)?;
    let set = optimal_basis_set(&d, tol).map_err(usage)?;
    let _ = writeln!(out, "basis,class");
    for (b, class) in &set.classes {
        let _ = writeln!(out, "\"{b}\",{class}");
    }
    let _ = writeln!(out, "verdict: {}", set.verdict);
    Ok(EXIT_PASS)
}

fn signfix(out: &mut impl Write, input: &Path, basis: &str, tol: f64) -> Result<i32, Failure> {
    let d = read_triple(input)?;
    let b = parse_basis(basis, d.m(), d.n())?;
    let u = sign_fix(&d, &b, tol).map_err(usage)?;
    let fixed = apply_sign(&d, &u).map_err(usage)?;
    let v = lp::verdict(&fixed, tol).map_err(usage)?;
    let ok = v == Verdict::InU(b.clone());
    let _ = writeln!(out, "u: {u}");
    let _ = writeln!(out, "u(d) verdict: {v}");
    let _ = writeln!(
        out,
        "unique optimal basis {b}: {}",
        if ok { "yes" } else { "no" }
    );
    Ok(if ok { EXIT_PASS } else { EXIT_FAIL })
}

#[allow(clippy::too_many_arguments)]
fn mc(
    out: &mut impl Write,
    experiment: &str,
    m: usize,
    n: usize,
    trials: u64,
    seed: &str,
    basis: Option<&str>,
    path: Option<&Path>,
) -> Result<i32, Failure> {
    let e: Experiment = experiment.parse().map_err(usage)?;
    let mut cfg = McConfig::new(e, m, n, trials, seed_arg(seed)?);
    if let Some(text) = basis {
        if m == 0 || m > n {
            return Err(usage(format!(
                "dimensions must satisfy 1 <= m <= n, got m = {m}, n = {n}"
            )));
        }
        cfg = cfg.with_basis(parse_basis(text, m, n)?);
    }
    let r = run_experiment_with(&cfg, &Executor::from_env()).map_err(usage)?;
    let rows = std::slice::from_ref(&r);
    if let Some(p) = path {
        write_csv(rows, p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
    }
    let _ = out.write_all(csv_string(rows).as_bytes());
    Ok(if r.pass { EXIT_PASS } else { EXIT_FAIL })
}

fn verify(
    out: &mut impl Write,
    suite: &str,
    seed: &str,
    path: Option<&Path>,
    inject: bool,
) -> Result<i32, Failure> {
    let suite: Suite = suite.parse().map_err(usage)?;
    let opts = VerifyOptions {
        suite,
        seed: seed_arg(seed)?,
        inject_failure: inject,
    };
    let checks = run_suite(&opts, &Executor::from_env()).map_err(usage)?;
    for c in &checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(
            out,
            "[{status}] {:>2} {}: {}",
            c.criterion, c.name, c.summary
        );
    }
    if let Some(p) = path {
        let rows: Vec<_> = checks
            .iter()
            .flat_map(|c| c.results.iter().cloned())
            .collect();
        write_csv(&rows, p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
    }
    Ok(if checks.iter().all(|c| c.pass) {
        EXIT_PASS
    } else {
        EXIT_FAIL
    })
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
            } else {
                let _ = out.write_all(text.as_bytes());
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Cond { input, tol } => cond(out, input, *tol),
        Command::Basis { input, tol } => basis_table(out, input, *tol),
        Command::Signfix { input, basis, tol } => signfix(out, input, basis, *tol),
        Command::Mc {
            experiment,
            m,
            n,
            trials,
            seed,
            basis,
            out: path,
        } => mc(
            out,
            experiment,
            *m,
            *n,
            *trials,
            seed,
            basis.as_deref(),
            path.as_deref(),
        ),
        Command::Verify {
            suite,
            seed,
            out: path,
            inject_failure,
        } => verify(out, suite, seed, path.as_deref(), *inject_failure),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}
