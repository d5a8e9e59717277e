//! Batch driver: configuration files in, CSV and key=value reports out.
//!
//! Exit codes: 0 when every verdict is pass or vacuous, 2 on any fail,
//! 3 on any inconclusive verdict, 1 for usage and configuration errors.

pub mod config;
pub mod corpus;
pub mod ini;
pub mod output;
pub mod run;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use svfix::Verdict;

use crate::config::{load_config, RunConfig};
use crate::run::{execute, Command, RunError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

pub fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass | Verdict::Vacuous => EXIT_OK,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "svfix",
    version,
    about = "Solution sets and semicontinuity certificates for parametric set-valued fixed-point problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args, Debug)]
struct Target {
    /// Configuration file, or the name of a shipped instance.
    config: String,
    /// Output directory (default: the config's [output] dir, else svfix-out/<name>/<command>).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solution sets, approximate sets and the epsilon family.
    Solve(Target),
    /// Lower-semicontinuity certificates with hypothesis audits.
    Certify(Target),
    /// Bilevel solve in all three modes plus response certification.
    Stackelberg(Target),
    /// Quasi-equilibrium sets plus certification.
    Quasieq(Target),
    /// Hypothesis audits only.
    Audit(Target),
    /// Run every shipped instance through every applicable command.
    Corpus {
        #[arg(long, default_value = "svfix-out/corpus")]
        out: PathBuf,
        /// Restrict to these instances.
        #[arg(long)]
        only: Vec<String>,
        /// Print the shipped instance names and exit.
        #[arg(long)]
        list: bool,
    },
}

/// A path if it exists, else a shipped instance by name (`example31` or
/// `example31.cfg`).
pub fn resolve_config(arg: &str) -> Result<RunConfig, RunError> {
    let path = Path::new(arg);
    if path.exists() {
        return Ok(load_config(path)?);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(arg);
    match corpus::config(stem) {
        Some(c) => Ok(c?),
        None => Err(RunError::Usage(format!(
            "`{arg}` is neither a file nor a shipped instance"
        ))),
    }
}

/// Applies `SVFIX_THREADS` (0 or unset: one thread per core) to the
/// global pool. Only the first call in a process takes effect.
pub fn configure_threads() -> Result<(), RunError> {
    let Ok(v) = std::env::var("SVFIX_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| {
        RunError::Usage(format!(
            "SVFIX_THREADS must be a nonnegative integer, got `{v}`"
        ))
    })?;
    if n > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

fn single(t: &Target, cmd: Command) -> Result<Verdict, RunError> {
    let cfg = resolve_config(&t.config)?;
    let out = t
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| {
            PathBuf::from("svfix-out")
                .join(&cfg.name)
                .join(cmd.as_str())
        });
    let o = execute(&cfg, cmd)?;
    o.write_to(&out)?;
    eprintln!(
        "{} {}: {} ({} files in {})",
        cmd.as_str(),
        cfg.name,
        o.verdict,
        o.files.len(),
        out.display()
    );
    Ok(o.verdict)
}

fn dispatch(cli: Cli) -> Result<i32, RunError> {
    configure_threads()?;
    let v = match &cli.command {
        Cmd::Solve(t) => single(t, Command::Solve)?,
        Cmd::Certify(t) => single(t, Command::Certify)?,
        Cmd::Stackelberg(t) => single(t, Command::Stackelberg)?,
        Cmd::Quasieq(t) => single(t, Command::QuasiEq)?,
        Cmd::Audit(t) => single(t, Command::Audit)?,
        Cmd::Corpus { out, only, list } => {
            if *list {
                for n in corpus::names() {
                    println!("{n}");
                }
                return Ok(EXIT_OK);
            }
            let rows = corpus::run_corpus(out, only)?;
            let bad = rows.iter().filter(|r| !r.matches()).count();
            eprintln!(
                "corpus: {} runs, {bad} mismatches, summary in {}",
                rows.len(),
                out.join("summary.csv").display()
            );
            // the corpus passes when every run meets its recorded expectation
            return Ok(if bad == 0 { EXIT_OK } else { EXIT_FAIL });
        }
    };
    Ok(exit_code(v))
}

/// Parses `argv` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            for line in e.to_string().lines() {
                eprintln!("svfix: {line}");
            }
            EXIT_USAGE
        }
    }
}
