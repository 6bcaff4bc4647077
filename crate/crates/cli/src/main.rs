//! Experiment runner for the de Sitter inverse curvature flow simulator.
//!
//! Usage:
//!   dsflow --spec <path> [--out <dir>] [--levels <int>] [--quiet]
//!
//! The spec file is a flat `key = value` format (see the repository README
//! for the full key list). `--levels` switches to a refinement study at
//! dyadically refined resolutions. Worker count is taken from the
//! DSFLOW_WORKERS environment variable (default 1); results are
//! bit-identical for every worker count.

use std::path::PathBuf;
use std::process::ExitCode;

use dsflow_cli::runner::{refinement_study, run_experiment, RunOptions};
use dsflow_cli::spec::parse_spec;

struct Args {
    spec: PathBuf,
    out: Option<PathBuf>,
    levels: Option<usize>,
    quiet: bool,
}

fn parse_args() -> Result<Args, String> {
    let mut spec = None;
    let mut out = None;
    let mut levels = None;
    let mut quiet = false;
    let mut it = std::env::args().skip(1);
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--spec" => {
                spec = Some(PathBuf::from(
                    it.next().ok_or("--spec needs a path argument")?,
                ))
            }
            "--out" => {
                out = Some(PathBuf::from(
                    it.next().ok_or("--out needs a directory argument")?,
                ))
            }
            "--levels" => {
                let v = it.next().ok_or("--levels needs an integer argument")?;
                levels = Some(
                    v.parse::<usize>()
                        .map_err(|_| format!("cannot parse --levels value `{v}`"))?,
                );
            }
            "--quiet" => quiet = true,
            "--help" | "-h" => {
                println!("usage: dsflow --spec <path> [--out <dir>] [--levels <int>] [--quiet]");
                std::process::exit(0);
            }
            other => return Err(format!("unknown argument `{other}`")),
        }
    }
    Ok(Args {
        spec: spec.ok_or("--spec <path> is required")?,
        out,
        levels,
        quiet,
    })
}

fn workers_from_env() -> usize {
    std::env::var("DSFLOW_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&w| w >= 1)
        .unwrap_or(1)
}

fn main() -> ExitCode {
    let args = match parse_args() {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let text = match std::fs::read_to_string(&args.spec) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.spec.display());
            return ExitCode::from(3);
        }
    };
    let spec = match parse_spec(&text) {
        Ok(s) => s,
        Err(errors) => {
            eprintln!("invalid spec ({} problem(s)):", errors.len());
            for e in errors {
                eprintln!("  {e}");
            }
            return ExitCode::from(3);
        }
    };
    let out_dir = args
        .out
        .or_else(|| spec.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let opts = RunOptions {
        out_dir,
        quiet: args.quiet,
        workers: workers_from_env(),
    };
    let code = match args.levels {
        Some(levels) => match refinement_study(&spec, levels, &opts) {
            Ok(_) => 0,
            Err(e) => {
                eprintln!("refinement study failed: {e}");
                e.exit_code()
            }
        },
        None => run_experiment(&spec, &opts).exit_code,
    };
    ExitCode::from(code as u8)
}
