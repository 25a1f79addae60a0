//! `mpsqp`: command-line front end.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure. Errors are
//! printed to stderr as one JSON record and, once the output directory is
//! known, also written to `error.json` there.

mod commands;
mod config;

use clap::error::ErrorKind as ClapKind;
use clap::Parser;
use mpsqp::{Error, ErrorKind};
use serde_json::json;
use std::path::Path;
use std::process::ExitCode;

fn record(code: &str, kind: &str, message: &str) -> serde_json::Value {
    json!({"error": {"code": code, "kind": kind, "message": message}})
}

fn fail(e: &Error, out: Option<&Path>) -> ExitCode {
    let (kind, status) = match e.kind() {
        ErrorKind::Validation => ("validation", 2),
        ErrorKind::Numerical => ("numerical", 3),
    };
    let rec = record(e.code(), kind, &e.to_string());
    eprintln!("{rec}");
    if let Some(dir) = out.filter(|d| d.is_dir()) {
        let _ = std::fs::write(dir.join(commands::ERROR_RECORD), rec.to_string() + "\n");
    }
    ExitCode::from(status)
}

fn main() -> ExitCode {
    let cli = match config::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ClapKind::DisplayHelp | ClapKind::DisplayVersion) => e.exit(),
        Err(e) => {
            eprintln!("{}", record("usage", "validation", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    let cfg = match config::resolve(cli) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e, None),
    };
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(&Error::Invalid(e.to_string()), None);
        }
    }
    match commands::execute(&cfg) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e, Some(&cfg.out)),
    }
}
