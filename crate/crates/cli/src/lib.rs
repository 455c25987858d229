//! The `oframe` command line: argument parsing, JSON/CSV reports and exit codes.
//!
//! Exit codes: 0 when every bound check passes, 1 on malformed input or a
//! library error, 2 when a bound check fails. Reports are still written for
//! exit code 2 so the failing measurements and witnesses are available.

pub mod args;
pub mod commands;
pub mod demo;
pub mod input;
pub mod report;

use std::ffi::OsString;
use std::fmt;

use clap::Parser;

use args::Cli;
use input::Inputs;
use report::Report;

#[derive(Debug)]
pub enum CliError {
    Input(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
        }
    }
}

impl From<oframe_core::Error> for CliError {
    fn from(e: oframe_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub enum Format {
    Json,
    Csv,
}

/// Result of one invocation: text for stdout (or `--out`), text for stderr,
/// and the exit code.
pub struct Invocation {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

pub fn build_report(cli: &Cli, argv: Vec<String>) -> Result<Report, CliError> {
    let cfg = cli.global.config().map_err(CliError::Input)?;
    let mut inputs = Inputs::default();
    let out = commands::run(&cli.command, &cfg, &mut inputs)?;
    let mut digest = inputs.digest;
    digest.add("command", &cli.command.name());
    digest.add("config", &serde_json::to_string(&cfg).expect("config serializes"));
    Ok(Report::new(argv, digest, cfg, out))
}

pub fn invoke<I, T>(args: I) -> Invocation
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            return Invocation { stdout: String::new(), stderr: e.render().to_string(), code };
        }
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let report = match build_report(&cli, argv) {
        Ok(r) => r,
        Err(e) => return Invocation { stdout: String::new(), stderr: format!("error: {e}\n"), code: 1 },
    };
    let format = if cli.global.csv { Format::Csv } else { Format::Json };
    let text = match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.to_csv(&cli.command.name()),
    };
    let code = if report.pass { 0 } else { 2 };
    let mut stderr = String::new();
    if !report.pass {
        for c in report.checks.iter().filter(|c| !c.pass) {
            stderr.push_str(&format!("bound violated: {} (measured {:e}, bound {:e})\n", c.name, c.measured, c.bound));
        }
    }
    if let Some(path) = &cli.global.out {
        if let Err(e) = std::fs::write(path, &text) {
            return Invocation { stdout: String::new(), stderr: format!("error: cannot write {}: {e}\n", path.display()), code: 1 };
        }
        return Invocation { stdout: String::new(), stderr, code };
    }
    Invocation { stdout: text, stderr, code }
}
