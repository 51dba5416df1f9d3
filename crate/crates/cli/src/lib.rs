//! The `subwalk` command-line tool.
//!
//! Every output embeds the tool version, the seed and the fully resolved
//! [`RunConfig`]; `subwalk replay FILE` re-executes that configuration and
//! checks that the numeric payload comes out identical.
//!
//! Exit codes: 0 success, 1 verification or tolerance failure, 2 usage
//! error, 3 runtime or model error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod model;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;

pub use args::Cli;
pub use config::RunConfig;
pub use error::CliError;

use args::{Command, Format};

fn write_to(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn emit(text: &str, out: Option<&str>) -> Result<(), CliError> {
    match out {
        Some(path) => write_to(Path::new(path), text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

/// Runs a resolved configuration, writes its output and returns the
/// verification outcome.
pub fn run_config(config: &RunConfig, summary: Option<&Path>) -> Result<(), CliError> {
    let report = commands::execute(config)?;
    emit(
        &output::render(config, &report, config.format),
        config.out.as_deref(),
    )?;
    for line in &report.notes {
        eprintln!("{line}");
    }
    if matches!(config.command, config::CommandConfig::Converge { .. })
        && config.format == Format::Csv
    {
        let json = output::render(config, &report, Format::Json);
        let path = summary.map(Path::to_path_buf).or_else(|| {
            config
                .out
                .as_ref()
                .map(|o| PathBuf::from(o).with_extension("json"))
        });
        match path {
            Some(p) => {
                write_to(&p, &json)?;
                eprintln!("summary written to {}", p.display());
            }
            None => eprint!("{json}"),
        }
    }
    match report.failure {
        Some(msg) => Err(CliError::Verification(msg)),
        None => Ok(()),
    }
}

fn replay(a: &args::ReplayArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.input).map_err(|source| CliError::Io {
        path: a.input.display().to_string(),
        source,
    })?;
    let (mut config, original) = output::split_output(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", a.input.display())))?;
    if a.workers.is_some() {
        config.workers = a.workers;
    }
    let report = commands::execute(&config)?;
    let rendered = output::render(&config, &report, config.format);
    if let Some(out) = &a.out {
        write_to(out, &rendered)?;
    }
    let (_, fresh) = output::split_output(&rendered).map_err(CliError::Usage)?;
    if fresh == original {
        eprintln!(
            "replay of {}: payload identical ({} bytes)",
            a.input.display(),
            fresh.len()
        );
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "replay of {} produced a different payload",
            a.input.display()
        )))
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Command::Replay(a) = &cli.command {
        return replay(a);
    }
    let summary = match &cli.command {
        Command::Converge(a) => a.summary.clone(),
        _ => None,
    };
    let config = config::resolve(&cli.command)?.expect("non-replay command");
    run_config(&config, summary.as_deref())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
