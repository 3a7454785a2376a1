mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

/// Raised for invalid option values; maps to exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            report(&anyhow::Error::new(ConfigError("--threads must be >= 1".into())));
            return ExitCode::from(2);
        }
        if let Err(e) = swingbench::exec::configure_threads(threads) {
            report(&anyhow::anyhow!("cannot size worker pool: {e}"));
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(exit_status(&e))
        }
    }
}

fn exit_status(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<swingbench::Error>() {
        Some(
            swingbench::Error::InvalidParameters(_)
            | swingbench::Error::InvalidNoise(_)
            | swingbench::Error::StepSize { .. },
        ) => 2,
        _ => 1,
    }
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    if e.downcast_ref::<ConfigError>().is_some() {
        "config"
    } else if let Some(err) = e.downcast_ref::<swingbench::Error>() {
        err.kind()
    } else if e.downcast_ref::<std::io::Error>().is_some() {
        "io"
    } else {
        "other"
    }
}

/// Prints `error: kind=<kind> message="<text>"` on one line.
fn report(e: &anyhow::Error) {
    let message = format!("{e:#}").replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
    eprintln!("error: kind={} message=\"{}\"", error_kind(e), message);
}
