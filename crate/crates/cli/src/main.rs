use std::process::ExitCode;

use clap::Parser;
use kst_cli::commands::{run, Status};
use kst_cli::config::{RunConfig, UsageError};
use kst_cli::Cli;
use kst_core::KstError;

fn is_usage(err: &anyhow::Error) -> bool {
    if err.downcast_ref::<UsageError>().is_some() {
        return true;
    }
    matches!(
        err.downcast_ref::<KstError>(),
        Some(
            KstError::InvalidParameter { .. }
                | KstError::BaseTooSmall { .. }
                | KstError::OutOfRange { .. }
                | KstError::UnsupportedOrder { .. }
                | KstError::PartitionOrder { .. }
        )
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::resolve(&cli.global).and_then(|cfg| run(&cli.command, &cfg));
    match result {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::Failure) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_usage(&err) { 2 } else { 1 })
        }
    }
}
