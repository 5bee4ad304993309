use std::process::ExitCode;

use clap::Parser;
use liouville_workbench::commands;
use liouville_workbench::config::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.command.into_job().and_then(|job| commands::run(&job));
    match result {
        Ok(out) => {
            println!("{}", out.dir.display());
            match out.failure {
                None => ExitCode::SUCCESS,
                Some(e) => {
                    eprintln!("liouville: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Err(e) => {
            eprintln!("liouville: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
