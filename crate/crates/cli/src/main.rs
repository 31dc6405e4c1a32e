use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use phonon_pulse_sim::app::{run_cli, Cli};
use phonon_pulse_sim::CliError;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = match Cli::try_parse() {
        Ok(cli) => run_cli(cli),
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => Err(CliError::config(e.render().to_string().trim_end())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
