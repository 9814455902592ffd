/// `println!` that ignores a closed stdout (e.g. when piped into `head`).
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Run;
use error::{CliError, CliResult};

fn run(cli: Cli) -> CliResult<()> {
    if cli.global.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build_global()
            .map_err(|e| CliError::new(error::Kind::Failure, e.to_string()))?;
    }
    let mut r = Run::new(&cli.global)?;
    match &cli.command {
        Command::Gen(a) => commands::gen(&mut r, a),
        Command::Train(a) => commands::train_cmd(&mut r, a),
        Command::Calibrate(a) => commands::calibrate(&mut r, a),
        Command::Solve(a) => commands::solve_cmd(&mut r, a),
        Command::Replay(a) => commands::replay_cmd(&mut r, a),
        Command::Compare(a) => commands::compare(&mut r, a),
        Command::Report(a) => commands::report(&mut r, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e
                .to_string()
                .lines()
                .next()
                .unwrap_or("usage error")
                .trim_start_matches("error: ")
                .to_string();
            eprintln!("{}", CliError::usage(first).to_line());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_line());
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
