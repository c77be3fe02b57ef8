use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use ncquant_cli::config::CliError;
use ncquant_cli::{output_path, run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { CliError::USAGE } else { 0 });
        }
    };
    let result = output_path(&cli).and_then(|out| Ok((out, run(cli)?)));
    match result {
        Ok((out, outcome)) => {
            let written = match out {
                Some(path) => std::fs::write(&path, &outcome.body)
                    .map_err(|e| format!("cannot write {}: {}", path.display(), e)),
                None => std::io::stdout().write_all(outcome.body.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                eprintln!("error: {}", e);
                return ExitCode::from(CliError::USAGE);
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
