use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use linconv_cli::{exit, output_path, run, write_report, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::USAGE as u8),
            };
        }
    };
    let report = run(&cli);
    if let Some(err) = &report.error {
        eprintln!("linconv {}: {}: {}", report.command, err.kind, err.message);
    }
    let path = output_path(&cli.command, &report);
    if let Err(e) = write_report(&report, path.as_deref()) {
        eprintln!("linconv: cannot write report: {e}");
        return ExitCode::from(exit::USAGE as u8);
    }
    ExitCode::from(report.exit_code as u8)
}
