use forgetting_cli::args::{Cli, Command, FormatArg};
use forgetting_cli::{commands, verify};
use clap::Parser;
use forgetting_core::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_PARAMETER: u8 = 1;
const EXIT_CHECK_FAILURE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_BUDGET: u8 = 4;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_PARAMETER,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(RunError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Budget(_) => EXIT_BUDGET,
                _ => EXIT_PARAMETER,
            })
        }
        Err(RunError::Io(path, e)) => {
            eprintln!("error: cannot write {}: {e}", path.display());
            ExitCode::from(EXIT_IO)
        }
    }
}

enum RunError {
    Core(Error),
    Io(PathBuf, std::io::Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Core(e)
    }
}

fn run(cli: Cli) -> Result<u8, RunError> {
    let started = std::time::Instant::now();
    let (record, csv, out, format, all_passed) = match cli.command {
        Command::BoundCompare(a) => {
            let r = commands::bound_compare(&a)?;
            (r.record, r.csv, a.out, a.format, true)
        }
        Command::RhoCompare(a) => {
            let r = commands::rho_compare(&a)?;
            (r.record, r.csv, a.out, a.format, true)
        }
        Command::RichnessSweep(a) => {
            let r = commands::richness_sweep(&a)?;
            (r.record, r.csv, a.out, a.format, true)
        }
        Command::Surrogates(a) => {
            let r = commands::surrogates_cmd(&a)?;
            (r.record, r.csv, a.out, a.format, true)
        }
        Command::Operator(a) => {
            let r = commands::operator_cmd(&a)?;
            (r.record, r.csv, a.out, a.format, true)
        }
        Command::Verify(a) => {
            let results = verify::run_checks(a.only.as_deref())?;
            for r in &results {
                eprintln!(
                    "{}: {} (residual {:.3e}) — {}",
                    r.name,
                    if r.passed { "pass" } else { "FAIL" },
                    r.residual,
                    r.detail
                );
            }
            let (record, csv, all_passed) = verify::results_record(&results, a.only.as_deref());
            (record, csv, a.out, a.format, all_passed)
        }
    };

    let payload = match format {
        FormatArg::Json => record.render(),
        FormatArg::Csv => csv.render(),
    };
    match &out {
        Some(path) => {
            std::fs::write(path, &payload).map_err(|e| RunError::Io(path.clone(), e))?;
        }
        None => print!("{payload}"),
    }
    eprintln!("completed in {:.2} s", started.elapsed().as_secs_f64());
    Ok(if all_passed { EXIT_OK } else { EXIT_CHECK_FAILURE })
}
