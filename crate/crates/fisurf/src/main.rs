use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = match fisurf::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage errors share the validation exit code; help and version exit 0
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = fisurf::configure_threads().and_then(|threads| fisurf::run(cli, threads));
    match result {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(e) => {
            eprintln!("fisurf: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
