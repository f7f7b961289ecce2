use std::process::ExitCode;

use clap::Parser;
use rankmed_cli::{config::TOL_ENV, execute, Cli, EXIT_INTERNAL, EXIT_INVALID};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let env_tol = std::env::var(TOL_ENV).ok();
    let outcome = std::panic::catch_unwind(|| execute(cli.command, env_tol.as_deref(), &mut std::io::stdout().lock()));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("rankmed: {e}");
            ExitCode::from(e.code)
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}
