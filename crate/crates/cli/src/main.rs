use std::process::ExitCode;

use clap::Parser;
use genpd::cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match cli.command.into_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let (code, text) = genpd::execute(&config);
    if code == 0 {
        print!("{text}");
    } else {
        eprint!("{text}");
    }
    ExitCode::from(code)
}
