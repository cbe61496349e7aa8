use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = jagarin_cli::Cli::parse();
    let mut out = std::io::stdout().lock();
    match jagarin_cli::run(cli, &mut out) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
