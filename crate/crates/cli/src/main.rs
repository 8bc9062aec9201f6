use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(conformal_cli::execute(std::env::args()) as u8)
}
