use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(frakspace_cli::run(std::env::args_os()))
}
