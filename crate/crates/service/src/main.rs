use std::process::ExitCode;

fn main() -> ExitCode {
    prism_service::cli::main_with(std::env::args_os())
}
