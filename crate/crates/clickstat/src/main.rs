use std::process::ExitCode;

fn main() -> ExitCode {
    clickstat::cli::main(std::env::args_os())
}
