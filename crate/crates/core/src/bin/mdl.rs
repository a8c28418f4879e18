use std::process::ExitCode;

fn main() -> ExitCode {
    mdl::cli::main_with_args(std::env::args_os())
}
