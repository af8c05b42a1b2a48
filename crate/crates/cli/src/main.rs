use std::process::ExitCode;

fn main() -> ExitCode {
    lasso_mimo_cli::main_with_args(std::env::args_os())
}
