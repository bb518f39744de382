use std::process::ExitCode;

fn main() -> ExitCode {
    ergodic_wigner::cli::main_with_args(std::env::args_os())
}
