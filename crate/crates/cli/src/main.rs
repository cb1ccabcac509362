use std::process::ExitCode;

fn main() -> ExitCode {
    reflex_sm_cli::main_with(std::env::args_os())
}
