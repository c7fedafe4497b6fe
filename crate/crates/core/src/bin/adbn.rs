use std::process::ExitCode;

fn main() -> ExitCode {
    adaptive_dbn::cli::main()
}
