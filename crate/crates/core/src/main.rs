use std::process::ExitCode;

fn main() -> ExitCode {
    mlpac::cli::main()
}
