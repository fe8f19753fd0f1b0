use std::process::ExitCode;

fn main() -> ExitCode {
    srpcp::cli::main()
}
