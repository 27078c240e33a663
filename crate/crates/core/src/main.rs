use std::process::ExitCode;

fn main() -> ExitCode {
    agecompat::cli::main_entry()
}
