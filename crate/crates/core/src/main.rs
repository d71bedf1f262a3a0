use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    belltet::cli::configure_threads();
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = belltet::cli::run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    ExitCode::from(code as u8)
}
