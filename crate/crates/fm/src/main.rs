use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use fm::cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stdout, stderr) = (io::stdout(), io::stderr());
    let code = match execute(&cli, &mut stdout.lock(), &mut stderr.lock()) {
        Ok(code) => code,
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            1
        }
    };
    ExitCode::from(code as u8)
}
