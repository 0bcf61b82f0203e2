use std::process::ExitCode;

use clap::Parser;
use vscc_cli::{run, Args, CliError, RunConfig};

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error[{}] {}: {e}", e.category().as_str(), e.kind());
    if let Some(hint) = e.hint() {
        eprintln!("hint: {hint}");
    }
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let cfg = match RunConfig::from_args(args) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    match run(&cfg) {
        Ok(artifacts) => {
            println!("{}", artifacts.digest);
            println!("out={}", cfg.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
