use std::process::ExitCode;

use clap::Parser;
use outfox_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let Some(out) = &e.output {
                print!("{out}");
            }
            eprintln!("outfox: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
