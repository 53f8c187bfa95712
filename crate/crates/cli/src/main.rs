use clap::Parser;
use ctrlgeom_cli::commands::EXIT_INTERNAL;
use ctrlgeom_cli::{run, Cli};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(out)) => {
            print!("{}", out.stdout);
            match (&cli.json, &out.json) {
                (Some(path), Some(json)) => match std::fs::write(path, json) {
                    Ok(()) => out.exit,
                    Err(e) => {
                        eprintln!("error: {}: {}", path.display(), e);
                        EXIT_INTERNAL
                    }
                },
                _ => out.exit,
            }
        }
        Ok(Err(e)) => {
            eprintln!("error: {}", e);
            e.exit_code()
        }
        Err(_) => EXIT_INTERNAL,
    };
    ExitCode::from(code as u8)
}
