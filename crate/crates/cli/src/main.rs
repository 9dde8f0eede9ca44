use clap::Parser;

use soliton_lab::app::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    let quiet = match &cli.command {
        soliton_lab::app::Command::GroundState(a)
        | soliton_lab::app::Command::Evolve(a)
        | soliton_lab::app::Command::Sweep(a)
        | soliton_lab::app::Command::Compare(a)
        | soliton_lab::app::Command::EmitPlots(a) => a.quiet,
    };
    match execute(cli) {
        Ok(dir) => {
            if !quiet {
                println!("{}", dir.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
