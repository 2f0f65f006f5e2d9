use std::path::PathBuf;
use std::process::ExitCode;

use chaos_bounds_cli::{builtins, run, Overrides};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "chaos-bounds",
    version,
    about = "Berry-Esseen bounds and Edgeworth checks for Gaussian chaos"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the built-in spectral pairs, kernel families and ladders.
    ListBuiltins,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::ListBuiltins => {
            print!("{}", builtins::render());
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            seed,
            out,
            workers,
        } => match run(&config, &Overrides { seed, out }, workers) {
            Ok(s) => {
                for f in &s.flags {
                    eprintln!("unconverged: {f}");
                }
                println!("wrote {}", s.output_dir.display());
                ExitCode::from(s.exit_code() as u8)
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
