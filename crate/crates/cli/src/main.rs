use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nptcorr_cli::output::resolve_out_dir;
use nptcorr_cli::{run, write_outputs, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "nptcorr", version, about = "Run n-point correlator experiments from a TOML config")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write `<name>.csv` and `<name>.json`.
    Run {
        config: PathBuf,
        /// Override `protocol.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides `output.dir` and NPTCORR_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Force exact (shot-free) evaluation.
        #[arg(long)]
        exact: bool,
        /// Do not print the result table.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Check a config and list every problem found.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Parse(_) | CliError::Invalid(_) => 2,
                _ => 1,
            })
        }
    }
}

fn real_main(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let diagnostics = cfg.validate();
            if !diagnostics.is_empty() {
                return Err(CliError::Invalid(diagnostics));
            }
            println!("{}: ok ({})", config.display(), cfg.experiment.as_str());
            Ok(())
        }
        Command::Run { config, seed, out, exact, quiet } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.protocol.seed = Some(s);
            }
            if exact {
                cfg.protocol.exact = true;
            }
            let dir = resolve_out_dir(out.as_deref(), &cfg);
            if out.is_some() {
                cfg.output.dir = Some(dir.display().to_string());
            }
            let result = run(&cfg)?;
            if !quiet {
                print!("{}", result.report);
            }
            let (csv, json) = write_outputs(&dir, &cfg, &result)?;
            println!("wrote {} and {}", csv.display(), json.display());
            Ok(())
        }
    }
}
