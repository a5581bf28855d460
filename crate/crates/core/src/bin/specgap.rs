use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use specgap::cli::{self, CliError, ExperimentKind};

#[derive(Parser)]
#[command(name = "specgap", version, about = "Spectral statistics of quantized integrable maps")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory, overriding the config's out_path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and print it with defaults filled in.
    Validate { config: PathBuf },
    /// List the available experiments.
    ListExperiments,
}

fn execute(args: Args) -> Result<(), CliError> {
    match args.command {
        Command::Run { config, threads, out } => {
            let resolved = cli::validate(&cli::read_config(&config)?)?;
            let dir = cli::output_dir(&resolved, out.as_deref());
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(k) = threads {
                if k == 0 {
                    return Err(CliError::Schema(vec!["--threads must be ≥ 1".into()]));
                }
                builder = builder.num_threads(k);
            }
            let pool = builder.build().map_err(|e| CliError::Io(e.to_string()))?;
            let summary = pool.install(|| cli::run(&resolved, &dir))?;
            for f in summary.outputs {
                println!("{}", dir.join(f).display());
            }
            Ok(())
        }
        Command::Validate { config } => {
            let resolved = cli::validate(&cli::read_config(&config)?)?;
            println!("{}", serde_json::to_string_pretty(&resolved).expect("config serializes"));
            Ok(())
        }
        Command::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{:<13} {}", k.name(), k.summary());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
