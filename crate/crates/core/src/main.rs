use std::path::PathBuf;
use std::process::ExitCode;

use attack_bundle::data::{save_csv, synth_dataset};
use attack_bundle::experiment::{
    load_dataset, obtain_model, resolve_output_dir, run_experiment, ExperimentConfig, OUTPUT_DIR_ENV,
};
use attack_bundle::report::{wat_underestimation_report, write_gap_csv};
use attack_bundle::Error;
use clap::{Parser, Subcommand};

/// Attack bundling for L-infinity robustness evaluation.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train or load the model, bundle the attack suite and write all reports.
    Run {
        config: PathBuf,
        /// Worker threads for attacks (0 = all cores); overrides the config.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Write a synthetic Gaussian-blob dataset as CSV.
    Synth {
        n: usize,
        d: usize,
        k: usize,
        seed: u64,
        out: PathBuf,
    },
    /// Train (or load) the configured model and save it as model.txt.
    Train { config: PathBuf },
    /// Print the worst-attack vs bundled gap of the n-by-n identity construction.
    Gap {
        #[arg(required = true)]
        n: Vec<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config, workers } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(w) = workers {
                config.workers = w;
            }
            let dir = resolve_output_dir(&config);
            let output = run_experiment(&config, &dir)?;
            print!("{}", output.summary);
            println!("artifacts written to {}", dir.display());
        }
        Command::Synth { n, d, k, seed, out } => {
            let dataset = synth_dataset(n, d, k, seed)?;
            save_csv(&dataset, &out)?;
            println!("wrote {} examples to {}", dataset.len(), out.display());
        }
        Command::Train { config } => {
            let config = ExperimentConfig::load(&config)?;
            config.validate()?;
            let dataset = load_dataset(&config.dataset)?;
            let model = obtain_model(&config, &dataset)?;
            let dir = resolve_output_dir(&config);
            std::fs::create_dir_all(&dir)?;
            let path = dir.join("model.txt");
            model.save(&path)?;
            println!(
                "{} model, clean error {:.4}, saved to {}",
                model.architecture().tag(),
                model.error_rate(&dataset)?,
                path.display()
            );
        }
        Command::Gap { n } => {
            let rows = wat_underestimation_report(&n)?;
            let mut buf = Vec::new();
            write_gap_csv(&rows, &mut buf)?;
            if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
                let dir = PathBuf::from(dir);
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("wat_gap.csv"), &buf)?;
            }
            print!("{}", String::from_utf8_lossy(&buf));
        }
    }
    Ok(())
}
