use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use preictal_cli::synth::{default_fixture, write_fixture};
use preictal_cli::{CliError, Pipeline, PipelineConfig, Stage, StageOutcome};

#[derive(Parser)]
#[command(name = "preictal", version, about = "ECG reconstruction-error seizure prediction pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Pipeline config file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the `seed` key.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the `out` key.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recompute even when cached outputs are current.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Read the EDF or CSV record and annotations into the record cache.
    Convert(RunArgs),
    /// Low-pass filter, segment and label phases.
    Preprocess(RunArgs),
    /// Compute the configured time-frequency representation.
    Extract(RunArgs),
    /// Train the autoencoder on the inter-ictal baseline.
    Train(RunArgs),
    /// Score every segment with the trained model.
    Score(RunArgs),
    /// Smooth, threshold and compute metrics.
    Evaluate(RunArgs),
    /// Write metrics JSON/CSV and the SVG error trace.
    Report(RunArgs),
    /// Run every stage in order.
    All(RunArgs),
    /// Write the two-hour synthetic fixture (EDF, annotations, config) into a directory.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Additive white noise, millivolts.
        #[arg(long, default_value_t = 0.0)]
        noise_std: f64,
        /// Resting heart rate, beats per minute.
        #[arg(long)]
        base_hr: Option<f64>,
        /// Relative beat-to-beat interval variability.
        #[arg(long)]
        rr_jitter: Option<f64>,
    },
}

fn pipeline(args: &RunArgs) -> Result<Pipeline, CliError> {
    let mut cfg = PipelineConfig::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(out) = &args.out {
        cfg = cfg.with_out(out.clone());
    }
    Pipeline::new(cfg)
}

fn print(o: &StageOutcome) {
    let how = if o.cached { "cached" } else { "done" };
    println!("{:<10} {how:<6} {:>9.2} s", o.stage.name(), o.wall_clock_s);
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (stage, args) = match cli.command {
        Command::Synth {
            out,
            seed,
            noise_std,
            base_hr,
            rr_jitter,
        } => {
            let mut spec = default_fixture(seed);
            spec.noise_std = noise_std;
            if let Some(hr) = base_hr {
                spec.base_hr_bpm = hr;
            }
            if let Some(j) = rr_jitter {
                spec.rr_jitter_std = j;
            }
            let conf = write_fixture(&out, &spec)?;
            println!("wrote {}", conf.display());
            return Ok(());
        }
        Command::All(args) => {
            let mut p = pipeline(&args)?;
            for o in p.run_all(args.force)? {
                print(&o);
            }
            return Ok(());
        }
        Command::Convert(a) => (Stage::Convert, a),
        Command::Preprocess(a) => (Stage::Preprocess, a),
        Command::Extract(a) => (Stage::Extract, a),
        Command::Train(a) => (Stage::Train, a),
        Command::Score(a) => (Stage::Score, a),
        Command::Evaluate(a) => (Stage::Evaluate, a),
        Command::Report(a) => (Stage::Report, a),
    };
    let mut p = pipeline(&args)?;
    print(&p.run(stage, args.force)?);
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
