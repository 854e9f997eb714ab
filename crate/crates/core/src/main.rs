use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mmshare::cli::{bounds_csv, run_experiment, summarize, ExperimentConfig};
use mmshare::schedgraph::{ConflictMode, WeightMode};
use mmshare::Error;

#[derive(Parser)]
#[command(name = "mmshare", version, about = "mmWave V2V data sharing scheduler and simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment and write slots.csv, runs.csv and summary.json.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; overrides `out` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed of replication 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        /// basic, conventional or mmwave; replaces the configured list.
        #[arg(long)]
        mode: Option<ConflictMode>,
        /// max-transmission or max-distance; replaces the configured list.
        #[arg(long)]
        weight: Option<WeightMode>,
    },
    /// Summarize output directories or CSV files into JSON.
    Summarize {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the end-slot bounds table as CSV.
    Bounds {
        #[arg(long = "nv", default_values_t = [10, 15, 20])]
        nv: Vec<usize>,
    },
}

fn run(cli: Cli) -> mmshare::Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            reps,
            mode,
            weight,
        } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::from_path(&p)?,
                None => ExperimentConfig::default(),
            };
            if let Some(s) = seed {
                cfg.harness.seed_base = s;
            }
            if let Some(r) = reps {
                cfg.harness.reps = r;
            }
            if let Some(m) = mode {
                cfg.harness.modes = vec![m];
            }
            if let Some(w) = weight {
                cfg.harness.weights = vec![w];
            }
            let out = out
                .or_else(|| cfg.harness.out.clone())
                .ok_or_else(|| Error::config("no output directory (--out or `out` key)"))?;
            let summary = run_experiment(&cfg, &out)?;
            for c in &summary.cases {
                eprintln!(
                    "case {} lavg={} nv={} bw={} {} {}: {} runs, {} connected, failure rate {:.4}",
                    c.case.case,
                    c.case.lavg,
                    c.case.nv,
                    c.case.beamwidth_deg,
                    c.case.mode,
                    c.case.weight,
                    c.runs,
                    c.connected_runs,
                    c.failure_rate
                );
            }
            Ok(())
        }
        Command::Summarize { inputs, out } => {
            let summary = summarize(&inputs)?;
            let text = serde_json::to_string_pretty(&summary)? + "\n";
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Bounds { nv } => {
            print!("{}", bounds_csv(&nv)?);
            Ok(())
        }
    }
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
