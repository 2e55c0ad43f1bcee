use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ris_harness::experiment::trial_seed;
use ris_harness::{load_config, run_experiment, trial_channel, write_csv, HarnessError, Result};

/// Max-min SINR optimization for RIS-aided uplinks: batch experiments.
#[derive(Parser)]
#[command(name = "ris-maxmin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of a config and write one CSV row per (trial, method).
    Run {
        config: PathBuf,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Check a config file and print the run it describes.
    Validate { config: PathBuf },
    /// Write the channel realization of one trial in text form.
    DumpChannel {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Trial index at the first grid point.
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|source| HarnessError::Io {
                path: p.display().to_string(),
                source,
            })?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            trials,
            threads,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.plan.seed = s;
            }
            if let Some(t) = trials {
                if t == 0 {
                    return Err(HarnessError::Config {
                        key: "trials".into(),
                        line: None,
                        message: "--trials must be >= 1".into(),
                    });
                }
                cfg.plan.trials = t;
            }
            let sink = open_output(out.as_deref())?;
            let records = run_experiment(&cfg, threads)?;
            write_csv(&records, sink)?;
            let failed = records
                .iter()
                .filter(|r| r.diagnostics.iter().any(|d| d.starts_with("error:")))
                .count();
            if failed > 0 {
                eprintln!(
                    "{failed} of {} runs failed; see the diagnostics column",
                    records.len()
                );
            }
        }
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            let methods: Vec<String> = cfg
                .plan
                .phase_methods()
                .iter()
                .map(|m| match m.bits() {
                    Some(b) => format!("{m}(B={b})"),
                    None => m.to_string(),
                })
                .collect();
            println!(
                "ok: {} grid points x {} trials x {} methods [{}], seed {}",
                cfg.plan.grid().len(),
                cfg.plan.trials,
                methods.len(),
                methods.join(", "),
                cfg.plan.seed
            );
        }
        Command::DumpChannel {
            config,
            seed,
            trial,
            out,
        } => {
            let cfg = load_config(&config)?;
            let (k, m, n) = cfg.plan.grid()[0];
            let system = cfg.system_at(k, m, n);
            let chan = trial_channel(&system, trial_seed(seed.unwrap_or(cfg.plan.seed), 0, trial))?;
            let mut w = open_output(out.as_deref())?;
            let path = out
                .as_ref()
                .map_or("<stdout>".to_string(), |p| p.display().to_string());
            w.write_all(chan.to_text().as_bytes())
                .and_then(|_| w.flush())
                .map_err(|source| HarnessError::Io { path, source })?;
        }
    }
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
