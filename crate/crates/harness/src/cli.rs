//! `bdris` command line.

use std::ffi::OsString;
use std::path::PathBuf;

use bdris_core::model::{default_config, load_config};
use clap::{Args, Parser, Subcommand};

use crate::error::Result;
use crate::experiment::{self, ExperimentSpec, Mode};
use crate::verify;

#[derive(Debug, Parser)]
#[command(name = "bdris", version, about = "Joint active/passive beamforming for fully connected BD-RIS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve independent channel realizations and report final WSR per trial.
    Run(CommonArgs),
    /// WSR per outer iteration for each SNR in --values (dB).
    Convergence(CommonArgs),
    /// Mean final WSR and solve time for each N in --values.
    SweepN(CommonArgs),
    /// Mean final WSR and solve time for each SNR in --values (dB).
    SweepSnr(CommonArgs),
    /// Per-iteration Θ-update time for each N in --values.
    Timing(CommonArgs),
    /// Run the oracle verification suite; --trials scales the instance counts.
    Verify(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON system configuration; defaults to the built-in setup.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base RNG seed; trial t uses seed + t.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    values: Option<Vec<f64>>,
}

impl CommonArgs {
    fn spec(&self, mode: Mode) -> Result<ExperimentSpec> {
        let mut config = match &self.config {
            Some(path) => load_config(path)?,
            None => default_config(),
        };
        if let Some(seed) = self.seed {
            config.rng_seed = seed;
        }
        let mut spec = ExperimentSpec::new(mode, config);
        if let Some(trials) = self.trials {
            spec.trials = trials;
        }
        if let Some(out) = &self.out {
            spec.output_path = out.clone();
        }
        if let Some(workers) = self.workers {
            spec.parallel_workers = workers;
        }
        if let Some(values) = &self.values {
            spec.sweep_values = values.clone();
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Run(args) => {
            let spec = args.spec(Mode::Single)?;
            let rows = experiment::run_single(&spec)?;
            let converged = rows.iter().filter(|r| r.converged).count();
            let mean = rows.iter().map(|r| r.final_wsr).sum::<f64>() / rows.len() as f64;
            println!(
                "{} trials, {converged} converged, mean WSR {mean:.6e} -> {}",
                rows.len(),
                spec.output_path.display()
            );
        }
        Command::Convergence(args) => {
            let spec = args.spec(Mode::Convergence)?;
            let rows = experiment::run_convergence(&spec)?;
            println!("{} rows -> {}", rows.len(), spec.output_path.display());
        }
        Command::SweepN(args) => {
            let spec = args.spec(Mode::SweepN)?;
            report_sweep(&spec, &experiment::run_sweep_n(&spec)?);
        }
        Command::SweepSnr(args) => {
            let spec = args.spec(Mode::SweepSnr)?;
            report_sweep(&spec, &experiment::run_sweep_snr(&spec)?);
        }
        Command::Timing(args) => {
            let spec = args.spec(Mode::Timing)?;
            let profile = experiment::emit_timing_profile(&spec)?;
            for row in &profile.rows {
                println!(
                    "N={:>4}  theta {:.3e} s/iter (cv {:.3})  W {:.3e} s/iter",
                    row.n, row.mean_inner_theta_time_s, row.theta_cv, row.mean_inner_w_time_s
                );
            }
            println!(
                "log-log slope: theta {:.3}, W {:.3} -> {}",
                profile.theta_slope,
                profile.w_slope,
                spec.output_path.display()
            );
        }
        Command::Verify(args) => {
            let seed = args.seed.unwrap_or(0);
            let checks = verify::run_suite(seed, args.trials.unwrap_or(1))?;
            for check in &checks {
                println!("{check}");
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn report_sweep(spec: &ExperimentSpec, sweep: &experiment::Sweep) {
    for row in &sweep.rows {
        println!(
            "{:>8}  mean WSR {:.6e}  std {:.3e}  time {:.3e} s",
            row.value, row.mean_wsr, row.std_wsr, row.mean_time_s
        );
    }
    for (from, to) in &sweep.trend_violations {
        eprintln!("warning: mean WSR drops by more than one std from {from} to {to}");
    }
    println!("-> {}", spec.output_path.display());
}

/// Parses `argv` (including the program name), runs the command, and returns
/// the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            1
        }
    }
}
