//! Command-line entry point.
//!
//! ```text
//! gmat-sim sweep --config sweep.cfg --out rates.csv [--plot-data plot.csv]
//! ```
//!
//! Exit codes: 0 success, 1 config error, 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gmat_sim::{emit_csv, emit_plot_data, parse_config, run_sweep};

#[derive(Parser)]
#[command(
    name = "gmat-sim",
    about = "Monte-Carlo sum-rate sweeps for delayed-CSIT broadcast precoding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured SNR sweep and write the rate curves as CSV.
    Sweep {
        /// Path to the key=value sweep configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path (one row per scheme and SNR point).
        #[arg(long)]
        out: PathBuf,
        /// Optional gnuplot-friendly reshape (one column per scheme).
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Sweep {
            config,
            out,
            plot_data,
        } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read config {}: {e}", config.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let cfg = match parse_config(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let output = match run_sweep(&cfg) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_RUNTIME);
                }
            };
            for (i, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
                let cells: Vec<String> = output
                    .curves
                    .iter()
                    .map(|c| format!("{}={:.4}", c.scheme.label(), c.points[i].sum_rate))
                    .collect();
                eprintln!("snr {snr_db:>6.1} dB: {}", cells.join("  "));
            }
            if output.dropped_episodes > 0 {
                eprintln!(
                    "note: dropped {} episode(s) on optimizer divergence",
                    output.dropped_episodes
                );
            }
            if let Err(e) = emit_csv(&output.curves, &out) {
                eprintln!("error: cannot write {}: {e}", out.display());
                return ExitCode::from(EXIT_RUNTIME);
            }
            if let Some(path) = plot_data {
                if let Err(e) = emit_plot_data(&output.curves, &path) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(EXIT_RUNTIME);
                }
            }
            ExitCode::SUCCESS
        }
    }
}
