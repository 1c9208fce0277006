//! `clickstat`: click-counting statistics, witnesses, sampling and figure
//! tables from the command line.
//!
//! Exit codes: 0 success, 2 configuration or parse error, 3 numerical
//! invariant violated.

mod commands;
mod descriptor;
mod figures;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use clickstat_core::sampler::MIN_RESAMPLES;
use clickstat_core::witness::{DEFAULT_SIGMAS, DEFAULT_THRESHOLD};
use clickstat_core::Error;

use commands::{Bootstrap, SampleInput, WitnessInput};
use figures::Figure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone, Debug, Default)]
pub struct Output {
    /// Output file (stdout when absent); a directory for `figure`
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug)]
struct Numeric {
    /// Working precision in mantissa bits: <= 53 is f64, <= 106 double-double
    #[arg(long, value_name = "BITS")]
    precision: Option<u32>,
}

#[derive(Args, Debug)]
struct BootstrapArgs {
    #[arg(long, default_value_t = 1000)]
    resamples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_SIGMAS)]
    threshold_sigmas: f64,
}

impl BootstrapArgs {
    fn get(&self) -> Bootstrap {
        Bootstrap {
            resamples: self.resamples,
            seed: self.seed,
            sigmas: self.threshold_sigmas,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "clickstat", version, about = "Click-counting statistics of on-off detector arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Click probabilities c_k (or c_{k1,k2}) of a state on a detector bank
    Stats {
        /// State descriptor, inline JSON or a file
        #[arg(long)]
        state: String,
        /// Detector bank (or [bank1, bank2]), inline JSON or a file
        #[arg(long)]
        detector: String,
        /// Sweep a state parameter: [name=]start:stop:steps
        #[arg(long)]
        grid: Option<String>,
        #[command(flatten)]
        numeric: Numeric,
        #[command(flatten)]
        output: Output,
    },
    /// Matrix-of-moments witness report from a state or a histogram CSV
    Witness {
        #[arg(long, required_unless_present = "histogram")]
        state: Option<String>,
        #[arg(long, required_unless_present = "histogram")]
        detector: Option<String>,
        /// Measured click histogram (as written by `sample`)
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long)]
        grid: Option<String>,
        /// Exact path: a quantity below -threshold is a violation
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[command(flatten)]
        bootstrap: BootstrapArgs,
        #[command(flatten)]
        numeric: Numeric,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo click histogram, optionally followed by a bootstrap witness
    Sample {
        #[arg(long)]
        state: String,
        #[arg(long)]
        detector: String,
        #[arg(long)]
        samples: u64,
        /// Chain a bootstrap witness; the report goes to stdout or --report
        #[arg(long)]
        witness: bool,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        bootstrap: BootstrapArgs,
        #[command(flatten)]
        numeric: Numeric,
        #[command(flatten)]
        output: Output,
    },
    /// Data table behind one of the reference figures
    Figure {
        #[arg(value_enum)]
        name: Figure,
        /// Override the default axes, comma-separated for fig4
        #[arg(long)]
        grid: Option<String>,
        /// fig4 axes are γt and γΔt
        #[arg(long)]
        dimensionless: bool,
        #[command(flatten)]
        numeric: Numeric,
        #[command(flatten)]
        output: Output,
    },
    /// Single-photon decay: b(t, Δt) and the 2×2 minor over a time grid
    Decay {
        /// {"gamma": .., "prefactor": .., "N": ..}, inline JSON or a file
        #[arg(long)]
        model: String,
        /// Two axes: t=start:stop:steps,dt=start:stop:steps
        #[arg(long)]
        grid: String,
        #[arg(long)]
        dimensionless: bool,
        #[command(flatten)]
        output: Output,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Stats { state, detector, grid, numeric, output } => {
            commands::stats(&state, &detector, grid.as_deref(), numeric.precision, &output)
        }
        Command::Witness { state, detector, histogram, grid, threshold, bootstrap, numeric, output } => {
            let input = WitnessInput {
                state: state.as_deref(),
                detector: detector.as_deref(),
                histogram: histogram.as_deref(),
                grid: grid.as_deref(),
                threshold,
                bootstrap: bootstrap.get(),
            };
            commands::witness(input, numeric.precision, &output)
        }
        Command::Sample { state, detector, samples, witness, report, bootstrap, numeric, output } => {
            if witness && bootstrap.resamples < MIN_RESAMPLES {
                anyhow::bail!("--resamples must be at least {MIN_RESAMPLES}");
            }
            let input = SampleInput {
                state: &state,
                detector: &detector,
                samples,
                seed: bootstrap.seed,
                witness,
                report: report.as_deref(),
                bootstrap: bootstrap.get(),
            };
            commands::sample(input, numeric.precision, &output)
        }
        Command::Figure { name, grid, dimensionless, numeric, output } => {
            let path = commands::figure(name, grid.as_deref(), dimensionless, numeric.precision, &output)?;
            if !path.as_os_str().is_empty() {
                log::info!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Decay { model, grid, dimensionless, output } => commands::decay(&model, &grid, dimensionless, &output),
    }
}

/// Short name of the invariant behind a numerical failure.
fn invariant(e: &Error) -> &'static str {
    match e {
        Error::NonHermitianResult(_) => "hermiticity of the expectation value",
        Error::NormalizationViolation { .. } => "normalization of the click statistics",
        Error::NegativeProbability { .. } => "non-negative click probabilities",
        Error::IllConditioned { .. } => "conditioning of the Fock-basis sum",
        Error::QuadratureFailed(_) => "convergence of the P-function quadrature",
        Error::NotNormalized(_) => "normalization of the state",
        _ => "none",
    }
}

fn is_broken_pipe(e: &(dyn std::error::Error + 'static)) -> bool {
    let io = e.downcast_ref::<std::io::Error>().or_else(|| match e.downcast_ref::<csv::Error>()?.kind() {
        csv::ErrorKind::Io(io) => Some(io),
        _ => None,
    });
    let json = e.downcast_ref::<serde_json::Error>().and_then(serde_json::Error::io_error_kind);
    io.map(std::io::Error::kind).or(json) == Some(std::io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // a closed downstream pipe (e.g. `| head`) is not a failure
        Err(err) if err.chain().any(is_broken_pipe) => {
            ExitCode::SUCCESS
        }
        Err(err) => {
            let numerical = err.chain().find_map(|c| c.downcast_ref::<Error>()).filter(|e| e.is_numerical());
            match numerical {
                Some(e) => {
                    eprintln!("clickstat: numerical invariant violated ({}): {e}", invariant(e));
                    ExitCode::from(3)
                }
                None => {
                    eprintln!("clickstat: {err:#}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
