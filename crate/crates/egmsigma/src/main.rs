use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use egmsigma::error::Error;
use egmsigma::pipeline::{
    analyze, map_cmd, render, simulate, stats_cmd, AnalyzeArgs, MapArgs, RenderArgs, SimulateArgs,
    StatsArgs,
};
use egmsigma::spectral::DEFAULT_WINDOW_MS;

/// Simulation and singular-value analysis of atrial electrogram arrays.
#[derive(Parser)]
#[command(name = "egmsigma", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a tissue scenario and write LAT, cell-signal and
    /// electrogram artifacts.
    Simulate {
        /// Scenario configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Skip the (large) per-cell signal artifact.
        #[arg(long)]
        no_cell_signals: bool,
    },
    /// Filter, segment and transform a recording into per-beat magnitude
    /// matrices and singular profiles.
    Analyze {
        /// Input recording (.egmr, or .csv with --csv-rate).
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Band edges lo:hi in Hz.
        #[arg(long, default_value = "0.33:30")]
        band: String,
        /// Skip band-pass filtering.
        #[arg(long)]
        no_filter: bool,
        /// Butterworth order per pass.
        #[arg(long, default_value_t = 4)]
        order: usize,
        /// Beat window start:end in ms before the R peak.
        #[arg(long, default_value = "320:60")]
        window: String,
        /// Beat markers and labels.
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Channel index to run R-peak detection on.
        #[arg(long)]
        ecg_channel: Option<usize>,
        /// Sample rate for CSV inputs.
        #[arg(long)]
        csv_rate: Option<f64>,
        /// Multiplier for CSV samples (LSB-to-mV factor for integer exports).
        #[arg(long)]
        csv_scale: Option<f64>,
    },
    /// Sigma-2 map of one beat, optionally with the activation-map and
    /// conduction-block comparison.
    Map {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Beat index to map.
        #[arg(long, default_value_t = 0)]
        beat: usize,
        /// Optional band edges lo:hi in Hz (simulated data is usually left
        /// unfiltered).
        #[arg(long)]
        band: Option<String>,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value = "320:60")]
        window: String,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        ecg_channel: Option<usize>,
        /// Also emit the activation map, block edges and comparison report.
        #[arg(long)]
        compare: bool,
        #[arg(long)]
        csv_rate: Option<f64>,
        /// Multiplier for CSV samples (LSB-to-mV factor for integer exports).
        #[arg(long)]
        csv_scale: Option<f64>,
    },
    /// Summarize a beat feature table: group summaries, rank-sum tests,
    /// suggested thresholds.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated grouping keys (location, rhythm).
        #[arg(long, default_value = "location,rhythm")]
        group_by: String,
    },
    /// Render a sigma-2 map CSV as an ASCII portable graymap.
    Render {
        /// Map CSV produced by `map`.
        #[arg(long)]
        map: PathBuf,
        /// Output .pgm path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64), Error> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::InvalidArgument(format!("{what} must be a:b, got {s:?}")))?;
    let a: f64 = a
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad {what} value {s:?}")))?;
    let b: f64 = b
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad {what} value {s:?}")))?;
    Ok((a, b))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Simulate {
            config,
            out,
            no_cell_signals,
        } => simulate(&SimulateArgs {
            config,
            out,
            cell_signals: !no_cell_signals,
        }),
        Cmd::Analyze {
            input,
            out,
            band,
            no_filter,
            order,
            window,
            annotations,
            ecg_channel,
            csv_rate,
            csv_scale,
        } => {
            let band = if no_filter {
                None
            } else {
                Some(parse_pair(&band, "band")?)
            };
            let window = parse_pair(&window, "window")?;
            analyze(&AnalyzeArgs {
                input,
                out,
                band,
                order,
                window,
                annotations,
                ecg_channel,
                csv_rate,
                csv_scale,
            })
        }
        Cmd::Map {
            input,
            out,
            beat,
            band,
            order,
            window,
            annotations,
            ecg_channel,
            compare,
            csv_rate,
            csv_scale,
        } => {
            let band = band.map(|b| parse_pair(&b, "band")).transpose()?;
            let window = if window == "320:60" {
                DEFAULT_WINDOW_MS
            } else {
                parse_pair(&window, "window")?
            };
            map_cmd(&MapArgs {
                input,
                out,
                beat,
                band,
                order,
                window,
                annotations,
                ecg_channel,
                compare,
                csv_rate,
                csv_scale,
            })
        }
        Cmd::Stats {
            input,
            out,
            group_by,
        } => stats_cmd(&StatsArgs {
            input,
            out,
            group_by,
        }),
        Cmd::Render { map, out } => render(&RenderArgs { map, out }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
