//! `bevloc` command-line tool.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 runtime failure.
//! `HOLO_LOG` sets the log filter (default `warn`).

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bevloc", version, about = "Localize BEV semantic masks against rasterized OpenStreetMap patches")]
struct Cli {
    /// JSON config (grid specs, refiner, noise, degradation, samples, seed, workers). Flags win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Suppress human-readable tables on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse an OSM extract into a vector-map JSON in a local ENU frame.
    Ingest {
        /// OSM XML file.
        osm: PathBuf,
        /// ENU frame JSON (origin_lat, origin_lon, origin_alt, drift_e, drift_n).
        #[arg(long, value_name = "PATH")]
        frame: PathBuf,
        /// Vector-map JSON to write.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Rasterize a vector map into an HGRD grid plus JSON sidecar.
    Rasterize {
        /// Vector-map JSON from `ingest`.
        map: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        center_x: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        center_y: f64,
        /// Grid heading in radians.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        center_theta: f64,
        #[command(flatten)]
        grid: GridArgs,
        /// HGRD file to write.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Localize one BEV mask and print the result as JSON.
    Localize {
        /// Vector-map JSON (cropped at the prior) or an HGRD map patch.
        map: PathBuf,
        /// BEV mask as HGRD.
        bev: PathBuf,
        #[command(flatten)]
        prior: PriorArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Directory for the run manifest.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run the synthetic benchmark and write results.jsonl, report.json, report.svg.
    Benchmark {
        /// Vector-map JSON, or OSM XML together with --frame.
        map: PathBuf,
        #[arg(long, value_name = "PATH")]
        frame: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = one per core).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Re-emit report.json and report.svg from results.jsonl or report.json.
    Report {
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Patch side length in meters.
    #[arg(long)]
    size_m: Option<f64>,
    #[arg(long)]
    resolution_mpp: Option<f64>,
}

#[derive(Debug, Args)]
struct PriorArgs {
    #[arg(long, allow_negative_numbers = true)]
    prior_x: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    prior_y: Option<f64>,
    /// Prior heading in radians.
    #[arg(long, allow_negative_numbers = true)]
    prior_theta: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HOLO_LOG", "warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
