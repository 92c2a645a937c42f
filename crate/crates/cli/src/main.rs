use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aglink_cli::commands::{
    cmd_hist, cmd_place, cmd_run, cmd_sweep, parse_frequencies, parse_region, parse_seeds,
    resolve_seeds,
};
use aglink_cli::results::{read_rows, write_histogram, write_rows};
use aglink_cli::scenario_file;
use aglink_cli::{CliError, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aglink", version, about = "Air-to-ground UAV link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(multiple = false)]
struct SeedArgs {
    /// Single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Inclusive range `a..b` or list `a,b,c`.
    #[arg(long)]
    seeds: Option<String>,
}

impl SeedArgs {
    fn parse(&self) -> Result<Option<Vec<u64>>> {
        match (&self.seed, &self.seeds) {
            (Some(s), _) => Ok(Some(vec![*s])),
            (None, Some(spec)) => parse_seeds(spec).map(Some),
            (None, None) => Ok(None),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario over a set of seeds and write the results CSV.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        seeds: SeedArgs,
        /// Results CSV (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Structured JSON report with full per-run metrics.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the scenario at several carrier frequencies.
    Sweep {
        scenario: PathBuf,
        /// Comma-separated list in Hz, e.g. `5e9,10e9`.
        #[arg(long)]
        frequencies: String,
        #[command(flatten)]
        seeds: SeedArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Search for a LoS-clear UAV position and compare before/after.
    Place {
        scenario: PathBuf,
        /// `xmin,xmax,ymin,ymax,zmin,zmax` in meters.
        #[arg(
            long,
            default_value = "-50,50,-50,50,10,10",
            allow_hyphen_values = true
        )]
        region: String,
        /// Altitude band `min,max` inside the region's z range.
        #[arg(long, allow_hyphen_values = true)]
        altitude: Option<String>,
        /// Grid spacing in meters.
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[command(flatten)]
        seeds: SeedArgs,
        /// Before/after results CSV (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Histogram of per-run throughput from a results CSV.
    Hist {
        results: PathBuf,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Io {
                context: format!("creating {}", p.display()),
                source: e,
            }
        })?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = open_out(Some(path))?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::Runtime(format!("serializing report: {e}")))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Io {
            context: format!("writing {}", path.display()),
            source: e,
        })
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            scenario,
            seeds,
            out,
            report,
        } => {
            let loaded = scenario_file::load(&scenario)?;
            let seeds = resolve_seeds(seeds.parse()?.as_deref(), &loaded)?;
            let output = cmd_run(&loaded, &seeds)?;
            write_rows(open_out(out.as_deref())?, &output.rows)?;
            if let Some(path) = report {
                write_json(&path, &output)?;
            }
        }
        Command::Sweep {
            scenario,
            frequencies,
            seeds,
            out,
            report,
        } => {
            let freqs = parse_frequencies(&frequencies)?;
            let loaded = scenario_file::load(&scenario)?;
            let seeds = resolve_seeds(seeds.parse()?.as_deref(), &loaded)?;
            let output = cmd_sweep(&loaded, &freqs, &seeds)?;
            write_rows(open_out(out.as_deref())?, &output.rows)?;
            if let Some(path) = report {
                write_json(&path, &output)?;
            }
        }
        Command::Place {
            scenario,
            region,
            altitude,
            step,
            seeds,
            out,
            report,
        } => {
            let region = parse_region(&region, altitude.as_deref(), step)?;
            let loaded = scenario_file::load(&scenario)?;
            let seeds = resolve_seeds(seeds.parse()?.as_deref(), &loaded)?;
            let output = cmd_place(&loaded, &region, &seeds)?;
            eprint!("{}", output.summary());
            write_rows(open_out(out.as_deref())?, &output.rows)?;
            if let Some(path) = report {
                write_json(&path, &output)?;
            }
        }
        Command::Hist { results, bins, out } => {
            let file = File::open(&results).map_err(|e| CliError::Io {
                context: format!("opening {}", results.display()),
                source: e,
            })?;
            let rows = read_rows(file, &results.display().to_string())?;
            let hist = cmd_hist(&rows, bins)?;
            write_histogram(open_out(out.as_deref())?, &hist)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                CliError::EXIT_USAGE as u8
            } else {
                0
            });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
