use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use structsparse::checks::{run_suites, Suite};
use structsparse::experiment::{
    aggregate, generate_artifacts, read_results_csv, render_report, run_experiment, write_results_csv,
    write_sweep_csv, write_timings_csv, ExperimentConfig,
};
use structsparse::Result;

#[derive(Parser)]
#[command(name = "structsparse", version, about = "Structured sparse recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write truth, design and observation files plus a seed manifest.
    Gen {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// One CSV row per (method, n, trial).
    Run {
        #[command(flatten)]
        common: Common,
        /// Results CSV; wall times go next to it as `<stem>.timings.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean and standard deviation of the recovery error per (method, n).
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Aggregated CSV; per-trial rows go next to it as `<stem>.trials.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarise a results CSV written by `run`.
    Report {
        /// Results CSV.
        input: PathBuf,
        /// Aggregated CSV; a markdown table is printed when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run property-check suites (all when none are named).
    Check {
        /// kraft | subadditive | rip | oracle | haar
        suites: Vec<Suite>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment JSON.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        Ok(cfg)
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen { common, out } => {
            let m = generate_artifacts(&common.load()?, &out)?;
            eprintln!("wrote {} files and manifest.json to {}", m.files.len(), out.display());
        }
        Command::Run { common, out } => {
            let rows = run_experiment(&common.load()?)?;
            write_results_csv(&rows, writer(out.as_deref())?)?;
            if let Some(p) = &out {
                write_timings_csv(&rows, File::create(sibling(p, "timings"))?)?;
            }
            let failed = rows.iter().filter(|r| !r.is_ok()).count();
            if failed > 0 {
                eprintln!("{failed} of {} rows flagged as failed", rows.len());
            }
        }
        Command::Sweep { common, out } => {
            let rows = run_experiment(&common.load()?)?;
            let agg = aggregate(&rows);
            write_sweep_csv(&agg, writer(out.as_deref())?)?;
            if let Some(p) = &out {
                write_results_csv(&rows, File::create(sibling(p, "trials"))?)?;
                write_timings_csv(&rows, File::create(sibling(p, "timings"))?)?;
                print!("{}", render_report(&agg));
            }
        }
        Command::Report { input, out } => {
            let agg = aggregate(&read_results_csv(File::open(&input)?)?);
            match out {
                Some(p) => write_sweep_csv(&agg, File::create(p)?)?,
                None => print!("{}", render_report(&agg)),
            }
        }
        Command::Check { suites, seed, threads } => {
            if let Some(t) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global()
                    .map_err(|e| structsparse::Error::InvalidArgument(e.to_string()))?;
            }
            let mut ok = true;
            for r in run_suites(&suites, seed)? {
                print!("{r}");
                ok &= r.passed();
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
