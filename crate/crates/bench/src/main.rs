use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hgame_bench::output::{tables_from_dir, write_plot_data};
use hgame_bench::{markdown_tables, run_experiment, write_outputs, BenchError, ExperimentSpec, RunOptions};

#[derive(Parser)]
#[command(name = "hgame", version, about = "Run and summarise stochastic hierarchical game experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every sweep point and seed of a spec.
    Run {
        #[arg(long)]
        spec: PathBuf,
        /// Output directory; defaults to the spec's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Zero the wall-time column so output is byte-reproducible.
        #[arg(long)]
        deterministic: bool,
    },
    /// Check a spec and list every offending field.
    Validate {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Print Markdown tables recomputed from the CSVs in a directory.
    Tables {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Write seed-averaged residual trajectories as gnuplot data files.
    PlotData {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Run { spec, out, seed, jobs, deterministic } => {
            let spec = ExperimentSpec::load(&spec)?;
            let out = out
                .or_else(|| spec.output_dir.as_ref().map(PathBuf::from))
                .ok_or_else(|| BenchError::invalid("output directory: pass --out or set output_dir"))?;
            let opts = RunOptions { root_seed: seed, jobs, deterministic };
            let result = run_experiment(&spec, &opts)?;
            let paths = write_outputs(&result, &out)?;
            print!("{}", markdown_tables(&result.rows));
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            for r in result.runs.iter().filter(|r| r.outcome.is_err()) {
                eprintln!(
                    "failed: {} {} seed {}: {}",
                    r.sweep_key,
                    r.solver,
                    r.seed,
                    r.outcome.as_ref().err().map(String::as_str).unwrap_or_default()
                );
            }
            match result.failures() {
                0 => Ok(()),
                failed => Err(BenchError::RunsFailed { failed, total: result.runs.len() }),
            }
        }
        Command::Validate { spec } => {
            let spec = ExperimentSpec::load(&spec)?;
            let points = spec.sweep_points()?;
            println!(
                "ok: {} ({} sweep point(s) x {} seed(s) x {} solver(s))",
                spec.name,
                points.len(),
                spec.seeds.len(),
                spec.solvers.as_slice().len()
            );
            Ok(())
        }
        Command::Tables { input } => {
            print!("{}", tables_from_dir(&input)?);
            Ok(())
        }
        Command::PlotData { input, out } => {
            for p in write_plot_data(&input, &out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
