use std::path::PathBuf;
use std::process::ExitCode;

use apfeas_cli::config::{BenchConfig, RunConfig};
use apfeas_cli::{bench, run, CliError, EXIT_CONVERGED};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "apfeas", version, about = "Alternating-projection feasibility experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance; exit 0 converged, 2 iteration cap, 3 solver error, 1 bad config.
    Run(Common),
    /// Run a suite of (problem, method, seed) cells and tabulate medians.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override; for `bench` it replaces every seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write SVG plots of the residual history.
    #[arg(long)]
    plot: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(a) => run_cmd(a),
        Command::Bench(a) => bench_cmd(a),
    }
    .unwrap_or_else(|e| {
        eprintln!("{e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}

fn run_cmd(a: Common) -> Result<i32, CliError> {
    let mut cfg = RunConfig::load(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.output.plot |= a.plot;
    let dir = a.out.unwrap_or_else(|| cfg.output.dir.clone());
    let out = run(&cfg, &dir)?;
    let s = &out.summary;
    match &s.error {
        Some(e) => eprintln!("{} {} seed {}: {e}", s.family, s.method, s.seed),
        None => println!(
            "{} [{}] {} seed {}: {} after {} iterations, ||c|| = {:.3e}, {:.3} s",
            s.family,
            s.dims,
            s.method,
            s.seed,
            s.status,
            s.iterations,
            s.final_feasibility.unwrap_or(f64::NAN),
            s.wall_time_s
        ),
    }
    Ok(out.exit_code())
}

fn bench_cmd(a: Common) -> Result<i32, CliError> {
    let mut cfg = BenchConfig::load(&a.config)?;
    if let Some(s) = a.seed {
        for e in &mut cfg.suite {
            e.seeds = vec![s];
        }
    }
    cfg.output.plot |= a.plot;
    let dir = a.out.unwrap_or_else(|| cfg.output.dir.clone());
    let out = bench(&cfg, &dir)?;
    print!("{}", apfeas_cli::bench_table(&out.cells));
    Ok(EXIT_CONVERGED)
}
