use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hartree_core::experiments::{self, Scenario, Table};

#[derive(Parser, Debug)]
#[command(name = "hartree-lab", version, about = "Bosonic mean-field experiments and bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact vs. mean-field one-particle trace distance against N.
    Converge(RunArgs),
    /// Commutator growth of disjoint observables in full tensor space.
    Lr(RunArgs),
    /// Connected correlations in the evolved product state.
    Corr(RunArgs),
    /// Hierarchy residuals and the telescoping identity.
    Bbgky(RunArgs),
    /// Bound constants and bound curves without simulation.
    Bounds(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// CSV destination; defaults to the config's `output_path`, else stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Overrides the Hartree integrator tolerance.
    #[arg(long, value_name = "FLOAT")]
    tol: Option<f64>,
    /// Also write one two-column CSV per curve into this directory.
    #[arg(long, value_name = "DIR")]
    plot_data: Option<PathBuf>,
}

fn run(scenario: Scenario, args: &RunArgs) -> hartree_core::Result<(Table, Option<PathBuf>)> {
    let mut cfg = experiments::load_config_file(&args.config)?;
    if cfg.scenario() != scenario {
        return Err(hartree_core::Error::InvalidArgument(format!(
            "{} describes scenario `{}`, but `{scenario}` was requested",
            args.config.display(),
            cfg.scenario()
        )));
    }
    if let Some(seed) = args.seed {
        cfg = cfg.with_seed(seed)?;
    }
    if let Some(tol) = args.tol {
        cfg = cfg.with_tol(tol)?;
    }
    let table = experiments::run(&cfg)?;

    let out = args.out.clone().or_else(|| cfg.raw.output_path.as_ref().map(PathBuf::from));
    match &out {
        Some(path) => table.write_csv_file(path)?,
        None => table.write_csv(std::io::stdout().lock())?,
    }
    if let Some(dir) = &args.plot_data {
        table.write_plot_data(dir)?;
    }
    Ok((table, out))
}

fn report(table: &Table, out: Option<&Path>) {
    if let Some(path) = out {
        eprintln!("wrote {} rows to {}", table.rows.len(), path.display());
    }
    if table.violations > 0 {
        eprintln!("{} inequality violation(s)", table.violations);
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (scenario, args) = match &cli.command {
        Command::Converge(a) => (Scenario::Converge, a),
        Command::Lr(a) => (Scenario::Lr, a),
        Command::Corr(a) => (Scenario::Corr, a),
        Command::Bbgky(a) => (Scenario::Bbgky, a),
        Command::Bounds(a) => (Scenario::Bounds, a),
    };
    match run(scenario, args) {
        Ok((table, out)) => {
            report(&table, out.as_deref());
            if table.violations > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
