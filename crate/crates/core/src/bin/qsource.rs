use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qsource::experiment::{self, ExperimentConfig, Overrides, Scenario};

/// Run quantum-source experiments and write CSV tables with TOML summaries.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 on
/// configuration, budget or I/O errors.
#[derive(Parser)]
#[command(name = "qsource", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Marginal consistency of the block densities.
    Consistency(Common),
    /// Smallest eigenvalue of each block density.
    Positivity(Common),
    /// Block entropies, rate estimates and subadditivity.
    EntropyScan(Common),
    /// Klein, Jensen-type and measured-entropy inequalities.
    BoundCheck(Common),
    /// Typical sets and typical subspaces.
    Aep(Common),
    /// Time-average diagnostics.
    Ergodicity(Common),
    /// Positivity certificates for the Pauli source.
    CertifyAppendix(Common),
    /// Run the scenario named by the config's `scenario` key.
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment description; defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory (default: the config's `out_dir`, else `results`).
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Largest dense block dimension.
    #[arg(long)]
    max_dim: Option<usize>,
    /// Largest number of enumerated words.
    #[arg(long)]
    max_words: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, common) = match cli.command {
        Command::Consistency(c) => (Some(Scenario::Consistency), c),
        Command::Positivity(c) => (Some(Scenario::Positivity), c),
        Command::EntropyScan(c) => (Some(Scenario::EntropyScan), c),
        Command::BoundCheck(c) => (Some(Scenario::BoundCheck), c),
        Command::Aep(c) => (Some(Scenario::Aep), c),
        Command::Ergodicity(c) => (Some(Scenario::Ergodicity), c),
        Command::CertifyAppendix(c) => (Some(Scenario::CertifyAppendix), c),
        Command::Run(c) => (None, c),
    };
    match execute(scenario, common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(scenario: Option<Scenario>, common: Common) -> qsource::Result<bool> {
    let config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::from_toml("")?,
    };
    let scenario = scenario.or(config.scenario).ok_or_else(|| {
        qsource::Error::Config("`run` needs a config with a `scenario` key".into())
    })?;
    let overrides = Overrides {
        seed: common.seed,
        max_dim: common.max_dim,
        max_words: common.max_words,
        out_dir: common.out,
    };
    let config = overrides.apply(config);
    let (files, summary) = experiment::run(scenario, &config)?;
    for c in &summary.checks {
        let verdict = if c.passed { "pass" } else { "FAIL" };
        println!("{verdict}  {}  margin {}", c.name, experiment::fmt_real(c.margin));
    }
    println!("wrote {} ({} rows)", files.csv.display(), summary.rows);
    println!("wrote {}", files.summary.display());
    Ok(summary.passed)
}
