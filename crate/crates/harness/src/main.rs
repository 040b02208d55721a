use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use memopt::error::HarnessError;
use memopt::output::{write_artifacts, Artifacts};
use memopt::pipelines::RunOptions;
use memopt::run::{self, Overrides};
use memopt::scenarios::{self, Scenario};
use memopt::verify;

/// Energy-optimal switching protocols for memristive devices.
#[derive(Debug, Parser)]
#[command(name = "memopt", version)]
struct Cli {
    /// Output directory for CSV and JSON artifacts
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of time samples per trajectory
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Seed for randomised checks
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Skip the independent oracle solvers
    #[arg(long, global = true)]
    no_oracle: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reproduce a named scenario
    Scenario {
        #[arg(value_enum)]
        name: ScenarioArg,
    },
    /// Solve the task described by a TOML config
    Run { config: PathBuf },
    /// Run the acceptance suite and print a pass/fail table
    Verify,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Fig2,
    Fig3,
    Fig4,
    SweepThreshold,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Fig2 => Scenario::Fig2,
            ScenarioArg::Fig3 => Scenario::Fig3,
            ScenarioArg::Fig4 => Scenario::Fig4,
            ScenarioArg::SweepThreshold => Scenario::SweepThreshold,
        }
    }
}

fn default_out(name: &str) -> PathBuf {
    Path::new("out").join(name)
}

fn emit(dir: &Path, artifacts: &Artifacts) -> Result<(), HarnessError> {
    write_artifacts(dir, artifacts)?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Scenario { name } => {
            let scenario = Scenario::from(name);
            let grid = cli.grid.unwrap_or(memopt_core::DEFAULT_GRID);
            if grid < 3 {
                return Err(HarnessError::Config(format!("grid must be >= 3, got {grid}")));
            }
            let opts = RunOptions { grid, oracle: !cli.no_oracle, seed: cli.seed.unwrap_or(0), ..Default::default() };
            let artifacts = scenarios::run(scenario, &opts)?;
            emit(&cli.out.unwrap_or_else(|| default_out(scenario.name())), &artifacts)?;
        }
        Command::Run { config } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", config.display())))?;
            let overrides = Overrides { grid: cli.grid, seed: cli.seed, no_oracle: cli.no_oracle };
            let prepared = run::prepare(&text, overrides)?;
            let artifacts = run::execute(&prepared)?;
            let dir = cli.out.or(prepared.output_dir).unwrap_or_else(|| default_out("run"));
            emit(&dir, &artifacts)?;
        }
        Command::Verify => {
            let results = verify::run_all(cli.seed.unwrap_or(verify::DEFAULT_SEED));
            for r in &results {
                println!("{}", r.line());
            }
            if let Some(dir) = cli.out {
                fs::create_dir_all(&dir)?;
                let mut json = serde_json::to_string_pretty(&results).map_err(|e| HarnessError::Io(e.to_string()))?;
                json.push('\n');
                fs::write(dir.join("verify.json"), json)?;
            }
            if !verify::all_gating_passed(&results) {
                return Ok(ExitCode::from(4));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
