//! Free-form runs from a TOML config.

use std::path::PathBuf;

use crate::config::{Problem, RunConfig};
use crate::error::HarnessError;
use crate::output::{sha256_hex, Artifacts};
use crate::pipelines::{self, RunOptions};

/// Command-line overrides applied on top of the config's solver block.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub no_oracle: bool,
}

/// A parsed and validated config, ready to solve.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub problem: Problem,
    pub options: RunOptions,
    pub output_dir: Option<PathBuf>,
    pub digest: String,
}

pub fn prepare(text: &str, overrides: Overrides) -> Result<PreparedRun, HarnessError> {
    let config = RunConfig::parse(text)?;
    let problem = config.validate()?;
    let grid = overrides.grid.unwrap_or(config.solver.grid);
    if grid < 3 {
        return Err(HarnessError::Config(format!("grid must be >= 3, got {grid}")));
    }
    let options = RunOptions {
        grid,
        oracle: config.solver.oracle && !overrides.no_oracle,
        oracle_grid: config.solver.oracle_grid,
        seed: overrides.seed.unwrap_or(0),
    };
    Ok(PreparedRun { problem, options, output_dir: config.output.dir.clone(), digest: sha256_hex(text.as_bytes()) })
}

pub fn execute(run: &PreparedRun) -> Result<Artifacts, HarnessError> {
    let opts = &run.options;
    let mut artifacts = match &run.problem {
        Problem::IdealLinear { model, task, tradeoff } => {
            if task.compliance.is_some() {
                if tradeoff.is_some() {
                    return Err(HarnessError::Config("[tradeoff] cannot be combined with I_c_mA".into()));
                }
                pipelines::ideal_linear_constrained("run", model, task, opts)?
            } else {
                pipelines::ideal_linear("run", model, task, *tradeoff, opts)?
            }
        }
        Problem::IdealGeneral { model, coefficients, q_i, q_f, t_i, t_f } => {
            pipelines::ideal_general("run", model, coefficients, (*q_i, *q_f, *t_i, *t_f), opts)?
        }
        Problem::Threshold { model, task } => pipelines::threshold("run", model, task, opts)?,
    };
    artifacts.summary.config_sha256 = run.digest.clone();
    Ok(artifacts)
}

pub fn run_config(text: &str, overrides: Overrides) -> Result<Artifacts, HarnessError> {
    execute(&prepare(text, overrides)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: &str = r#"
[device]
kind = "ideal-linear"
a_kOhm = 1.0
b_kOhm_per_nC = 100.0

[task]
t_f_us = 5.0
R_i_kOhm = 1.0
R_f_kOhm = 100.0

[solver]
grid = 101
oracle = false
"#;

    #[test]
    fn unconstrained_dispatch() {
        let a = run_config(LINEAR, Overrides::default()).unwrap();
        let names: Vec<_> = a.trajectories.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["optimal", "constant-current", "constant-voltage"]);
        assert_eq!(a.summary.grid, 101);
        assert_eq!(a.summary.config_sha256, sha256_hex(LINEAR.as_bytes()));
    }

    #[test]
    fn compliance_below_activation_clamps() {
        let text = LINEAR.replace("R_f_kOhm = 100.0", "R_f_kOhm = 100.0\nI_c_mA = 0.25");
        let a = run_config(&text, Overrides::default()).unwrap();
        assert_eq!(a.summary.metrics["mode"], "clamped-then-interior");
    }

    #[test]
    fn overrides_apply() {
        let a = run_config(LINEAR, Overrides { grid: Some(11), seed: Some(7), no_oracle: true }).unwrap();
        assert_eq!(a.summary.grid, 11);
        assert_eq!(a.summary.seed, 7);
        assert_eq!(a.trajectories[0].1.len(), 11);
    }

    #[test]
    fn malformed_is_config_error() {
        let text = "[device]\nkind = \"threshold\"\nR_on_kOhm = -1.0\nR_off_kOhm = 100.0\nk_per_V_us = 0.5\nV_on_V = 1.0\nV_off_V = -1.0\n[task]\nt_f_us = 1.0\nR_i_kOhm = 1.0\nR_f_kOhm = 50.0\n";
        assert_eq!(run_config(text, Overrides::default()).unwrap_err().exit_code(), 2);
    }
}
