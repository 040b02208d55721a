//! TOML run configuration. Every key carries its unit; unknown keys are
//! rejected and all physical constraints are checked before any solver runs.
//!
//! ```toml
//! [device]
//! kind = "ideal-linear"          # or "ideal-general", "threshold"
//! a_kOhm = 1.0
//! b_kOhm_per_nC = 100.0
//!
//! [task]
//! t_i_us = 0.0
//! t_f_us = 5.0
//! R_i_kOhm = 1.0
//! R_f_kOhm = 100.0
//! I_c_mA = 0.25                  # optional compliance current
//!
//! [solver]                       # optional
//! grid = 1001
//! oracle = true
//! oracle_grid = 128
//!
//! [tradeoff]                     # optional, ideal-linear only
//! w1_per_nJ = 1.0
//! w2_per_us = 1.0
//!
//! [output]                       # optional
//! dir = "out"
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use memopt_core::{ChargeMemristor, SwitchingTask, ThresholdMemristiveModel};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub device: DeviceConfig,
    pub task: TaskConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub tradeoff: Option<TradeoffConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DeviceConfig {
    IdealLinear {
        #[serde(rename = "a_kOhm")]
        a: f64,
        #[serde(rename = "b_kOhm_per_nC")]
        b: f64,
    },
    /// `R_M(q) = Σ c_k q^k`, coefficient `k` in kΩ/nC^k.
    IdealGeneral {
        #[serde(rename = "coefficients_kOhm")]
        coefficients: Vec<f64>,
    },
    Threshold {
        #[serde(rename = "R_on_kOhm")]
        r_on: f64,
        #[serde(rename = "R_off_kOhm")]
        r_off: f64,
        #[serde(rename = "k_per_V_us")]
        k: f64,
        #[serde(rename = "V_on_V")]
        v_on: f64,
        #[serde(rename = "V_off_V")]
        v_off: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    #[serde(rename = "t_i_us", default)]
    pub t_i: f64,
    #[serde(rename = "t_f_us")]
    pub t_f: f64,
    #[serde(rename = "R_i_kOhm", default)]
    pub r_i: Option<f64>,
    #[serde(rename = "R_f_kOhm", default)]
    pub r_f: Option<f64>,
    #[serde(default)]
    pub x_i: Option<f64>,
    #[serde(default)]
    pub x_f: Option<f64>,
    #[serde(rename = "q_i_nC", default)]
    pub q_i: Option<f64>,
    #[serde(rename = "q_f_nC", default)]
    pub q_f: Option<f64>,
    #[serde(rename = "I_c_mA", default)]
    pub i_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_true")]
    pub oracle: bool,
    #[serde(default = "default_oracle_grid")]
    pub oracle_grid: usize,
}

fn default_grid() -> usize {
    memopt_core::DEFAULT_GRID
}
fn default_true() -> bool {
    true
}
fn default_oracle_grid() -> usize {
    128
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { grid: default_grid(), oracle: true, oracle_grid: default_oracle_grid() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TradeoffConfig {
    #[serde(rename = "w1_per_nJ")]
    pub w1: f64,
    #[serde(rename = "w2_per_us")]
    pub w2: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

/// A configuration after validation, with the device and task built.
#[derive(Debug, Clone)]
pub enum Problem {
    IdealLinear { model: ChargeMemristor, task: SwitchingTask, tradeoff: Option<TradeoffConfig> },
    IdealGeneral { model: ChargeMemristor, coefficients: Vec<f64>, q_i: f64, q_f: f64, t_i: f64, t_f: f64 },
    Threshold { model: ThresholdMemristiveModel, task: SwitchingTask },
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn solver_to_config(e: memopt_core::Error) -> HarnessError {
    HarnessError::Config(e.to_string())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    /// Checks key combinations and physical constraints and builds the problem.
    pub fn validate(&self) -> Result<Problem, HarnessError> {
        let s = &self.solver;
        if s.grid < 3 {
            return Err(config_err(format!("solver.grid must be >= 3, got {}", s.grid)));
        }
        if s.oracle_grid < 3 {
            return Err(config_err(format!("solver.oracle_grid must be >= 3, got {}", s.oracle_grid)));
        }
        let t = &self.task;
        if !(t.t_i.is_finite() && t.t_f.is_finite() && t.t_f > t.t_i) {
            return Err(config_err(format!("need finite t_f_us > t_i_us, got {} and {}", t.t_i, t.t_f)));
        }
        if let Some(i_c) = t.i_c {
            if !(i_c > 0.0 && i_c.is_finite()) {
                return Err(config_err(format!("I_c_mA must be positive, got {i_c}")));
            }
        }
        let has_r = t.r_i.is_some() || t.r_f.is_some();
        let has_x = t.x_i.is_some() || t.x_f.is_some();
        let has_q = t.q_i.is_some() || t.q_f.is_some();
        let pair = |a: Option<f64>, b: Option<f64>, name: &str| match (a, b) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(config_err(format!("task needs both {name} endpoints"))),
        };
        if self.tradeoff.is_some() && !matches!(self.device, DeviceConfig::IdealLinear { .. }) {
            return Err(config_err("[tradeoff] applies to ideal-linear devices only"));
        }

        match &self.device {
            DeviceConfig::IdealLinear { a, b } => {
                if has_x || has_q {
                    return Err(config_err("ideal-linear tasks use R_i_kOhm and R_f_kOhm"));
                }
                let model = ChargeMemristor::linear(*a, *b).map_err(solver_to_config)?;
                let (r_i, r_f) = pair(t.r_i, t.r_f, "R_*_kOhm")?;
                let mut task = SwitchingTask::new(t.t_i, t.t_f, r_i, r_f).map_err(solver_to_config)?;
                if let Some(i_c) = t.i_c {
                    task = task.with_compliance(i_c).map_err(solver_to_config)?;
                }
                if let Some(w) = self.tradeoff {
                    if !(w.w1 > 0.0 && w.w2 > 0.0 && w.w1.is_finite() && w.w2.is_finite()) {
                        return Err(config_err(format!("tradeoff weights must be positive, got {} and {}", w.w1, w.w2)));
                    }
                }
                Ok(Problem::IdealLinear { model, task, tradeoff: self.tradeoff })
            }
            DeviceConfig::IdealGeneral { coefficients } => {
                if has_r || has_x {
                    return Err(config_err("ideal-general tasks use q_i_nC and q_f_nC"));
                }
                if t.i_c.is_some() {
                    return Err(config_err("compliance current is supported for ideal-linear devices only"));
                }
                if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(config_err("coefficients_kOhm must be a non-empty list of finite numbers"));
                }
                let (q_i, q_f) = pair(t.q_i, t.q_f, "q_*_nC")?;
                let c = coefficients.clone();
                let model = ChargeMemristor::from_fn(move |q| c.iter().rev().fold(0.0, |acc, ck| acc * q + ck));
                // positivity along the charge interval
                for j in 0..=1000 {
                    let q = q_i + (q_f - q_i) * j as f64 / 1000.0;
                    model.memristance(q).map_err(solver_to_config)?;
                }
                Ok(Problem::IdealGeneral { model, coefficients: coefficients.clone(), q_i, q_f, t_i: t.t_i, t_f: t.t_f })
            }
            DeviceConfig::Threshold { r_on, r_off, k, v_on, v_off } => {
                if has_q {
                    return Err(config_err("threshold tasks use R_*_kOhm or x_* endpoints"));
                }
                if t.i_c.is_some() {
                    return Err(config_err("compliance current is supported for ideal-linear devices only"));
                }
                let model = ThresholdMemristiveModel::new(*r_on, *r_off, *k, *v_on, *v_off).map_err(solver_to_config)?;
                let (r_i, r_f) = match (has_r, has_x) {
                    (true, true) => return Err(config_err("give either R_* or x_* endpoints, not both")),
                    (true, false) => pair(t.r_i, t.r_f, "R_*_kOhm")?,
                    (false, true) => {
                        let (x_i, x_f) = pair(t.x_i, t.x_f, "x_*")?;
                        for x in [x_i, x_f] {
                            if !ThresholdMemristiveModel::in_state_range(x) {
                                return Err(config_err(format!("state endpoint {x} outside [0, 1]")));
                            }
                        }
                        (model.memristance(x_i).map_err(solver_to_config)?, model.memristance(x_f).map_err(solver_to_config)?)
                    }
                    (false, false) => return Err(config_err("task needs R_* or x_* endpoints")),
                };
                let task = SwitchingTask::new(t.t_i, t.t_f, r_i, r_f).map_err(solver_to_config)?;
                Ok(Problem::Threshold { model, task })
            }
        }
    }
}
