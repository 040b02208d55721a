//! Named reproduction scenarios.

use std::fmt;
use std::str::FromStr;

use serde_json::json;

use memopt_core::ideal::{linear_baseline_heat, linear_optimal_heat, optimal_ratio};
use memopt_core::memristive::{
    baseline_threshold_constant_current, baseline_threshold_constant_voltage, solve_threshold_closed_form,
};
use memopt_core::trajectory::heat_ratio;
use memopt_core::{ChargeMemristor, SwitchingTask, ThresholdMemristiveModel};

use crate::error::HarnessError;
use crate::output::{fmt_f64, Artifacts, Table};
use crate::pipelines::{self, RunOptions};

pub const FIG2_ORACLE_GRID: usize = 128;
pub const FIG3_ORACLE_GRID: usize = 512;
pub const FIG4_ORACLE_GRID: usize = 256;
pub const RATIO_DECADES: (i32, i32) = (-3, 6);
pub const RATIO_POINTS_PER_DECADE: usize = 10;
pub const SWEEP_POINTS: usize = 60;
/// Savings levels located on the threshold sweep for comparison.
pub const REFERENCE_SAVINGS: [f64; 2] = [0.27, 0.35];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Fig2,
    Fig3,
    Fig4,
    SweepThreshold,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Fig2, Scenario::Fig3, Scenario::Fig4, Scenario::SweepThreshold];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig2 => "fig2",
            Scenario::Fig3 => "fig3",
            Scenario::Fig4 => "fig4",
            Scenario::SweepThreshold => "sweep-threshold",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown scenario {s:?}")))
    }
}

pub fn fig2_problem() -> (ChargeMemristor, SwitchingTask) {
    (ChargeMemristor::linear(1.0, 1.0).unwrap(), SwitchingTask::new(0.0, 1.0, 1.0, 100.0).unwrap())
}

pub fn fig3_problem() -> (ThresholdMemristiveModel, SwitchingTask) {
    (
        ThresholdMemristiveModel::new(1.0, 100.0, 0.5, 1.0, -1.0).unwrap(),
        SwitchingTask::new(0.0, 5.0, 1.0, 100.0).unwrap(),
    )
}

pub fn fig4_problem() -> (ChargeMemristor, SwitchingTask) {
    (
        ChargeMemristor::linear(1.0, 100.0).unwrap(),
        SwitchingTask::new(0.0, 5.0, 1.0, 100.0).unwrap().with_compliance(0.25).unwrap(),
    )
}

/// Log-spaced `ρ = R_f/R_i` grid with exact decade endpoints.
pub fn ratio_grid() -> Vec<f64> {
    let (lo, hi) = RATIO_DECADES;
    let n = (hi - lo) as usize * RATIO_POINTS_PER_DECADE;
    (0..=n)
        .map(|j| {
            if j % RATIO_POINTS_PER_DECADE == 0 {
                10f64.powi(lo + (j / RATIO_POINTS_PER_DECADE) as i32)
            } else {
                10f64.powf(lo as f64 + j as f64 / RATIO_POINTS_PER_DECADE as f64)
            }
        })
        .collect()
}

pub fn run(scenario: Scenario, opts: &RunOptions) -> Result<Artifacts, HarnessError> {
    let mut artifacts = match scenario {
        Scenario::Fig2 => fig2(opts)?,
        Scenario::Fig3 => fig3(opts)?,
        Scenario::Fig4 => fig4(opts)?,
        Scenario::SweepThreshold => sweep_threshold(opts)?,
    };
    artifacts.summary.digest_parameters();
    Ok(artifacts)
}

fn fig2(opts: &RunOptions) -> Result<Artifacts, HarnessError> {
    let (model, task) = fig2_problem();
    let (_, b) = model.linear_coefficients().unwrap();
    let opts = RunOptions { oracle_grid: FIG2_ORACLE_GRID, ..*opts };
    let mut artifacts = pipelines::ideal_linear("fig2", &model, &task, None, &opts)?;

    let mut table = Table::new(&[
        "rho",
        "Q_opt_nJ",
        "Q_constant_current_nJ",
        "Q_constant_voltage_nJ",
        "ratio",
        "Q_opt_over_Q_constant_voltage",
    ]);
    let mut min_ratio = f64::INFINITY;
    for rho in ratio_grid() {
        let r_f = task.r_i * rho;
        let q_opt = linear_optimal_heat(b, task.r_i, r_f, task.duration());
        let q_base = linear_baseline_heat(b, task.r_i, r_f, task.duration());
        let ratio = optimal_ratio(rho)?;
        min_ratio = min_ratio.min(ratio);
        table.push(vec![
            fmt_f64(rho),
            fmt_f64(q_opt),
            fmt_f64(q_base),
            fmt_f64(q_base),
            fmt_f64(ratio),
            fmt_f64(heat_ratio(q_opt, q_base)),
        ]);
    }
    let s = &mut artifacts.summary;
    s.metric("ratio_at_rho_max", optimal_ratio(10f64.powi(RATIO_DECADES.1))?);
    s.metric("ratio_at_rho_min", optimal_ratio(10f64.powi(RATIO_DECADES.0))?);
    s.metric("ratio_min_over_sweep", min_ratio);
    s.metric("ratio_asymptote", 8.0 / 9.0);
    s.metric("ratio_at_task", optimal_ratio(task.r_f / task.r_i)?);
    artifacts.ratios = Some(table);
    Ok(artifacts)
}

fn fig3(opts: &RunOptions) -> Result<Artifacts, HarnessError> {
    let (model, task) = fig3_problem();
    let opts = RunOptions { oracle_grid: FIG3_ORACLE_GRID, ..*opts };
    pipelines::threshold("fig3", &model, &task, &opts)
}

fn fig4(opts: &RunOptions) -> Result<Artifacts, HarnessError> {
    let (model, task) = fig4_problem();
    let opts = RunOptions { oracle_grid: FIG4_ORACLE_GRID, ..*opts };
    pipelines::ideal_linear_constrained("fig4", &model, &task, &opts)
}

/// Where a monotone-in-sweep-order series first reaches `level`, by linear
/// interpolation in `R_f`.
fn crossing(r_f: &[f64], values: &[f64], level: f64) -> Option<(f64, usize)> {
    (1..values.len()).find_map(|j| {
        let (a, b) = (values[j - 1] - level, values[j] - level);
        if a == 0.0 {
            Some((r_f[j - 1], j - 1))
        } else if a * b < 0.0 || b == 0.0 {
            let s = a / (a - b);
            let k = if s < 0.5 { j - 1 } else { j };
            Some((r_f[j - 1] + s * (r_f[j] - r_f[j - 1]), k))
        } else {
            None
        }
    })
}

fn sweep_threshold(opts: &RunOptions) -> Result<Artifacts, HarnessError> {
    let (model, task) = fig3_problem();
    let opts = RunOptions { oracle_grid: FIG3_ORACLE_GRID, ..*opts };
    let mut artifacts = pipelines::threshold("sweep-threshold", &model, &task, &opts)?;

    let (lo, hi) = ((task.r_i * 1.01).ln(), task.r_f.ln());
    let mut rows = Vec::with_capacity(SWEEP_POINTS);
    for j in 0..SWEEP_POINTS {
        let r_f = if j + 1 == SWEEP_POINTS {
            task.r_f
        } else {
            (lo + (hi - lo) * j as f64 / (SWEEP_POINTS - 1) as f64).exp()
        };
        let point = SwitchingTask::new(task.t_i, task.t_f, task.r_i, r_f)?;
        let opt = solve_threshold_closed_form(&model, &point, 3)?;
        let cv = baseline_threshold_constant_voltage(&model, &point, 3)?;
        let ci = baseline_threshold_constant_current(&model, &point, 3)?;
        rows.push((r_f, opt.q_opt, cv.heat, ci.baseline.heat, opt.regime_valid, opt.v_crossing));
    }

    let mut table = Table::new(&[
        "R_f_kOhm",
        "R_f_over_R_i",
        "Q_opt_nJ",
        "Q_constant_voltage_nJ",
        "Q_constant_current_nJ",
        "saving_vs_constant_voltage",
        "saving_vs_constant_current",
        "regime_valid",
        "V_crossing_us",
    ]);
    let r_fs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let save_cv: Vec<f64> = rows.iter().map(|r| 1.0 - r.1 / r.2).collect();
    let save_ci: Vec<f64> = rows.iter().map(|r| 1.0 - r.1 / r.3).collect();
    for (j, &(r_f, q_opt, q_cv, q_ci, valid, cross)) in rows.iter().enumerate() {
        table.push(vec![
            fmt_f64(r_f),
            fmt_f64(r_f / task.r_i),
            fmt_f64(q_opt),
            fmt_f64(q_cv),
            fmt_f64(q_ci),
            fmt_f64(save_cv[j]),
            fmt_f64(save_ci[j]),
            valid.to_string(),
            cross.map(fmt_f64).unwrap_or_default(),
        ]);
    }

    let locate = |values: &[f64], level: f64| match crossing(&r_fs, values, level) {
        Some((r_f, k)) => json!({ "R_f_kOhm": r_f, "regime_valid": rows[k].4 }),
        None => json!(null),
    };
    let reference: Vec<_> = REFERENCE_SAVINGS
        .iter()
        .map(|&level| {
            json!({
                "saving": level,
                "vs_constant_voltage": locate(&save_cv, level),
                "vs_constant_current": locate(&save_ci, level),
            })
        })
        .collect();
    let range = |v: &[f64]| json!([v.iter().cloned().fold(f64::INFINITY, f64::min), v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)]);

    let s = &mut artifacts.summary;
    s.metric("sweep_points", SWEEP_POINTS);
    s.metric("sweep_R_f_range_kOhm", [r_fs[0], task.r_f]);
    s.metric("saving_vs_constant_voltage_range", range(&save_cv));
    s.metric("saving_vs_constant_current_range", range(&save_ci));
    s.metric("sweep_regime_valid_points", rows.iter().filter(|r| r.4).count());
    s.metric("reference_savings", reference);
    s.notes.push(
        "reference savings levels are located on the sweep for comparison only and do not gate any check".to_string(),
    );
    artifacts.ratios = Some(table);
    Ok(artifacts)
}
