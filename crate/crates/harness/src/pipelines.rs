//! Solver pipelines shared by named scenarios and config runs: optimum,
//! baselines, cross-checks and oracle for one problem family each.

use memopt_core::constrained::{secondary_cubic_root, solve_linear_with_compliance, ConstraintMode};
use memopt_core::ideal::{
    baseline_constant_current, baseline_constant_current_charges, baseline_constant_voltage, solve_general_charges,
    solve_linear, solve_time_energy,
};
use memopt_core::memristive::{
    adjoint_from_stationarity, baseline_threshold_constant_current, baseline_threshold_constant_voltage,
    necessary_conditions_residual, solve_shooting, solve_threshold_closed_form, ShootingOptions, StateBoundary,
};
use memopt_core::numerics::{minimize_discrete_path, minimize_discrete_path_charges, transcribe_memristive};
use memopt_core::trajectory::relative_error;
use memopt_core::{
    joule_heat, ChargeMemristor, EnergyReport, IdealAsMemristive, SwitchingTask, ThresholdMemristiveModel,
};

use crate::config::TradeoffConfig;
use crate::error::HarnessError;
use crate::output::{Artifacts, OracleDelta, Summary};

/// Grid for the fourth-order residual check of threshold optima.
pub const RESIDUAL_GRID: usize = 40_001;
/// Grid for the reduction check of ideal optima recast as memristive systems.
pub const REDUCTION_GRID: usize = 100_001;
pub const SHOOTING_SUBSTEPS: usize = 16;

pub const TOL_BOUNDARY: f64 = 1e-9;
pub const TOL_RESIDUAL: f64 = 1e-6;
pub const TOL_QUADRATURE: f64 = 1e-6;
pub const TOL_QUADRATURE_ROOT_FOUND: f64 = 1e-3;
pub const TOL_SHOOTING_MISS: f64 = 1e-8;
pub const TOL_CONSTANT_POWER: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub grid: usize,
    pub oracle: bool,
    pub oracle_grid: usize,
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { grid: memopt_core::DEFAULT_GRID, oracle: true, oracle_grid: 128, seed: 0 }
    }
}

fn base_summary(name: &str, opts: &RunOptions, energy: EnergyReport) -> Summary {
    let mut s = Summary::new(name, opts.grid, opts.seed, opts.oracle, energy);
    s.tolerance("boundary_relative", TOL_BOUNDARY);
    s.tolerance("quadrature_relative", TOL_QUADRATURE);
    s.tolerance("quadrature_relative_root_found", TOL_QUADRATURE_ROOT_FOUND);
    s.tolerance("necessary_conditions", TOL_RESIDUAL);
    s.tolerance("shooting_miss", TOL_SHOOTING_MISS);
    s.tolerance("constant_power_spread", TOL_CONSTANT_POWER);
    s
}

fn oracle_delta(method: &str, grid: usize, q: f64, reference: f64) -> OracleDelta {
    OracleDelta { method: method.to_string(), grid, q, reference, relative_delta: relative_error(q, reference) }
}

/// Unconstrained linear ideal memristor with both baselines.
pub fn ideal_linear(
    name: &str,
    model: &ChargeMemristor,
    task: &SwitchingTask,
    tradeoff: Option<TradeoffConfig>,
    opts: &RunOptions,
) -> Result<Artifacts, HarnessError> {
    let (a, b) = model.linear_coefficients().expect("linear model");
    let opt = solve_linear(model, task, opts.grid)?;
    let ci = baseline_constant_current(model, task, opts.grid)?;
    let cv = baseline_constant_voltage(model, task, opts.grid)?;
    let mut energy = EnergyReport::new(opt.q_opt)
        .with_constant_current(ci.heat)
        .with_constant_voltage(cv.heat)
        .residual("boundary", opt.trajectory.boundary_error(task.r_i, task.r_f))
        .residual("constant_power_spread", opt.trajectory.power_spread());
    if !opt.degenerate {
        energy = energy.residual("quadrature_vs_closed_form", relative_error(joule_heat(&opt.trajectory)?, opt.q_opt));
    }
    let mut oracle = Vec::new();
    if opts.oracle && !opt.degenerate {
        let path = minimize_discrete_path(model, task, opts.oracle_grid)?;
        energy = energy.with_oracle(path.q_discrete);
        oracle.push(oracle_delta("discrete-path", opts.oracle_grid, path.q_discrete, opt.q_opt));
    }
    let mut summary = base_summary(name, opts, energy)
        .parameter("device", "ideal-linear")
        .parameter("a_kOhm", a)
        .parameter("b_kOhm_per_nC", b)
        .parameter("t_i_us", task.t_i)
        .parameter("t_f_us", task.t_f)
        .parameter("R_i_kOhm", task.r_i)
        .parameter("R_f_kOhm", task.r_f);
    summary.oracle = oracle;
    summary.metric("C1_mA_kOhm_sqrt", opt.c1);
    summary.metric("C2_nC_kOhm_sqrt", opt.c2);
    summary.metric("degenerate", opt.degenerate);
    summary.metric("constant_current_mA", ci.control);
    summary.metric("constant_voltage_V", cv.control);
    let mut trajectories = vec![
        ("optimal".to_string(), opt.trajectory),
        ("constant-current".to_string(), ci.trajectory),
        ("constant-voltage".to_string(), cv.trajectory),
    ];
    if let Some(w) = tradeoff {
        let result = solve_time_energy(model, task.r_i, task.r_f, w.w1, w.w2, opts.grid)?;
        summary = summary.parameter("w1_per_nJ", w.w1).parameter("w2_per_us", w.w2);
        summary.metric("tradeoff_T_opt_us", result.t_opt);
        summary.metric("tradeoff_Q_opt_nJ", result.q_opt);
        summary.metric("tradeoff_balance", relative_error(w.w1 * result.q_opt, w.w2 * result.t_opt));
        if let Some(optimum) = result.optimum {
            trajectories.push(("time-energy-optimal".to_string(), optimum.trajectory));
        }
    }
    Ok(Artifacts { trajectories, summary, ratios: None })
}

/// Linear ideal memristor under the task's compliance current.
pub fn ideal_linear_constrained(
    name: &str,
    model: &ChargeMemristor,
    task: &SwitchingTask,
    opts: &RunOptions,
) -> Result<Artifacts, HarnessError> {
    let (a, b) = model.linear_coefficients().expect("linear model");
    let i_c = task.compliance.expect("compliance set");
    let sol = solve_linear_with_compliance(model, task, opts.grid)?;
    let free = solve_linear(model, &SwitchingTask::new(task.t_i, task.t_f, task.r_i, task.r_f)?, opts.grid)?;
    let ci = baseline_constant_current(model, task, opts.grid)?;
    let mut energy = EnergyReport::new(sol.q_total)
        .with_constant_current(ci.heat)
        .residual("quadrature_vs_closed_form", relative_error(sol.quadrature_heat()?, sol.q_total))
        .residual("current_jump_over_I_c", sol.current_jump() / i_c);
    if let Some(phase2) = &sol.phase2 {
        energy = energy.residual("phase2_constant_power_spread", phase2.power_spread());
    }
    let mut oracle = Vec::new();
    let mut prefix = None;
    if opts.oracle {
        let path = minimize_discrete_path(model, task, opts.oracle_grid)?;
        energy = energy.with_oracle(path.q_discrete);
        prefix = Some(path.clamped_prefix_fraction());
        oracle.push(oracle_delta("discrete-path-clamped", opts.oracle_grid, path.q_discrete, sol.q_total));
    }
    let mut summary = base_summary(name, opts, energy)
        .parameter("device", "ideal-linear")
        .parameter("a_kOhm", a)
        .parameter("b_kOhm_per_nC", b)
        .parameter("t_i_us", task.t_i)
        .parameter("t_f_us", task.t_f)
        .parameter("R_i_kOhm", task.r_i)
        .parameter("R_f_kOhm", task.r_f)
        .parameter("I_c_mA", i_c);
    summary.oracle = oracle;
    summary.tolerance("current_continuity_relative", 1e-8);
    summary.metric("mode", sol.mode);
    summary.metric("t_c_us", sol.t_c);
    summary.metric("R_c_kOhm", sol.r_c);
    summary.metric("R_c_over_R_f", sol.r_c / task.r_f);
    summary.metric("t_c_over_t_f", (sol.t_c - task.t_i) / task.duration());
    summary.metric("Q_unconstrained_nJ", free.q_opt);
    summary.metric("max_abs_current_mA", sol.sample(opts.grid)?.current().iter().fold(0.0f64, |m, i| m.max(i.abs())));
    if let Some(p) = prefix {
        summary.metric("oracle_clamped_prefix_fraction", p);
    }
    if sol.mode == ConstraintMode::ClampedThenInterior {
        summary.metric("secondary_root_R_kOhm", secondary_cubic_root(task.r_i, task.r_f, b, i_c, task.duration())?);
    }
    let trajectories = vec![
        ("constrained".to_string(), sol.sample(opts.grid)?),
        ("unconstrained".to_string(), free.trajectory),
        ("constant-current".to_string(), ci.trajectory),
    ];
    Ok(Artifacts { trajectories, summary, ratios: None })
}

/// Ideal memristor with an arbitrary law between explicit charges.
pub fn ideal_general(
    name: &str,
    model: &ChargeMemristor,
    coefficients: &[f64],
    (q_i, q_f, t_i, t_f): (f64, f64, f64, f64),
    opts: &RunOptions,
) -> Result<Artifacts, HarnessError> {
    let opt = solve_general_charges(model, q_i, q_f, t_i, t_f, opts.grid)?;
    let ci = baseline_constant_current_charges(model, q_i, q_f, t_i, t_f, opts.grid)?;
    let mut energy = EnergyReport::new(opt.q_opt)
        .with_constant_current(ci.heat)
        .residual("constant_power_spread", opt.trajectory.power_spread());
    if !opt.degenerate {
        energy = energy.residual("quadrature_vs_closed_form", relative_error(joule_heat(&opt.trajectory)?, opt.q_opt));
    }
    let mut oracle = Vec::new();
    if opts.oracle && !opt.degenerate {
        let path = minimize_discrete_path_charges(model, q_i, q_f, t_i, t_f, opts.oracle_grid, None)?;
        energy = energy.with_oracle(path.q_discrete);
        oracle.push(oracle_delta("discrete-path", opts.oracle_grid, path.q_discrete, opt.q_opt));
    }
    let mut summary = base_summary(name, opts, energy)
        .parameter("device", "ideal-general")
        .parameter("coefficients_kOhm", coefficients)
        .parameter("t_i_us", t_i)
        .parameter("t_f_us", t_f)
        .parameter("q_i_nC", q_i)
        .parameter("q_f_nC", q_f);
    summary.oracle = oracle;
    summary.metric("C1_mA_kOhm_sqrt", opt.c1);
    summary.metric("constant_current_mA", ci.control);
    summary.notes.push("constant-voltage baseline is computed for the linear law only".to_string());
    let trajectories =
        vec![("optimal".to_string(), opt.trajectory), ("constant-current".to_string(), ci.trajectory)];
    Ok(Artifacts { trajectories, summary, ratios: None })
}

/// Threshold device: closed-form optimum, both baselines, residuals and,
/// when enabled, direct transcription and shooting.
pub fn threshold(
    name: &str,
    model: &ThresholdMemristiveModel,
    task: &SwitchingTask,
    opts: &RunOptions,
) -> Result<Artifacts, HarnessError> {
    let opt = solve_threshold_closed_form(model, task, opts.grid)?;
    let cv = baseline_threshold_constant_voltage(model, task, opts.grid)?;
    let ci = baseline_threshold_constant_current(model, task, opts.grid)?;
    let branch = model.active_branch();
    let fine = solve_threshold_closed_form(model, task, RESIDUAL_GRID)?;
    let residuals = necessary_conditions_residual(&branch, task, &fine.trajectory, &fine.adjoint)?;

    let mut energy = EnergyReport::new(opt.q_opt)
        .with_constant_current(ci.baseline.heat)
        .with_constant_voltage(cv.heat)
        .residual("boundary", opt.trajectory.boundary_error(task.r_i, task.r_f))
        .residual("stationarity", residuals.stationarity)
        .residual("adjoint_dynamics", residuals.adjoint)
        .residual("state_dynamics", residuals.state)
        .residual("quadrature_vs_closed_form", relative_error(joule_heat(&fine.trajectory)?, opt.q_opt))
        .residual("constant_voltage_quadrature", relative_error(joule_heat(&cv.trajectory)?, cv.heat))
        .residual(
            "constant_current_quadrature",
            relative_error(joule_heat(&ci.baseline.trajectory)?, ci.baseline.heat),
        );

    let mut oracle = Vec::new();
    let mut shooting_sup = None;
    if opts.oracle {
        let (x_i, x_f) = (model.state_at(task.r_i), model.state_at(task.r_f));
        let path = transcribe_memristive(&branch, task.t_i, task.t_f, x_i, x_f, opts.oracle_grid)?;
        energy = energy.with_oracle(path.q_discrete);
        oracle.push(oracle_delta("direct-transcription", opts.oracle_grid, path.q_discrete, opt.q_opt));

        let boundary = StateBoundary { t_i: task.t_i, t_f: task.t_f, x_i, x_f };
        let options = ShootingOptions {
            grid: opts.grid,
            substeps: SHOOTING_SUBSTEPS,
            tolerance: TOL_SHOOTING_MISS,
            ..Default::default()
        };
        let guess = 2.0 * cv.control / (model.k * task.r_i);
        let shot = solve_shooting(&branch, &boundary, guess, &options)?;
        let scale = opt.trajectory.resistance().iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let sup = shot
            .trajectory
            .resistance()
            .iter()
            .zip(opt.trajectory.resistance())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale;
        shooting_sup = Some(sup);
        oracle.push(oracle_delta("shooting", opts.grid, joule_heat(&shot.trajectory)?, joule_heat(&opt.trajectory)?));
    }

    let mut summary = base_summary(name, opts, energy)
        .parameter("device", "threshold")
        .parameter("R_on_kOhm", model.r_on)
        .parameter("R_off_kOhm", model.r_off)
        .parameter("k_per_V_us", model.k)
        .parameter("V_on_V", model.v_on)
        .parameter("V_off_V", model.v_off)
        .parameter("t_i_us", task.t_i)
        .parameter("t_f_us", task.t_f)
        .parameter("R_i_kOhm", task.r_i)
        .parameter("R_f_kOhm", task.r_f);
    summary.oracle = oracle;
    summary.metric("C_per_us2", opt.c);
    summary.metric("t0_us", opt.t0);
    summary.metric("regime_valid", opt.regime_valid);
    summary.metric("V_crossing_us", opt.v_crossing);
    summary.metric("V_start_V", opt.voltage_at(model, task.t_i));
    summary.metric("V_end_V", opt.voltage_at(model, task.t_f));
    summary.metric("max_R_kOhm", opt.trajectory.resistance().iter().fold(0.0f64, |m, r| m.max(*r)));
    summary.metric("constant_voltage_V", cv.control);
    summary.metric("constant_current_mA", ci.baseline.control);
    summary.metric("constant_current_log_overdrive", ci.log_overdrive);
    summary.metric("saving_vs_constant_voltage", 1.0 - opt.q_opt / cv.heat);
    summary.metric("saving_vs_constant_current", 1.0 - opt.q_opt / ci.baseline.heat);
    summary.metric("ordering_opt_lt_cv_lt_ci", opt.q_opt < cv.heat && cv.heat < ci.baseline.heat);
    summary.metric("residual_grid", RESIDUAL_GRID);
    if let Some(sup) = shooting_sup {
        summary.metric("shooting_sup_error_R_relative", sup);
    }
    if !opt.regime_valid {
        summary.notes.push(format!(
            "optimal protocol leaves the V > V_on branch{}; affected samples carry regime_valid = false",
            opt.v_crossing.map(|t| format!(" at t = {t:.6} us")).unwrap_or_default()
        ));
    }
    let trajectories = vec![
        ("optimal".to_string(), opt.trajectory),
        ("constant-voltage".to_string(), cv.trajectory),
        ("constant-current".to_string(), ci.baseline.trajectory),
    ];
    Ok(Artifacts { trajectories, summary, ratios: None })
}

/// Residuals of an ideal linear optimum recast as a memristive system, on a
/// fine grid.
pub fn ideal_reduction_residual(model: &ChargeMemristor, task: &SwitchingTask) -> Result<f64, HarnessError> {
    let exact = solve_linear(model, task, REDUCTION_GRID)?;
    let device = IdealAsMemristive(model.clone());
    let adjoint = adjoint_from_stationarity(&device, &exact.trajectory)?;
    let res = necessary_conditions_residual(&device, task, &exact.trajectory, &adjoint)?;
    Ok(res.max_dynamics().max(res.boundary))
}
