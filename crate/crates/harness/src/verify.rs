//! The acceptance suite: ten criteria, each with pinned tolerances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use memopt_core::constrained::{solve_linear_with_compliance, ConstrainedSolution};
use memopt_core::ideal::{
    baseline_constant_current, baseline_constant_voltage, optimal_ratio, solve_general_charges, solve_linear,
    solve_time_energy,
};
use memopt_core::memristive::{
    baseline_threshold_constant_current, baseline_threshold_constant_voltage, necessary_conditions_residual,
    solve_shooting, solve_threshold_closed_form, ShootingOptions, StateBoundary,
};
use memopt_core::numerics::{adaptive_simpson, minimize_discrete_path};
use memopt_core::trajectory::relative_error;
use memopt_core::{joule_heat, ChargeMemristor, IdealAsMemristive, SwitchingTask};

use crate::error::HarnessError;
use crate::pipelines::{self, RunOptions, RESIDUAL_GRID, SHOOTING_SUBSTEPS};
use crate::scenarios::{self, Scenario};

pub const DEFAULT_SEED: u64 = 0x5eed_0001;

pub const ASYMPTOTE: f64 = 8.0 / 9.0;
pub const TOL_ASYMPTOTE: f64 = 1e-3;
pub const TOL_SYMMETRY: f64 = 1e-9;
pub const TOL_BOUND: f64 = 1e-6;
pub const FIG4_R_RATIO: f64 = 0.34;
pub const FIG4_T_RATIO: f64 = 0.26;
pub const TOL_FIG4: f64 = 5e-3;
pub const TOL_CONTINUITY: f64 = 1e-8;
pub const TOL_POWER_SPREAD: f64 = 1e-6;
pub const POWER_GRID: usize = 1001;
pub const TOL_BALANCE: f64 = 1e-9;
pub const TOL_BASELINE_EQUALITY: f64 = 1e-12;
pub const RANDOM_TASKS: usize = 20;
pub const ORACLE_GRID: usize = 128;
pub const TOL_ORACLE: f64 = 2e-3;
pub const CLAMPED_ORACLE_GRID: usize = 256;
pub const TOL_CLAMPED_ORACLE: f64 = 1e-2;
pub const TOL_PREFIX: f64 = 2e-2;
pub const PERTURBATIONS: usize = 100;
pub const TOL_PERTURBATION: f64 = 1e-12;
pub const TOL_BOUNDARY: f64 = 1e-9;
pub const TOL_NECESSARY: f64 = 1e-6;
pub const FIG3_Q_OPT: f64 = 0.39744;
pub const FIG3_Q_CV: f64 = 0.45587;
pub const TOL_FIG3_HEAT: f64 = 1e-4;
pub const TOL_QUADRATURE: f64 = 1e-6;
pub const TOL_REDUCTION: f64 = 1e-6;
pub const TOL_SHOOTING_SUP: f64 = 1e-5;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    /// Non-gating criteria report but never fail the suite.
    pub gating: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub data: Value,
}

impl CriterionResult {
    fn new(id: u32, name: &'static str, passed: bool, detail: String) -> Self {
        Self { id, name, passed, gating: true, detail, data: Value::Null }
    }

    fn failed(id: u32, name: &'static str, err: HarnessError) -> Self {
        Self::new(id, name, false, format!("error: {err}"))
    }

    pub fn line(&self) -> String {
        let status = match (self.passed, self.gating) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "NOTE",
        };
        let tag = if self.gating { "" } else { " (non-gating)" };
        format!("[{status}] {:>2} {}{tag}: {}", self.id, self.name, self.detail)
    }
}

pub fn all_gating_passed(results: &[CriterionResult]) -> bool {
    results.iter().all(|r| r.passed || !r.gating)
}

type Check = fn(u64) -> Result<CriterionResult, HarnessError>;

const CRITERIA: [(u32, &str, Check); 10] = [
    (1, "asymptotic ratio", asymptotic_ratio),
    (2, "savings bound", savings_bound),
    (3, "compliance switch point", compliance_switch_point),
    (4, "constant power and time-energy balance", constant_power),
    (5, "baseline equality", baseline_equality),
    (6, "oracle equivalence", oracle_equivalence),
    (7, "perturbation optimality", perturbation_optimality),
    (8, "threshold closed form", threshold_closed_form),
    (9, "reduction and shooting", reduction_and_shooting),
    (10, "threshold sweep savings report", sweep_report),
];

pub fn criterion(id: u32, seed: u64) -> CriterionResult {
    let (id, name, check) = CRITERIA[(id - 1) as usize];
    check(seed).unwrap_or_else(|e| CriterionResult::failed(id, name, e))
}

pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    (1..=CRITERIA.len() as u32).map(|id| criterion(id, seed)).collect()
}

/// Seeded unconstrained linear tasks with resistances in `[1, 100]` kΩ.
pub fn random_linear_tasks(seed: u64, count: usize) -> Vec<(ChargeMemristor, SwitchingTask)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = rng.gen_range(0.5..2.0);
            let b = rng.gen_range(0.5..2.0);
            let r_i = 10f64.powf(rng.gen_range(0.0..2.0));
            let r_f = 10f64.powf(rng.gen_range(0.0..2.0));
            let t_i = rng.gen_range(0.0..1.0);
            let t = rng.gen_range(0.5..5.0);
            (ChargeMemristor::linear(a, b).unwrap(), SwitchingTask::new(t_i, t_i + t, r_i, r_f).unwrap())
        })
        .collect()
}

fn asymptotic_ratio(_seed: u64) -> Result<CriterionResult, HarnessError> {
    let hi = optimal_ratio(1e6)?;
    let lo = optimal_ratio(1e-6)?;
    let mut asym = 0.0f64;
    for rho in scenarios::ratio_grid() {
        asym = asym.max((optimal_ratio(rho)? - optimal_ratio(1.0 / rho)?).abs());
    }
    let passed = (hi - ASYMPTOTE).abs() < TOL_ASYMPTOTE && (lo - ASYMPTOTE).abs() < TOL_ASYMPTOTE && asym < TOL_SYMMETRY;
    Ok(CriterionResult::new(
        1,
        "asymptotic ratio",
        passed,
        format!("ratio(1e6) = {hi:.9}, ratio(1e-6) = {lo:.9}, 8/9 = {ASYMPTOTE:.9}, max asymmetry {asym:.2e}"),
    ))
}

fn savings_bound(_seed: u64) -> Result<CriterionResult, HarnessError> {
    let grid = scenarios::ratio_grid();
    let ratios: Vec<f64> = grid.iter().map(|&r| optimal_ratio(r)).collect::<Result<_, _>>()?;
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    // decreasing away from ρ = 1 on both sides
    let mut monotone = true;
    for (w, r) in grid.windows(2).zip(ratios.windows(2)) {
        if w[0] >= 1.0 {
            monotone &= r[1] <= r[0];
        } else if w[1] <= 1.0 {
            monotone &= r[1] >= r[0];
        }
    }
    let passed = min >= ASYMPTOTE - TOL_BOUND && monotone;
    Ok(CriterionResult::new(
        2,
        "savings bound",
        passed,
        format!("min ratio {min:.9} (bound {:.9}), monotone toward both ends: {monotone}", ASYMPTOTE - TOL_BOUND),
    ))
}

fn compliance_switch_point(_seed: u64) -> Result<CriterionResult, HarnessError> {
    let (model, task) = scenarios::fig4_problem();
    let sol = solve_linear_with_compliance(&model, &task, 1001)?;
    let r_ratio = sol.r_c / task.r_f;
    let t_ratio = (sol.t_c - task.t_i) / task.duration();
    let jump = sol.current_jump() / sol.i_c;
    let passed = (r_ratio - FIG4_R_RATIO).abs() <= TOL_FIG4
        && (t_ratio - FIG4_T_RATIO).abs() <= TOL_FIG4
        && jump <= TOL_CONTINUITY;
    Ok(CriterionResult::new(
        3,
        "compliance switch point",
        passed,
        format!(
            "R_c/R_f = {r_ratio:.5} (0.34 ± {TOL_FIG4}), t_c/t_f = {t_ratio:.5} (0.26 ± {TOL_FIG4}), current jump {jump:.1e}"
        ),
    ))
}

fn constant_power(seed: u64) -> Result<CriterionResult, HarnessError> {
    let mut spread = 0.0f64;
    for (m, task) in random_linear_tasks(seed, RANDOM_TASKS) {
        spread = spread.max(solve_linear(&m, &task, POWER_GRID)?.trajectory.power_spread());
    }
    // a nonlinear law, R = 1 + q + q²
    let law = ChargeMemristor::from_fn(|q| 1.0 + q + q * q);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4);
    for _ in 0..5 {
        let q_f = rng.gen_range(0.5..4.0);
        let t = rng.gen_range(0.5..5.0);
        spread = spread.max(solve_general_charges(&law, 0.0, q_f, 0.0, t, POWER_GRID)?.trajectory.power_spread());
    }
    let mut balance = 0.0f64;
    for _ in 0..RANDOM_TASKS {
        let m = ChargeMemristor::linear(rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0))?;
        let (r_i, r_f) = (10f64.powf(rng.gen_range(0.0..2.0)), 10f64.powf(rng.gen_range(0.0..2.0)));
        let (w1, w2) = (10f64.powf(rng.gen_range(-2.0..2.0)), 10f64.powf(rng.gen_range(-2.0..2.0)));
        let r = solve_time_energy(&m, r_i, r_f, w1, w2, 11)?;
        balance = balance.max(relative_error(w1 * r.q_opt, w2 * r.t_opt));
    }
    let passed = spread < TOL_POWER_SPREAD && balance < TOL_BALANCE;
    Ok(CriterionResult::new(
        4,
        "constant power and time-energy balance",
        passed,
        format!("max power spread {spread:.2e} (< {TOL_POWER_SPREAD:.0e}), max balance error {balance:.2e} (< {TOL_BALANCE:.0e})"),
    ))
}

fn baseline_equality(seed: u64) -> Result<CriterionResult, HarnessError> {
    let mut worst = 0.0f64;
    let mut dominated = true;
    for (m, task) in random_linear_tasks(seed, RANDOM_TASKS) {
        let opt = solve_linear(&m, &task, 11)?;
        let cv = baseline_constant_voltage(&m, &task, 11)?;
        let ci = baseline_constant_current(&m, &task, 11)?;
        worst = worst.max(relative_error(cv.heat, ci.heat));
        if task.r_f != task.r_i {
            dominated &= cv.heat > opt.q_opt && ci.heat > opt.q_opt;
        }
    }
    let passed = worst < TOL_BASELINE_EQUALITY && dominated;
    Ok(CriterionResult::new(
        5,
        "baseline equality",
        passed,
        format!("max |Q_cv - Q_ci|/Q_ci = {worst:.2e} over {RANDOM_TASKS} tasks, both above Q_opt: {dominated}"),
    ))
}

fn oracle_equivalence(seed: u64) -> Result<CriterionResult, HarnessError> {
    let mut worst = 0.0f64;
    for (m, task) in random_linear_tasks(seed, RANDOM_TASKS) {
        let path = minimize_discrete_path(&m, &task, ORACLE_GRID)?;
        worst = worst.max(relative_error(path.q_discrete, solve_linear(&m, &task, 3)?.q_opt));
    }
    let (model, task) = scenarios::fig4_problem();
    let sol = solve_linear_with_compliance(&model, &task, 11)?;
    let path = minimize_discrete_path(&model, &task, CLAMPED_ORACLE_GRID)?;
    let clamped = relative_error(path.q_discrete, sol.q_total);
    let prefix = path.clamped_prefix_fraction();
    let passed =
        worst < TOL_ORACLE && clamped < TOL_CLAMPED_ORACLE && (prefix - FIG4_T_RATIO).abs() <= TOL_PREFIX;
    Ok(CriterionResult::new(
        6,
        "oracle equivalence",
        passed,
        format!(
            "unconstrained max rel delta {worst:.2e} (< {TOL_ORACLE:.0e}), clamped rel delta {clamped:.2e} (< {TOL_CLAMPED_ORACLE:.0e}), clamped prefix {prefix:.4} (0.26 ± {TOL_PREFIX})"
        ),
    ))
}

/// Heat of `q*(t) + Σ A_k sin(kπ s)` for the linear law on `[t0, t1]`, where
/// `q*` is the closed-form optimum between `r0` and `r1`.
fn perturbed_linear_heat(a: f64, b: f64, (t0, t1): (f64, f64), (r0, r1): (f64, f64), amps: &[f64]) -> f64 {
    let span = t1 - t0;
    let (p0, p1) = (r0.powf(1.5), r1.powf(1.5));
    let integrand = |t: f64| {
        let s = (t - t0) / span;
        let r_opt = (p0 * (1.0 - s) + p1 * s).powf(2.0 / 3.0);
        let dq_opt = 2.0 / 3.0 * (p1 - p0) / (span * r_opt.sqrt() * b);
        let (mut eta, mut deta) = (0.0, 0.0);
        for (k, amp) in amps.iter().enumerate() {
            let w = (k + 1) as f64 * std::f64::consts::PI;
            eta += amp * (w * s).sin();
            deta += amp * w / span * (w * s).cos();
        }
        let q = (r_opt - a) / b + eta;
        let dq = dq_opt + deta;
        (a + b * q) * dq * dq
    };
    let scale = 4.0 / (9.0 * b * b) * (p1 - p0).powi(2) / span;
    adaptive_simpson(&integrand, t0, t1, 1e-13 * scale.max(1e-300))
}

fn random_amplitudes(rng: &mut ChaCha8Rng, b: f64, r_min: f64) -> Vec<f64> {
    let modes = rng.gen_range(1..=4);
    let raw: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm: f64 = raw.iter().map(|x: &f64| x.abs()).sum::<f64>().max(1e-12);
    let size = 0.5 * r_min * rng.gen_range(0.01..1.0) / b;
    raw.iter().map(|x| x / norm * size).collect()
}

fn arc_of(sol: &ConstrainedSolution) -> ((f64, f64), (f64, f64), f64) {
    let (t_f, r_f) = (sol.task.t_f, sol.task.r_f);
    let arc_heat = 4.0 / (9.0 * sol.b * sol.b) * (r_f.powf(1.5) - sol.r_c.powf(1.5)).powi(2) / (t_f - sol.t_c);
    ((sol.t_c, t_f), (sol.r_c, r_f), arc_heat)
}

fn perturbation_optimality(seed: u64) -> Result<CriterionResult, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7);
    let tasks = random_linear_tasks(seed, PERTURBATIONS);
    let mut worst_ideal = f64::INFINITY;
    for (m, task) in &tasks {
        let (a, b) = m.linear_coefficients().unwrap();
        let q_opt = solve_linear(m, task, 3)?.q_opt;
        let amps = random_amplitudes(&mut rng, b, task.r_i.min(task.r_f));
        let q = perturbed_linear_heat(a, b, (task.t_i, task.t_f), (task.r_i, task.r_f), &amps);
        worst_ideal = worst_ideal.min(q / q_opt - 1.0);
    }
    let (model, task) = scenarios::fig4_problem();
    let sol = solve_linear_with_compliance(&model, &task, 11)?;
    let (span, ends, arc_heat) = arc_of(&sol);
    let mut worst_arc = f64::INFINITY;
    for _ in 0..PERTURBATIONS {
        let amps = random_amplitudes(&mut rng, sol.b, sol.r_c);
        let q = perturbed_linear_heat(sol.a, sol.b, span, ends, &amps);
        worst_arc = worst_arc.min(q / arc_heat - 1.0);
    }
    let passed = worst_ideal >= -TOL_PERTURBATION && worst_arc >= -TOL_PERTURBATION;
    Ok(CriterionResult::new(
        7,
        "perturbation optimality",
        passed,
        format!(
            "min relative heat change {worst_ideal:.3e} (ideal optimum), {worst_arc:.3e} (interior arc) over {PERTURBATIONS} perturbations each"
        ),
    ))
}

fn threshold_closed_form(_seed: u64) -> Result<CriterionResult, HarnessError> {
    let (model, task) = scenarios::fig3_problem();
    let opt = solve_threshold_closed_form(&model, &task, RESIDUAL_GRID)?;
    let res = necessary_conditions_residual(&model.active_branch(), &task, &opt.trajectory, &opt.adjoint)?;
    let boundary = opt.trajectory.boundary_error(task.r_i, task.r_f);
    let quad = relative_error(joule_heat(&opt.trajectory)?, opt.q_opt);
    let cv = baseline_threshold_constant_voltage(&model, &task, 11)?;
    let ci = baseline_threshold_constant_current(&model, &task, 11)?;
    let passed = boundary < TOL_BOUNDARY
        && res.max_dynamics() < TOL_NECESSARY
        && quad < TOL_QUADRATURE
        && (opt.q_opt - FIG3_Q_OPT).abs() <= TOL_FIG3_HEAT
        && (cv.heat - FIG3_Q_CV).abs() <= TOL_FIG3_HEAT
        && opt.q_opt < cv.heat
        && cv.heat < ci.baseline.heat;
    Ok(CriterionResult::new(
        8,
        "threshold closed form",
        passed,
        format!(
            "Q_opt = {:.6} nJ, Q_cv = {:.6} nJ, Q_ci = {:.4} nJ, boundary {boundary:.1e}, residuals {:.1e}, quadrature {quad:.1e}",
            opt.q_opt,
            cv.heat,
            ci.baseline.heat,
            res.max_dynamics()
        ),
    ))
}

fn sup_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

fn reduction_and_shooting(_seed: u64) -> Result<CriterionResult, HarnessError> {
    let (law, ideal_task) = scenarios::fig2_problem();
    let reduction = pipelines::ideal_reduction_residual(&law, &ideal_task)?;

    let options = ShootingOptions { substeps: SHOOTING_SUBSTEPS, ..Default::default() };
    let exact = solve_linear(&law, &ideal_task, options.grid)?;
    let cv = baseline_constant_voltage(&law, &ideal_task, 3)?;
    let q_f = law.charge_at(ideal_task.r_f)?;
    let q_i = law.charge_at(ideal_task.r_i)?;
    let boundary = StateBoundary { t_i: ideal_task.t_i, t_f: ideal_task.t_f, x_i: q_i, x_f: q_f };
    let shot = solve_shooting(&IdealAsMemristive(law.clone()), &boundary, 2.0 * cv.control, &options)?;
    let ideal_sup = sup_rel(shot.trajectory.resistance(), exact.trajectory.resistance());

    let (model, task) = scenarios::fig3_problem();
    let exact = solve_threshold_closed_form(&model, &task, options.grid)?;
    let cv = baseline_threshold_constant_voltage(&model, &task, 3)?;
    let boundary =
        StateBoundary { t_i: task.t_i, t_f: task.t_f, x_i: model.state_at(task.r_i), x_f: model.state_at(task.r_f) };
    let shot = solve_shooting(&model.active_branch(), &boundary, 2.0 * cv.control / (model.k * task.r_i), &options)?;
    let threshold_sup = sup_rel(shot.trajectory.resistance(), exact.trajectory.resistance());

    let passed = reduction < TOL_REDUCTION && ideal_sup < TOL_SHOOTING_SUP && threshold_sup < TOL_SHOOTING_SUP;
    Ok(CriterionResult::new(
        9,
        "reduction and shooting",
        passed,
        format!(
            "recast ideal residual {reduction:.1e} (< {TOL_REDUCTION:.0e}), shooting sup error {ideal_sup:.1e} (ideal), {threshold_sup:.1e} (threshold)"
        ),
    ))
}

fn fmt_range(v: &Value) -> String {
    let at = |k: usize| v[k].as_f64().unwrap_or(f64::NAN);
    format!("{:.3}..{:.3}", at(0), at(1))
}

fn sweep_report(seed: u64) -> Result<CriterionResult, HarnessError> {
    let opts = RunOptions { grid: 101, oracle: false, oracle_grid: 3, seed };
    let artifacts = scenarios::run(Scenario::SweepThreshold, &opts)?;
    let rows = artifacts.ratios.as_ref().map_or(0, |t| t.rows.len());
    let m = &artifacts.summary.metrics;
    let reference = m.get("reference_savings").cloned().unwrap_or(Value::Null);
    let fmt_level = |v: &Value| {
        let at = |key: &str| match &v[key] {
            Value::Null => "not reached".to_string(),
            p => format!("R_f ≈ {:.1} kΩ (regime_valid = {})", p["R_f_kOhm"].as_f64().unwrap_or(f64::NAN), p["regime_valid"]),
        };
        format!("{:.0}%: vs cv {}, vs ci {}", v["saving"].as_f64().unwrap_or(0.0) * 100.0, at("vs_constant_voltage"), at("vs_constant_current"))
    };
    let levels: Vec<String> = reference.as_array().map(|a| a.iter().map(fmt_level).collect()).unwrap_or_default();
    let passed = rows == scenarios::SWEEP_POINTS && reference.is_array();
    let mut result = CriterionResult::new(
        10,
        "threshold sweep savings report",
        passed,
        format!(
            "{rows} sweep points, regime-valid points {}, savings vs cv {}, vs ci {}; {}",
            m["sweep_regime_valid_points"],
            fmt_range(&m["saving_vs_constant_voltage_range"]),
            fmt_range(&m["saving_vs_constant_current_range"]),
            levels.join("; ")
        ),
    );
    result.gating = false;
    result.data = reference;
    Ok(result)
}
