//! Optimal switching of first-order memristive systems `dx/dt = f(x, V)`.
//!
//! With `λ₀ = 1` the Lagrange-multiplier optimality system reads
//!
//! ```text
//! Λ       = 2 V / (R_M(x) ∂f/∂V)                       (stationarity)
//! dΛ/dt   = V² d(1/R_M)/dx - Λ ∂f/∂x                     (adjoint)
//! dx/dt   = f(x, V),   x(t_i) = x_i,  x(t_f) = x_f        (state)
//! ```
//!
//! For the threshold device on its switching branch the system integrates in
//! closed form: `R_M(t)` is quadratic and `V(t)` affine in time.

use std::cell::Cell;

use serde::Serialize;

use crate::device::{MemristiveDevice, ThresholdMemristiveModel};
use crate::error::{Error, Result};
use crate::ideal::Baseline;
use crate::numerics::ode::integrate_ode_refined;
use crate::numerics::root::find_root_bracketed;
use crate::trajectory::{uniform_grid, SwitchingTask, Trajectory};

/// Tolerance on the `[0, 1]` state range before a sample is flagged.
const STATE_RANGE_SLACK: f64 = 1e-9;

/// Which sign of the square root in the quadratic coefficient `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootBranch {
    /// The physical branch, `V(t) > V_on` at the start.
    Negative,
    /// Discarded branch, kept for diagnostics.
    Positive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdOptimum {
    /// Quadratic coefficient, 1/µs².
    pub c: f64,
    /// Time shift, µs.
    pub t0: f64,
    pub trajectory: Trajectory,
    /// Lagrange multiplier `Λ(t) = 2 V / (k R_M)` on the trajectory grid.
    pub adjoint: Vec<f64>,
    /// Joule heat, nJ.
    pub q_opt: f64,
    /// `V(t) > V_on` on the whole window and the state stays in `[0, 1]`.
    pub regime_valid: bool,
    /// Instant where `V(t) = V_on`, when it falls inside the window.
    pub v_crossing: Option<f64>,
}

impl ThresholdOptimum {
    /// `V(t) = 2 V_on + (2C/k)(t + t_0)`.
    pub fn voltage_at(&self, model: &ThresholdMemristiveModel, t: f64) -> f64 {
        2.0 * model.v_on + 2.0 * self.c / model.k * (t + self.t0)
    }

    /// `R_M(t) = C ΔR (t + t_0)² + k ΔR V_on (t + t_0)`.
    pub fn resistance_at(&self, model: &ThresholdMemristiveModel, t: f64) -> f64 {
        let s = t + self.t0;
        model.swing() * (self.c * s * s + model.k * model.v_on * s)
    }
}

/// Constant-current reference for the threshold device.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdCurrentBaseline {
    pub baseline: Baseline,
    /// `ε` in `I = (V_on / R_i)(1 + ε)`; for long windows it underflows any
    /// representation of `I` itself, so the root is found in `ln ε`.
    pub overdrive: f64,
    pub log_overdrive: f64,
}

/// Sup-norm residuals of the optimality system on a sampled solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `max |Λ - 2V/(R ∂f/∂V)| / max |Λ|`.
    pub stationarity: f64,
    /// `max |dΛ/dt - rhs| / max |rhs|`, derivative by fourth-order differences.
    pub adjoint: f64,
    /// `max |dx/dt - f| / max |f|`.
    pub state: f64,
    /// Relative mismatch of `R_M` at the two ends.
    pub boundary: f64,
}

impl ResidualReport {
    pub fn max_dynamics(&self) -> f64 {
        self.stationarity.max(self.adjoint).max(self.state)
    }
}

fn check_threshold_task(model: &ThresholdMemristiveModel, task: &SwitchingTask) -> Result<()> {
    if task.r_f < task.r_i {
        return Err(Error::UnsupportedDirection(format!(
            "threshold solvers treat the V > V_on branch only (R_f >= R_i), got R_i = {}, R_f = {}",
            task.r_i, task.r_f
        )));
    }
    if task.r_i < model.r_on || task.r_f > model.r_off {
        return Err(Error::Domain(format!(
            "boundary resistances must lie in [R_on, R_off] = [{}, {}], got R_i = {}, R_f = {}",
            model.r_on, model.r_off, task.r_i, task.r_f
        )));
    }
    Ok(())
}

/// `(C, t_0)` fixed by `R_M(t_i) = R_i` and `R_M(t_f) = R_f`.
pub fn threshold_coefficients(
    model: &ThresholdMemristiveModel,
    task: &SwitchingTask,
    branch: RootBranch,
) -> Result<(f64, f64)> {
    let (r_i, r_f) = (task.r_i, task.r_f);
    let duration = task.duration();
    let dr = model.swing();
    let drive = model.k * model.v_on * dr * duration;
    let root = (4.0 * r_i * r_f + drive * drive).sqrt();
    let signed = match branch {
        RootBranch::Negative => -root,
        RootBranch::Positive => root,
    };
    let c = (r_f + r_i + signed) / (dr * duration * duration);
    if c == 0.0 {
        return Err(Error::Domain("quadratic coefficient C vanishes; t_0 is undefined".into()));
    }
    let t0 = 0.5 / c * ((r_f - r_i) / (duration * dr) - model.k * model.v_on) - 0.5 * (task.t_f + task.t_i);
    Ok((c, t0))
}

/// Closed-form optimal control of the threshold device.
///
/// The formulas are applied as derived on the `V > V_on` branch; when the
/// optimal voltage dips below `V_on` inside the window, the result is returned
/// with `regime_valid = false` and the crossing time instead of an error.
pub fn solve_threshold_closed_form(
    model: &ThresholdMemristiveModel,
    task: &SwitchingTask,
    n: usize,
) -> Result<ThresholdOptimum> {
    if n < 3 {
        return Err(Error::Input(format!("grid needs at least 3 samples, got {n}")));
    }
    check_threshold_task(model, task)?;
    if task.r_f == task.r_i {
        return Err(Error::UnsupportedDirection(
            "R_f = R_i: no V > V_on transition to optimise".into(),
        ));
    }
    let (c, t0) = threshold_coefficients(model, task, RootBranch::Negative)?;
    let (s_i, s_f) = (task.t_i + t0, task.t_f + t0);
    if s_i <= 0.0 || s_f <= 0.0 {
        return Err(Error::Domain(format!(
            "logarithm undefined: t_i + t_0 = {s_i}, t_f + t_0 = {s_f} (C = {c}, t_0 = {t0})"
        )));
    }
    let dr = model.swing();
    let (k, v_on) = (model.k, model.v_on);
    let q_opt = 4.0 / (k * k * dr) * (c * task.duration() + k * v_on * (s_f / s_i).ln());

    let times = uniform_grid(task.t_i, task.t_f, n);
    let mut state = Vec::with_capacity(n);
    let mut resistance = Vec::with_capacity(n);
    let mut current = Vec::with_capacity(n);
    let mut flags = Vec::with_capacity(n);
    let mut adjoint = Vec::with_capacity(n);
    for &t in &times {
        let s = t + t0;
        let r = dr * (c * s * s + k * v_on * s);
        let i = 2.0 / (k * dr * s);
        let v = 2.0 * v_on + 2.0 * c / k * s;
        let x = model.state_at(r);
        state.push(x);
        resistance.push(r);
        current.push(i);
        flags.push(v > v_on && (-STATE_RANGE_SLACK..=1.0 + STATE_RANGE_SLACK).contains(&x));
        adjoint.push(2.0 * v / (k * r));
    }
    let trajectory = Trajectory::from_resistance_current(times, state, resistance, current, flags)?;

    let crossing = -k * v_on / (2.0 * c) - t0;
    let v_crossing = (crossing > task.t_i && crossing < task.t_f).then_some(crossing);
    let v_start = 2.0 * v_on + 2.0 * c / k * s_i;
    let v_end = 2.0 * v_on + 2.0 * c / k * s_f;
    let regime_valid = v_start > v_on && v_end > v_on && trajectory.all_valid();

    Ok(ThresholdOptimum { c, t0, trajectory, adjoint, q_opt, regime_valid, v_crossing })
}

/// The unique constant voltage above `V_on` that reaches `x_f` at `t_f`;
/// the memristance then grows linearly in time.
pub fn baseline_threshold_constant_voltage(
    model: &ThresholdMemristiveModel,
    task: &SwitchingTask,
    n: usize,
) -> Result<Baseline> {
    if n < 3 {
        return Err(Error::Input(format!("grid needs at least 3 samples, got {n}")));
    }
    check_threshold_task(model, task)?;
    let (r_i, r_f) = (task.r_i, task.r_f);
    let duration = task.duration();
    let (x_i, x_f) = (model.state_at(r_i), model.state_at(r_f));
    let v = model.v_on + (x_f - x_i) / (model.k * duration);
    let times = uniform_grid(task.t_i, task.t_f, n);
    let mut resistance: Vec<f64> =
        times.iter().map(|t| r_i + (r_f - r_i) * (t - task.t_i) / duration).collect();
    resistance[n - 1] = r_f;
    let state = resistance.iter().map(|&r| model.state_at(r)).collect();
    let current = resistance.iter().map(|r| v / r).collect();
    let trajectory = Trajectory::valid(times, state, resistance, current)?;
    let degenerate = r_f == r_i;
    let heat = if degenerate {
        v * v * duration / r_i
    } else {
        v * v * duration * (r_f / r_i).ln() / (r_f - r_i)
    };
    Ok(Baseline { control: v, trajectory, heat, degenerate })
}

/// Constant current `I > V_on / R_i`, under which
/// `R_M(t) = V_on/I + (R_i - V_on/I) exp(k ΔR I (t - t_i))`.
///
/// The current is written `I = (V_on/R_i)(1 + ε)` and the endpoint condition
/// is solved by bisection in `ln ε`; the heat is
/// `Q = I V_on T + I (R_f - R_i) / (k ΔR)`.
pub fn baseline_threshold_constant_current(
    model: &ThresholdMemristiveModel,
    task: &SwitchingTask,
    n: usize,
) -> Result<ThresholdCurrentBaseline> {
    if n < 3 {
        return Err(Error::Input(format!("grid needs at least 3 samples, got {n}")));
    }
    check_threshold_task(model, task)?;
    let (r_i, r_f, v_on) = (task.r_i, task.r_f, model.v_on);
    let duration = task.duration();
    let dr = model.swing();
    let rate = model.k * dr;
    let times = uniform_grid(task.t_i, task.t_f, n);

    if r_f == r_i {
        let i = v_on / r_i;
        let trajectory = Trajectory::valid(times, vec![model.state_at(r_i); n], vec![r_i; n], vec![i; n])?;
        let baseline = Baseline { control: i, trajectory, heat: i * i * r_i * duration, degenerate: true };
        return Ok(ThresholdCurrentBaseline { baseline, overdrive: 0.0, log_overdrive: f64::NEG_INFINITY });
    }

    let current_of = |s: f64| v_on / r_i * (1.0 + s.exp());
    let gap = |s: f64| {
        let eps = s.exp();
        let log_y0 = r_i.ln() + s - eps.ln_1p();
        log_y0 + rate * current_of(s) * duration - (r_f - r_i / (1.0 + eps)).ln()
    };
    // ε in [1e-9, 1e3], widened geometrically on failure
    let (mut lo, mut hi) = (1e-9f64.ln(), 1e3f64.ln());
    while gap(lo) > 0.0 {
        lo *= 2.0;
        if lo < -700.0 {
            return Err(Error::Infeasible(format!(
                "no constant current above V_on/R_i reaches R_f: bracket ln(eps) in [{lo}, {hi}]"
            )));
        }
    }
    while gap(hi) < 0.0 {
        hi += 1e3f64.ln();
        if hi > 700.0 {
            return Err(Error::Infeasible(format!(
                "no constant current above V_on/R_i reaches R_f: bracket ln(eps) in [{lo}, {hi}]"
            )));
        }
    }
    let s = find_root_bracketed(gap, lo, hi, 1e-13)?;
    let eps = s.exp();
    let i = current_of(s);
    let rest = r_i / (1.0 + eps);
    let log_y0 = r_i.ln() + s - eps.ln_1p();
    let resistance: Vec<f64> =
        times.iter().map(|t| rest + (log_y0 + rate * i * (t - task.t_i)).exp()).collect();
    let state = resistance.iter().map(|&r| model.state_at(r)).collect();
    let trajectory = Trajectory::valid(times, state, resistance, vec![i; n])?;
    let heat = i * v_on * duration + i * (r_f - r_i) / rate;
    let baseline = Baseline { control: i, trajectory, heat, degenerate: false };
    Ok(ThresholdCurrentBaseline { baseline, overdrive: eps, log_overdrive: s })
}

/// Fourth-order finite-difference derivative on a uniform grid: five-point
/// central stencil inside, five-point one-sided stencils at the two nodes
/// nearest each end.
fn derivative(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    if n < 5 {
        // fall back to second order
        return (0..n)
            .map(|j| match j {
                0 => (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt),
                j if j == n - 1 => (3.0 * values[j] - 4.0 * values[j - 1] + values[j - 2]) / (2.0 * dt),
                j => (values[j + 1] - values[j - 1]) / (2.0 * dt),
            })
            .collect();
    }
    let f = values;
    (0..n)
        .map(|j| {
            if j >= 2 && j + 2 < n {
                (f[j - 2] - 8.0 * f[j - 1] + 8.0 * f[j + 1] - f[j + 2]) / (12.0 * dt)
            } else if j < 2 {
                let o = 0;
                let w: [f64; 5] = if j == 0 {
                    [-25.0, 48.0, -36.0, 16.0, -3.0]
                } else {
                    [-3.0, -10.0, 18.0, -6.0, 1.0]
                };
                w.iter().enumerate().map(|(m, c)| c * f[o + m]).sum::<f64>() / (12.0 * dt)
            } else {
                let o = n - 5;
                let w: [f64; 5] = if j == n - 1 {
                    [3.0, -16.0, 36.0, -48.0, 25.0]
                } else {
                    [-1.0, 6.0, -18.0, 10.0, 3.0]
                };
                w.iter().enumerate().map(|(m, c)| c * f[o + m]).sum::<f64>() / (12.0 * dt)
            }
        })
        .collect()
}

fn normalised_sup(diff: impl Iterator<Item = f64>, scale: f64) -> f64 {
    let sup = diff.map(f64::abs).fold(0.0, f64::max);
    if scale > 0.0 {
        sup / scale
    } else {
        sup
    }
}

/// Residuals of the optimality system for a sampled trajectory and multiplier.
///
/// Not an optimality verdict: a non-optimal input simply yields large values.
pub fn necessary_conditions_residual(
    device: &impl MemristiveDevice,
    task: &SwitchingTask,
    trajectory: &Trajectory,
    adjoint: &[f64],
) -> Result<ResidualReport> {
    let n = trajectory.len();
    if adjoint.len() != n {
        return Err(Error::Input(format!(
            "multiplier has {} samples, trajectory has {n}",
            adjoint.len()
        )));
    }
    if n < 3 {
        return Err(Error::Input("residuals need at least 3 samples".into()));
    }
    let (x, v, t) = (trajectory.state(), trajectory.voltage(), trajectory.times());
    let dt = trajectory.dt();

    let mut stationary = Vec::with_capacity(n);
    let mut adjoint_rhs = Vec::with_capacity(n);
    let mut state_rhs = Vec::with_capacity(n);
    for j in 0..n {
        let fv = device.rate_dv(x[j], v[j]);
        if fv == 0.0 {
            return Err(Error::SingularControl { t: t[j] });
        }
        let r = device.resistance(x[j]);
        stationary.push(2.0 * v[j] / (r * fv));
        let inv_r_slope = -device.resistance_slope(x[j]) / (r * r);
        adjoint_rhs.push(v[j] * v[j] * inv_r_slope - adjoint[j] * device.rate_dx(x[j], v[j]));
        state_rhs.push(device.rate(x[j], v[j]));
    }
    let sup = |s: &[f64]| s.iter().map(|v| v.abs()).fold(0.0, f64::max);

    let stationarity =
        normalised_sup(adjoint.iter().zip(&stationary).map(|(a, b)| a - b), sup(adjoint));
    let d_adjoint = derivative(adjoint, dt);
    let adjoint_res =
        normalised_sup(d_adjoint.iter().zip(&adjoint_rhs).map(|(a, b)| a - b), sup(&adjoint_rhs));
    let d_state = derivative(x, dt);
    let state = normalised_sup(d_state.iter().zip(&state_rhs).map(|(a, b)| a - b), sup(&state_rhs));

    Ok(ResidualReport {
        stationarity,
        adjoint: adjoint_res,
        state,
        boundary: trajectory.boundary_error(task.r_i, task.r_f),
    })
}

/// Multiplier from the stationarity condition at every sample.
pub fn adjoint_from_stationarity(device: &impl MemristiveDevice, trajectory: &Trajectory) -> Result<Vec<f64>> {
    let (x, v, t) = (trajectory.state(), trajectory.voltage(), trajectory.times());
    (0..trajectory.len())
        .map(|j| {
            let fv = device.rate_dv(x[j], v[j]);
            if fv == 0.0 {
                Err(Error::SingularControl { t: t[j] })
            } else {
                Ok(2.0 * v[j] / (device.resistance(x[j]) * fv))
            }
        })
        .collect()
}

/// Multiplier obtained by integrating the adjoint equation along a given
/// trajectory from `Λ(t_i) = lambda0` (implicit trapezoid rule).
pub fn integrate_adjoint(device: &impl MemristiveDevice, trajectory: &Trajectory, lambda0: f64) -> Vec<f64> {
    let (x, v) = (trajectory.state(), trajectory.voltage());
    let h = trajectory.dt();
    let source = |j: usize| {
        let r = device.resistance(x[j]);
        -v[j] * v[j] * device.resistance_slope(x[j]) / (r * r)
    };
    let damping = |j: usize| device.rate_dx(x[j], v[j]);
    let mut out = vec![lambda0];
    for j in 0..trajectory.len() - 1 {
        let prev = out[j];
        let next = (prev * (1.0 - 0.5 * h * damping(j)) + 0.5 * h * (source(j) + source(j + 1)))
            / (1.0 + 0.5 * h * damping(j + 1));
        out.push(next);
    }
    out
}

/// Boundary states of a memristive switching problem, in the state variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateBoundary {
    pub t_i: f64,
    pub t_f: f64,
    pub x_i: f64,
    pub x_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub grid: usize,
    /// RK4 steps per grid interval.
    pub substeps: usize,
    pub max_iterations: usize,
    /// Required `|x(t_f) - x_f|`.
    pub tolerance: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { grid: crate::trajectory::DEFAULT_GRID, substeps: 1, max_iterations: 200, tolerance: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShootingSolution {
    pub trajectory: Trajectory,
    pub adjoint: Vec<f64>,
    /// Converged `Λ(t_i)`.
    pub adjoint_initial: f64,
    pub iterations: usize,
    /// Final `x(t_f) - x_f`.
    pub miss: f64,
    pub residuals: ResidualReport,
}

struct Shot {
    samples: Vec<[f64; 2]>,
    controls: Vec<f64>,
    /// False when the integration broke down before `t_f`; `samples` then
    /// ends at the last good node.
    complete: bool,
}

impl Shot {
    fn end_state(&self) -> f64 {
        self.samples[self.samples.len() - 1][0]
    }
}

fn shoot(
    device: &impl MemristiveDevice,
    grid: &[f64],
    x_i: f64,
    lambda0: f64,
    substeps: usize,
) -> Result<Shot> {
    let singular_at = Cell::new(None);
    let rate = |t: f64, y: &[f64; 2]| {
        let Some(v) = device.control_from_adjoint(y[0], y[1]) else {
            if singular_at.get().is_none() {
                singular_at.set(Some(t));
            }
            return [f64::NAN, f64::NAN];
        };
        let r = device.resistance(y[0]);
        if r <= 0.0 {
            return [f64::NAN, f64::NAN];
        }
        let dl = -v * v * device.resistance_slope(y[0]) / (r * r) - y[1] * device.rate_dx(y[0], v);
        [device.rate(y[0], v), dl]
    };
    let control = |y: &[f64; 2]| {
        device.control_from_adjoint(y[0], y[1]).filter(|v| v.is_finite() && device.resistance(y[0]) > 0.0)
    };
    let Some(v0) = control(&[x_i, lambda0]) else {
        return Err(Error::SingularControl { t: grid[0] });
    };
    let mut samples = vec![[x_i, lambda0]];
    let mut controls = vec![v0];
    for w in grid.windows(2) {
        let last = samples[samples.len() - 1];
        let step = integrate_ode_refined(rate, last, w, substeps);
        if let Some(t) = singular_at.get() {
            return Err(Error::SingularControl { t });
        }
        let next = match step {
            Ok(pair) => pair[1],
            Err(Error::NonFinite { .. }) => return Ok(Shot { samples, controls, complete: false }),
            Err(e) => return Err(e),
        };
        match control(&next) {
            Some(v) => {
                samples.push(next);
                controls.push(v);
            }
            None => return Ok(Shot { samples, controls, complete: false }),
        }
    }
    Ok(Shot { samples, controls, complete: true })
}

/// Whether a sample lies in the regime the device model is valid for.
pub trait ShootingDevice: MemristiveDevice {
    fn sample_valid(&self, _x: f64, _v: f64) -> bool {
        true
    }
}

impl ShootingDevice for crate::device::ActiveBranch {
    fn sample_valid(&self, x: f64, v: f64) -> bool {
        v > self.0.v_on && (-STATE_RANGE_SLACK..=1.0 + STATE_RANGE_SLACK).contains(&x)
    }
}

impl ShootingDevice for ThresholdMemristiveModel {
    fn sample_valid(&self, x: f64, _v: f64) -> bool {
        (-STATE_RANGE_SLACK..=1.0 + STATE_RANGE_SLACK).contains(&x)
    }
}

impl ShootingDevice for crate::device::IdealAsMemristive {}

/// Shooting on the unknown initial multiplier `Λ(t_i)`.
///
/// The coupled `(x, Λ)` system is integrated forward with RK4. With
/// `∂f/∂V > 0` the endpoint `x(t_f)` grows with `Λ(t_i)`, so the miss
/// `x(t_f) - x_f` fixes the search direction: steps of doubling length walk
/// away from the guess until the miss changes sign, then Illinois-style regula
/// falsi refines inside the bracket until `|x(t_f) - x_f|` meets the
/// tolerance. A shot that breaks down early (non-positive memristance,
/// overflow) contributes the state it reached as its miss.
pub fn solve_shooting(
    device: &impl ShootingDevice,
    boundary: &StateBoundary,
    guess: f64,
    options: &ShootingOptions,
) -> Result<ShootingSolution> {
    if !(boundary.t_f > boundary.t_i) {
        return Err(Error::Domain("need t_f > t_i".into()));
    }
    if options.grid < 5 {
        return Err(Error::Input(format!("shooting grid needs at least 5 samples, got {}", options.grid)));
    }
    let grid = uniform_grid(boundary.t_i, boundary.t_f, options.grid);
    let mut history = Vec::new();
    let mut evaluate = |lambda0: f64| -> Result<(f64, Shot)> {
        history.push(lambda0);
        let shot = shoot(device, &grid, boundary.x_i, lambda0, options.substeps)?;
        Ok((shot.end_state() - boundary.x_f, shot))
    };
    let done = |miss: f64, shot: &Shot| shot.complete && miss.abs() < options.tolerance;

    let (mut a, (mut fa, shot)) = (guess, evaluate(guess)?);
    if done(fa, &shot) {
        return finish(device, boundary, &grid, a, 0, fa, shot);
    }
    let mut step = -fa.signum() * 1e-2 * guess.abs().max(1e-3);
    // (lo, f_lo, hi, f_hi) once the miss has changed sign, and the side that moved last
    let mut bracket: Option<(f64, f64, f64, f64)> = None;
    let mut last_side = 0i8;
    let mut b = a + step;

    for iteration in 1..=options.max_iterations {
        let (fb, shot) = evaluate(b)?;
        if done(fb, &shot) {
            return finish(device, boundary, &grid, b, iteration, fb, shot);
        }
        match bracket.as_mut() {
            Some((lo, f_lo, hi, f_hi)) => {
                if fb.signum() == f_lo.signum() {
                    (*lo, *f_lo) = (b, fb);
                    if last_side == -1 {
                        *f_hi *= 0.5;
                    }
                    last_side = -1;
                } else {
                    (*hi, *f_hi) = (b, fb);
                    if last_side == 1 {
                        *f_lo *= 0.5;
                    }
                    last_side = 1;
                }
            }
            None if fa * fb <= 0.0 => bracket = Some((a, fa, b, fb)),
            None => {
                (a, fa) = (b, fb);
                step *= 2.0;
                b = a + step;
                continue;
            }
        }
        let (lo, f_lo, hi, f_hi) = bracket.expect("bracket set above");
        let x = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        b = if x.is_finite() && x != lo && x != hi { x } else { 0.5 * (lo + hi) };
    }
    let tail = history.len().saturating_sub(8);
    Err(Error::NoConvergence { iterations: options.max_iterations, history: history.split_off(tail) })
}

fn finish(
    device: &impl ShootingDevice,
    boundary: &StateBoundary,
    grid: &[f64],
    adjoint_initial: f64,
    iterations: usize,
    miss: f64,
    shot: Shot,
) -> Result<ShootingSolution> {
    let n = grid.len();
    let state: Vec<f64> = shot.samples.iter().map(|y| y[0]).collect();
    let adjoint: Vec<f64> = shot.samples.iter().map(|y| y[1]).collect();
    let resistance: Vec<f64> = state.iter().map(|&x| device.resistance(x)).collect();
    let current: Vec<f64> = shot.controls.iter().zip(&resistance).map(|(v, r)| v / r).collect();
    let flags = state.iter().zip(&shot.controls).map(|(&x, &v)| device.sample_valid(x, v)).collect();
    let trajectory = Trajectory::from_resistance_current(grid.to_vec(), state, resistance, current, flags)?;
    let task = SwitchingTask::new(
        boundary.t_i,
        boundary.t_f,
        device.resistance(boundary.x_i),
        device.resistance(boundary.x_f),
    )?;
    let residuals = necessary_conditions_residual(device, &task, &trajectory, &adjoint)?;
    debug_assert_eq!(trajectory.len(), n);
    Ok(ShootingSolution { trajectory, adjoint, adjoint_initial, iterations, miss, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{joule_heat, relative_error};

    fn fig3() -> (ThresholdMemristiveModel, SwitchingTask) {
        (
            ThresholdMemristiveModel::new(1.0, 100.0, 0.5, 1.0, -1.0).unwrap(),
            SwitchingTask::new(0.0, 5.0, 1.0, 100.0).unwrap(),
        )
    }

    #[test]
    fn closed_form_fig3_constants() {
        let (m, task) = fig3();
        let opt = solve_threshold_closed_form(&m, &task, 1001).unwrap();
        assert!((opt.c + 0.0595180).abs() < 1e-6, "C = {}", opt.c);
        assert!((opt.t0 - 0.020246).abs() < 1e-5, "t0 = {}", opt.t0);
        assert!((opt.q_opt - 0.39744).abs() < 1e-4, "Q = {}", opt.q_opt);
        assert!(opt.trajectory.boundary_error(1.0, 100.0) < 1e-9);
        let fine = solve_threshold_closed_form(&m, &task, 40001).unwrap();
        assert!(relative_error(joule_heat(&fine.trajectory).unwrap(), opt.q_opt) < 1e-6);
    }

    #[test]
    fn closed_form_fig3_regime() {
        let (m, task) = fig3();
        let opt = solve_threshold_closed_form(&m, &task, 1001).unwrap();
        let v = opt.trajectory.voltage();
        assert!((v[0] - 1.99518).abs() < 1e-5);
        assert!(v.windows(2).all(|w| w[1] < w[0]));
        assert!(!opt.regime_valid);
        assert!((opt.v_crossing.unwrap() - 4.18).abs() < 5e-3);
        assert!((opt.voltage_at(&m, 2.0) - v[400]).abs() < 1e-12);
        assert!((opt.resistance_at(&m, 2.0) - opt.trajectory.resistance()[400]).abs() < 1e-12);
    }

    #[test]
    fn positive_branch_violates_threshold() {
        let (m, task) = fig3();
        let (c, t0) = threshold_coefficients(&m, &task, RootBranch::Positive).unwrap();
        assert!(2.0 * m.v_on + 2.0 * c / m.k * (task.t_i + t0) < m.v_on);
    }

    #[test]
    fn closed_form_error_paths() {
        let (m, _) = fig3();
        let down = SwitchingTask::new(0.0, 5.0, 50.0, 10.0).unwrap();
        assert!(matches!(solve_threshold_closed_form(&m, &down, 11), Err(Error::UnsupportedDirection(_))));
        let outside = SwitchingTask::new(0.0, 5.0, 1.0, 150.0).unwrap();
        assert!(matches!(solve_threshold_closed_form(&m, &outside, 11), Err(Error::Domain(_))));
    }

    #[test]
    fn constant_voltage_baseline_fig3() {
        let (m, task) = fig3();
        let cv = baseline_threshold_constant_voltage(&m, &task, 1001).unwrap();
        assert!((cv.control - 1.4).abs() < 1e-12);
        assert!((cv.heat - 0.45587).abs() < 1e-4);
        assert!(relative_error(joule_heat(&cv.trajectory).unwrap(), cv.heat) < 1e-6);
        let opt = solve_threshold_closed_form(&m, &task, 1001).unwrap();
        assert!((opt.q_opt / cv.heat - 0.8718).abs() < 1e-3);
    }

    #[test]
    fn constant_voltage_degenerate() {
        let (m, _) = fig3();
        let task = SwitchingTask::new(0.0, 5.0, 1.0, 1.0).unwrap();
        let cv = baseline_threshold_constant_voltage(&m, &task, 11).unwrap();
        assert!(cv.degenerate);
        assert_eq!(cv.control, 1.0);
        assert!((cv.heat - 5.0).abs() < 1e-12);
    }

    #[test]
    fn constant_current_fig3() {
        let (m, task) = fig3();
        let ci = baseline_threshold_constant_current(&m, &task, 1001).unwrap();
        let i = ci.baseline.control;
        assert!((1.0..1.0 + 1e-9).contains(&i));
        assert!(ci.overdrive > 0.0 && ci.overdrive < 1e-100);
        assert!(ci.baseline.trajectory.boundary_error(1.0, 100.0) < 1e-9);
        let r = ci.baseline.trajectory.resistance();
        assert!(r.windows(2).all(|w| w[1] >= w[0]));
        assert!(r.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] >= -1e-12 * w[2]));
        assert!(relative_error(joule_heat(&ci.baseline.trajectory).unwrap(), ci.baseline.heat) < 1e-3);
        let opt = solve_threshold_closed_form(&m, &task, 1001).unwrap();
        let cv = baseline_threshold_constant_voltage(&m, &task, 1001).unwrap();
        assert!(opt.q_opt < cv.heat && cv.heat < ci.baseline.heat);
    }

    #[test]
    fn residuals_of_closed_form_are_small() {
        let (m, task) = fig3();
        let opt = solve_threshold_closed_form(&m, &task, 40001).unwrap();
        let res = necessary_conditions_residual(&m.active_branch(), &task, &opt.trajectory, &opt.adjoint).unwrap();
        assert!(res.max_dynamics() < 1e-6, "{res:?}");
        assert!(res.boundary < 1e-9);
    }

    #[test]
    fn constant_voltage_fails_stationarity() {
        let (m, task) = fig3();
        let cv = baseline_threshold_constant_voltage(&m, &task, 1001).unwrap();
        let branch = m.active_branch();
        let lambda0 = 2.0 * cv.control / (m.k * task.r_i);
        let adjoint = integrate_adjoint(&branch, &cv.trajectory, lambda0);
        let res = necessary_conditions_residual(&branch, &task, &cv.trajectory, &adjoint).unwrap();
        assert!(res.stationarity > 1e-2, "{res:?}");
    }

    #[test]
    fn dead_zone_is_singular() {
        let (m, task) = fig3();
        let opt = solve_threshold_closed_form(&m, &task, 1001).unwrap();
        // the piecewise model has ∂f/∂V = 0 past the crossing
        assert!(matches!(
            necessary_conditions_residual(&m, &task, &opt.trajectory, &opt.adjoint),
            Err(Error::SingularControl { .. })
        ));
    }

    #[test]
    fn derivative_stencils_are_fourth_order_exact() {
        let t = uniform_grid(0.0, 1.0, 9);
        let f: Vec<f64> = t.iter().map(|t| t.powi(4) - 2.0 * t.powi(3) + t).collect();
        let d = derivative(&f, 0.125);
        for (t, d) in t.iter().zip(d) {
            assert!((d - (4.0 * t.powi(3) - 6.0 * t * t + 1.0)).abs() < 1e-12);
        }
    }

    fn sup_rel(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        a.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn shooting_reproduces_threshold_closed_form() {
        let (m, task) = fig3();
        let exact = solve_threshold_closed_form(&m, &task, 1001).unwrap();
        let cv = baseline_threshold_constant_voltage(&m, &task, 11).unwrap();
        let boundary = StateBoundary { t_i: 0.0, t_f: 5.0, x_i: 0.0, x_f: 1.0 };
        let options = ShootingOptions { substeps: 16, ..Default::default() };
        let guess = 2.0 * cv.control / (m.k * task.r_i);
        let sol = solve_shooting(&m.active_branch(), &boundary, guess, &options).unwrap();
        let err = sup_rel(sol.trajectory.resistance(), exact.trajectory.resistance());
        assert!(err < 1e-5, "sup error {err}");
        assert!(sup_rel(sol.trajectory.voltage(), exact.trajectory.voltage()) < 1e-5);
        assert!(!sol.trajectory.all_valid());
    }

    #[test]
    fn shooting_reproduces_ideal_closed_form() {
        let law = crate::device::ChargeMemristor::linear(1.0, 1.0).unwrap();
        let task = SwitchingTask::new(0.0, 1.0, 1.0, 100.0).unwrap();
        let exact = crate::ideal::solve_linear(&law, &task, 1001).unwrap();
        let cv = crate::ideal::baseline_constant_voltage(&law, &task, 11).unwrap();
        let boundary = StateBoundary { t_i: 0.0, t_f: 1.0, x_i: 0.0, x_f: 99.0 };
        let options = ShootingOptions { substeps: 16, ..Default::default() };
        let device = crate::device::IdealAsMemristive(law);
        let sol = solve_shooting(&device, &boundary, 2.0 * cv.control, &options).unwrap();
        let err = sup_rel(sol.trajectory.resistance(), exact.trajectory.resistance());
        assert!(err < 1e-5, "sup error {err}");
        assert!(sup_rel(sol.trajectory.current(), exact.trajectory.current()) < 1e-5);
    }

    #[test]
    fn shooting_reports_non_convergence() {
        let (m, _) = fig3();
        let boundary = StateBoundary { t_i: 0.0, t_f: 5.0, x_i: 0.0, x_f: 1.0 };
        let options = ShootingOptions { max_iterations: 1, ..Default::default() };
        match solve_shooting(&m.active_branch(), &boundary, 1.0, &options) {
            Err(Error::NoConvergence { history, .. }) => assert!(!history.is_empty()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shooting_hits_dead_zone() {
        let (m, _) = fig3();
        let boundary = StateBoundary { t_i: 0.0, t_f: 5.0, x_i: 0.0, x_f: 1.0 };
        // full piecewise model: the optimal voltage leaves the switching branch
        let result = solve_shooting(&m, &boundary, 8.0, &ShootingOptions::default());
        assert!(matches!(result, Err(Error::SingularControl { .. })), "{result:?}");
    }

    #[test]
    fn ideal_optimum_satisfies_memristive_conditions() {
        let law = crate::device::ChargeMemristor::linear(1.0, 1.0).unwrap();
        let task = SwitchingTask::new(0.0, 1.0, 1.0, 100.0).unwrap();
        let exact = crate::ideal::solve_linear(&law, &task, 100_001).unwrap();
        let device = crate::device::IdealAsMemristive(law);
        let adjoint = adjoint_from_stationarity(&device, &exact.trajectory).unwrap();
        let res = necessary_conditions_residual(&device, &task, &exact.trajectory, &adjoint).unwrap();
        assert!(res.max_dynamics() < 1e-6, "{res:?}");
        assert!(res.boundary < 1e-9);
    }

    #[test]
    fn shooting_unreachable_endpoint() {
        // R = 1 + q vanishes at q = -1, so q = -2 cannot be reached
        let device = crate::device::IdealAsMemristive(crate::device::ChargeMemristor::linear(1.0, 1.0).unwrap());
        let boundary = StateBoundary { t_i: 0.0, t_f: 1.0, x_i: 0.0, x_f: -2.0 };
        let result = solve_shooting(&device, &boundary, -1.0, &ShootingOptions::default());
        assert!(matches!(result, Err(Error::NoConvergence { .. })), "{result:?}");
    }
}
