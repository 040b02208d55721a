//! Unconstrained Joule-loss minimisation for ideal memristors.
//!
//! Along an optimum the first integral `q' sqrt(R_M(q)) = C1` holds, so the
//! dissipated power `R_M I² = C1²` is constant and the trajectory follows from
//! `Φ(q) = ∫ sqrt(R_M) dq = C1 t + C2`.

use serde::Serialize;

use crate::device::ChargeMemristor;
use crate::error::{Error, Result};
use crate::numerics::quadrature::adaptive_simpson;
use crate::numerics::root::newton_bracketed;
use crate::trajectory::{uniform_grid, SwitchingTask, Trajectory};

/// Absolute tolerance on `Φ`.
pub const PHI_TOL: f64 = 1e-10;
/// Absolute tolerance on the inverted charge.
pub const INVERSION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct IdealOptimum {
    pub trajectory: Trajectory,
    /// Joule heat of the optimum, nJ.
    pub q_opt: f64,
    /// First-integral constant `q' sqrt(R)`; its square is the constant power.
    pub c1: f64,
    /// Integration constant of `Φ(q) = C1 t + C2`. The linear solver uses the
    /// antiderivative `(2/3b)(a + b q)^{3/2}`; the general solver measures `Φ`
    /// from `q_i`.
    pub c2: f64,
    /// `R_f = R_i`: nothing to switch, the trajectory is constant.
    pub degenerate: bool,
}

/// A constant-current or constant-voltage reference protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    /// The held control value: mA for constant current, V for constant voltage.
    pub control: f64,
    pub trajectory: Trajectory,
    /// Joule heat, nJ.
    pub heat: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeEnergyTradeoff {
    /// Energy weight, 1/nJ.
    pub w1: f64,
    /// Time weight, 1/µs.
    pub w2: f64,
    /// Optimal switching duration, µs.
    pub t_opt: f64,
    /// Joule heat at the optimal duration, nJ.
    pub q_opt: f64,
    #[serde(skip)]
    pub optimum: Option<IdealOptimum>,
}

fn linear_coefficients(model: &ChargeMemristor) -> Result<(f64, f64)> {
    model
        .linear_coefficients()
        .ok_or_else(|| Error::Domain("closed-form solver requires a linear memristor".into()))
}

fn check_grid(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::Input(format!("grid needs at least 3 samples, got {n}")));
    }
    Ok(())
}

fn constant_trajectory(task: &SwitchingTask, q: f64, n: usize) -> Result<Trajectory> {
    Trajectory::valid(uniform_grid(task.t_i, task.t_f, n), vec![q; n], vec![task.r_i; n], vec![0.0; n])
}

/// `(2/3b)² (R_f^{3/2} - R_i^{3/2})² / T`.
pub fn linear_optimal_heat(b: f64, r_i: f64, r_f: f64, duration: f64) -> f64 {
    let c = 2.0 / (3.0 * b) * (r_f.powf(1.5) - r_i.powf(1.5));
    c * c / duration
}

/// `(R_f² - R_i²)(R_f - R_i) / (2 b² T)`, shared by both baselines.
pub fn linear_baseline_heat(b: f64, r_i: f64, r_f: f64, duration: f64) -> f64 {
    (r_f * r_f - r_i * r_i) * (r_f - r_i) / (2.0 * b * b * duration)
}

/// Closed-form optimum for `R_M(q) = a + b q`:
///
/// ```text
/// R(t) = [(R_i^{3/2} (t_f - t) + R_f^{3/2} (t - t_i)) / (t_f - t_i)]^{2/3}
/// q(t) = (R(t) - a) / b
/// ```
pub fn solve_linear(model: &ChargeMemristor, task: &SwitchingTask, n: usize) -> Result<IdealOptimum> {
    check_grid(n)?;
    let (a, b) = linear_coefficients(model)?;
    let (r_i, r_f, t_i, t_f) = (task.r_i, task.r_f, task.t_i, task.t_f);
    let duration = task.duration();
    if task.is_degenerate() {
        let trajectory = constant_trajectory(task, (r_i - a) / b, n)?;
        return Ok(IdealOptimum { trajectory, q_opt: 0.0, c1: 0.0, c2: 2.0 / (3.0 * b) * r_i.powf(1.5), degenerate: true });
    }
    let (ri32, rf32) = (r_i.powf(1.5), r_f.powf(1.5));
    let c1 = 2.0 / (3.0 * b) * (rf32 - ri32) / duration;
    let c2 = 2.0 / (3.0 * b) * ri32 - c1 * t_i;

    let times = uniform_grid(t_i, t_f, n);
    let mut state = Vec::with_capacity(n);
    let mut resistance = Vec::with_capacity(n);
    let mut current = Vec::with_capacity(n);
    for &t in &times {
        let inner = (ri32 * (t_f - t) + rf32 * (t - t_i)) / duration;
        let r = inner.powf(2.0 / 3.0);
        state.push((r - a) / b);
        resistance.push(r);
        current.push(c1 / inner.cbrt());
    }
    // pin the boundary samples to the task
    resistance[0] = r_i;
    resistance[n - 1] = r_f;
    state[0] = (r_i - a) / b;
    state[n - 1] = (r_f - a) / b;
    let trajectory = Trajectory::valid(times, state, resistance, current)?;
    Ok(IdealOptimum {
        trajectory,
        q_opt: linear_optimal_heat(b, r_i, r_f, duration),
        c1,
        c2,
        degenerate: false,
    })
}

/// Optimum for an arbitrary positive memristance law, boundary charges
/// obtained by inverting the law at `R_i`, `R_f`.
pub fn solve_general(model: &ChargeMemristor, task: &SwitchingTask, n: usize) -> Result<IdealOptimum> {
    let q_i = model.charge_at(task.r_i)?;
    let q_f = model.charge_at(task.r_f)?;
    solve_general_charges(model, q_i, q_f, task.t_i, task.t_f, n)
}

/// Optimum between explicit boundary charges.
///
/// `Φ` is accumulated by adaptive Simpson from node to node and inverted with
/// a bisection-safeguarded Newton iteration (`Φ' = sqrt(R) > 0`).
pub fn solve_general_charges(
    model: &ChargeMemristor,
    q_i: f64,
    q_f: f64,
    t_i: f64,
    t_f: f64,
    n: usize,
) -> Result<IdealOptimum> {
    check_grid(n)?;
    if !(t_f > t_i) {
        return Err(Error::Domain(format!("need t_f > t_i, got t_i = {t_i}, t_f = {t_f}")));
    }
    let duration = t_f - t_i;
    let times = uniform_grid(t_i, t_f, n);
    // positivity scan over the charge interval
    for j in 0..=1000 {
        let q = q_i + (q_f - q_i) * j as f64 / 1000.0;
        model.memristance(q)?;
    }
    if q_f == q_i {
        let r = model.memristance(q_i)?;
        let trajectory = Trajectory::valid(times, vec![q_i; n], vec![r; n], vec![0.0; n])?;
        return Ok(IdealOptimum { trajectory, q_opt: 0.0, c1: 0.0, c2: 0.0, degenerate: true });
    }

    let root_r = |q: f64| model.resistance(q).max(0.0).sqrt();
    let phi_f = adaptive_simpson(&root_r, q_i, q_f, PHI_TOL);
    if !phi_f.is_finite() {
        return Err(Error::NonFinite { t: t_i });
    }
    let c1 = phi_f / duration;
    let c2 = -c1 * t_i;

    let mut state = Vec::with_capacity(n);
    state.push(q_i);
    let (mut q_prev, mut phi_prev) = (q_i, 0.0);
    for &t in &times[1..n - 1] {
        let target = c1 * (t - t_i);
        let g = |q: f64| phi_prev + adaptive_simpson(&root_r, q_prev, q, PHI_TOL) - target;
        let q = newton_bracketed(g, root_r, q_prev, q_f, INVERSION_TOL)?;
        phi_prev += adaptive_simpson(&root_r, q_prev, q, PHI_TOL);
        q_prev = q;
        state.push(q);
    }
    state.push(q_f);

    let resistance: Vec<f64> = state.iter().map(|&q| model.memristance(q)).collect::<Result<_>>()?;
    let current = resistance.iter().map(|r| c1 / r.sqrt()).collect();
    let trajectory = Trajectory::valid(times, state, resistance, current)?;
    Ok(IdealOptimum { trajectory, q_opt: c1 * c1 * duration, c1, c2, degenerate: false })
}

/// Linear charge ramp, `I = (q_f - q_i) / (t_f - t_i)`.
pub fn baseline_constant_current(model: &ChargeMemristor, task: &SwitchingTask, n: usize) -> Result<Baseline> {
    check_grid(n)?;
    let (a, b) = linear_coefficients(model)?;
    let (r_i, r_f) = (task.r_i, task.r_f);
    let duration = task.duration();
    let (q_i, q_f) = ((r_i - a) / b, (r_f - a) / b);
    let i = (q_f - q_i) / duration;
    let times = uniform_grid(task.t_i, task.t_f, n);
    let state: Vec<f64> = times.iter().map(|t| q_i + i * (t - task.t_i)).collect();
    let mut resistance: Vec<f64> = state.iter().map(|q| a + b * q).collect();
    resistance[0] = r_i;
    resistance[n - 1] = r_f;
    let trajectory = Trajectory::valid(times, state, resistance, vec![i; n])?;
    Ok(Baseline {
        control: i,
        trajectory,
        heat: linear_baseline_heat(b, r_i, r_f, duration),
        degenerate: task.is_degenerate(),
    })
}

/// Constant current between explicit boundary charges for any positive law;
/// the heat `I² ∫ R_M dt` is integrated adaptively.
pub fn baseline_constant_current_charges(
    model: &ChargeMemristor,
    q_i: f64,
    q_f: f64,
    t_i: f64,
    t_f: f64,
    n: usize,
) -> Result<Baseline> {
    check_grid(n)?;
    if !(t_f > t_i) {
        return Err(Error::Domain(format!("need t_f > t_i, got t_i = {t_i}, t_f = {t_f}")));
    }
    let duration = t_f - t_i;
    let i = (q_f - q_i) / duration;
    let times = uniform_grid(t_i, t_f, n);
    let mut state: Vec<f64> = times.iter().map(|t| q_i + i * (t - t_i)).collect();
    state[n - 1] = q_f;
    let resistance: Vec<f64> = state.iter().map(|&q| model.memristance(q)).collect::<Result<_>>()?;
    let trajectory = Trajectory::valid(times, state, resistance, vec![i; n])?;
    let scale = model.resistance(q_i).abs().max(model.resistance(q_f).abs()) * duration;
    let integral = adaptive_simpson(&|t: f64| model.resistance(q_i + i * (t - t_i)), t_i, t_f, 1e-12 * scale);
    Ok(Baseline { control: i, trajectory, heat: i * i * integral, degenerate: q_f == q_i })
}

/// Constant applied voltage `V = (R_f² - R_i²) / (2 b T)`, under which
/// `R(t) = sqrt(R_i² + 2 b V (t - t_i))`.
pub fn baseline_constant_voltage(model: &ChargeMemristor, task: &SwitchingTask, n: usize) -> Result<Baseline> {
    check_grid(n)?;
    let (a, b) = linear_coefficients(model)?;
    let (r_i, r_f) = (task.r_i, task.r_f);
    let duration = task.duration();
    let v = (r_f * r_f - r_i * r_i) / (2.0 * b * duration);
    let times = uniform_grid(task.t_i, task.t_f, n);
    let mut resistance: Vec<f64> =
        times.iter().map(|t| (r_i * r_i + 2.0 * b * v * (t - task.t_i)).sqrt()).collect();
    resistance[0] = r_i;
    resistance[n - 1] = r_f;
    let state = resistance.iter().map(|r| (r - a) / b).collect();
    let current = resistance.iter().map(|r| v / r).collect();
    let trajectory = Trajectory::valid(times, state, resistance, current)?;
    Ok(Baseline { control: v, trajectory, heat: v * (r_f - r_i) / b, degenerate: task.is_degenerate() })
}

/// `Q_opt / Q_baseline` for the linear memristor as a function of `ρ = R_f / R_i`.
///
/// With `s = sqrt(ρ)` the common factor `(s - 1)²(s + 1)` cancels, leaving
/// `(8/9) (s² + s + 1)² / ((s + 1)² (s² + 1))`, which is 1 at `ρ = 1` and
/// tends to 8/9 at both ends.
pub fn optimal_ratio(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Domain(format!("resistance ratio must be positive, got {rho}")));
    }
    let s = rho.sqrt();
    let num = s * s + s + 1.0;
    Ok(8.0 / 9.0 * num * num / ((s + 1.0) * (s + 1.0) * (s * s + 1.0)))
}

/// Joint minimisation of `w1 Q + w2 (t_f - t_i)`. The optimum balances both
/// terms, `w1 Q_opt = w2 T_opt`, and its trajectory is [`solve_linear`] on
/// `[0, T_opt]`.
pub fn solve_time_energy(
    model: &ChargeMemristor,
    r_i: f64,
    r_f: f64,
    w1: f64,
    w2: f64,
    n: usize,
) -> Result<TimeEnergyTradeoff> {
    let (_, b) = linear_coefficients(model)?;
    if !(w1 > 0.0 && w2 > 0.0 && w1.is_finite() && w2.is_finite()) {
        return Err(Error::Domain(format!("weights must be positive, got w1 = {w1}, w2 = {w2}")));
    }
    if !(r_i > 0.0 && r_f > 0.0) {
        return Err(Error::Domain(format!(
            "boundary resistances must be positive, got R_i = {r_i}, R_f = {r_f}"
        )));
    }
    let swing = (2.0 / (3.0 * b) * (r_f.powf(1.5) - r_i.powf(1.5))).abs();
    let t_opt = (w1 / w2).sqrt() * swing;
    let q_opt = (w2 / w1).sqrt() * swing;
    let optimum = if t_opt > 0.0 {
        Some(solve_linear(model, &SwitchingTask::new(0.0, t_opt, r_i, r_f)?, n)?)
    } else {
        None
    };
    Ok(TimeEnergyTradeoff { w1, w2, t_opt, q_opt, optimum })
}
