//! Ideal-memristor switching under a compliance current `|I| <= I_c`.
//!
//! Minimising `R(q) u² - p u` over the admissible set gives
//! `u = p / (2R)` inside the bound and `u = ±I_c` on it. For the linear
//! memristor with increasing resistance the optimum starts on the clamp and
//! leaves it at `t_c`, after which it follows the constant-power arc.

use serde::Serialize;

use crate::device::ChargeMemristor;
use crate::error::{Error, Result};
use crate::ideal::{linear_optimal_heat, solve_linear};
use crate::numerics::root::find_root_bracketed;
use crate::trajectory::{joule_heat, uniform_grid, SwitchingTask, Trajectory};

/// Relative width of the band around `(q_f - q_i)/T = I_c` treated as the
/// fully clamped case.
pub const FULL_CLAMP_TOL: f64 = 1e-9;
const CUBIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintMode {
    Unconstrained,
    ClampedThenInterior,
    FullyClamped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedSolution {
    /// Instant the current leaves the clamp, µs.
    pub t_c: f64,
    /// Memristance at `t_c`, kΩ.
    pub r_c: f64,
    /// Clamped arc on `[t_i, t_c]`.
    pub phase1: Option<Trajectory>,
    /// Constant-power arc on `[t_c, t_f]`.
    pub phase2: Option<Trajectory>,
    /// Joule heat, nJ.
    pub q_total: f64,
    pub mode: ConstraintMode,
    pub i_c: f64,
    pub a: f64,
    pub b: f64,
    pub task: SwitchingTask,
}

impl ConstrainedSolution {
    fn phase2_coefficient(&self) -> f64 {
        let span = self.task.t_f - self.t_c;
        2.0 / (3.0 * self.b) * (self.task.r_f.powf(1.5) - self.r_c.powf(1.5)) / span
    }

    fn phase2_inner(&self, t: f64) -> f64 {
        let span = self.task.t_f - self.t_c;
        (self.r_c.powf(1.5) * (self.task.t_f - t) + self.task.r_f.powf(1.5) * (t - self.t_c)) / span
    }

    pub fn resistance_at(&self, t: f64) -> f64 {
        if t <= self.t_c {
            self.task.r_i + self.b * self.i_c * (t - self.task.t_i)
        } else {
            self.phase2_inner(t).powf(2.0 / 3.0)
        }
    }

    pub fn current_at(&self, t: f64) -> f64 {
        if t <= self.t_c && self.mode != ConstraintMode::Unconstrained {
            self.i_c
        } else {
            self.phase2_coefficient() / self.phase2_inner(t).cbrt()
        }
    }

    /// `|I(t_c⁻) - I(t_c⁺)|`; zero when there is no switch inside the window.
    pub fn current_jump(&self) -> f64 {
        match self.mode {
            ConstraintMode::ClampedThenInterior => {
                (self.i_c - self.phase2_coefficient() / self.r_c.sqrt()).abs()
            }
            _ => 0.0,
        }
    }

    /// Whole solution resampled on a uniform `n`-point grid over `[t_i, t_f]`.
    pub fn sample(&self, n: usize) -> Result<Trajectory> {
        let times = uniform_grid(self.task.t_i, self.task.t_f, n);
        let resistance: Vec<f64> = times.iter().map(|&t| self.resistance_at(t)).collect();
        let current = times.iter().map(|&t| self.current_at(t)).collect();
        let state = resistance.iter().map(|r| (r - self.a) / self.b).collect();
        Trajectory::valid(times, state, resistance, current)
    }

    /// Heat by quadrature over the two stored phases.
    pub fn quadrature_heat(&self) -> Result<f64> {
        let mut q = 0.0;
        for phase in [&self.phase1, &self.phase2].into_iter().flatten() {
            q += joule_heat(phase)?;
        }
        Ok(q)
    }
}

/// Minimiser of `R η² - p η` over `|η| <= I_c`; expects `R > 0`, `I_c > 0`.
pub fn pontryagin_control(p: f64, r: f64, i_c: f64) -> f64 {
    let interior = p / (2.0 * r);
    if interior.abs() < i_c {
        interior
    } else {
        i_c.copysign(p)
    }
}

/// Initial current of the unconstrained linear optimum; the clamp is active
/// when it exceeds `I_c`.
pub fn activation_current(b: f64, r_i: f64, r_f: f64, duration: f64) -> f64 {
    2.0 * (r_f.powf(1.5) - r_i.powf(1.5)) / (3.0 * b * duration * r_i.sqrt())
}

fn cubic(x: f64, r_i: f64, r_f: f64, b: f64, i_c: f64, duration: f64) -> f64 {
    x * x * x - 3.0 * (r_i + b * i_c * duration) * x + 2.0 * r_f.powf(1.5)
}

/// Larger positive root of the switching cubic, as a memristance; it always
/// exceeds `R_f` for a feasible task.
pub fn secondary_cubic_root(r_i: f64, r_f: f64, b: f64, i_c: f64, duration: f64) -> Result<f64> {
    let p = r_i + b * i_c * duration;
    let x = find_root_bracketed(
        |x| cubic(x, r_i, r_f, b, i_c, duration),
        r_f.sqrt().max(p.sqrt()),
        2.0 * p.sqrt(),
        CUBIC_TOL * p.sqrt(),
    )?;
    Ok(x * x)
}

fn linear_phase(a: f64, b: f64, r_i: f64, i_c: f64, t_i: f64, t_c: f64, n: usize) -> Result<Trajectory> {
    let times = uniform_grid(t_i, t_c, n);
    let resistance: Vec<f64> = times.iter().map(|t| r_i + b * i_c * (t - t_i)).collect();
    let state = resistance.iter().map(|r| (r - a) / b).collect();
    Trajectory::valid(times, state, resistance, vec![i_c; n])
}

/// Closed-form constrained optimum for `R = a + b q` with `b > 0`, `R_f >= R_i`
/// and the compliance current carried by the task.
pub fn solve_linear_with_compliance(
    model: &ChargeMemristor,
    task: &SwitchingTask,
    n: usize,
) -> Result<ConstrainedSolution> {
    if n < 3 {
        return Err(Error::Input(format!("grid needs at least 3 samples, got {n}")));
    }
    let Some((a, b)) = model.linear_coefficients() else {
        return Err(Error::Domain("compliance solver needs a linear memristance law".into()));
    };
    if b <= 0.0 {
        return Err(Error::Domain(format!("compliance solver needs b > 0, got b = {b}")));
    }
    let Some(i_c) = task.compliance else {
        return Err(Error::Input("task has no compliance current I_c".into()));
    };
    let (r_i, r_f, t_i, t_f) = (task.r_i, task.r_f, task.t_i, task.t_f);
    if r_f < r_i {
        return Err(Error::UnsupportedDirection(format!(
            "compliance solver treats increasing memristance only, got R_i = {r_i}, R_f = {r_f}"
        )));
    }
    let duration = task.duration();
    let reach = r_i + b * i_c * duration;
    if r_f > reach * (1.0 + FULL_CLAMP_TOL) {
        return Err(Error::Infeasible(format!(
            "R_f < R_i + b I_c (t_f - t_i) violated: {r_f} >= {reach}"
        )));
    }
    let mut solution = ConstrainedSolution {
        t_c: t_i,
        r_c: r_i,
        phase1: None,
        phase2: None,
        q_total: 0.0,
        mode: ConstraintMode::Unconstrained,
        i_c,
        a,
        b,
        task: *task,
    };

    if (r_f - r_i - b * i_c * duration).abs() <= FULL_CLAMP_TOL * (r_f - r_i) {
        solution.t_c = t_f;
        solution.r_c = r_f;
        solution.mode = ConstraintMode::FullyClamped;
        solution.phase1 = Some(linear_phase(a, b, r_i, i_c, t_i, t_f, n)?);
        solution.q_total = constrained_energy(&solution);
        return Ok(solution);
    }

    if activation_current(b, r_i, r_f, duration) <= i_c {
        let free = solve_linear(model, task, n)?;
        solution.phase2 = Some(free.trajectory);
        solution.q_total = free.q_opt;
        return Ok(solution);
    }

    let x = find_root_bracketed(
        |x| cubic(x, r_i, r_f, b, i_c, duration),
        0.0,
        r_f.sqrt(),
        CUBIC_TOL * r_f.sqrt(),
    )?;
    let r_c = x * x;
    let t_c = t_i + (r_c - r_i) / (b * i_c);
    let fraction = (t_c - t_i) / duration;
    let n1 = ((fraction * (n - 1) as f64).round() as usize + 1).max(3);
    let n2 = (((1.0 - fraction) * (n - 1) as f64).round() as usize + 1).max(3);
    solution.t_c = t_c;
    solution.r_c = r_c;
    solution.mode = ConstraintMode::ClampedThenInterior;
    solution.phase1 = Some(linear_phase(a, b, r_i, i_c, t_i, t_c, n1)?);
    let arc = SwitchingTask::new(t_c, t_f, r_c, r_f)?;
    solution.phase2 = Some(solve_linear(model, &arc, n2)?.trajectory);
    solution.q_total = constrained_energy(&solution);
    Ok(solution)
}

/// `Q = I_c² (R_i + R_c)/2 (t_c - t_i) + (4/9b²)(R_f^{3/2} - R_c^{3/2})² / (t_f - t_c)`.
pub fn constrained_energy(solution: &ConstrainedSolution) -> f64 {
    let task = &solution.task;
    match solution.mode {
        ConstraintMode::Unconstrained => linear_optimal_heat(solution.b, task.r_i, task.r_f, task.duration()),
        ConstraintMode::FullyClamped => {
            solution.i_c * solution.i_c * 0.5 * (task.r_i + task.r_f) * task.duration()
        }
        ConstraintMode::ClampedThenInterior => {
            let clamped = solution.i_c * solution.i_c * 0.5 * (task.r_i + solution.r_c) * (solution.t_c - task.t_i);
            clamped + linear_optimal_heat(solution.b, solution.r_c, task.r_f, task.t_f - solution.t_c)
        }
    }
}
