//! Direct minimisation of the discretised Joule functional over node charges.
//!
//! The path is piecewise linear in time with `N` uniform nodes and fixed
//! endpoints; each segment contributes `R(midpoint) (Δq)² / Δt`. Interior nodes
//! are relaxed one at a time with an exact local Newton step (over-relaxed,
//! then projected onto the slope bounds when a compliance current is given).
//! A step is only accepted when it lowers the local cost, so the total heat
//! never increases from one sweep to the next.

use crate::device::ChargeMemristor;
use crate::error::{Error, Result};
use crate::trajectory::{uniform_grid, SwitchingTask};

const MAX_SWEEPS: usize = 400_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    pub times: Vec<f64>,
    pub nodes: Vec<f64>,
    /// Discrete heat of the final path, nJ.
    pub q_discrete: f64,
    /// Discrete heat after every sweep, starting with the initial interpolant.
    pub history: Vec<f64>,
    pub clamp: Option<f64>,
}

impl DiscretePath {
    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn sweeps(&self) -> usize {
        self.history.len() - 1
    }

    /// Segment currents `Δq / Δt`.
    pub fn slopes(&self) -> Vec<f64> {
        let dt = self.dt();
        self.nodes.windows(2).map(|w| (w[1] - w[0]) / dt).collect()
    }

    /// Fraction of segments, counted from the start, that sit on the clamp.
    pub fn clamped_prefix_fraction(&self) -> f64 {
        let Some(i_c) = self.clamp else { return 0.0 };
        let slopes = self.slopes();
        let prefix = slopes.iter().take_while(|s| s.abs() >= i_c * (1.0 - 1e-6)).count();
        prefix as f64 / slopes.len() as f64
    }
}

/// Discrete optimum for a task given as boundary resistances. The compliance
/// current, if any, is taken from the task.
pub fn minimize_discrete_path(
    model: &ChargeMemristor,
    task: &SwitchingTask,
    n: usize,
) -> Result<DiscretePath> {
    let q_i = model.charge_at(task.r_i)?;
    let q_f = model.charge_at(task.r_f)?;
    minimize_discrete_path_charges(model, q_i, q_f, task.t_i, task.t_f, n, task.compliance)
}

pub fn minimize_discrete_path_charges(
    model: &ChargeMemristor,
    q_i: f64,
    q_f: f64,
    t_i: f64,
    t_f: f64,
    n: usize,
    clamp: Option<f64>,
) -> Result<DiscretePath> {
    if n < 3 {
        return Err(Error::Input(format!("discrete path needs N >= 3 nodes, got {n}")));
    }
    if !(t_f > t_i) {
        return Err(Error::Domain(format!("need t_f > t_i, got t_i = {t_i}, t_f = {t_f}")));
    }
    let times = uniform_grid(t_i, t_f, n);
    let dt = (t_f - t_i) / (n - 1) as f64;
    let swing = q_f - q_i;
    if let Some(i_c) = clamp {
        let needed = swing.abs() / (t_f - t_i);
        if needed > i_c * (1.0 + 1e-12) {
            return Err(Error::Infeasible(format!(
                "average current {needed} mA exceeds the compliance current {i_c} mA"
            )));
        }
    }
    let mut nodes: Vec<f64> = times.iter().map(|t| q_i + swing * (t - t_i) / (t_f - t_i)).collect();
    nodes[n - 1] = q_f;

    let segment = |a: f64, b: f64| model.resistance(0.5 * (a + b)) * (b - a) * (b - a) / dt;
    let total = |nodes: &[f64]| nodes.windows(2).map(|w| segment(w[0], w[1])).sum::<f64>();
    let admissible = |lo: f64, q: f64, hi: f64| {
        model.resistance(0.5 * (lo + q)) > 0.0 && model.resistance(0.5 * (q + hi)) > 0.0
    };

    let omega = 2.0 / (1.0 + (std::f64::consts::PI / (n - 1) as f64).sin());
    let step_tol = 1e-10 * swing.abs().max(f64::MIN_POSITIVE);
    let mut history = vec![total(&nodes)];

    for _ in 0..MAX_SWEEPS {
        let mut max_move: f64 = 0.0;
        for j in 1..n - 1 {
            let (l, u, q) = (nodes[j - 1], nodes[j + 1], nodes[j]);
            let (lo, hi) = match clamp {
                Some(c) => {
                    let (lo, hi) = ((l - c * dt).max(u - c * dt), (l + c * dt).min(u + c * dt));
                    // both neighbours on the clamp: the node is pinned
                    if lo >= hi {
                        continue;
                    }
                    (lo, hi)
                }
                None => (f64::NEG_INFINITY, f64::INFINITY),
            };
            let local = |x: f64| segment(l, x) + segment(x, u);
            let (m1, m2) = (0.5 * (l + q), 0.5 * (q + u));
            let (d1, d2) = (q - l, u - q);
            let grad = (0.5 * model.slope(m1) * d1 * d1 + 2.0 * model.resistance(m1) * d1
                + 0.5 * model.slope(m2) * d2 * d2
                - 2.0 * model.resistance(m2) * d2)
                / dt;
            let hess = (0.25 * model.curvature(m1) * d1 * d1
                + 2.0 * model.slope(m1) * d1
                + 2.0 * model.resistance(m1)
                + 0.25 * model.curvature(m2) * d2 * d2
                - 2.0 * model.slope(m2) * d2
                + 2.0 * model.resistance(m2))
                / dt;
            if grad == 0.0 {
                continue;
            }
            let newton = if hess > 0.0 { -grad / hess } else { -grad.signum() * (d1.abs() + d2.abs()) * 0.25 };
            let current = local(q);
            let mut accepted = None;
            let mut step = newton;
            for attempt in 0..40 {
                let scale = if attempt == 0 { omega } else { 1.0 };
                let cand = (q + scale * step).clamp(lo, hi);
                if cand != q && admissible(l, cand, u) && local(cand) < current {
                    accepted = Some(cand);
                    break;
                }
                if attempt > 0 {
                    step *= 0.5;
                }
            }
            if let Some(cand) = accepted {
                max_move = max_move.max((cand - q).abs());
                nodes[j] = cand;
            }
        }
        history.push(total(&nodes));
        if max_move < step_tol {
            let q_discrete = *history.last().unwrap();
            return Ok(DiscretePath { times, nodes, q_discrete, history, clamp });
        }
    }
    let tail = history.len().saturating_sub(5);
    Err(Error::NoConvergence { iterations: MAX_SWEEPS, history: history.split_off(tail) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_memristor_matches_closed_form_heat() {
        let m = ChargeMemristor::linear(1.0, 1.0).unwrap();
        let task = SwitchingTask::new(0.0, 1.0, 1.0, 100.0).unwrap();
        let path = minimize_discrete_path(&m, &task, 64).unwrap();
        let rel = (path.q_discrete - 443556.0).abs() / 443556.0;
        assert!(rel < 5e-3, "relative error {rel}");
    }

    #[test]
    fn constant_memristance_keeps_interpolant() {
        let m = ChargeMemristor::from_fn(|_| 3.0);
        let path = minimize_discrete_path_charges(&m, 0.0, 2.0, 0.0, 1.0, 33, None).unwrap();
        for (t, q) in path.times.iter().zip(&path.nodes) {
            assert!((q - 2.0 * t).abs() < 1e-12);
        }
        assert!((path.q_discrete - 12.0).abs() < 1e-12);
    }

    #[test]
    fn heat_never_increases_across_sweeps() {
        let m = ChargeMemristor::linear(2.0, 0.5).unwrap();
        let path = minimize_discrete_path_charges(&m, 0.0, 30.0, 0.0, 2.0, 48, None).unwrap();
        assert!(path.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(path.nodes[0], 0.0);
        assert_eq!(*path.nodes.last().unwrap(), 30.0);
    }

    #[test]
    fn clamp_is_respected() {
        let m = ChargeMemristor::linear(1.0, 100.0).unwrap();
        let task = SwitchingTask::new(0.0, 5.0, 1.0, 100.0).unwrap().with_compliance(0.25).unwrap();
        let path = minimize_discrete_path(&m, &task, 64).unwrap();
        assert!(path.slopes().iter().all(|s| s.abs() <= 0.25 * (1.0 + 1e-12)));
        assert!(path.clamped_prefix_fraction() > 0.15);
    }

    #[test]
    fn infeasible_clamp_rejected() {
        let m = ChargeMemristor::linear(1.0, 100.0).unwrap();
        let task = SwitchingTask::new(0.0, 5.0, 1.0, 200.0).unwrap().with_compliance(0.25).unwrap();
        assert!(matches!(minimize_discrete_path(&m, &task, 16), Err(Error::Infeasible(_))));
    }

    #[test]
    fn too_few_nodes() {
        let m = ChargeMemristor::linear(1.0, 1.0).unwrap();
        assert!(minimize_discrete_path_charges(&m, 0.0, 1.0, 0.0, 1.0, 2, None).is_err());
    }
}
