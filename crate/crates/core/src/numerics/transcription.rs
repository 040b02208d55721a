//! Direct transcription for memristive systems.
//!
//! State nodes `x_j` on a uniform grid are the unknowns. On each segment the
//! voltage is whatever makes `f(x̄, V)` equal the segment slope, and the
//! segment contributes `V² / R_M(x̄) Δt`. Interior nodes are relaxed one at a
//! time with finite-difference Newton steps, accepted only on local decrease.

use crate::device::MemristiveDevice;
use crate::error::{Error, Result};
use crate::trajectory::uniform_grid;

const MAX_SWEEPS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TranscribedPath {
    pub times: Vec<f64>,
    pub nodes: Vec<f64>,
    /// Segment voltages.
    pub voltages: Vec<f64>,
    /// Discrete heat, nJ.
    pub q_discrete: f64,
    pub history: Vec<f64>,
}

/// Voltage with `f(x, V) = rate` by Newton iteration; `None` if `∂f/∂V`
/// vanishes or the iteration fails.
fn invert_rate(device: &impl MemristiveDevice, x: f64, rate: f64) -> Option<f64> {
    let mut v = 0.0;
    for _ in 0..60 {
        let dv = device.rate_dv(x, v);
        if dv == 0.0 || !dv.is_finite() {
            return None;
        }
        let step = (device.rate(x, v) - rate) / dv;
        v -= step;
        if step.abs() <= 1e-14 * (1.0 + v.abs()) {
            return Some(v);
        }
    }
    None
}

fn segment_cost(device: &impl MemristiveDevice, a: f64, b: f64, dt: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let r = device.resistance(mid);
    if r <= 0.0 {
        return f64::INFINITY;
    }
    match invert_rate(device, mid, (b - a) / dt) {
        Some(v) => v * v / r * dt,
        None => f64::INFINITY,
    }
}

pub fn transcribe_memristive(
    device: &impl MemristiveDevice,
    t_i: f64,
    t_f: f64,
    x_i: f64,
    x_f: f64,
    n: usize,
) -> Result<TranscribedPath> {
    if n < 3 {
        return Err(Error::Input(format!("transcription needs N >= 3 nodes, got {n}")));
    }
    if t_f <= t_i || !t_f.is_finite() || !t_i.is_finite() {
        return Err(Error::Domain(format!("need t_f > t_i, got t_i = {t_i}, t_f = {t_f}")));
    }
    let times = uniform_grid(t_i, t_f, n);
    let dt = (t_f - t_i) / (n - 1) as f64;
    let swing = x_f - x_i;
    let mut nodes: Vec<f64> = times.iter().map(|t| x_i + swing * (t - t_i) / (t_f - t_i)).collect();
    nodes[n - 1] = x_f;

    let total = |nodes: &[f64]| nodes.windows(2).map(|w| segment_cost(device, w[0], w[1], dt)).sum::<f64>();
    let start = total(&nodes);
    if !start.is_finite() {
        return Err(Error::Domain("straight-line initial path is not admissible".into()));
    }
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / (n - 1) as f64).sin());
    let scale = swing.abs().max(f64::MIN_POSITIVE);
    let mut history = vec![start];

    for _ in 0..MAX_SWEEPS {
        let mut max_move: f64 = 0.0;
        for j in 1..n - 1 {
            let (l, u, q) = (nodes[j - 1], nodes[j + 1], nodes[j]);
            let local = |x: f64| segment_cost(device, l, x, dt) + segment_cost(device, x, u, dt);
            let h = 1e-4 * (u - l).abs().max(1e-6 * scale);
            let (fm, f0, fp) = (local(q - h), local(q), local(q + h));
            let grad = (fp - fm) / (2.0 * h);
            let hess = (fp - 2.0 * f0 + fm) / (h * h);
            if grad == 0.0 || !grad.is_finite() {
                continue;
            }
            let mut step = if hess > 0.0 { -grad / hess } else { -grad.signum() * 0.25 * (u - l).abs() };
            let mut accepted = None;
            for attempt in 0..40 {
                let relax = if attempt == 0 { omega } else { 1.0 };
                let cand = q + relax * step;
                if cand != q && local(cand) < f0 {
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
        if max_move < 1e-10 * scale {
            let voltages = nodes
                .windows(2)
                .map(|w| invert_rate(device, 0.5 * (w[0] + w[1]), (w[1] - w[0]) / dt).unwrap_or(f64::NAN))
                .collect();
            let q_discrete = *history.last().unwrap();
            return Ok(TranscribedPath { times, nodes, voltages, q_discrete, history });
        }
    }
    let tail = history.len().saturating_sub(5);
    Err(Error::NoConvergence { iterations: MAX_SWEEPS, history: history.split_off(tail) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{ChargeMemristor, IdealAsMemristive, ThresholdMemristiveModel};
    use crate::ideal::linear_optimal_heat;

    #[test]
    fn ideal_recast_matches_closed_form() {
        let device = IdealAsMemristive(ChargeMemristor::linear(1.0, 1.0).unwrap());
        let path = transcribe_memristive(&device, 0.0, 1.0, 0.0, 9.0, 64).unwrap();
        let exact = linear_optimal_heat(1.0, 1.0, 10.0, 1.0);
        assert!((path.q_discrete - exact).abs() / exact < 2e-3, "{} vs {exact}", path.q_discrete);
        assert!(path.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));
    }

    #[test]
    fn threshold_branch_voltages_above_threshold() {
        let m = ThresholdMemristiveModel::new(1.0, 100.0, 0.5, 1.0, -1.0).unwrap();
        let path = transcribe_memristive(&m.active_branch(), 0.0, 0.2, 0.0, 0.2, 32).unwrap();
        assert!(path.voltages.iter().all(|&v| v > 1.0));
        assert_eq!(path.nodes[0], 0.0);
        assert_eq!(path.nodes[31], 0.2);
    }

    #[test]
    fn rejects_short_grid() {
        let m = ThresholdMemristiveModel::new(1.0, 100.0, 0.5, 1.0, -1.0).unwrap();
        assert!(transcribe_memristive(&m.active_branch(), 0.0, 1.0, 0.0, 0.2, 2).is_err());
    }
}
