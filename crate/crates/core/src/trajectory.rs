//! Switching tasks, sampled trajectories and Joule-heat evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quadrature::simpson;

/// Default number of uniform samples per trajectory.
pub const DEFAULT_GRID: usize = 1001;

/// Boundary states and time window handed to every solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchingTask {
    pub t_i: f64,
    pub t_f: f64,
    pub r_i: f64,
    pub r_f: f64,
    /// Compliance current bound on `|I|`, mA.
    pub compliance: Option<f64>,
}

impl SwitchingTask {
    pub fn new(t_i: f64, t_f: f64, r_i: f64, r_f: f64) -> Result<Self> {
        if !(t_i.is_finite() && t_f.is_finite()) || t_f <= t_i {
            return Err(Error::Domain(format!("need t_f > t_i, got t_i = {t_i}, t_f = {t_f}")));
        }
        if !(r_i > 0.0 && r_f > 0.0 && r_i.is_finite() && r_f.is_finite()) {
            return Err(Error::Domain(format!(
                "boundary resistances must be positive, got R_i = {r_i}, R_f = {r_f}"
            )));
        }
        Ok(Self { t_i, t_f, r_i, r_f, compliance: None })
    }

    pub fn with_compliance(mut self, i_c: f64) -> Result<Self> {
        if !(i_c > 0.0 && i_c.is_finite()) {
            return Err(Error::Domain(format!("compliance current must be positive, got {i_c}")));
        }
        self.compliance = Some(i_c);
        Ok(self)
    }

    #[inline]
    pub fn duration(&self) -> f64 {
        self.t_f - self.t_i
    }

    pub fn is_degenerate(&self) -> bool {
        self.r_f == self.r_i
    }
}

/// `n` uniformly spaced instants covering `[t0, t1]`, endpoints exact.
pub fn uniform_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    let dt = (t1 - t0) / (n - 1) as f64;
    (0..n)
        .map(|j| if j + 1 == n { t1 } else { t0 + j as f64 * dt })
        .collect()
}

/// Uniformly sampled switching protocol.
///
/// Voltage and power are always derived from resistance and current when the
/// trajectory is built, so `V = R I` and `P = V I` hold exactly at every sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    times: Vec<f64>,
    state: Vec<f64>,
    resistance: Vec<f64>,
    voltage: Vec<f64>,
    current: Vec<f64>,
    power: Vec<f64>,
    regime_valid: Vec<bool>,
}

impl Trajectory {
    /// `state` is charge (nC) for ideal memristors or the dimensionless state
    /// for threshold devices.
    pub fn from_resistance_current(
        times: Vec<f64>,
        state: Vec<f64>,
        resistance: Vec<f64>,
        current: Vec<f64>,
        regime_valid: Vec<bool>,
    ) -> Result<Self> {
        let n = times.len();
        if n < 2 {
            return Err(Error::Input(format!("trajectory needs at least 2 samples, got {n}")));
        }
        if [state.len(), resistance.len(), current.len(), regime_valid.len()]
            .iter()
            .any(|&len| len != n)
        {
            return Err(Error::Input("trajectory channels have mismatched lengths".into()));
        }
        let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
        if !(dt > 0.0) {
            return Err(Error::Input("trajectory times must increase".into()));
        }
        let uniform = times
            .iter()
            .enumerate()
            .all(|(j, &t)| (t - times[0] - j as f64 * dt).abs() <= 1e-9 * dt.max(1.0) * (n as f64));
        if !uniform {
            return Err(Error::Input("trajectory grid is not uniform".into()));
        }
        if let Some(j) = resistance.iter().position(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::Domain(format!(
                "memristance {} kOhm is not positive at t = {}",
                resistance[j], times[j]
            )));
        }
        if let Some(j) = current.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { t: times[j] });
        }
        let voltage: Vec<f64> = resistance.iter().zip(&current).map(|(r, i)| r * i).collect();
        let power = voltage.iter().zip(&current).map(|(v, i)| v * i).collect();
        Ok(Self { times, state, resistance, voltage, current, power, regime_valid })
    }

    /// Same as [`Trajectory::from_resistance_current`] with every sample valid.
    pub fn valid(
        times: Vec<f64>,
        state: Vec<f64>,
        resistance: Vec<f64>,
        current: Vec<f64>,
    ) -> Result<Self> {
        let n = times.len();
        Self::from_resistance_current(times, state, resistance, current, vec![true; n])
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        (self.times[self.len() - 1] - self.times[0]) / (self.len() - 1) as f64
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn state(&self) -> &[f64] {
        &self.state
    }
    pub fn resistance(&self) -> &[f64] {
        &self.resistance
    }
    pub fn voltage(&self) -> &[f64] {
        &self.voltage
    }
    pub fn current(&self) -> &[f64] {
        &self.current
    }
    pub fn power(&self) -> &[f64] {
        &self.power
    }
    pub fn regime_valid(&self) -> &[bool] {
        &self.regime_valid
    }

    pub fn all_valid(&self) -> bool {
        self.regime_valid.iter().all(|&v| v)
    }

    /// Reverse time: sample `j` becomes sample `n-1-j` on the same grid,
    /// with currents negated.
    pub fn time_reversed(&self) -> Self {
        let rev = |v: &[f64]| v.iter().rev().copied().collect::<Vec<_>>();
        let current = self.current.iter().rev().map(|i| -i).collect();
        let mut regime_valid = self.regime_valid.clone();
        regime_valid.reverse();
        Self::from_resistance_current(
            self.times.clone(),
            rev(&self.state),
            rev(&self.resistance),
            current,
            regime_valid,
        )
        .expect("reversal preserves trajectory invariants")
    }

    /// Largest relative mismatch between the boundary resistances and the task.
    pub fn boundary_error(&self, r_i: f64, r_f: f64) -> f64 {
        let first = (self.resistance[0] - r_i).abs() / r_i;
        let last = (self.resistance[self.len() - 1] - r_f).abs() / r_f;
        first.max(last)
    }

    /// `stdev(P) / mean(P)`; zero for a dissipation-free trajectory.
    pub fn power_spread(&self) -> f64 {
        let n = self.len() as f64;
        let mean = self.power.iter().sum::<f64>() / n;
        if mean == 0.0 {
            return 0.0;
        }
        let var = self.power.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n;
        var.sqrt() / mean.abs()
    }
}

/// Joule heat `∫ P dt` of a sampled trajectory by composite Simpson.
pub fn joule_heat(trajectory: &Trajectory) -> Result<f64> {
    if trajectory.len() < 3 {
        return Err(Error::Input(format!(
            "joule heat needs at least 3 samples, got {}",
            trajectory.len()
        )));
    }
    simpson(trajectory.power(), trajectory.dt())
}

/// Heats of the optimal protocol and its baselines, with cross-check residuals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    #[serde(rename = "Q_opt_nJ")]
    pub q_opt: f64,
    #[serde(rename = "Q_constant_current_nJ")]
    pub q_constant_current: Option<f64>,
    #[serde(rename = "Q_constant_voltage_nJ")]
    pub q_constant_voltage: Option<f64>,
    /// `Q_opt / Q_constant_current`.
    pub ratio_constant_current: Option<f64>,
    /// `Q_opt / Q_constant_voltage`.
    pub ratio_constant_voltage: Option<f64>,
    #[serde(rename = "oracle_Q_nJ")]
    pub oracle_q: Option<f64>,
    /// Named dimensionless residuals, e.g. quadrature versus closed form.
    pub residuals: std::collections::BTreeMap<String, f64>,
}

impl EnergyReport {
    pub fn new(q_opt: f64) -> Self {
        Self { q_opt, ..Self::default() }
    }

    pub fn with_constant_current(mut self, q: f64) -> Self {
        self.q_constant_current = Some(q);
        self.ratio_constant_current = Some(heat_ratio(self.q_opt, q));
        self
    }

    pub fn with_constant_voltage(mut self, q: f64) -> Self {
        self.q_constant_voltage = Some(q);
        self.ratio_constant_voltage = Some(heat_ratio(self.q_opt, q));
        self
    }

    pub fn with_oracle(mut self, q: f64) -> Self {
        self.oracle_q = Some(q);
        self
    }

    pub fn residual(mut self, name: &str, value: f64) -> Self {
        self.residuals.insert(name.to_owned(), value);
        self
    }
}

/// `Q_opt / Q_baseline`, with the no-switching case `0/0` reported as 1.
pub fn heat_ratio(q_opt: f64, q_baseline: f64) -> f64 {
    if q_baseline == 0.0 && q_opt == 0.0 {
        1.0
    } else {
        q_opt / q_baseline
    }
}

/// `|a - b| / |b|`, or `|a|` when `b` is zero.
pub fn relative_error(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_validation() {
        assert!(SwitchingTask::new(0.0, 0.0, 1.0, 2.0).is_err());
        assert!(SwitchingTask::new(0.0, 1.0, 0.0, 2.0).is_err());
        let t = SwitchingTask::new(0.0, 1.0, 1.0, 2.0).unwrap();
        assert!(t.with_compliance(-0.1).is_err());
        assert_eq!(t.with_compliance(0.25).unwrap().compliance, Some(0.25));
    }

    #[test]
    fn grid_endpoints_exact() {
        let g = uniform_grid(0.0, 5.0, 1001);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1000], 5.0);
        assert!((g[500] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn ohm_law_closure_is_exact() {
        let t = uniform_grid(0.0, 1.0, 5);
        let r = vec![1.0, 1.3, 2.7, 3.1, 9.9];
        let i = vec![0.1, 0.7, 0.3, 1.0 / 3.0, 0.2];
        let tr = Trajectory::valid(t, vec![0.0; 5], r.clone(), i.clone()).unwrap();
        for j in 0..5 {
            assert_eq!(tr.voltage()[j], r[j] * i[j]);
            assert_eq!(tr.power()[j], tr.voltage()[j] * i[j]);
        }
    }

    #[test]
    fn zero_current_has_no_heat() {
        let n = 11;
        let tr = Trajectory::valid(uniform_grid(0.0, 1.0, n), vec![0.0; n], vec![5.0; n], vec![0.0; n])
            .unwrap();
        assert_eq!(joule_heat(&tr).unwrap(), 0.0);
    }

    #[test]
    fn too_few_samples() {
        let tr = Trajectory::valid(vec![0.0, 1.0], vec![0.0; 2], vec![1.0; 2], vec![1.0; 2]).unwrap();
        assert!(matches!(joule_heat(&tr), Err(Error::Input(_))));
    }

    #[test]
    fn rejects_nonuniform_and_nonpositive() {
        assert!(Trajectory::valid(vec![0.0, 0.1, 1.0], vec![0.0; 3], vec![1.0; 3], vec![0.0; 3]).is_err());
        assert!(matches!(
            Trajectory::valid(vec![0.0, 0.5, 1.0], vec![0.0; 3], vec![1.0, -1.0, 1.0], vec![0.0; 3]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn ratio_degenerate_is_one() {
        assert_eq!(heat_ratio(0.0, 0.0), 1.0);
        assert_eq!(heat_ratio(1.0, 2.0), 0.5);
    }
}
