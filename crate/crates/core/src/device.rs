//! Device abstractions: the ideal charge-controlled memristor and the
//! first-order threshold memristive device.
//!
//! All quantities use the crate-wide unit system: kΩ, mA, V, µs, nC, nJ.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Memristance {
    Linear { a: f64, b: f64 },
    General { r: ScalarFn, inverse: Option<ScalarFn> },
}

/// Ideal memristor whose resistance is a function of the charge that has
/// flowed through it, `V = R_M(q) I`.
#[derive(Clone)]
pub struct ChargeMemristor {
    law: Memristance,
}

impl fmt::Debug for ChargeMemristor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.law {
            Memristance::Linear { a, b } => write!(f, "ChargeMemristor::Linear {{ a: {a}, b: {b} }}"),
            Memristance::General { inverse, .. } => write!(
                f,
                "ChargeMemristor::General {{ invertible: {} }}",
                inverse.is_some()
            ),
        }
    }
}

impl ChargeMemristor {
    /// `R_M(q) = a + b q`. The slope must be nonzero.
    pub fn linear(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Domain(format!("non-finite linear coefficients a = {a}, b = {b}")));
        }
        if b == 0.0 {
            return Err(Error::Domain("linear memristor needs a nonzero slope b".into()));
        }
        Ok(Self { law: Memristance::Linear { a, b } })
    }

    /// Arbitrary memristance law. Boundary resistances cannot be mapped to
    /// charges unless an inverse is attached with [`ChargeMemristor::with_inverse`].
    pub fn from_fn(r: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { law: Memristance::General { r: Arc::new(r), inverse: None } }
    }

    /// Attach `R ↦ q` for a general law that is monotone on the domain of use.
    pub fn with_inverse(self, inv: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        match self.law {
            Memristance::General { r, .. } => {
                Self { law: Memristance::General { r, inverse: Some(Arc::new(inv)) } }
            }
            linear => Self { law: linear },
        }
    }

    /// `(a, b)` for the linear specialisation.
    pub fn linear_coefficients(&self) -> Option<(f64, f64)> {
        match self.law {
            Memristance::Linear { a, b } => Some((a, b)),
            Memristance::General { .. } => None,
        }
    }

    /// Raw resistance, no positivity check.
    #[inline]
    pub fn resistance(&self, q: f64) -> f64 {
        match &self.law {
            Memristance::Linear { a, b } => a + b * q,
            Memristance::General { r, .. } => r(q),
        }
    }

    /// Resistance at charge `q`, rejecting non-positive values.
    pub fn memristance(&self, q: f64) -> Result<f64> {
        let r = self.resistance(q);
        if r > 0.0 && r.is_finite() {
            Ok(r)
        } else {
            Err(Error::Domain(format!("memristance {r} kOhm is not positive at q = {q} nC")))
        }
    }

    /// dR/dq. Central differences for general laws.
    pub fn slope(&self, q: f64) -> f64 {
        match &self.law {
            Memristance::Linear { b, .. } => *b,
            Memristance::General { r, .. } => {
                let h = 1e-5 * (1.0 + q.abs());
                (r(q + h) - r(q - h)) / (2.0 * h)
            }
        }
    }

    /// d²R/dq².
    pub fn curvature(&self, q: f64) -> f64 {
        match &self.law {
            Memristance::Linear { .. } => 0.0,
            Memristance::General { r, .. } => {
                let h = 1e-4 * (1.0 + q.abs());
                (r(q + h) - 2.0 * r(q) + r(q - h)) / (h * h)
            }
        }
    }

    /// Charge at which the device has resistance `r`.
    pub fn charge_at(&self, r: f64) -> Result<f64> {
        if r <= 0.0 || !r.is_finite() {
            return Err(Error::Domain(format!("boundary resistance {r} kOhm must be positive")));
        }
        match &self.law {
            Memristance::Linear { a, b } => Ok((r - a) / b),
            Memristance::General { inverse: Some(inv), .. } => Ok(inv(r)),
            Memristance::General { inverse: None, .. } => Err(Error::Domain(
                "boundary resistances cannot be inverted for a general memristance law; \
                 pass the boundary charges q_i, q_f explicitly"
                    .into(),
            )),
        }
    }
}

/// First-order voltage-controlled device with a dead zone between two
/// threshold voltages:
///
/// ```text
/// R_M(x) = R_on + x (R_off - R_on)
/// dx/dt  = k (V - V_on)   for V > V_on
///        = 0              for V_off <= V <= V_on
///        = k (V - V_off)  for V < V_off
/// ```
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ThresholdMemristiveModel {
    pub r_on: f64,
    pub r_off: f64,
    pub k: f64,
    pub v_on: f64,
    pub v_off: f64,
}

impl ThresholdMemristiveModel {
    pub fn new(r_on: f64, r_off: f64, k: f64, v_on: f64, v_off: f64) -> Result<Self> {
        let all_finite = [r_on, r_off, k, v_on, v_off].iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Domain("threshold model parameters must be finite".into()));
        }
        if !(0.0 < r_on && r_on < r_off) {
            return Err(Error::Domain(format!(
                "need 0 < R_on < R_off, got R_on = {r_on}, R_off = {r_off}"
            )));
        }
        if k <= 0.0 {
            return Err(Error::Domain(format!("rate constant k must be positive, got {k}")));
        }
        if !(v_off < 0.0 && 0.0 < v_on) {
            return Err(Error::Domain(format!(
                "need V_off < 0 < V_on, got V_off = {v_off}, V_on = {v_on}"
            )));
        }
        Ok(Self { r_on, r_off, k, v_on, v_off })
    }

    /// `R_off - R_on`, the constant dR/dx.
    #[inline]
    pub fn swing(&self) -> f64 {
        self.r_off - self.r_on
    }

    /// Affine resistance map. Values of `x` outside `[0, 1]` are evaluated on the
    /// extended line; callers flag them as regime violations.
    pub fn memristance(&self, x: f64) -> Result<f64> {
        let r = self.r_on + x * self.swing();
        if r > 0.0 {
            Ok(r)
        } else {
            Err(Error::Domain(format!("memristance {r} kOhm is not positive at x = {x}")))
        }
    }

    #[inline]
    pub fn state_at(&self, r: f64) -> f64 {
        (r - self.r_on) / self.swing()
    }

    /// dx/dt. Exactly zero on the closed dead zone `[V_off, V_on]`.
    #[inline]
    pub fn state_rate(&self, _x: f64, v: f64) -> f64 {
        if v > self.v_on {
            self.k * (v - self.v_on)
        } else if v < self.v_off {
            self.k * (v - self.v_off)
        } else {
            0.0
        }
    }

    pub fn in_state_range(x: f64) -> bool {
        (0.0..=1.0).contains(&x)
    }

    /// The `V > V_on` branch of the dynamics continued over all voltages.
    pub fn active_branch(&self) -> ActiveBranch {
        ActiveBranch(*self)
    }
}

/// Single-state memristive system `dx/dt = f(x, V)`, `I = V / R_M(x)`, with the
/// partial derivatives needed by the Lagrange-multiplier optimality system.
pub trait MemristiveDevice {
    fn resistance(&self, x: f64) -> f64;
    /// dR_M/dx.
    fn resistance_slope(&self, x: f64) -> f64;
    fn rate(&self, x: f64, v: f64) -> f64;
    /// ∂f/∂V.
    fn rate_dv(&self, x: f64, v: f64) -> f64;
    /// ∂f/∂x.
    fn rate_dx(&self, x: f64, v: f64) -> f64;

    /// Voltage solving the stationarity condition `Λ = 2V / (R_M(x) ∂f/∂V)`.
    ///
    /// The default runs a damped Newton iteration on
    /// `g(V) = 2V - Λ R_M(x) ∂f/∂V(x, V)`; devices with a closed-form inverse
    /// override it.
    fn control_from_adjoint(&self, x: f64, lambda: f64) -> Option<f64> {
        let r = self.resistance(x);
        let g = |v: f64| 2.0 * v - lambda * r * self.rate_dv(x, v);
        let mut v = 0.5 * lambda * r * self.rate_dv(x, 0.0);
        for _ in 0..60 {
            let h = 1e-7 * (1.0 + v.abs());
            let dg = (g(v + h) - g(v - h)) / (2.0 * h);
            if dg == 0.0 || !dg.is_finite() {
                return None;
            }
            let step = g(v) / dg;
            v -= step;
            if step.abs() <= 1e-14 * (1.0 + v.abs()) {
                return Some(v);
            }
        }
        None
    }
}

impl MemristiveDevice for ThresholdMemristiveModel {
    fn resistance(&self, x: f64) -> f64 {
        self.r_on + x * self.swing()
    }
    fn resistance_slope(&self, _x: f64) -> f64 {
        self.swing()
    }
    fn rate(&self, x: f64, v: f64) -> f64 {
        self.state_rate(x, v)
    }
    fn rate_dv(&self, _x: f64, v: f64) -> f64 {
        if v > self.v_on || v < self.v_off {
            self.k
        } else {
            0.0
        }
    }
    fn rate_dx(&self, _x: f64, _v: f64) -> f64 {
        0.0
    }
    fn control_from_adjoint(&self, x: f64, lambda: f64) -> Option<f64> {
        let v = 0.5 * lambda * self.k * self.resistance(x);
        (v > self.v_on || v < self.v_off).then_some(v)
    }
}

/// Threshold device restricted to its switching branch, `f = k (V - V_on)` for
/// every `V`. This is the dynamics under which the closed-form optimum is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveBranch(pub ThresholdMemristiveModel);

impl MemristiveDevice for ActiveBranch {
    fn resistance(&self, x: f64) -> f64 {
        self.0.r_on + x * self.0.swing()
    }
    fn resistance_slope(&self, _x: f64) -> f64 {
        self.0.swing()
    }
    fn rate(&self, _x: f64, v: f64) -> f64 {
        self.0.k * (v - self.0.v_on)
    }
    fn rate_dv(&self, _x: f64, _v: f64) -> f64 {
        self.0.k
    }
    fn rate_dx(&self, _x: f64, _v: f64) -> f64 {
        0.0
    }
    fn control_from_adjoint(&self, x: f64, lambda: f64) -> Option<f64> {
        Some(0.5 * lambda * self.0.k * self.resistance(x))
    }
}

/// An ideal memristor written as a memristive system with state `x = q` and
/// `f(x, V) = V / R_M(x)`.
#[derive(Debug, Clone)]
pub struct IdealAsMemristive(pub ChargeMemristor);

impl MemristiveDevice for IdealAsMemristive {
    fn resistance(&self, x: f64) -> f64 {
        self.0.resistance(x)
    }
    fn resistance_slope(&self, x: f64) -> f64 {
        self.0.slope(x)
    }
    fn rate(&self, x: f64, v: f64) -> f64 {
        v / self.0.resistance(x)
    }
    fn rate_dv(&self, x: f64, _v: f64) -> f64 {
        1.0 / self.0.resistance(x)
    }
    fn rate_dx(&self, x: f64, v: f64) -> f64 {
        let r = self.0.resistance(x);
        -self.0.slope(x) * v / (r * r)
    }
    fn control_from_adjoint(&self, _x: f64, lambda: f64) -> Option<f64> {
        Some(0.5 * lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3() -> ThresholdMemristiveModel {
        ThresholdMemristiveModel::new(1.0, 100.0, 0.5, 1.0, -1.0).unwrap()
    }

    #[test]
    fn linear_memristance_values() {
        let m = ChargeMemristor::linear(1.0, 1.0).unwrap();
        assert_eq!(m.memristance(0.0).unwrap(), 1.0);
        assert_eq!(m.memristance(99.0).unwrap(), 100.0);
        assert!(matches!(m.memristance(-2.0), Err(Error::Domain(msg)) if msg.contains("q = -2")));
    }

    #[test]
    fn zero_slope_rejected() {
        assert!(ChargeMemristor::linear(1.0, 0.0).is_err());
    }

    #[test]
    fn threshold_memristance_midpoint() {
        assert_eq!(fig3().memristance(0.5).unwrap(), 50.5);
    }

    #[test]
    fn state_rate_branches() {
        let m = fig3();
        assert_eq!(m.state_rate(0.2, 3.0), 1.0);
        assert_eq!(m.state_rate(0.2, 1.0), 0.0);
        assert_eq!(m.state_rate(0.2, -1.0), 0.0);
        assert_eq!(m.state_rate(0.2, -2.0), -0.5);
        // continuity at both thresholds
        assert!(m.state_rate(0.2, 1.0 + 1e-12).abs() < 1e-12);
        assert!(m.state_rate(0.2, -1.0 - 1e-12).abs() < 1e-12);
    }

    #[test]
    fn invalid_threshold_parameters() {
        assert!(ThresholdMemristiveModel::new(-1.0, 100.0, 0.5, 1.0, -1.0).is_err());
        assert!(ThresholdMemristiveModel::new(100.0, 1.0, 0.5, 1.0, -1.0).is_err());
        assert!(ThresholdMemristiveModel::new(1.0, 100.0, 0.0, 1.0, -1.0).is_err());
        assert!(ThresholdMemristiveModel::new(1.0, 100.0, 0.5, -1.0, 1.0).is_err());
    }

    #[test]
    fn general_law_needs_inverse_for_boundaries() {
        let m = ChargeMemristor::from_fn(|q| (1.0 + q) * (1.0 + q));
        assert!(matches!(m.charge_at(4.0), Err(Error::Domain(msg)) if msg.contains("pass the boundary charges")));
        let m = m.with_inverse(|r: f64| r.sqrt() - 1.0);
        assert!((m.charge_at(9.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((m.slope(1.0) - 4.0).abs() < 1e-8);
        assert!((m.curvature(1.0) - 2.0).abs() < 1e-5);
    }

    #[test]
    fn default_adjoint_inversion_matches_closed_form() {
        struct Generic(ThresholdMemristiveModel);
        impl MemristiveDevice for Generic {
            fn resistance(&self, x: f64) -> f64 {
                self.0.resistance(x)
            }
            fn resistance_slope(&self, x: f64) -> f64 {
                self.0.resistance_slope(x)
            }
            fn rate(&self, _x: f64, v: f64) -> f64 {
                self.0.k * (v - self.0.v_on)
            }
            fn rate_dv(&self, _x: f64, _v: f64) -> f64 {
                self.0.k
            }
            fn rate_dx(&self, _x: f64, _v: f64) -> f64 {
                0.0
            }
        }
        let m = fig3();
        let v = Generic(m).control_from_adjoint(0.3, 4.0).unwrap();
        assert!((v - m.active_branch().control_from_adjoint(0.3, 4.0).unwrap()).abs() < 1e-12);
        let ideal = IdealAsMemristive(ChargeMemristor::linear(1.0, 2.0).unwrap());
        assert_eq!(ideal.control_from_adjoint(3.0, 5.0), Some(2.5));
    }

    #[test]
    fn piecewise_threshold_is_singular_in_dead_zone() {
        let m = fig3();
        assert_eq!(m.control_from_adjoint(0.0, 0.1), None);
        assert_eq!(m.rate_dv(0.0, 0.5), 0.0);
    }
}
