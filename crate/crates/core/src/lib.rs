//! Energy-optimal driving protocols for memristive switching.
//!
//! The crate computes Joule-loss minimising trajectories for
//!
//! * ideal charge-controlled memristors, in closed form for the linear law
//!   `R_M(q) = a + b q` and by quadrature plus monotone inversion for any
//!   positive law ([`ideal`]);
//! * first-order threshold devices, from the Lagrange-multiplier optimality
//!   system, in closed form and by shooting ([`memristive`]);
//! * ideal linear memristors under a compliance current, from Pontryagin's
//!   minimum principle ([`constrained`]);
//!
//! together with constant-current and constant-voltage baselines and an
//! independent set of numerical oracles ([`numerics`]).
//!
//! Units are fixed crate-wide: kΩ, mA, V, µs, nC, mW and nJ, so that
//! `V = kΩ·mA` and `nJ = mW·µs` hold without conversion factors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constrained;
pub mod device;
pub mod error;
pub mod ideal;
pub mod memristive;
pub mod numerics;
pub mod trajectory;

pub use device::{ActiveBranch, ChargeMemristor, IdealAsMemristive, MemristiveDevice, ThresholdMemristiveModel};
pub use error::{Error, Result};
pub use trajectory::{joule_heat, EnergyReport, SwitchingTask, Trajectory, DEFAULT_GRID};
