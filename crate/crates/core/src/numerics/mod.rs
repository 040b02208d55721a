//! Independent verification machinery and the shared numerical kernels.

pub mod discrete;
pub mod ode;
pub mod quadrature;
pub mod root;
pub mod transcription;

pub use discrete::{minimize_discrete_path, minimize_discrete_path_charges, DiscretePath};
pub use ode::{integrate_ode, integrate_ode_piecewise};
pub use quadrature::{adaptive_simpson, simpson};
pub use root::{find_root_bracketed, newton_bracketed};
pub use transcription::{transcribe_memristive, TranscribedPath};
