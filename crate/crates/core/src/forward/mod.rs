//! Time-discrete solver for the three-compartment transport-reaction-diffusion system.
//!
//! Each step applies an implicit Scharfetter-Gummel sweep in x, then in y,
//! then an implicit per-cell reaction solve. All three sub-steps are
//! M-matrix solves, so nonnegative data stay nonnegative; with closed
//! boundaries and no decay each sub-step conserves total mass.

pub mod boundary;
pub mod sg;
mod solve;
pub mod state;
pub mod step;
pub mod tridiag;

pub use boundary::{BoundarySpec, Edge, FaceCondition};
pub use sg::{bernoulli, bernoulli_deriv, sg_face_coefficients, sg_face_sensitivity};
pub use solve::solve_forward;
pub use state::{activity, initial_condition, ConcentrationState, SolverConfig, Trajectory};
pub use step::{adi_step, Direction};
pub use tridiag::TriDiag;
