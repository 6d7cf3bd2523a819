//! Exact discrete adjoint of the split-step solver.
//!
//! A step maps `C^k` to `C^{k+1}` through `X a = C^k + s_x`,
//! `Y b = a + s_y`, `R c = b`, where `X`, `Y` are the per-line sweep
//! matrices and `R = I - tau M` the per-cell reaction matrix. Going
//! backwards, the adjoint of the step output `lambda` is pulled through
//! `R^T rho = lambda`, `Y^T sigma = rho`, `X^T chi = sigma`, and `chi`
//! becomes the adjoint of `C^k`. The derivative of the objective along a
//! parameter `theta` is then
//! `-sum_k rho^T dR/dtheta c + sigma^T dY/dtheta b + chi^T dX/dtheta a`.
//!
//! The adjoint fields are paired with the compartments as
//! `eta <-> C_A`, `mu <-> C_T`, `gamma <-> C_V`.

mod fd;
mod gradient;
mod sweep;

pub use fd::{directional_derivative, finite_difference_gradient, FdSample};
pub use gradient::{assemble_gradient, data_gradient, GradientSet};
pub use sweep::{adjoint_step, solve_adjoint, AdjointState, AdjointTrajectory, StepAdjoint};

use crate::grid::ScalarField;

/// Derivative of the loss with respect to the activity at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivitySource {
    pub level: usize,
    pub weight: ScalarField,
}
