//! Alternating EM / forward-backward reconstruction of all parameter blocks.
//!
//! Each outer iteration takes an EM step on the activity frames of the
//! current model prediction, then fits the parameters to the EM image by a
//! few proximal-gradient iterations on the weighted least-squares surrogate
//! `dt/2 sum_f sum_c sens (G(q) - u_half)^2 / u_k + alpha R(q)`.

mod em;
mod framing;
mod gradcheck;
mod inner;
mod misfit;
mod outer;

pub use em::{em_half_step, residual_weight, surrogate_weight, EmHalfStep, EM_FLOOR, WEIGHT_FLOOR};
pub use framing::FrameSampling;
pub use gradcheck::{gradient_check, GradcheckReport, GradcheckRow};
pub use inner::{inner_update, parameter_half_step, InnerOutcome, ScreenedPoisson};
pub use misfit::{evaluate, evaluate_gradient, objective, Evaluation, ForwardModel, Misfit};
pub use outer::{reconstruct, Checkpoint, IterationRecord, ReconConfig, ReconReport};
