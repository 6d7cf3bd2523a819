//! Transport-reaction-diffusion tracer kinetics with direct parameter
//! reconstruction from dynamic PET data.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`], [`params`], [`regularizer`]: fields on a uniform 2-D grid, the
//!   twelve parameter blocks, their box constraints and the quadratic
//!   regulariser.
//! * [`forward`]: the split-step solver for the artery / tissue / vein system.
//! * [`pet`]: a parallel-beam system matrix, Poisson sampling and the
//!   Kullback-Leibler data term.
//! * [`adjoint`]: exact discrete adjoint and gradient assembly.
//! * [`recon`]: the EM / forward-backward reconstruction loop.
//! * [`phantom`], [`io`]: parameter presets and file formats.

pub mod adjoint;
pub mod error;
pub mod forward;
pub mod grid;
pub mod io;
pub mod params;
pub mod pet;
pub mod phantom;
pub mod recon;
pub mod regularizer;

pub use error::{Error, Result};
pub use forward::{
    activity, adi_step, initial_condition, solve_forward, BoundarySpec, ConcentrationState, Edge,
    FaceCondition, SolverConfig, Trajectory,
};
pub use grid::{Grid, ScalarField, VectorField};
pub use params::{project_parameters, BlockValues, Bounds, ParamBlock, ParameterSet, Species};
pub use regularizer::{regularizer_gradient, regularizer_value, RegularizerConfig};
pub use pet::{build_projector, Projector, SinogramFrame, SinogramSequence};
pub use recon::{reconstruct, ForwardModel, ReconConfig, ReconReport};
