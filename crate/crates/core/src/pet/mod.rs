//! Synthetic PET measurement: system matrix, Poisson counts, data term.

mod fidelity;
mod noise;
mod projector;
mod sinogram;

pub use fidelity::{kl_fidelity, Fidelity, FIDELITY_FLOOR};
pub use noise::sample_poisson;
pub use projector::{clip_to_box, ray, Projector};
pub use sinogram::{SinogramFrame, SinogramSequence};

/// Parallel-beam operator with `n_angles` angles over [0, π) and `n_bins` bins.
pub fn build_projector(grid: crate::grid::Grid, n_angles: usize, n_bins: usize) -> crate::Result<Projector> {
    Projector::new(grid, n_angles, n_bins)
}
