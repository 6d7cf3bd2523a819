use super::boundary::BoundarySpec;
use super::state::{ConcentrationState, SolverConfig, Trajectory};
use super::step::{adi_stages, check_inputs, clamp_negative};
use crate::error::Result;
use crate::params::ParameterSet;

/// Integrate `cfg.n_steps` steps from `c0`.
pub fn solve_forward(
    p: &ParameterSet,
    c0: &ConcentrationState,
    bc: &BoundarySpec,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    check_inputs(c0, p, bc, cfg)?;
    let mut states = Vec::with_capacity(cfg.n_steps + 1);
    states.push(c0.clone());
    let mut clamped_cells = 0;
    for k in 0..cfg.n_steps {
        let mut next = adi_stages(&states[k], p, bc, cfg)?.output;
        clamped_cells += clamp_negative(&mut next);
        states.push(next);
    }
    Ok(Trajectory {
        tau: cfg.tau,
        states,
        clamped_cells,
    })
}
