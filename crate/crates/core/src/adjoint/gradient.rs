use std::ops::{Deref, DerefMut};

use rayon::prelude::*;

use super::sweep::{AdjointState, AdjointTrajectory};
use crate::error::{Error, Result};
use crate::forward::sg::sg_face_sensitivity;
use crate::forward::state::ConcentrationState;
use crate::forward::step::{adi_stages, face_values, gather_line, normal_velocity, Direction};
use crate::forward::{BoundarySpec, SolverConfig, Trajectory};
use crate::params::{ParamBlock, ParameterSet, Species};
use crate::regularizer::{regularizer_gradient, RegularizerConfig};

/// Gradient with respect to every parameter block, in the area-weighted
/// (L2) sense: the directional derivative along `q` is
/// `cell_area * sum(g * q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet(pub ParameterSet);

impl Deref for GradientSet {
    type Target = ParameterSet;
    fn deref(&self) -> &ParameterSet {
        &self.0
    }
}

impl DerefMut for GradientSet {
    fn deref_mut(&mut self) -> &mut ParameterSet {
        &mut self.0
    }
}

impl GradientSet {
    pub fn into_inner(self) -> ParameterSet {
        self.0
    }

    /// Directional derivative along `direction`.
    pub fn pair(&self, direction: &ParameterSet) -> f64 {
        crate::regularizer::l2_pairing(&self.0, direction)
    }

    /// Euclidean partial derivative with respect to one cell value.
    pub fn partial(&self, b: ParamBlock, cell: usize) -> f64 {
        self.0.block(b).values()[cell] * self.0.grid().cell_area()
    }
}

/// Accumulate `-adj^T (dS/dtheta) state` for one sweep direction into `grad`
/// (Euclidean, not yet divided by the cell area).
fn accumulate_sweep(
    grad: &mut ParameterSet,
    p: &ParameterSet,
    adj: &AdjointState,
    state: &ConcentrationState,
    tau: f64,
    dir: Direction,
) {
    let g = *p.grid();
    let h = dir.spacing(&g);
    let r = tau / h;
    let n_lines = dir.n_lines(&g);
    let n = dir.line_len(&g);
    for s in Species::ALL {
        let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..n_lines)
            .into_par_iter()
            .map(|line| {
                let d = gather_line(p.diffusivity(s), dir, line);
                let vel = gather_line(normal_velocity(p, s, dir), dir, line);
                let lam = gather_line(adj.species(s), dir, line);
                let c = gather_line(state.species(s), dir, line);
                let mut gd = vec![0.0; n];
                let mut gv = vec![0.0; n];
                for m in 0..n - 1 {
                    let (df, vf) = face_values(&d, &vel, m);
                    let sens = sg_face_sensitivity(df, vf, h);
                    let jump = r * (lam[m] - lam[m + 1]);
                    let fd = jump * (sens.dleft_dd * c[m] - sens.dright_dd * c[m + 1]);
                    let fv = jump * (sens.dleft_dv * c[m] - sens.dright_dv * c[m + 1]);
                    // face D is the mean of its cells; face transport velocity is minus the mean
                    gd[m] -= 0.5 * fd;
                    gd[m + 1] -= 0.5 * fd;
                    gv[m] += 0.5 * fv;
                    gv[m + 1] += 0.5 * fv;
                }
                (gd, gv)
            })
            .collect();
        let db = ParameterSet::diffusivity_block(s);
        let (vbx, vby) = ParameterSet::velocity_blocks(s);
        let vb = match dir {
            Direction::X => vbx,
            Direction::Y => vby,
        };
        for (line, (gd, gv)) in parts.into_iter().enumerate() {
            for m in 0..n {
                let cell = dir.cell(&g, line, m);
                grad.block_mut(db).values_mut()[cell] += gd[m];
                grad.block_mut(vb).values_mut()[cell] += gv[m];
            }
        }
    }
}

fn accumulate_reaction(grad: &mut ParameterSet, adj: &AdjointState, c: &ConcentrationState, tau: f64) {
    let (ra, rt, rv) = (adj.eta.values(), adj.mu.values(), adj.gamma.values());
    let (ca, ct, cv) = (c.ca.values(), c.ct.values(), c.cv.values());
    for n in 0..ca.len() {
        grad.k1.values_mut()[n] += tau * ca[n] * (rt[n] - ra[n]);
        grad.k2.values_mut()[n] += tau * ct[n] * (rv[n] - rt[n]);
        grad.k3.values_mut()[n] += tau * cv[n] * (ra[n] - rv[n]);
    }
}

/// Gradient of the data part of the objective from a forward trajectory and its adjoint.
pub fn data_gradient(
    p: &ParameterSet,
    traj: &Trajectory,
    adj: &AdjointTrajectory,
    bc: &BoundarySpec,
    cfg: &SolverConfig,
) -> Result<GradientSet> {
    if adj.steps.len() != traj.n_steps() {
        return Err(Error::ShapeMismatch(format!(
            "adjoint has {} steps, trajectory {}",
            adj.steps.len(),
            traj.n_steps()
        )));
    }
    let g = *p.grid();
    let mut grad = ParameterSet::zeros(g);
    for (k, step_adj) in adj.steps.iter().enumerate() {
        let stages = adi_stages(&traj.states[k], p, bc, cfg)?;
        accumulate_reaction(&mut grad, &step_adj.reaction, &stages.output, cfg.tau);
        accumulate_sweep(&mut grad, p, &step_adj.sweep_y, &stages.after_y, cfg.tau, Direction::Y);
        accumulate_sweep(&mut grad, p, &step_adj.sweep_x, &stages.after_x, cfg.tau, Direction::X);
    }
    let inv_area = 1.0 / g.cell_area();
    for b in ParamBlock::ALL {
        grad.block_mut(b).scale(inv_area);
    }
    Ok(GradientSet(grad))
}

/// Data gradient plus `alpha` times the regulariser gradient.
#[allow(clippy::too_many_arguments)]
pub fn assemble_gradient(
    p: &ParameterSet,
    traj: &Trajectory,
    adj: &AdjointTrajectory,
    bc: &BoundarySpec,
    cfg: &SolverConfig,
    reg: &RegularizerConfig,
    alpha: f64,
) -> Result<GradientSet> {
    let mut grad = data_gradient(p, traj, adj, bc, cfg)?;
    if alpha != 0.0 {
        let rg = regularizer_gradient(p, reg)?;
        grad.axpy(alpha, &rg);
    }
    Ok(grad)
}
