use rayon::prelude::*;

use super::ActivitySource;
use crate::error::{Error, Result};
use crate::forward::step::{line_system, reaction_matrix, solve3, transpose3, Direction};
use crate::forward::{BoundarySpec, SolverConfig, Trajectory};
use crate::grid::{Grid, ScalarField};
use crate::params::{ParameterSet, Species};

/// Adjoint fields paired with the artery, tissue and vein equations.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointState {
    pub eta: ScalarField,
    pub mu: ScalarField,
    pub gamma: ScalarField,
}

impl AdjointState {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            eta: ScalarField::zeros(grid),
            mu: ScalarField::zeros(grid),
            gamma: ScalarField::zeros(grid),
        }
    }

    pub fn species(&self, s: Species) -> &ScalarField {
        match s {
            Species::Artery => &self.eta,
            Species::Tissue => &self.mu,
            Species::Vein => &self.gamma,
        }
    }

    pub fn species_mut(&mut self, s: Species) -> &mut ScalarField {
        match s {
            Species::Artery => &mut self.eta,
            Species::Tissue => &mut self.mu,
            Species::Vein => &mut self.gamma,
        }
    }

    pub fn add_to_all(&mut self, w: &ScalarField) {
        for s in Species::ALL {
            self.species_mut(s).axpy(1.0, w);
        }
    }

    pub fn max_abs(&self) -> f64 {
        Species::ALL
            .into_iter()
            .flat_map(|s| self.species(s).values().iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Adjoints of the three sub-steps of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepAdjoint {
    pub reaction: AdjointState,
    pub sweep_y: AdjointState,
    pub sweep_x: AdjointState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointTrajectory {
    /// `steps[k]` belongs to the step from level `k` to `k + 1`.
    pub steps: Vec<StepAdjoint>,
    /// Adjoint of the initial state (gradient of the loss with respect to `C^0`).
    pub initial: AdjointState,
}

fn transpose_sweep(
    input: &AdjointState,
    p: &ParameterSet,
    bc: &BoundarySpec,
    tau: f64,
    dir: Direction,
) -> Result<AdjointState> {
    let g = *p.grid();
    let n_lines = dir.n_lines(&g);
    let solved: Vec<Result<Vec<f64>>> = (0..3 * n_lines)
        .into_par_iter()
        .map(|task| {
            let s = Species::ALL[task / n_lines];
            let line = task % n_lines;
            let sys = line_system(p, s, dir, line, bc, tau);
            let src = input.species(s).values();
            let mut x: Vec<f64> = (0..dir.line_len(&g)).map(|m| src[dir.cell(&g, line, m)]).collect();
            sys.matrix.solve_transpose_in_place(&mut x, &mut Vec::new())?;
            Ok(x)
        })
        .collect();
    let mut out = AdjointState::zeros(g);
    for (task, vals) in solved.into_iter().enumerate() {
        let vals = vals?;
        let s = Species::ALL[task / n_lines];
        let line = task % n_lines;
        let dst = out.species_mut(s).values_mut();
        for (m, v) in vals.into_iter().enumerate() {
            dst[dir.cell(&g, line, m)] = v;
        }
    }
    Ok(out)
}

fn transpose_react(input: &AdjointState, p: &ParameterSet, k0: f64, tau: f64) -> AdjointState {
    let g = *p.grid();
    let (k1, k2, k3) = (p.k1.values(), p.k2.values(), p.k3.values());
    let (a, t, v) = (input.eta.values(), input.mu.values(), input.gamma.values());
    let cells: Vec<[f64; 3]> = (0..g.len())
        .into_par_iter()
        .map(|c| {
            let m = transpose3(&reaction_matrix(k1[c], k2[c], k3[c], k0, tau));
            let x = solve3(&m, [a[c], v[c], t[c]]);
            [x[0], x[2], x[1]]
        })
        .collect();
    let mut out = AdjointState::zeros(g);
    for (c, x) in cells.into_iter().enumerate() {
        out.eta.values_mut()[c] = x[0];
        out.mu.values_mut()[c] = x[1];
        out.gamma.values_mut()[c] = x[2];
    }
    out
}

/// Transpose of one homogeneous step applied to `lambda` (the adjoint of the step output).
pub fn adjoint_step(
    lambda: &AdjointState,
    p: &ParameterSet,
    bc: &BoundarySpec,
    cfg: &SolverConfig,
) -> Result<StepAdjoint> {
    let reaction = transpose_react(lambda, p, cfg.k0, cfg.tau);
    let sweep_y = transpose_sweep(&reaction, p, bc, cfg.tau, Direction::Y)?;
    let sweep_x = transpose_sweep(&sweep_y, p, bc, cfg.tau, Direction::X)?;
    Ok(StepAdjoint {
        reaction,
        sweep_y,
        sweep_x,
    })
}

/// Backward sweep injecting `sources` at their time levels.
pub fn solve_adjoint(
    p: &ParameterSet,
    traj: &Trajectory,
    bc: &BoundarySpec,
    cfg: &SolverConfig,
    sources: &[ActivitySource],
) -> Result<AdjointTrajectory> {
    let n = traj.n_steps();
    if n != cfg.n_steps || (traj.tau - cfg.tau).abs() > 1e-15 * cfg.tau {
        return Err(Error::ShapeMismatch(format!(
            "trajectory has {} steps of {}, config has {} steps of {}",
            n, traj.tau, cfg.n_steps, cfg.tau
        )));
    }
    let g = *p.grid();
    if !traj.grid().same_shape(&g) {
        return Err(Error::ShapeMismatch("trajectory and parameters live on different grids".into()));
    }
    let mut by_level: Vec<Vec<&ScalarField>> = vec![Vec::new(); n + 1];
    for src in sources {
        if src.level > n {
            return Err(Error::ShapeMismatch(format!(
                "adjoint source at level {} beyond {} steps",
                src.level, n
            )));
        }
        src.weight.check_same_grid(&traj.states[0].ca)?;
        by_level[src.level].push(&src.weight);
    }

    let mut lambda = AdjointState::zeros(g);
    let mut steps = Vec::with_capacity(n);
    for k in (1..=n).rev() {
        for w in &by_level[k] {
            lambda.add_to_all(w);
        }
        let step = adjoint_step(&lambda, p, bc, cfg)?;
        lambda = step.sweep_x.clone();
        steps.push(step);
    }
    for w in &by_level[0] {
        lambda.add_to_all(w);
    }
    steps.reverse();
    Ok(AdjointTrajectory {
        steps,
        initial: lambda,
    })
}
