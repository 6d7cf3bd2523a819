//! One time step of the split scheme: implicit x-sweep, implicit y-sweep,
//! implicit per-cell reaction solve.

use rayon::prelude::*;

use super::boundary::{BoundarySpec, FaceCondition};
use super::sg::sg_face_coefficients;
use super::state::{ConcentrationState, SolverConfig};
use super::tridiag::TriDiag;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::params::{ParameterSet, Species};

/// Output cells below this value are clamped to zero and counted.
pub const NEGATIVE_TOLERANCE: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    X,
    Y,
}

impl Direction {
    pub fn n_lines(self, g: &Grid) -> usize {
        match self {
            Direction::X => g.ny,
            Direction::Y => g.nx,
        }
    }

    pub fn line_len(self, g: &Grid) -> usize {
        match self {
            Direction::X => g.nx,
            Direction::Y => g.ny,
        }
    }

    pub fn spacing(self, g: &Grid) -> f64 {
        match self {
            Direction::X => g.hx,
            Direction::Y => g.hy,
        }
    }

    /// Flat index of position `m` on line `line`.
    #[inline]
    pub fn cell(self, g: &Grid, line: usize, m: usize) -> usize {
        match self {
            Direction::X => g.idx(m, line),
            Direction::Y => g.idx(line, m),
        }
    }
}

/// Face-normal velocity component of a species for a sweep direction.
pub fn normal_velocity(p: &ParameterSet, s: Species, dir: Direction) -> &ScalarField {
    let v = p.velocity(s);
    match dir {
        Direction::X => &v.x,
        Direction::Y => &v.y,
    }
}

/// Boundary faces at the low and high end of a line.
pub fn line_faces(bc: &BoundarySpec, dir: Direction, line: usize) -> (FaceCondition, FaceCondition) {
    match dir {
        Direction::X => (bc.left[line], bc.right[line]),
        Direction::Y => (bc.bottom[line], bc.top[line]),
    }
}

/// Matrix `I + tau * A_h` of one line plus the inflow contributions to the
/// right-hand side at both ends.
#[derive(Debug, Clone)]
pub struct LineSystem {
    pub matrix: TriDiag,
    pub rhs_lo: f64,
    pub rhs_hi: f64,
}

/// Face diffusivity and transport velocity between positions `m` and `m+1`.
///
/// The model transports with `-V` (the divergence term enters the rate
/// with a plus sign), so the face transport velocity is minus the mean.
#[inline]
pub fn face_values(d: &[f64], vel: &[f64], m: usize) -> (f64, f64) {
    (0.5 * (d[m] + d[m + 1]), -0.5 * (vel[m] + vel[m + 1]))
}

pub fn gather_line(field: &ScalarField, dir: Direction, line: usize) -> Vec<f64> {
    let g = field.grid();
    let vals = field.values();
    (0..dir.line_len(g)).map(|m| vals[dir.cell(g, line, m)]).collect()
}

pub fn assemble_line(
    d: &[f64],
    vel: &[f64],
    h: f64,
    tau: f64,
    faces: (FaceCondition, FaceCondition),
    s: Species,
) -> LineSystem {
    let n = d.len();
    let r = tau / h;
    let mut t = TriDiag::identity(n);
    for m in 0..n - 1 {
        let (df, vf) = face_values(d, vel, m);
        let (cl, cr) = sg_face_coefficients(df, vf, h);
        t.diag[m] += r * cl;
        t.upper[m] -= r * cr;
        t.diag[m + 1] += r * cr;
        t.lower[m + 1] -= r * cl;
    }
    let mut rhs = [0.0; 2];
    for (end, face) in [(0, faces.0), (n - 1, faces.1)] {
        let slot = if end == 0 { 0 } else { 1 };
        match face {
            FaceCondition::Outflow { v_out } => t.diag[end] += r * v_out[s.index()],
            FaceCondition::Inflow { j_in } => rhs[slot] += r * j_in[s.index()],
        }
    }
    LineSystem {
        matrix: t,
        rhs_lo: rhs[0],
        rhs_hi: rhs[1],
    }
}

pub fn line_system(
    p: &ParameterSet,
    s: Species,
    dir: Direction,
    line: usize,
    bc: &BoundarySpec,
    tau: f64,
) -> LineSystem {
    let g = p.grid();
    let d = gather_line(p.diffusivity(s), dir, line);
    let vel = gather_line(normal_velocity(p, s, dir), dir, line);
    assemble_line(&d, &vel, dir.spacing(g), tau, line_faces(bc, dir, line), s)
}

/// Implicit transport sweep of all three species along `dir`.
pub fn sweep(
    input: &ConcentrationState,
    p: &ParameterSet,
    bc: &BoundarySpec,
    tau: f64,
    dir: Direction,
) -> Result<ConcentrationState> {
    let g = *input.grid();
    let n_lines = dir.n_lines(&g);
    let solved: Vec<Result<Vec<f64>>> = (0..3 * n_lines)
        .into_par_iter()
        .map(|task| {
            let s = Species::ALL[task / n_lines];
            let line = task % n_lines;
            let sys = line_system(p, s, dir, line, bc, tau);
            let mut x = gather_line(input.species(s), dir, line);
            x[0] += sys.rhs_lo;
            let last = x.len() - 1;
            x[last] += sys.rhs_hi;
            sys.matrix.solve_in_place(&mut x, &mut Vec::new())?;
            Ok(x)
        })
        .collect();
    let mut out = ConcentrationState {
        time: input.time,
        ..ConcentrationState::zeros(g)
    };
    for (task, line_vals) in solved.into_iter().enumerate() {
        let line_vals = line_vals?;
        let s = Species::ALL[task / n_lines];
        let line = task % n_lines;
        let dst = out.species_mut(s).values_mut();
        for (m, v) in line_vals.into_iter().enumerate() {
            dst[dir.cell(&g, line, m)] = v;
        }
    }
    Ok(out)
}

/// Per-cell matrix `I - tau M` in (A, V, T) ordering.
#[inline]
pub fn reaction_matrix(k1: f64, k2: f64, k3: f64, k0: f64, tau: f64) -> [[f64; 3]; 3] {
    [
        [1.0 + tau * (k0 + k1), -tau * k3, 0.0],
        [0.0, 1.0 + tau * (k0 + k3), -tau * k2],
        [-tau * k1, 0.0, 1.0 + tau * (k0 + k2)],
    ]
}

/// Gaussian elimination without pivoting; the matrix is a column
/// diagonally dominant M-matrix for nonnegative rates.
pub fn solve3(m: &[[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let mut a = *m;
    let mut x = b;
    for k in 0..3 {
        for i in k + 1..3 {
            let l = a[i][k] / a[k][k];
            if l != 0.0 {
                for j in k..3 {
                    a[i][j] -= l * a[k][j];
                }
                x[i] -= l * x[k];
            }
        }
    }
    for i in (0..3).rev() {
        let mut s = x[i];
        for j in i + 1..3 {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    x
}

pub fn transpose3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

/// Implicit reaction sub-step, exact per cell.
pub fn react(input: &ConcentrationState, p: &ParameterSet, k0: f64, tau: f64) -> ConcentrationState {
    let g = *input.grid();
    let n = g.len();
    let (k1, k2, k3) = (p.k1.values(), p.k2.values(), p.k3.values());
    let (a, t, v) = (input.ca.values(), input.ct.values(), input.cv.values());
    let cells: Vec<[f64; 3]> = (0..n)
        .into_par_iter()
        .map(|c| {
            let m = reaction_matrix(k1[c], k2[c], k3[c], k0, tau);
            // (A, V, T) ordering in, (A, T, V) out
            let x = solve3(&m, [a[c], v[c], t[c]]);
            [x[0], x[2], x[1]]
        })
        .collect();
    let mut out = ConcentrationState::zeros(g);
    for (c, x) in cells.into_iter().enumerate() {
        out.ca.values_mut()[c] = x[0];
        out.ct.values_mut()[c] = x[1];
        out.cv.values_mut()[c] = x[2];
    }
    out
}

/// Intermediate levels of one step, kept for the adjoint.
#[derive(Debug, Clone)]
pub struct StepStages {
    pub after_x: ConcentrationState,
    pub after_y: ConcentrationState,
    pub output: ConcentrationState,
}

/// The three sub-steps without any clamping.
pub fn adi_stages(
    state: &ConcentrationState,
    p: &ParameterSet,
    bc: &BoundarySpec,
    cfg: &SolverConfig,
) -> Result<StepStages> {
    let after_x = sweep(state, p, bc, cfg.tau, Direction::X)?;
    let after_y = sweep(&after_x, p, bc, cfg.tau, Direction::Y)?;
    let mut output = react(&after_y, p, cfg.k0, cfg.tau);
    output.time = state.time + cfg.tau;
    Ok(StepStages {
        after_x,
        after_y,
        output,
    })
}

/// Clamp cells below [`NEGATIVE_TOLERANCE`] to zero, returning how many.
pub fn clamp_negative(state: &mut ConcentrationState) -> usize {
    let mut count = 0;
    for s in Species::ALL {
        for v in state.species_mut(s).values_mut() {
            if *v < NEGATIVE_TOLERANCE {
                *v = 0.0;
                count += 1;
            }
        }
    }
    count
}

pub(crate) fn check_inputs(
    state: &ConcentrationState,
    p: &ParameterSet,
    bc: &BoundarySpec,
    cfg: &SolverConfig,
) -> Result<()> {
    cfg.validate()?;
    p.check_consistent()?;
    let g = p.grid();
    state.check_grid(g)?;
    bc.validate(g)?;
    for s in Species::ALL {
        if p.diffusivity(s).values().iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidConfig(format!(
                "diffusivity of {} must be positive everywhere",
                s.tag()
            )));
        }
    }
    for k in [&p.k1, &p.k2, &p.k3] {
        if k.values().iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidConfig("exchange rates must be >= 0".into()));
        }
    }
    Ok(())
}

/// Advance `state` by one time step `cfg.tau`.
pub fn adi_step(
    state: &ConcentrationState,
    p: &ParameterSet,
    bc: &BoundarySpec,
    cfg: &SolverConfig,
) -> Result<ConcentrationState> {
    check_inputs(state, p, bc, cfg)?;
    let mut out = adi_stages(state, p, bc, cfg)?.output;
    clamp_negative(&mut out);
    Ok(out)
}
