use super::framing::FrameSampling;
use crate::adjoint::{assemble_gradient, solve_adjoint, ActivitySource, GradientSet};
use crate::error::{Error, Result};
use crate::forward::{solve_forward, BoundarySpec, ConcentrationState, SolverConfig, Trajectory};
use crate::grid::ScalarField;
use crate::params::ParameterSet;
use crate::pet::{kl_fidelity, Projector, SinogramFrame, SinogramSequence, FIDELITY_FLOOR};
use crate::regularizer::{regularizer_value, RegularizerConfig};

/// Everything needed to map parameters to activity frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardModel {
    pub c0: ConcentrationState,
    pub bc: BoundarySpec,
    pub solver: SolverConfig,
    pub sampling: FrameSampling,
}

impl ForwardModel {
    pub fn new(c0: ConcentrationState, bc: BoundarySpec, solver: SolverConfig, n_frames: usize) -> Result<Self> {
        solver.validate()?;
        bc.validate(c0.grid())?;
        let sampling = FrameSampling::new(solver.n_steps, n_frames)?;
        Ok(Self {
            c0,
            bc,
            solver,
            sampling,
        })
    }

    pub fn simulate(&self, p: &ParameterSet) -> Result<Trajectory> {
        solve_forward(p, &self.c0, &self.bc, &self.solver)
    }

    pub fn frame_duration(&self) -> f64 {
        self.sampling.frame_duration(self.solver.tau)
    }

    /// Expected sinograms of the frames of `traj`.
    pub fn expected_data(&self, traj: &Trajectory, k: &Projector) -> Result<SinogramSequence> {
        let frames = self
            .sampling
            .sample(traj)?
            .iter()
            .enumerate()
            .map(|(f, u)| {
                let mut s = k.project(u)?;
                s.frame = f;
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        SinogramSequence::new(frames, self.frame_duration())
    }
}

/// Data term as a function of the frame activities.
#[derive(Debug, Clone, Copy)]
pub enum Misfit<'a> {
    /// Poisson data term of the projected frames against counts.
    Kl {
        projector: &'a Projector,
        data: &'a SinogramSequence,
    },
    /// `dt/2 sum_f sum_c weight (u - target)^2`.
    Weighted {
        target: &'a [ScalarField],
        weight: &'a [ScalarField],
    },
}

impl Misfit<'_> {
    fn check(&self, n_frames: usize) -> Result<()> {
        let n = match self {
            Misfit::Kl { data, .. } => data.len(),
            Misfit::Weighted { target, weight } => {
                if target.len() != weight.len() {
                    return Err(Error::ShapeMismatch("target and weight frame counts differ".into()));
                }
                target.len()
            }
        };
        if n != n_frames {
            return Err(Error::ShapeMismatch(format!("misfit has {n} frames, model produces {n_frames}")));
        }
        Ok(())
    }

    /// Value and number of floored bins.
    fn value(&self, frames: &[ScalarField], dt: f64) -> Result<(f64, usize)> {
        match self {
            Misfit::Kl { projector, data } => {
                let expected = frames
                    .iter()
                    .enumerate()
                    .map(|(f, u)| {
                        let mut s = projector.project(u)?;
                        s.frame = f;
                        Ok(s)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let expected = SinogramSequence::new(expected, dt)?;
                let fid = kl_fidelity(&expected, data)?;
                Ok((fid.value, fid.floored_bins))
            }
            Misfit::Weighted { target, weight } => {
                let mut v = 0.0;
                for ((u, t), w) in frames.iter().zip(target.iter()).zip(weight.iter()) {
                    u.check_same_grid(t)?;
                    u.check_same_grid(w)?;
                    for ((&a, &b), &c) in u.values().iter().zip(t.values()).zip(w.values()) {
                        v += 0.5 * c * (a - b) * (a - b);
                    }
                }
                Ok((dt * v, 0))
            }
        }
    }

    /// Derivative of the value with respect to each frame's activity.
    fn frame_gradients(&self, frames: &[ScalarField], dt: f64) -> Result<Vec<ScalarField>> {
        match self {
            Misfit::Kl { projector, data } => frames
                .iter()
                .zip(&data.frames)
                .map(|(u, counts)| {
                    let ku = projector.project(u)?;
                    let ratio: Vec<f64> = ku
                        .values()
                        .iter()
                        .zip(counts.values())
                        .map(|(&e, &c)| if c > 0.0 && e >= FIDELITY_FLOOR { 1.0 - c / e } else { 1.0 })
                        .collect();
                    let mut g = projector.backproject(&SinogramFrame::from_values(
                        ku.n_angles(),
                        ku.n_bins(),
                        ratio,
                        counts.frame,
                    ))?;
                    g.scale(dt);
                    Ok(g)
                })
                .collect(),
            Misfit::Weighted { target, weight } => frames
                .iter()
                .zip(target.iter())
                .zip(weight.iter())
                .map(|((u, t), w)| {
                    let vals = u
                        .values()
                        .iter()
                        .zip(t.values())
                        .zip(w.values())
                        .map(|((&a, &b), &c)| dt * c * (a - b))
                        .collect();
                    ScalarField::from_vec(*u.grid(), vals)
                })
                .collect(),
        }
    }
}

/// Objective value with the pieces needed for a gradient.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub data: f64,
    pub regularizer: f64,
    /// `data + alpha * regularizer`.
    pub total: f64,
    pub floored_bins: usize,
    pub trajectory: Trajectory,
    pub frames: Vec<ScalarField>,
}

pub fn evaluate(
    model: &ForwardModel,
    p: &ParameterSet,
    misfit: &Misfit<'_>,
    reg: &RegularizerConfig,
    alpha: f64,
) -> Result<Evaluation> {
    misfit.check(model.sampling.n_frames())?;
    let trajectory = model.simulate(p)?;
    let frames = model.sampling.sample(&trajectory)?;
    let (data, floored_bins) = misfit.value(&frames, model.frame_duration())?;
    let regularizer = if alpha != 0.0 { regularizer_value(p, reg)? } else { 0.0 };
    Ok(Evaluation {
        data,
        regularizer,
        total: data + alpha * regularizer,
        floored_bins,
        trajectory,
        frames,
    })
}

/// Gradient of `data + alpha R` at the point of `eval`.
pub fn evaluate_gradient(
    model: &ForwardModel,
    p: &ParameterSet,
    eval: &Evaluation,
    misfit: &Misfit<'_>,
    reg: &RegularizerConfig,
    alpha: f64,
) -> Result<GradientSet> {
    let grads = misfit.frame_gradients(&eval.frames, model.frame_duration())?;
    let sources: Vec<ActivitySource> = grads
        .into_iter()
        .enumerate()
        .map(|(f, weight)| ActivitySource {
            level: model.sampling.level(f),
            weight,
        })
        .collect();
    let adj = solve_adjoint(p, &eval.trajectory, &model.bc, &model.solver, &sources)?;
    assemble_gradient(p, &eval.trajectory, &adj, &model.bc, &model.solver, reg, alpha)
}

/// Poisson data term of the predicted frames plus `alpha R(p)`.
pub fn objective(
    p: &ParameterSet,
    data: &SinogramSequence,
    k: &Projector,
    model: &ForwardModel,
    reg: &RegularizerConfig,
    alpha: f64,
) -> Result<f64> {
    let misfit = Misfit::Kl { projector: k, data };
    Ok(evaluate(model, p, &misfit, reg, alpha)?.total)
}
