use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::em::{em_half_step, surrogate_weight};
use super::inner::parameter_half_step;
use super::misfit::{evaluate, Evaluation, ForwardModel, Misfit};
use crate::error::{Error, Result};
use crate::params::{project_parameters, BlockValues, Bounds, ParamBlock, ParameterSet};
use crate::pet::{Projector, SinogramSequence};
use crate::regularizer::RegularizerConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub dir: PathBuf,
    /// Write the parameters every `every` outer iterations.
    pub every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconConfig {
    /// Global regularisation weight.
    pub alpha: f64,
    pub regularizer: RegularizerConfig,
    pub bounds: Bounds,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Damping: the inner step is divided by it.
    pub damping: f64,
    pub inner_step: f64,
    /// Per-block multipliers of the inner step.
    pub block_step: BlockValues,
    pub weight_floor: f64,
    /// Stop the inner loop when the relative parameter change drops below this.
    pub inner_tolerance: f64,
    /// Stop the outer loop when the relative parameter change drops below this.
    pub outer_tolerance: f64,
    /// Allowed relative increase of an objective per accepted step.
    pub monotone_tolerance: f64,
    pub max_halvings: usize,
    /// Starting point; the prior when absent.
    pub initial: Option<ParameterSet>,
    pub checkpoint: Option<Checkpoint>,
}

impl ReconConfig {
    /// Defaults around a regulariser.
    pub fn new(regularizer: RegularizerConfig) -> Self {
        Self {
            alpha: 1.0,
            regularizer,
            bounds: Bounds::default(),
            outer_iterations: 50,
            inner_iterations: 5,
            damping: 1.0,
            inner_step: 1.0,
            block_step: [1.0; 12],
            weight_floor: super::em::WEIGHT_FLOOR,
            inner_tolerance: 1e-10,
            outer_tolerance: 1e-6,
            monotone_tolerance: 1e-12,
            max_halvings: 40,
            initial: None,
            checkpoint: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.regularizer.validate()?;
        self.bounds.validate()?;
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if self.outer_iterations == 0 || self.inner_iterations == 0 {
            return bad("iteration counts must be positive");
        }
        if !(self.damping > 0.0 && self.damping.is_finite()) {
            return bad("damping must be > 0");
        }
        if !(self.inner_step > 0.0 && self.inner_step.is_finite()) {
            return bad("inner step must be > 0");
        }
        if self.block_step.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("block step multipliers must be finite and >= 0");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be finite and >= 0");
        }
        if !(self.weight_floor > 0.0) {
            return bad("weight floor must be > 0");
        }
        if let Some(p) = &self.initial {
            p.check_same_grid(&self.regularizer.prior)?;
        }
        if let Some(c) = &self.checkpoint {
            if c.every == 0 {
                return bad("checkpoint interval must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 0 is the starting point.
    pub iteration: usize,
    pub objective: f64,
    pub data: f64,
    pub regularizer: f64,
    /// Max over blocks of the relative max-norm change.
    pub change: f64,
    pub clamped_cells: usize,
    pub floored_bins: usize,
    pub inner_iterations: usize,
    pub halvings: usize,
    pub step_scale: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReconReport {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
}

impl ReconReport {
    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    /// Per-iteration record without wall time, so reruns compare bitwise.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "iteration,objective,data,regularizer,change,clamped_cells,floored_bins,inner_iterations,halvings,step_scale\n",
        );
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:e},{},{},{},{},{:e}",
                r.iteration,
                r.objective,
                r.data,
                r.regularizer,
                r.change,
                r.clamped_cells,
                r.floored_bins,
                r.inner_iterations,
                r.halvings,
                r.step_scale,
            );
        }
        s
    }

    /// Cumulative wall time per iteration.
    pub fn timing_csv(&self) -> String {
        let mut s = String::from("iteration,seconds\n");
        for r in &self.records {
            let _ = writeln!(s, "{},{:.6}", r.iteration, r.seconds);
        }
        s
    }

    /// Writes `path` and, next to it, `<stem>_timing.csv`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
        fs::write(path.with_file_name(format!("{stem}_timing.csv")), self.timing_csv())?;
        Ok(())
    }
}

fn relative_change(a: &ParameterSet, b: &ParameterSet) -> f64 {
    let diff = a.max_abs_diff(b);
    ParamBlock::ALL
        .into_iter()
        .map(|blk| {
            let size = b.block(blk).values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            diff[blk.index()] / size.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

fn record(iteration: usize, e: &Evaluation, change: f64, start: Instant) -> IterationRecord {
    IterationRecord {
        iteration,
        objective: e.total,
        data: e.data,
        regularizer: e.regularizer,
        change,
        clamped_cells: e.trajectory.clamped_cells,
        floored_bins: e.floored_bins,
        inner_iterations: 0,
        halvings: 0,
        step_scale: 0.0,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn check_finite(iteration: usize, e: &Evaluation, p: &ParameterSet, cfg: &ReconConfig) -> Result<()> {
    if e.total.is_finite() {
        return Ok(());
    }
    let mut detail = format!("data={} regularizer={}", e.data, e.regularizer);
    if let Some(c) = &cfg.checkpoint {
        let dir = c.dir.join("nonfinite");
        match crate::io::write_parameters(&dir, p) {
            Ok(()) => detail.push_str(&format!("; parameters dumped to {}", dir.display())),
            Err(err) => detail.push_str(&format!("; dump failed: {err}")),
        }
    }
    Err(Error::NonFiniteObjective { iteration, detail })
}

/// Alternate EM half steps and parameter half steps on counts `data`.
///
/// An outer iteration whose new parameters raise the objective is retried
/// with half the inner step; if no step size helps, the loop stops.
pub fn reconstruct(
    data: &SinogramSequence,
    k: &Projector,
    model: &ForwardModel,
    cfg: &ReconConfig,
) -> Result<(ParameterSet, ReconReport)> {
    cfg.validate()?;
    if !(data.total() > 0.0) {
        return Err(Error::NoCounts);
    }
    if data.len() != model.sampling.n_frames() {
        return Err(Error::ShapeMismatch(format!(
            "{} data frames, model has {}",
            data.len(),
            model.sampling.n_frames()
        )));
    }
    let dt = model.frame_duration();
    if (data.frame_duration - dt).abs() > 1e-12 * dt {
        return Err(Error::ShapeMismatch(format!(
            "data frame duration {} differs from model frame duration {dt}",
            data.frame_duration
        )));
    }
    if !k.grid().same_shape(model.c0.grid()) {
        return Err(Error::ShapeMismatch("projector and model grids differ".into()));
    }
    let start = Instant::now();
    let reg = &cfg.regularizer;
    let kl = Misfit::Kl { projector: k, data };
    let mut p = project_parameters(cfg.initial.as_ref().unwrap_or(&reg.prior), &cfg.bounds);
    let mut eval = evaluate(model, &p, &kl, reg, cfg.alpha)?;
    check_finite(0, &eval, &p, cfg)?;
    let mut report = ReconReport::default();
    report.records.push(record(0, &eval, 0.0, start));
    if let Some(c) = &cfg.checkpoint {
        fs::create_dir_all(&c.dir)?;
        crate::io::write_parameters(&c.dir.join("iter_0000"), &p)?;
    }

    let sens = k.sensitivity();
    let mut scale = 1.0f64;
    for it in 1..=cfg.outer_iterations {
        let em = em_half_step(&eval.frames, k, data)?;
        let weight = surrogate_weight(&eval.frames, sens, cfg.weight_floor)?;
        let mut try_scale = (2.0 * scale).min(1.0);
        let mut halvings = 0;
        let accepted = loop {
            let inner = parameter_half_step(&p, &em.activities, &weight, cfg, model, try_scale)?;
            halvings += inner.halvings;
            let cand_eval = evaluate(model, &inner.parameters, &kl, reg, cfg.alpha)?;
            check_finite(it, &cand_eval, &inner.parameters, cfg)?;
            if cand_eval.total <= eval.total + cfg.monotone_tolerance * eval.total.abs() {
                break Some((inner, cand_eval));
            }
            halvings += 1;
            try_scale = 0.5 * inner.scale;
            if halvings > cfg.max_halvings {
                break None;
            }
        };
        let Some((inner, new_eval)) = accepted else {
            let mut r = record(it, &eval, 0.0, start);
            r.halvings = halvings;
            r.step_scale = try_scale;
            report.records.push(r);
            break;
        };
        let change = relative_change(&inner.parameters, &p);
        scale = inner.scale;
        p = inner.parameters;
        eval = new_eval;
        let mut r = record(it, &eval, change, start);
        r.inner_iterations = inner.iterations;
        r.halvings = halvings;
        r.step_scale = scale;
        report.records.push(r);
        if let Some(c) = &cfg.checkpoint {
            if it % c.every == 0 {
                crate::io::write_parameters(&c.dir.join(format!("iter_{it:04}")), &p)?;
            }
        }
        if change < cfg.outer_tolerance {
            report.converged = true;
            break;
        }
    }
    if let Some(c) = &cfg.checkpoint {
        report.write_csv(&c.dir.join("report.csv"))?;
    }
    Ok((p, report))
}
