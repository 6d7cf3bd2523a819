//! The five subcommands. Each writes into `<out>/<command>/` next to an echo
//! of the resolved configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use pdepet_core::phantom::{self, PriorPreset, GRADCHECK_VALUES};
use pdepet_core::recon::{gradient_check, Checkpoint, ForwardModel, Misfit};
use pdepet_core::{
    build_projector, initial_condition, io, pet, BoundarySpec, Edge, Error, Grid, ParameterSet, Projector,
    ReconReport, ScalarField, SinogramSequence, SolverConfig,
};

use crate::config::RunConfig;
use crate::summary::{format_table, summarize, summary_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Phantom,
    Simulate,
    Synth,
    Reconstruct,
    Gradcheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Phantom => "phantom",
            Command::Simulate => "simulate",
            Command::Synth => "synth",
            Command::Reconstruct => "reconstruct",
            Command::Gradcheck => "gradcheck",
        }
    }
}

/// Run `cmd` and return the text to print.
pub fn run_pipeline(cfg: &RunConfig, cmd: Command, out: &Path) -> Result<String> {
    let cfg = cfg.clone().resolved();
    cfg.validate()?;
    let dir = out.join(cmd.name());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    match cmd {
        Command::Phantom => phantom_cmd(&cfg, &dir),
        Command::Simulate => simulate(&cfg, &dir),
        Command::Synth => synth(&cfg, &dir),
        Command::Reconstruct => reconstruct(&cfg, &dir, &out.join(Command::Synth.name())),
        Command::Gradcheck => gradcheck(&cfg, &dir),
    }
}

fn write_heatmaps(dir: &Path, p: &ParameterSet) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (b, f) in p.blocks() {
        io::write_field_csv(&dir.join(format!("{}.csv", b.name())), f)?;
    }
    Ok(())
}

fn mask_field(grid: Grid, mask: &[bool]) -> Result<ScalarField> {
    Ok(ScalarField::from_vec(grid, mask.iter().map(|&m| f64::from(u8::from(m))).collect())?)
}

fn model(cfg: &RunConfig) -> Result<ForwardModel> {
    Ok(ForwardModel::new(
        cfg.initial_state()?,
        cfg.boundary()?,
        cfg.solver_config(),
        cfg.pet.n_frames,
    )?)
}

fn phantom_cmd(cfg: &RunConfig, dir: &Path) -> Result<String> {
    let g = cfg.grid()?;
    let p = cfg.truth(g)?;
    let mask = cfg.mask(&g)?;
    io::write_parameters(&dir.join("params"), &p)?;
    write_heatmaps(&dir.join("heatmaps"), &p)?;
    io::write_field_csv(&dir.join("mask.csv"), &mask_field(g, &mask)?)?;
    Ok(format_table(&summarize(&p, &mask)))
}

fn simulate(cfg: &RunConfig, dir: &Path) -> Result<String> {
    let g = cfg.grid()?;
    let m = model(cfg)?;
    let traj = m.simulate(&cfg.truth(g)?)?;
    io::write_trajectory(&dir.join("trajectory"), &traj)?;
    let frames = m.sampling.sample(&traj)?;
    let adir = dir.join("activity");
    fs::create_dir_all(&adir)?;
    for (f, u) in frames.iter().enumerate() {
        io::write_field_csv(&adir.join(format!("frame_{f:03}.csv")), u)?;
    }
    let last = traj.states.last().expect("trajectory has the initial state");
    Ok(format!(
        "simulated {} steps, {} frames; final mass {:.6e}; clamped cells {}\n",
        traj.n_steps(),
        frames.len(),
        last.total_mass(),
        traj.clamped_cells
    ))
}

/// Counts synthesised on the refined grid and the matching scaled projector.
pub struct Synthetic {
    pub data: SinogramSequence,
    /// System matrix with the count scale folded in.
    pub projector: Projector,
    pub truth: ParameterSet,
    pub scale: f64,
    pub expected_per_frame: f64,
    pub clamped_cells: usize,
}

/// Simulate on the refined grid, restrict, project and sample counts.
pub fn synthesize(cfg: &RunConfig) -> Result<Synthetic> {
    let g = cfg.grid()?;
    let r = cfg.pet.refine;
    let gf = g.refined(r)?;
    let coarse = model(cfg)?;
    let fine = ForwardModel::new(
        cfg.fine_initial_state()?,
        coarse.bc.refined(r),
        cfg.solver_config(),
        cfg.pet.n_frames,
    )?;
    let truth = cfg.truth(g)?;
    let fine_truth = match cfg.phantom.file {
        Some(_) => cfg.truth(gf)?,
        None => truth.prolong(r, gf)?,
    };
    let mut traj = fine.simulate(&fine_truth)?;
    traj.states = traj.states.iter().map(|s| s.restrict(r, g)).collect::<Result<_, _>>()?;
    let k = build_projector(g, cfg.pet.n_angles, cfg.pet.n_bins)?;
    let expected = coarse.expected_data(&traj, &k)?;
    let per_frame = expected.total() / expected.len() as f64;
    if !(per_frame > 0.0) {
        bail!("the simulated activity projects to zero counts; check the inflow and initial amplitude");
    }
    let scale = cfg.pet.counts_per_frame / per_frame;
    let data = if cfg.pet.noise {
        pet::sample_poisson(&expected, scale, cfg.seed)?
    } else {
        let mut d = expected;
        for f in d.frames.iter_mut() {
            for v in f.values_mut() {
                *v *= scale;
            }
        }
        d
    };
    // the count scale lives in the projector so reconstruction sees one operator
    let projector = if scale > 0.0 { k.scaled(scale)? } else { k };
    Ok(Synthetic {
        data,
        projector,
        truth,
        scale,
        expected_per_frame: per_frame,
        clamped_cells: traj.clamped_cells,
    })
}

fn synth(cfg: &RunConfig, dir: &Path) -> Result<String> {
    let s = synthesize(cfg)?;
    io::write_sequence(&dir.join("data"), &s.data)?;
    io::write_projector(&dir.join("projector.bin"), &s.projector)?;
    io::write_parameters(&dir.join("truth"), &s.truth)?;
    fs::write(
        dir.join("synth.txt"),
        format!(
            "count_scale {:e}\nexpected_per_frame {:e}\ntotal_counts {:e}\nclamped_cells {}\n",
            s.scale,
            s.expected_per_frame,
            s.data.total(),
            s.clamped_cells
        ),
    )?;
    Ok(format!(
        "{} frames, {:.6e} counts in total (scale {:.4e})\n",
        s.data.len(),
        s.data.total(),
        s.scale
    ))
}

/// Reconstruct from `data`; checkpoints go to `checkpoints` when given.
pub fn reconstruct_from(
    cfg: &RunConfig,
    data: &SinogramSequence,
    k: &Projector,
    checkpoints: Option<&Path>,
) -> Result<(ParameterSet, ReconReport)> {
    if !(data.total() > 0.0) {
        bail!("no counts: nothing to reconstruct");
    }
    let g = cfg.grid()?;
    let m = model(cfg)?;
    let mut rc = cfg.recon_config(g, None)?;
    if let (Some(dir), true) = (checkpoints, cfg.recon.checkpoint_every > 0) {
        rc.checkpoint = Some(Checkpoint {
            dir: dir.to_path_buf(),
            every: cfg.recon.checkpoint_every,
        });
    }
    match pdepet_core::reconstruct(data, k, &m, &rc) {
        Err(Error::NoCounts) => bail!("no counts: nothing to reconstruct"),
        r => Ok(r?),
    }
}

fn reconstruct(cfg: &RunConfig, dir: &Path, synth_dir: &Path) -> Result<String> {
    let g = cfg.grid()?;
    let data_dir = synth_dir.join("data");
    if !data_dir.is_dir() {
        bail!("no data in {}; run `synth` with the same --out first", synth_dir.display());
    }
    let data = io::read_sequence(&data_dir).with_context(|| format!("reading {}", data_dir.display()))?;
    let k = io::read_projector(&synth_dir.join("projector.bin"), g)?;
    let (p, report) = reconstruct_from(cfg, &data, &k, Some(&dir.join("checkpoints")))?;
    io::write_parameters(&dir.join("params"), &p)?;
    write_heatmaps(&dir.join("heatmaps"), &p)?;
    report.write_csv(&dir.join("report.csv"))?;
    let rows = summarize(&p, &cfg.mask(&g)?);
    let table = format_table(&rows);
    fs::write(dir.join("summary.txt"), &table)?;
    fs::write(dir.join("summary.csv"), summary_csv(&rows))?;
    let mut s = String::new();
    if let (Some(first), Some(last)) = (report.records.first(), report.records.last()) {
        let _ = writeln!(
            s,
            "{} outer iterations, objective {:.10e} -> {:.10e}",
            last.iteration, first.objective, last.objective
        );
    }
    s.push_str(&table);
    Ok(s)
}

/// The fixed small problem of the gradient check.
pub struct GradcheckProblem {
    pub model: ForwardModel,
    pub point: ParameterSet,
    pub truth: ParameterSet,
    pub prior: ParameterSet,
    pub grid: Grid,
}

pub fn gradcheck_problem(cfg: &RunConfig) -> Result<GradcheckProblem> {
    let gc = &cfg.gradcheck;
    let grid = Grid::new(gc.nx, gc.ny, gc.extent, gc.extent)?;
    let bc = BoundarySpec::uniform(&grid, &[Edge::Top], [0.5, 0.1, 0.05], [2.0, 1.0, 3.0]);
    let solver = SolverConfig {
        tau: gc.tau,
        n_steps: gc.n_steps,
        k0: 0.0,
    };
    let model = ForwardModel::new(initial_condition(grid, 3e-3, 50.0), bc, solver, gc.n_frames)?;
    let at = |s: u64| phantom::perturbed(grid, &GRADCHECK_VALUES, gc.spread, s);
    Ok(GradcheckProblem {
        model,
        point: at(cfg.seed),
        truth: at(cfg.seed.wrapping_add(1)),
        prior: at(cfg.seed.wrapping_add(2)),
        grid,
    })
}

fn gradcheck(cfg: &RunConfig, dir: &Path) -> Result<String> {
    let gc = &cfg.gradcheck;
    let prob = gradcheck_problem(cfg)?;
    let k = build_projector(prob.grid, gc.n_angles, gc.n_bins)?;
    let data = prob.model.expected_data(&prob.model.simulate(&prob.truth)?, &k)?;
    let misfit = Misfit::Kl {
        projector: &k,
        data: &data,
    };
    let mut reg = PriorPreset::from_name(&cfg.recon.prior)?.regularizer(prob.grid);
    reg.prior = prob.prior;
    let report = gradient_check(&prob.model, &prob.point, &misfit, &reg, gc.alpha, &gc.eps, cfg.seed)?;
    let path: PathBuf = dir.join("gradcheck.csv");
    fs::write(&path, report.to_csv())?;
    let err = report.max_rel_err();
    if !(err <= gc.tolerance) {
        bail!(
            "max relative gradient error {err:.3e} exceeds {:.1e}; see {}",
            gc.tolerance,
            path.display()
        );
    }
    Ok(format!("max relative error {err:.3e}\n"))
}
