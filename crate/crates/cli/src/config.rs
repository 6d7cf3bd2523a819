//! TOML run configuration and its translation into core types.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use pdepet_core::phantom::{self, DefectGeometry, Preset, PriorPreset, REFERENCE_VALUES};
use pdepet_core::recon::ReconConfig;
use pdepet_core::{
    initial_condition, io, BlockValues, BoundarySpec, ConcentrationState, Edge, FaceCondition, Grid, ParamBlock,
    ParameterSet, SolverConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub initial: InitialSection,
    pub boundary: BoundarySection,
    pub phantom: PhantomSection,
    pub pet: PetSection,
    pub recon: ReconSection,
    pub gradcheck: GradcheckSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    /// Domain extent (cm).
    pub lx: f64,
    pub ly: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tau: f64,
    pub n_steps: usize,
    pub k0: f64,
}

/// Arterial bolus `amplitude (1 - x1^2)(n_param - x2) x2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    /// Defaults to the time step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    pub n_param: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inflow {
    pub edge: String,
    /// Flux per species (A, T, V).
    pub j_in: [f64; 3],
    /// Scale the flux on each face by the arterial steady-state attenuation
    /// `exp(-k1 d / |V_A|)` at the face's depth `d` below the arterial inflow edge.
    #[serde(default)]
    pub attenuate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundarySection {
    pub inflow: Vec<Inflow>,
    /// Outflow speeds per species on the remaining edges. When absent, each
    /// species leaves with the outward normal component of its phantom
    /// transport velocity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_out: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSection {
    pub preset: String,
    /// Background values in block order k1, k2, k3, DA, DT, DV, VAx, VAy, VTx, VTy, VVx, VVy.
    pub values: BlockValues,
    pub strip_fraction: f64,
    pub strip_edge: String,
    pub block_fraction: f64,
    /// Directory of `<block>.fld` files used instead of the preset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PetSection {
    pub n_angles: usize,
    pub n_bins: usize,
    pub n_frames: usize,
    /// Target mean counts per frame; the projector is scaled to reach it.
    pub counts_per_frame: f64,
    /// Poisson-sample the counts; otherwise the scaled expectation is used.
    pub noise: bool,
    /// Refinement factor of the synthesis grid.
    pub refine: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconSection {
    /// `informed` or `listed`.
    pub prior: String,
    pub alpha: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub damping: f64,
    pub inner_step: f64,
    /// Step multipliers per block kind.
    pub rate_step: f64,
    pub velocity_step: f64,
    pub diffusivity_step: f64,
    pub weight_floor: f64,
    pub inner_tolerance: f64,
    pub outer_tolerance: f64,
    pub monotone_tolerance: f64,
    /// Write parameter fields every this many outer iterations (0: never).
    pub checkpoint_every: usize,
    /// Directory of `<block>.fld` files for the initial guess (default: the prior).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<PathBuf>,
}

/// Small problem on which the adjoint gradient is compared with finite differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckSection {
    pub nx: usize,
    pub ny: usize,
    pub extent: f64,
    pub tau: f64,
    pub n_steps: usize,
    pub n_frames: usize,
    pub n_angles: usize,
    pub n_bins: usize,
    pub alpha: f64,
    pub eps: Vec<f64>,
    /// Relative spread of the per-cell perturbation of the evaluation point.
    pub spread: f64,
    pub tolerance: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            nx: 16,
            ny: 16,
            lx: 300.0,
            ly: 300.0,
        }
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            tau: 0.02,
            n_steps: 300,
            k0: 0.0,
        }
    }
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            amplitude: None,
            n_param: 50.0,
        }
    }
}

impl Default for BoundarySection {
    fn default() -> Self {
        Self {
            inflow: vec![
                Inflow {
                    edge: "top".into(),
                    j_in: [1.0, 0.0, 0.0],
                    attenuate: false,
                },
                Inflow {
                    edge: "left".into(),
                    j_in: [0.0, 50.0 * 0.9 / (0.75 * 700.0), 0.0],
                    attenuate: true,
                },
            ],
            v_out: None,
        }
    }
}

impl Default for PhantomSection {
    fn default() -> Self {
        let g = DefectGeometry::default();
        Self {
            preset: Preset::Constant.name().into(),
            values: REFERENCE_VALUES,
            strip_fraction: g.strip_fraction,
            strip_edge: g.strip_edge.name().into(),
            block_fraction: g.block_fraction,
            file: None,
        }
    }
}

impl Default for PetSection {
    fn default() -> Self {
        Self {
            n_angles: 24,
            n_bins: 23,
            n_frames: 20,
            counts_per_frame: 1e5,
            noise: true,
            refine: 2,
        }
    }
}

impl Default for ReconSection {
    fn default() -> Self {
        Self {
            prior: PriorPreset::Informed.name().into(),
            alpha: 1e-3,
            outer_iterations: 50,
            inner_iterations: 10,
            damping: 1.0,
            inner_step: 1.0,
            rate_step: 5.0,
            velocity_step: 1e-12,
            diffusivity_step: 1e-12,
            weight_floor: 1e-9,
            inner_tolerance: 1e-10,
            outer_tolerance: 1e-6,
            monotone_tolerance: 1e-12,
            checkpoint_every: 10,
            initial: None,
        }
    }
}

impl Default for GradcheckSection {
    fn default() -> Self {
        Self {
            nx: 8,
            ny: 8,
            extent: 1.0,
            tau: 0.01,
            n_steps: 10,
            n_frames: 5,
            n_angles: 8,
            n_bins: 11,
            alpha: 0.3,
            eps: vec![1e-4, 1e-5, 1e-6],
            spread: 0.2,
            tolerance: 1e-6,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            grid: GridSection::default(),
            solver: SolverSection::default(),
            initial: InitialSection::default(),
            boundary: BoundarySection::default(),
            phantom: PhantomSection::default(),
            pet: PetSection::default(),
            recon: ReconSection::default(),
            gradcheck: GradcheckSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("parsing configuration")?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
        // relative file references are relative to the config file
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.phantom.file, &mut cfg.recon.initial].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Fill every defaulted-by-reference value so the echo is self-contained.
    pub fn resolved(mut self) -> Self {
        if self.initial.amplitude.is_none() {
            self.initial.amplitude = Some(self.solver.tau);
        }
        self
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.solver_config().validate()?;
        ensure!(self.initial.n_param.is_finite(), "initial.n_param must be finite");
        if let Some(a) = self.initial.amplitude {
            ensure!(a.is_finite() && a >= 0.0, "initial.amplitude must be finite and >= 0");
        }
        self.preset()?;
        self.geometry()?.validate()?;
        for f in &self.boundary.inflow {
            edge(&f.edge)?;
        }
        let pet = &self.pet;
        ensure!(pet.n_angles > 0 && pet.n_bins > 0, "pet needs at least one angle and one bin");
        ensure!(pet.n_frames > 0, "pet.n_frames must be positive");
        ensure!(pet.refine > 0, "pet.refine must be positive");
        ensure!(
            pet.counts_per_frame.is_finite() && pet.counts_per_frame >= 0.0,
            "pet.counts_per_frame must be finite and >= 0"
        );
        ensure!(pet.n_frames <= self.solver.n_steps, "more frames than time steps");
        PriorPreset::from_name(&self.recon.prior)?;
        self.recon_config(self.grid()?, None)?.validate()?;
        let gc = &self.gradcheck;
        ensure!(gc.nx > 0 && gc.ny > 0 && gc.extent > 0.0, "gradcheck grid must be nonempty");
        ensure!(gc.n_frames > 0 && gc.n_frames <= gc.n_steps, "gradcheck frames must be in 1..=n_steps");
        ensure!(!gc.eps.is_empty() && gc.eps.iter().all(|e| *e > 0.0), "gradcheck.eps must be positive");
        for p in [&self.phantom.file, &self.recon.initial].into_iter().flatten() {
            ensure!(p.is_dir(), "referenced directory {} does not exist", p.display());
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.grid.nx, self.grid.ny, self.grid.lx, self.grid.ly)?)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            tau: self.solver.tau,
            n_steps: self.solver.n_steps,
            k0: self.solver.k0,
        }
    }

    pub fn preset(&self) -> Result<Preset> {
        Ok(Preset::from_name(&self.phantom.preset)?)
    }

    pub fn geometry(&self) -> Result<DefectGeometry> {
        Ok(DefectGeometry {
            strip_fraction: self.phantom.strip_fraction,
            strip_edge: edge(&self.phantom.strip_edge)?,
            block_fraction: self.phantom.block_fraction,
        })
    }

    /// Defect mask of the configured preset on `grid`.
    pub fn mask(&self, grid: &Grid) -> Result<Vec<bool>> {
        Ok(phantom::defect_mask(self.preset()?, grid, &self.geometry()?))
    }

    /// Ground-truth parameters on `grid`: the preset, or the fields in `phantom.file`
    /// (which must match the reconstruction grid; other grids get them prolonged).
    pub fn truth(&self, grid: Grid) -> Result<ParameterSet> {
        match &self.phantom.file {
            None => Ok(phantom::phantom(self.preset()?, grid, &self.phantom.values, &self.geometry()?)?),
            Some(dir) => {
                let base = self.grid()?;
                let p = io::read_parameters(dir, base).with_context(|| format!("reading {}", dir.display()))?;
                if grid.same_shape(&base) {
                    return Ok(p);
                }
                let factor = grid.nx / base.nx;
                ensure!(
                    factor * base.nx == grid.nx && factor * base.ny == grid.ny,
                    "grid {}x{} is not a refinement of the configured grid",
                    grid.nx,
                    grid.ny
                );
                Ok(p.prolong(factor, grid)?)
            }
        }
    }

    /// Arterial bolus on `grid`. Refined grids evaluate the bolus on their own
    /// cells; [`RunConfig::initial_state`] restricts it back.
    fn bolus(&self, grid: Grid) -> ConcentrationState {
        let amp = self.initial.amplitude.unwrap_or(self.solver.tau);
        initial_condition(grid, amp, self.initial.n_param)
    }

    /// Initial state on the reconstruction grid: the cell average of the
    /// bolus sampled on the synthesis grid, so both grids start from the same
    /// tracer distribution.
    pub fn initial_state(&self) -> Result<ConcentrationState> {
        let g = self.grid()?;
        let r = self.pet.refine;
        Ok(self.bolus(g.refined(r)?).restrict(r, g)?)
    }

    /// Initial state on the synthesis grid.
    pub fn fine_initial_state(&self) -> Result<ConcentrationState> {
        Ok(self.bolus(self.grid()?.refined(self.pet.refine)?))
    }

    /// Boundary conditions on the reconstruction grid.
    pub fn boundary(&self) -> Result<BoundarySpec> {
        let g = self.grid()?;
        let v = &self.phantom.values;
        let velocity = |b: ParamBlock| v[b.index()];
        // transport velocity is the negated model velocity
        let transport = [
            [-velocity(ParamBlock::VAx), -velocity(ParamBlock::VAy)],
            [-velocity(ParamBlock::VTx), -velocity(ParamBlock::VTy)],
            [-velocity(ParamBlock::VVx), -velocity(ParamBlock::VVy)],
        ];
        let mut inflow = Vec::new();
        for f in &self.boundary.inflow {
            inflow.push((edge(&f.edge)?, f.j_in));
        }
        let mut bc = match self.boundary.v_out {
            Some(v_out) => {
                let edges: Vec<Edge> = inflow.iter().map(|(e, _)| *e).collect();
                let mut bc = BoundarySpec::uniform(&g, &edges, [0.0; 3], v_out);
                for (e, j_in) in &inflow {
                    bc.edge_mut(*e).fill(FaceCondition::Inflow { j_in: *j_in });
                }
                bc
            }
            None => BoundarySpec::advective(&g, &inflow, transport),
        };
        for f in self.boundary.inflow.iter().filter(|f| f.attenuate) {
            let e = edge(&f.edge)?;
            let arterial = arterial_inflow_edge(transport[0]);
            for (n, face) in bc.edge_mut(e).iter_mut().enumerate() {
                let depth = face_depth(&g, e, n, arterial);
                let a = (-v[ParamBlock::K1.index()] * depth / transport[0][0].hypot(transport[0][1])).exp();
                *face = FaceCondition::Inflow { j_in: f.j_in.map(|j| j * a) };
            }
        }
        bc.validate(&g)?;
        Ok(bc)
    }

    /// Reconstruction settings for `grid`; the initial guess is read from
    /// `recon.initial` when set, else taken from `initial` or the prior.
    pub fn recon_config(&self, grid: Grid, initial: Option<ParameterSet>) -> Result<ReconConfig> {
        let r = &self.recon;
        let mut cfg = ReconConfig::new(PriorPreset::from_name(&r.prior)?.regularizer(grid));
        cfg.alpha = r.alpha;
        cfg.outer_iterations = r.outer_iterations;
        cfg.inner_iterations = r.inner_iterations;
        cfg.damping = r.damping;
        cfg.inner_step = r.inner_step;
        for b in ParamBlock::ALL {
            cfg.block_step[b.index()] = match b.kind() {
                pdepet_core::params::BlockKind::Rate => r.rate_step,
                pdepet_core::params::BlockKind::Velocity => r.velocity_step,
                pdepet_core::params::BlockKind::Diffusivity => r.diffusivity_step,
            };
        }
        cfg.weight_floor = r.weight_floor;
        cfg.inner_tolerance = r.inner_tolerance;
        cfg.outer_tolerance = r.outer_tolerance;
        cfg.monotone_tolerance = r.monotone_tolerance;
        cfg.initial = match (&r.initial, initial) {
            (_, Some(p)) => Some(p),
            (Some(dir), None) => {
                Some(io::read_parameters(dir, grid).with_context(|| format!("reading {}", dir.display()))?)
            }
            (None, None) => None,
        };
        Ok(cfg)
    }
}

pub fn edge(name: &str) -> Result<Edge> {
    match Edge::from_name(name) {
        Some(e) => Ok(e),
        None => bail!("unknown edge {name:?} (expected left, right, bottom or top)"),
    }
}

/// Edge through which tracer moving with `w` enters the domain.
fn arterial_inflow_edge(w: [f64; 2]) -> Edge {
    if w[1].abs() >= w[0].abs() {
        if w[1] < 0.0 {
            Edge::Top
        } else {
            Edge::Bottom
        }
    } else if w[0] > 0.0 {
        Edge::Left
    } else {
        Edge::Right
    }
}

/// Distance from face `n` of edge `e` to the edge `from`, measured at the face centre.
fn face_depth(g: &Grid, e: Edge, n: usize, from: Edge) -> f64 {
    let (lx, ly) = g.extent();
    let (x, y) = match e {
        Edge::Left => (0.0, (n as f64 + 0.5) * g.hy),
        Edge::Right => (lx, (n as f64 + 0.5) * g.hy),
        Edge::Bottom => ((n as f64 + 0.5) * g.hx, 0.0),
        Edge::Top => ((n as f64 + 0.5) * g.hx, ly),
    };
    match from {
        Edge::Left => x,
        Edge::Right => lx - x,
        Edge::Bottom => y,
        Edge::Top => ly - y,
    }
}
