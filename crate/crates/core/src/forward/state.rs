use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::params::Species;

/// Concentrations of the three compartments at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationState {
    pub ca: ScalarField,
    pub ct: ScalarField,
    pub cv: ScalarField,
    pub time: f64,
}

impl ConcentrationState {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            ca: ScalarField::zeros(grid),
            ct: ScalarField::zeros(grid),
            cv: ScalarField::zeros(grid),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.ca.grid()
    }

    pub fn species(&self, s: Species) -> &ScalarField {
        match s {
            Species::Artery => &self.ca,
            Species::Tissue => &self.ct,
            Species::Vein => &self.cv,
        }
    }

    pub fn species_mut(&mut self, s: Species) -> &mut ScalarField {
        match s {
            Species::Artery => &mut self.ca,
            Species::Tissue => &mut self.ct,
            Species::Vein => &mut self.cv,
        }
    }

    /// Total activity `C_A + C_T + C_V`.
    pub fn activity(&self) -> ScalarField {
        let mut u = self.ca.clone();
        u.axpy(1.0, &self.ct);
        u.axpy(1.0, &self.cv);
        u
    }

    /// `∫ (C_A + C_T + C_V) dx` with cell-midpoint quadrature.
    pub fn total_mass(&self) -> f64 {
        (self.ca.sum() + self.ct.sum() + self.cv.sum()) * self.grid().cell_area()
    }

    pub fn min(&self) -> f64 {
        self.ca.min().min(self.ct.min()).min(self.cv.min())
    }

    pub fn dot(&self, other: &ConcentrationState) -> f64 {
        self.ca.dot(&other.ca) + self.ct.dot(&other.ct) + self.cv.dot(&other.cv)
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        for s in Species::ALL {
            if !self.species(s).grid().same_shape(grid) {
                return Err(Error::ShapeMismatch(format!(
                    "concentration {} is not on the {}x{} grid",
                    s.tag(),
                    grid.nx,
                    grid.ny
                )));
            }
        }
        Ok(())
    }

    /// Cell-average each species onto a coarser grid.
    pub fn restrict(&self, factor: usize, coarse: Grid) -> Result<ConcentrationState> {
        Ok(ConcentrationState {
            ca: self.ca.restrict(factor, coarse)?,
            ct: self.ct.restrict(factor, coarse)?,
            cv: self.cv.restrict(factor, coarse)?,
            time: self.time,
        })
    }
}

/// Time step, number of steps and radioactive decay rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tau: f64,
    pub n_steps: usize,
    pub k0: f64,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(self.k0 >= 0.0 && self.k0.is_finite()) {
            return Err(Error::InvalidConfig(format!("k0 must be >= 0, got {}", self.k0)));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidConfig("n_steps must be >= 1".into()));
        }
        Ok(())
    }
}

/// States at `t_k = t_0 + k tau`, `k = 0..=n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub tau: f64,
    pub states: Vec<ConcentrationState>,
    /// Cells that came out below -1e-12 and were clamped to zero.
    pub clamped_cells: usize,
}

impl Trajectory {
    pub fn grid(&self) -> &Grid {
        self.states[0].grid()
    }

    pub fn n_steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn last(&self) -> &ConcentrationState {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Total activity at every time level of a trajectory.
pub fn activity(traj: &Trajectory) -> Vec<ScalarField> {
    traj.states.iter().map(ConcentrationState::activity).collect()
}

/// Arterial bolus `amplitude (1 - x1^2)(N - x2) x2`, zero tissue and vein.
///
/// Cell centres are mapped affinely so the first and last column sit at
/// `x1 = -1, 1` and the first and last row at `x2 = 0, N`.
pub fn initial_condition(grid: Grid, amplitude: f64, n_param: f64) -> ConcentrationState {
    let x1 = |i: usize| -1.0 + 2.0 * i as f64 / (grid.nx - 1) as f64;
    let x2 = |j: usize| n_param * j as f64 / (grid.ny - 1) as f64;
    let ca = ScalarField::from_fn(grid, |i, j| {
        let (a, b) = (x1(i), x2(j));
        (amplitude * (1.0 - a * a) * (n_param - b) * b).max(0.0)
    });
    ConcentrationState {
        ca,
        ct: ScalarField::zeros(grid),
        cv: ScalarField::zeros(grid),
        time: 0.0,
    }
}
