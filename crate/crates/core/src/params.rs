//! The spatially distributed model parameters and their feasible set.
//!
//! In two dimensions the parameter vector has twelve scalar blocks: three
//! exchange rates, three diffusivities and two velocity components for
//! each of the three compartments.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, VectorField};

/// The three compartments: artery, tissue, vein.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    Artery,
    Tissue,
    Vein,
}

impl Species {
    pub const ALL: [Species; 3] = [Species::Artery, Species::Tissue, Species::Vein];

    pub fn index(self) -> usize {
        match self {
            Species::Artery => 0,
            Species::Tissue => 1,
            Species::Vein => 2,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Species::Artery => "A",
            Species::Tissue => "T",
            Species::Vein => "V",
        }
    }
}

/// One scalar block of the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamBlock {
    K1,
    K2,
    K3,
    DA,
    DT,
    DV,
    VAx,
    VAy,
    VTx,
    VTy,
    VVx,
    VVy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Rate,
    Diffusivity,
    Velocity,
}

impl ParamBlock {
    pub const ALL: [ParamBlock; 12] = [
        ParamBlock::K1,
        ParamBlock::K2,
        ParamBlock::K3,
        ParamBlock::DA,
        ParamBlock::DT,
        ParamBlock::DV,
        ParamBlock::VAx,
        ParamBlock::VAy,
        ParamBlock::VTx,
        ParamBlock::VTy,
        ParamBlock::VVx,
        ParamBlock::VVy,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ParamBlock::K1 => "k1",
            ParamBlock::K2 => "k2",
            ParamBlock::K3 => "k3",
            ParamBlock::DA => "dA",
            ParamBlock::DT => "dT",
            ParamBlock::DV => "dV",
            ParamBlock::VAx => "vAx",
            ParamBlock::VAy => "vAy",
            ParamBlock::VTx => "vTx",
            ParamBlock::VTy => "vTy",
            ParamBlock::VVx => "vVx",
            ParamBlock::VVy => "vVy",
        }
    }

    pub fn from_name(name: &str) -> Option<ParamBlock> {
        ParamBlock::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn kind(self) -> BlockKind {
        match self {
            ParamBlock::K1 | ParamBlock::K2 | ParamBlock::K3 => BlockKind::Rate,
            ParamBlock::DA | ParamBlock::DT | ParamBlock::DV => BlockKind::Diffusivity,
            _ => BlockKind::Velocity,
        }
    }
}

impl fmt::Display for ParamBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A value per parameter block, used for weights and per-block settings.
pub type BlockValues = [f64; 12];

/// Rates k1..k3 (1/s), diffusivities (cm^2/s), velocities (cm/s).
///
/// k1 moves tracer artery -> tissue, k2 tissue -> vein, k3 vein -> artery.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub k1: ScalarField,
    pub k2: ScalarField,
    pub k3: ScalarField,
    pub d_a: ScalarField,
    pub d_t: ScalarField,
    pub d_v: ScalarField,
    pub v_a: VectorField,
    pub v_t: VectorField,
    pub v_v: VectorField,
}

impl ParameterSet {
    /// Every block spatially constant, values given in [`ParamBlock::ALL`] order.
    pub fn constant(grid: Grid, values: &BlockValues) -> Self {
        let f = |b: ParamBlock| ScalarField::constant(grid, values[b.index()]);
        Self {
            k1: f(ParamBlock::K1),
            k2: f(ParamBlock::K2),
            k3: f(ParamBlock::K3),
            d_a: f(ParamBlock::DA),
            d_t: f(ParamBlock::DT),
            d_v: f(ParamBlock::DV),
            v_a: VectorField {
                x: f(ParamBlock::VAx),
                y: f(ParamBlock::VAy),
            },
            v_t: VectorField {
                x: f(ParamBlock::VTx),
                y: f(ParamBlock::VTy),
            },
            v_v: VectorField {
                x: f(ParamBlock::VVx),
                y: f(ParamBlock::VVy),
            },
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, &[0.0; 12])
    }

    pub fn grid(&self) -> &Grid {
        self.k1.grid()
    }

    pub fn block(&self, b: ParamBlock) -> &ScalarField {
        match b {
            ParamBlock::K1 => &self.k1,
            ParamBlock::K2 => &self.k2,
            ParamBlock::K3 => &self.k3,
            ParamBlock::DA => &self.d_a,
            ParamBlock::DT => &self.d_t,
            ParamBlock::DV => &self.d_v,
            ParamBlock::VAx => &self.v_a.x,
            ParamBlock::VAy => &self.v_a.y,
            ParamBlock::VTx => &self.v_t.x,
            ParamBlock::VTy => &self.v_t.y,
            ParamBlock::VVx => &self.v_v.x,
            ParamBlock::VVy => &self.v_v.y,
        }
    }

    pub fn block_mut(&mut self, b: ParamBlock) -> &mut ScalarField {
        match b {
            ParamBlock::K1 => &mut self.k1,
            ParamBlock::K2 => &mut self.k2,
            ParamBlock::K3 => &mut self.k3,
            ParamBlock::DA => &mut self.d_a,
            ParamBlock::DT => &mut self.d_t,
            ParamBlock::DV => &mut self.d_v,
            ParamBlock::VAx => &mut self.v_a.x,
            ParamBlock::VAy => &mut self.v_a.y,
            ParamBlock::VTx => &mut self.v_t.x,
            ParamBlock::VTy => &mut self.v_t.y,
            ParamBlock::VVx => &mut self.v_v.x,
            ParamBlock::VVy => &mut self.v_v.y,
        }
    }

    pub fn blocks(&self) -> impl Iterator<Item = (ParamBlock, &ScalarField)> {
        ParamBlock::ALL.into_iter().map(move |b| (b, self.block(b)))
    }

    /// Diffusivity of one compartment.
    pub fn diffusivity(&self, s: Species) -> &ScalarField {
        match s {
            Species::Artery => &self.d_a,
            Species::Tissue => &self.d_t,
            Species::Vein => &self.d_v,
        }
    }

    /// Velocity of one compartment.
    pub fn velocity(&self, s: Species) -> &VectorField {
        match s {
            Species::Artery => &self.v_a,
            Species::Tissue => &self.v_t,
            Species::Vein => &self.v_v,
        }
    }

    pub fn diffusivity_block(s: Species) -> ParamBlock {
        match s {
            Species::Artery => ParamBlock::DA,
            Species::Tissue => ParamBlock::DT,
            Species::Vein => ParamBlock::DV,
        }
    }

    pub fn velocity_blocks(s: Species) -> (ParamBlock, ParamBlock) {
        match s {
            Species::Artery => (ParamBlock::VAx, ParamBlock::VAy),
            Species::Tissue => (ParamBlock::VTx, ParamBlock::VTy),
            Species::Vein => (ParamBlock::VVx, ParamBlock::VVy),
        }
    }

    pub fn check_consistent(&self) -> Result<()> {
        let g = *self.grid();
        for (b, f) in self.blocks() {
            if !f.grid().same_shape(&g) {
                return Err(Error::ShapeMismatch(format!(
                    "parameter block {b} is on a different grid"
                )));
            }
        }
        Ok(())
    }

    pub fn check_same_grid(&self, other: &ParameterSet) -> Result<()> {
        self.check_consistent()?;
        other.check_consistent()?;
        self.k1.check_same_grid(&other.k1)
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().all(|(_, f)| f.is_finite())
    }

    /// `self += a * other`, blockwise.
    pub fn axpy(&mut self, a: f64, other: &ParameterSet) {
        for b in ParamBlock::ALL {
            self.block_mut(b).axpy(a, other.block(b));
        }
    }

    /// Euclidean inner product over all blocks and cells.
    pub fn dot(&self, other: &ParameterSet) -> f64 {
        ParamBlock::ALL
            .into_iter()
            .map(|b| self.block(b).dot(other.block(b)))
            .sum()
    }

    /// Largest absolute cellwise difference in each block.
    pub fn max_abs_diff(&self, other: &ParameterSet) -> BlockValues {
        let mut out = [0.0; 12];
        for b in ParamBlock::ALL {
            out[b.index()] = self
                .block(b)
                .values()
                .iter()
                .zip(other.block(b).values())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
        }
        out
    }

    /// Map a coarse parameter set onto a refined grid (piecewise constant).
    pub fn prolong(&self, factor: usize, fine: Grid) -> Result<ParameterSet> {
        let mut out = ParameterSet::zeros(fine);
        for b in ParamBlock::ALL {
            *out.block_mut(b) = self.block(b).prolong(factor, fine)?;
        }
        Ok(out)
    }
}

/// Box constraints defining the feasible parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub d_min: f64,
    pub d_max: f64,
    pub v_max: f64,
    pub k_max: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            d_min: 1e-9,
            d_max: 1.0,
            v_max: 1e4,
            k_max: 10.0,
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_min > 0.0 && self.d_min <= self.d_max) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < d_min <= d_max, got d_min={} d_max={}",
                self.d_min, self.d_max
            )));
        }
        if !(self.v_max > 0.0 && self.k_max > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "v_max and k_max must be positive, got {} and {}",
                self.v_max, self.k_max
            )));
        }
        Ok(())
    }

    pub fn interval(&self, b: ParamBlock) -> (f64, f64) {
        match b.kind() {
            BlockKind::Rate => (0.0, self.k_max),
            BlockKind::Diffusivity => (self.d_min, self.d_max),
            BlockKind::Velocity => (-self.v_max, self.v_max),
        }
    }

    pub fn contains(&self, p: &ParameterSet) -> bool {
        ParamBlock::ALL.into_iter().all(|b| {
            let (lo, hi) = self.interval(b);
            p.block(b).values().iter().all(|&v| v >= lo && v <= hi)
        })
    }
}

/// Componentwise clamp onto the feasible box.
pub fn project_parameters(p: &ParameterSet, bounds: &Bounds) -> ParameterSet {
    let mut out = p.clone();
    project_in_place(&mut out, bounds);
    out
}

pub fn project_in_place(p: &mut ParameterSet, bounds: &Bounds) {
    for b in ParamBlock::ALL {
        let (lo, hi) = bounds.interval(b);
        for v in p.block_mut(b).values_mut() {
            *v = v.clamp(lo, hi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Grid {
        Grid::new(3, 3, 1.0, 1.0).unwrap()
    }

    #[test]
    fn feasible_set_is_fixed() {
        let p = ParameterSet::constant(
            grid(),
            &[0.9, 0.75, 0.9, 3e-7, 3e-6, 3e-7, 1e-4, 700.0, -50.0, 1e-4, 1e-4, 700.0],
        );
        let b = Bounds::default();
        assert!(b.contains(&p));
        assert_eq!(project_parameters(&p, &b), p);
    }

    #[test]
    fn clamps_each_kind() {
        let b = Bounds::default();
        let mut p = ParameterSet::constant(grid(), &[0.5; 12]);
        p.k1.set(1, 1, -0.3);
        p.d_t.set(0, 2, 0.0);
        p.v_v.y.set(2, 0, -2e4);
        p.k3.set(0, 0, 11.0);
        let q = project_parameters(&p, &b);
        assert_eq!(q.k1.at(1, 1), 0.0);
        assert_eq!(q.d_t.at(0, 2), 1e-9);
        assert_eq!(q.v_v.y.at(2, 0), -1e4);
        assert_eq!(q.k3.at(0, 0), 10.0);
        assert!(b.contains(&q));
    }

    #[test]
    fn bounds_validation() {
        assert!(Bounds::default().validate().is_ok());
        let bad = Bounds {
            d_min: 0.0,
            ..Bounds::default()
        };
        assert!(bad.validate().is_err());
        let bad = Bounds {
            d_min: 2.0,
            d_max: 1.0,
            ..Bounds::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn block_names_round_trip() {
        for b in ParamBlock::ALL {
            assert_eq!(ParamBlock::from_name(b.name()), Some(b));
            assert_eq!(ParamBlock::ALL[b.index()], b);
        }
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_contractive(
            a in proptest::collection::vec(-2e4f64..2e4, 108),
            c in proptest::collection::vec(-2e4f64..2e4, 108),
        ) {
            let g = grid();
            let build = |v: &[f64]| {
                let mut p = ParameterSet::zeros(g);
                for (n, b) in ParamBlock::ALL.into_iter().enumerate() {
                    p.block_mut(b).values_mut().copy_from_slice(&v[n * 9..(n + 1) * 9]);
                }
                p
            };
            let (p, q) = (build(&a), build(&c));
            let bounds = Bounds::default();
            let pp = project_parameters(&p, &bounds);
            prop_assert_eq!(&project_parameters(&pp, &bounds), &pp);
            let qq = project_parameters(&q, &bounds);
            let before = p.max_abs_diff(&q);
            let after = pp.max_abs_diff(&qq);
            for n in 0..12 {
                prop_assert!(after[n] <= before[n]);
            }
        }
    }
}
