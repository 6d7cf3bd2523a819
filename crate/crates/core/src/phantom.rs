//! Parameter presets: the reference perfusion values, the a-priori values
//! and regulariser weights, and the two defect geometries.

use crate::error::{Error, Result};
use crate::forward::Edge;
use crate::grid::Grid;
use crate::params::{BlockValues, ParamBlock, ParameterSet};
use crate::regularizer::RegularizerConfig;

/// Reference ("ground truth") values in block order
/// k1, k2, k3, DA, DT, DV, VAx, VAy, VTx, VTy, VVx, VVy.
pub const REFERENCE_VALUES: BlockValues = [
    0.9, 0.75, 0.9, 3e-7, 3e-6, 3e-7, 1e-4, 700.0, -50.0, 1e-4, 1e-4, 700.0,
];

/// A-priori values for the regulariser.
pub const PRIOR_VALUES: BlockValues = [
    0.89, 0.7, 0.85, 1e-3, 1e-2, 1e-3, 0.1, 15.0, -5.0, 0.1, 0.1, 15.0,
];

pub const PRIOR_ALPHA: BlockValues = [
    0.0171, 0.0158, 0.0164, 0.0003, 0.0003, 0.0003, 0.0010, 1.1000, 1.1220, 0.0010, 0.0010, 1.1000,
];

pub const PRIOR_XI: BlockValues = [
    0.0008, 0.0001, 0.0001, 0.0004, 0.0004, 0.0004, 0.0001, 0.0001, 0.0001, 0.0001, 0.0001, 0.0001,
];

/// Reference-like values rescaled for small unit-square problems: velocities
/// of a few cells per unit time and diffusivities giving cell Peclet numbers
/// of order one to ten, so every block influences the data.
pub const GRADCHECK_VALUES: BlockValues = [
    0.9, 0.75, 0.9, 0.3, 0.4, 0.3, 1.5, 7.0, -5.0, 2.0, -1.5, 7.0,
];

/// `base` with every cell independently scaled by a factor uniform in
/// `[1 - spread, 1 + spread]`.
pub fn perturbed(grid: Grid, base: &BlockValues, spread: f64, seed: u64) -> ParameterSet {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut p = ParameterSet::constant(grid, base);
    for b in ParamBlock::ALL {
        let v0 = base[b.index()];
        for v in p.block_mut(b).values_mut() {
            *v = v0 * (1.0 + spread * rng.random_range(-1.0..1.0));
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Constant,
    EdgeDefect,
    InnerDefect,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Constant, Preset::EdgeDefect, Preset::InnerDefect];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Constant => "constant",
            Preset::EdgeDefect => "edge_defect",
            Preset::InnerDefect => "inner_defect",
        }
    }

    pub fn from_name(s: &str) -> Result<Preset> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown phantom preset {s:?}")))
    }
}

/// Where the k1 = k2 = 0 defect sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectGeometry {
    /// Strip width of the edge defect as a fraction of the domain.
    pub strip_fraction: f64,
    /// Edge the strip is attached to.
    pub strip_edge: Edge,
    /// Side of the centred block as a fraction of each extent.
    pub block_fraction: f64,
}

impl Default for DefectGeometry {
    fn default() -> Self {
        Self {
            strip_fraction: 0.1,
            strip_edge: Edge::Left,
            block_fraction: 0.2,
        }
    }
}

impl DefectGeometry {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("strip_fraction", self.strip_fraction), ("block_fraction", self.block_fraction)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Cells inside the defect of `preset` (a cell belongs if its centre does).
pub fn defect_mask(preset: Preset, grid: &Grid, geom: &DefectGeometry) -> Vec<bool> {
    let (lx, ly) = grid.extent();
    let mut mask = vec![false; grid.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let (x, y) = grid.center(i, j);
            let (fx, fy) = (x / lx, y / ly);
            mask[grid.idx(i, j)] = match preset {
                Preset::Constant => false,
                Preset::EdgeDefect => {
                    let w = geom.strip_fraction;
                    match geom.strip_edge {
                        Edge::Left => fx < w,
                        Edge::Right => fx > 1.0 - w,
                        Edge::Bottom => fy < w,
                        Edge::Top => fy > 1.0 - w,
                    }
                }
                Preset::InnerDefect => {
                    let half = 0.5 * geom.block_fraction;
                    (fx - 0.5).abs() <= half && (fy - 0.5).abs() <= half
                }
            };
        }
    }
    mask
}

/// Constant `values`, with k1 = k2 = 0 on the defect of `preset`.
pub fn phantom(preset: Preset, grid: Grid, values: &BlockValues, geom: &DefectGeometry) -> Result<ParameterSet> {
    geom.validate()?;
    let mut p = ParameterSet::constant(grid, values);
    let mask = defect_mask(preset, &grid, geom);
    for b in [ParamBlock::K1, ParamBlock::K2] {
        for (v, &m) in p.block_mut(b).values_mut().iter_mut().zip(&mask) {
            if m {
                *v = 0.0;
            }
        }
    }
    Ok(p)
}

/// Named sets of a-priori values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorPreset {
    /// The a-priori values as listed.
    Listed,
    /// Listed rate priors, transport priors equal to the reference transport.
    Informed,
}

impl PriorPreset {
    pub fn name(self) -> &'static str {
        match self {
            PriorPreset::Listed => "listed",
            PriorPreset::Informed => "informed",
        }
    }

    pub fn from_name(s: &str) -> Result<PriorPreset> {
        [PriorPreset::Listed, PriorPreset::Informed]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown prior preset {s:?}")))
    }

    pub fn values(self) -> BlockValues {
        match self {
            PriorPreset::Listed => PRIOR_VALUES,
            PriorPreset::Informed => {
                let mut v = REFERENCE_VALUES;
                for b in [ParamBlock::K1, ParamBlock::K2, ParamBlock::K3] {
                    v[b.index()] = PRIOR_VALUES[b.index()];
                }
                v
            }
        }
    }

    pub fn regularizer(self, grid: Grid) -> RegularizerConfig {
        RegularizerConfig {
            prior: ParameterSet::constant(grid, &self.values()),
            alpha: PRIOR_ALPHA,
            xi: PRIOR_XI,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Bounds;

    fn grid65() -> Grid {
        Grid::new(65, 65, 1.0, 1.0).unwrap()
    }

    #[test]
    fn perturbed_stays_within_spread() {
        let g = Grid::new(5, 4, 1.0, 1.0).unwrap();
        let p = perturbed(g, &GRADCHECK_VALUES, 0.2, 9);
        for b in ParamBlock::ALL {
            let v0 = GRADCHECK_VALUES[b.index()];
            for &v in p.block(b).values() {
                assert!((v / v0 - 1.0).abs() <= 0.2);
            }
        }
        assert_eq!(p, perturbed(g, &GRADCHECK_VALUES, 0.2, 9));
        assert_ne!(p, perturbed(g, &GRADCHECK_VALUES, 0.2, 10));
    }

    #[test]
    fn constant_preset_has_reference_values() {
        let p = phantom(Preset::Constant, grid65(), &REFERENCE_VALUES, &DefectGeometry::default()).unwrap();
        for c in [0, 1000, 4224] {
            assert_eq!(p.k1.values()[c], 0.9);
            assert_eq!(p.k2.values()[c], 0.75);
            assert_eq!(p.k3.values()[c], 0.9);
            assert_eq!(p.v_a.y.values()[c], 700.0);
            assert_eq!(p.v_t.x.values()[c], -50.0);
            assert_eq!(p.d_t.values()[c], 3e-6);
        }
        assert!(Bounds::default().contains(&p));
    }

    #[test]
    fn inner_defect_centre_and_corner() {
        let g = grid65();
        let p = phantom(Preset::InnerDefect, g, &REFERENCE_VALUES, &DefectGeometry::default()).unwrap();
        assert_eq!(p.k1.at(32, 32), 0.0);
        assert_eq!(p.k2.at(32, 32), 0.0);
        assert_eq!(p.k3.at(32, 32), 0.9);
        assert_eq!(p.k1.at(0, 0), 0.9);
        assert_eq!(p.k2.at(64, 64), 0.75);
    }

    #[test]
    fn defect_sizes_on_a_16_grid() {
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let geom = DefectGeometry::default();
        let inner = defect_mask(Preset::InnerDefect, &g, &geom);
        assert_eq!(inner.iter().filter(|&&m| m).count(), 16);
        assert!(inner[g.idx(6, 6)] && inner[g.idx(9, 9)] && !inner[g.idx(5, 6)]);
        let edge = defect_mask(Preset::EdgeDefect, &g, &geom);
        assert_eq!(edge.iter().filter(|&&m| m).count(), 32);
        assert!(edge[g.idx(1, 7)] && !edge[g.idx(2, 7)]);
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(Preset::from_name("ring").is_err());
        assert_eq!(Preset::from_name("edge_defect").unwrap(), Preset::EdgeDefect);
        assert!(PriorPreset::from_name("nope").is_err());
    }

    #[test]
    fn informed_prior_keeps_rate_priors() {
        let v = PriorPreset::Informed.values();
        assert_eq!(&v[..3], &PRIOR_VALUES[..3]);
        assert_eq!(v[ParamBlock::VAy.index()], 700.0);
    }
}
