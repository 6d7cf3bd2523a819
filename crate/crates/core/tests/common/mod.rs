#![allow(dead_code)]

pub mod dense;

use pdepet_core::forward::{BoundarySpec, Edge};
use pdepet_core::grid::{Grid, ScalarField};
use pdepet_core::params::{ParamBlock, ParameterSet};
use pdepet_core::{initial_condition, ConcentrationState, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Reference-like parameters with velocities scaled so that `tau |V| / h` stays
/// moderate and diffusivities raised to keep cell Peclet numbers O(1..10).
pub fn scaled_parameters(grid: Grid, seed: u64) -> ParameterSet {
    let mut r = rng(seed);
    let base = [0.9, 0.75, 0.9, 0.3, 0.4, 0.3, 1.5, 7.0, -5.0, 2.0, -1.5, 7.0];
    let mut p = ParameterSet::constant(grid, &base);
    for b in ParamBlock::ALL {
        let v0 = base[b.index()];
        for v in p.block_mut(b).values_mut() {
            *v = v0 * (1.0 + 0.2 * r.random_range(-1.0..1.0));
        }
    }
    p
}

pub fn random_field(grid: Grid, r: &mut ChaCha8Rng, lo: f64, hi: f64) -> ScalarField {
    ScalarField::from_fn(grid, |_, _| r.random_range(lo..hi))
}

pub fn random_state(grid: Grid, r: &mut ChaCha8Rng) -> ConcentrationState {
    ConcentrationState {
        ca: random_field(grid, r, 0.0, 1.0),
        ct: random_field(grid, r, 0.0, 1.0),
        cv: random_field(grid, r, 0.0, 1.0),
        time: 0.0,
    }
}

/// Inflow on the top edge, outflow elsewhere.
pub fn open_boundary(grid: &Grid) -> BoundarySpec {
    BoundarySpec::uniform(grid, &[Edge::Top], [0.5, 0.1, 0.05], [2.0, 1.0, 3.0])
}

pub fn bolus(grid: Grid) -> ConcentrationState {
    initial_condition(grid, 3e-3, 50.0)
}

pub fn solver(tau: f64, n_steps: usize) -> SolverConfig {
    SolverConfig { tau, n_steps, k0: 0.0 }
}
