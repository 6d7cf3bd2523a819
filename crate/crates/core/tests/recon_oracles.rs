mod common;

use common::*;
use common::dense::dense_inner_update;
use pdepet_core::forward::{BoundarySpec, Edge};
use pdepet_core::grid::{Grid, ScalarField};
use pdepet_core::params::{BlockKind, Bounds, ParamBlock, ParameterSet};
use pdepet_core::pet::{kl_fidelity, Projector, SinogramFrame, SinogramSequence};
use pdepet_core::phantom::{phantom, DefectGeometry, Preset, PriorPreset, REFERENCE_VALUES};
use pdepet_core::recon::{
    em_half_step, inner_update, objective, parameter_half_step, reconstruct, surrogate_weight, ForwardModel,
    ReconConfig, ScreenedPoisson,
};
use pdepet_core::{build_projector, SolverConfig};
use proptest::prelude::*;
use rand::Rng;

fn recon_config(g: Grid) -> ReconConfig {
    let mut cfg = ReconConfig::new(PriorPreset::Informed.regularizer(g));
    cfg.alpha = 0.7;
    cfg.inner_step = 0.3;
    cfg.damping = 1.5;
    cfg.block_step = [1.0, 0.5, 2.0, 1e-3, 2e-3, 1e-3, 3.0, 10.0, 4.0, 1.0, 2.0, 10.0];
    cfg
}

#[test]
fn inner_update_matches_dense_oracle() {
    for (nx, ny) in [(2, 2), (3, 4), (4, 4)] {
        let g = Grid::new(nx, ny, 1.0, 0.7).unwrap();
        let cfg = recon_config(g);
        let mut r = rng(nx as u64 * 10 + ny as u64);
        let q = scaled_parameters(g, 3);
        let mut grad = ParameterSet::zeros(g);
        for b in ParamBlock::ALL {
            for v in grad.block_mut(b).values_mut() {
                *v = r.random_range(-2.0..2.0);
            }
        }
        let scale = 0.75;
        let got = inner_update(&q, &grad, &cfg, scale, &ScreenedPoisson::new(g)).unwrap();
        let want = dense_inner_update(&q, &grad, &cfg, scale);
        for b in ParamBlock::ALL {
            for (c, (v, e)) in got.block(b).values().iter().zip(want.block(b).values()).enumerate() {
                assert!((v - e).abs() <= 1e-12 * e.abs().max(1.0), "{b} cell {c}: {v} vs {e}");
            }
        }
    }
}

#[test]
fn unregularised_update_is_projected_gradient_descent() {
    let g = Grid::new(3, 3, 1.0, 1.0).unwrap();
    let mut cfg = recon_config(g);
    cfg.alpha = 0.0;
    cfg.block_step = [1.0; 12];
    cfg.damping = 1.0;
    let q = scaled_parameters(g, 4);
    let grad = ParameterSet::constant(g, &[5.0; 12]);
    let got = inner_update(&q, &grad, &cfg, 1.0, &ScreenedPoisson::new(g)).unwrap();
    for b in ParamBlock::ALL {
        let (lo, hi) = Bounds::default().interval(b);
        for c in 0..g.len() {
            let e = (q.block(b).values()[c] - cfg.inner_step * 5.0).clamp(lo, hi);
            assert!((got.block(b).values()[c] - e).abs() < 1e-15);
        }
    }
}

fn random_problem(seed: u64) -> (Projector, Vec<ScalarField>, SinogramSequence) {
    let g = Grid::new(7, 6, 1.0, 1.0).unwrap();
    let k = Projector::new(g, 9, 12).unwrap();
    let mut r = rng(seed);
    let u: Vec<ScalarField> = (0..3).map(|_| random_field(g, &mut r, 0.1, 2.0)).collect();
    let frames = (0..3)
        .map(|f| SinogramFrame::from_values(9, 12, (0..108).map(|_| r.random_range(0.0..5.0)).collect(), f))
        .collect();
    (k, u, SinogramSequence::new(frames, 0.5).unwrap())
}

#[test]
fn em_step_matches_counts_and_keeps_fixed_points() {
    for seed in 0..10 {
        let (k, u, f) = random_problem(seed);
        let half = em_half_step(&u, &k, &f).unwrap();
        for (uh, counts) in half.activities.iter().zip(&f.frames) {
            assert!(uh.values().iter().all(|&v| v >= 0.0));
            // only bins the image can reach carry counts into the update
            let reach: f64 = k
                .project(&ScalarField::constant(*uh.grid(), 1.0))
                .unwrap()
                .values()
                .iter()
                .zip(counts.values())
                .map(|(&s, &c)| if s > 0.0 { c } else { 0.0 })
                .sum();
            let predicted = k.project(uh).unwrap().sum();
            assert!(((predicted - reach) / reach).abs() < 1e-8);
        }
        // data generated by u itself is a fixed point
        let exact = SinogramSequence::new(
            u.iter().enumerate().map(|(n, x)| {
                let mut s = k.project(x).unwrap();
                s.frame = n;
                s
            }).collect(),
            0.5,
        )
        .unwrap();
        let again = em_half_step(&u, &k, &exact).unwrap();
        for (a, b) in again.activities.iter().zip(&u) {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!(((x - y) / y).abs() < 1e-8);
            }
        }
    }
}

fn small_model(g: Grid) -> ForwardModel {
    let bc = BoundarySpec::uniform(&g, &[Edge::Top], [0.5, 0.0, 0.0], [7.0, 5.0, 7.0]);
    ForwardModel::new(bolus(g), bc, SolverConfig { tau: 0.01, n_steps: 12, k0: 0.0 }, 4).unwrap()
}

#[test]
fn perfect_fit_objective_is_the_attainable_minimum() {
    let g = Grid::new(6, 6, 1.0, 1.0).unwrap();
    let model = small_model(g);
    let p = scaled_parameters(g, 8);
    let k = build_projector(g, 6, 9).unwrap();
    let f = model.expected_data(&model.simulate(&p).unwrap(), &k).unwrap();
    let reg = PriorPreset::Informed.regularizer(g);
    let j = objective(&p, &f, &k, &model, &reg, 0.0).unwrap();
    assert_eq!(j, kl_fidelity(&f, &f).unwrap().value);
    let mut reg_here = reg.clone();
    reg_here.prior = p.clone();
    reg_here.xi = [0.0; 12];
    assert_eq!(objective(&p, &f, &k, &model, &reg_here, 3.0).unwrap(), j);
}

#[test]
fn stationary_start_stays_put() {
    let g = Grid::new(6, 6, 1.0, 1.0).unwrap();
    let model = small_model(g);
    let mut cfg = ReconConfig::new(PriorPreset::Informed.regularizer(g));
    cfg.regularizer.prior = ParameterSet::constant(g, &[0.9, 0.75, 0.9, 0.3, 0.4, 0.3, 1.5, 7.0, -5.0, 2.0, -1.5, 7.0]);
    cfg.alpha = 100.0;
    cfg.outer_iterations = 3;
    let p0 = cfg.regularizer.prior.clone();
    let k = build_projector(g, 6, 9).unwrap();
    let f = model.expected_data(&model.simulate(&p0).unwrap(), &k).unwrap();
    let (p, report) = reconstruct(&f, &k, &model, &cfg).unwrap();
    let diff = p.max_abs_diff(&p0);
    assert!(diff.iter().all(|&d| d <= 1e-12), "{diff:?}");
    assert!(report.converged);
}

#[test]
fn zero_misfit_half_step_leaves_prior_unchanged() {
    let g = Grid::new(5, 5, 1.0, 1.0).unwrap();
    let model = small_model(g);
    let mut cfg = ReconConfig::new(PriorPreset::Informed.regularizer(g));
    let p = ParameterSet::constant(g, &[0.9, 0.75, 0.9, 0.3, 0.4, 0.3, 1.5, 7.0, -5.0, 2.0, -1.5, 7.0]);
    cfg.regularizer.prior = p.clone();
    let u = model.sampling.sample(&model.simulate(&p).unwrap()).unwrap();
    let w = surrogate_weight(&u, &ScalarField::constant(g, 1.0), 1e-9).unwrap();
    let out = parameter_half_step(&p, &u, &w, &cfg, &model, 1.0).unwrap();
    assert!(out.parameters.max_abs_diff(&p).iter().all(|&d| d == 0.0));
}

fn noisy_run(seed: u64) -> (ParameterSet, pdepet_core::ReconReport, Bounds) {
    let g = Grid::new(6, 6, 1.0, 1.0).unwrap();
    let model = small_model(g);
    let truth = phantom(Preset::InnerDefect, g, &[0.9, 0.75, 0.9, 0.3, 0.4, 0.3, 1.5, 7.0, -5.0, 2.0, -1.5, 7.0], &DefectGeometry::default()).unwrap();
    let k = build_projector(g, 6, 9).unwrap().scaled(50.0).unwrap();
    let f = pdepet_core::pet::sample_poisson(&model.expected_data(&model.simulate(&truth).unwrap(), &k).unwrap(), 1.0, seed).unwrap();
    let mut cfg = ReconConfig::new(PriorPreset::Informed.regularizer(g));
    cfg.regularizer.prior = ParameterSet::constant(g, &[0.5, 0.5, 0.5, 0.3, 0.4, 0.3, 1.5, 7.0, -5.0, 2.0, -1.5, 7.0]);
    cfg.outer_iterations = 4;
    cfg.inner_iterations = 2;
    cfg.inner_step = 10.0;
    let bounds = cfg.bounds;
    let (p, report) = reconstruct(&f, &k, &model, &cfg).unwrap();
    (p, report, bounds)
}

#[test]
fn reconstruction_is_deterministic_feasible_and_monotone() {
    let (p1, r1, bounds) = noisy_run(5);
    let (p2, r2, _) = noisy_run(5);
    assert_eq!(p1, p2);
    let strip = |r: &pdepet_core::ReconReport| {
        r.records.iter().map(|x| { let mut y = x.clone(); y.seconds = 0.0; y }).collect::<Vec<_>>()
    };
    assert_eq!(strip(&r1), strip(&r2));
    assert!(bounds.contains(&p1));
    for w in r1.objectives().windows(2) {
        assert!(w[1] <= w[0] + 1e-8 * w[0].abs());
    }
    assert!(r1.records.len() >= 2);
}

#[test]
fn empty_data_is_refused() {
    let g = Grid::new(4, 4, 1.0, 1.0).unwrap();
    let model = small_model(g);
    let k = build_projector(g, 4, 5).unwrap();
    let f = SinogramSequence::new((0..4).map(|n| SinogramFrame::constant(4, 5, 0.0, n)).collect(), model.frame_duration()).unwrap();
    let cfg = ReconConfig::new(PriorPreset::Informed.regularizer(g));
    assert!(matches!(reconstruct(&f, &k, &model, &cfg), Err(pdepet_core::Error::NoCounts)));
}

#[test]
fn reference_presets_are_feasible() {
    let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
    for preset in Preset::ALL {
        let p = phantom(preset, g, &REFERENCE_VALUES, &DefectGeometry::default()).unwrap();
        assert!(Bounds::default().contains(&p));
    }
    for b in ParamBlock::ALL {
        if b.kind() == BlockKind::Diffusivity {
            assert!(REFERENCE_VALUES[b.index()] >= Bounds::default().d_min);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fidelity_gap_is_nonnegative(f in proptest::collection::vec(0.0f64..20.0, 1..30), scale in proptest::collection::vec(0.05f64..5.0, 30)) {
        let n = f.len();
        let counts = SinogramSequence::new(vec![SinogramFrame::from_values(1, n, f.iter().map(|v| v.floor()).collect(), 0)], 1.0).unwrap();
        let expected = SinogramSequence::new(vec![SinogramFrame::from_values(1, n, f.iter().zip(&scale).map(|(v, s)| (v.floor() + 0.5) * s).collect(), 0)], 1.0).unwrap();
        let gap = kl_fidelity(&expected, &counts).unwrap().value - kl_fidelity(&counts, &counts).unwrap().value;
        prop_assert!(gap >= -1e-9);
    }
}
