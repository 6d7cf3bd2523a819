mod common;

use common::*;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use pdepet_core::adjoint::{adjoint_step, data_gradient, solve_adjoint, ActivitySource, AdjointState, AdjointTrajectory};
use pdepet_core::forward::step::adi_stages;
use pdepet_core::forward::{BoundarySpec, Edge};
use pdepet_core::grid::{Grid, ScalarField};
use pdepet_core::params::{ParamBlock, ParameterSet, Species};
use pdepet_core::phantom::{phantom, DefectGeometry, Preset, REFERENCE_VALUES};
use pdepet_core::recon::{evaluate, evaluate_gradient, ForwardModel, Misfit};
use pdepet_core::{build_projector, solve_forward, ConcentrationState, SolverConfig};

fn state_dot(a: &ConcentrationState, b: &AdjointState) -> f64 {
    a.ca.dot(&b.eta) + a.ct.dot(&b.mu) + a.cv.dot(&b.gamma)
}

/// Outflow everywhere: the step is linear (no inflow source term).
fn outflow(g: &Grid) -> BoundarySpec {
    BoundarySpec::uniform(g, &[], [0.0; 3], [1.5, 0.5, 2.5])
}

#[test]
fn zero_sources_give_zero_adjoints() {
    let g = Grid::new(5, 4, 1.0, 1.0).unwrap();
    let p = scaled_parameters(g, 1);
    let cfg = solver(0.02, 4);
    let traj = solve_forward(&p, &bolus(g), &open_boundary(&g), &cfg).unwrap();
    let adj = solve_adjoint(&p, &traj, &open_boundary(&g), &cfg, &[]).unwrap();
    assert_eq!(adj.initial.max_abs(), 0.0);
    for s in &adj.steps {
        assert_eq!(s.reaction.max_abs() + s.sweep_x.max_abs() + s.sweep_y.max_abs(), 0.0);
    }
    let src = [ActivitySource { level: 2, weight: ScalarField::zeros(g) }];
    let adj = solve_adjoint(&p, &traj, &open_boundary(&g), &cfg, &src).unwrap();
    assert_eq!(adj.initial.max_abs(), 0.0);
}

#[test]
fn step_transpose_passes_dot_product_test() {
    for (nx, ny, seed) in [(2, 2, 1), (3, 5, 2), (5, 5, 3), (4, 3, 4)] {
        let g = Grid::new(nx, ny, 1.0, 1.0).unwrap();
        let p = scaled_parameters(g, seed);
        let bc = outflow(&g);
        let cfg = SolverConfig { tau: 0.05, n_steps: 1, k0: 0.1 };
        let mut r = rng(seed + 100);
        for _ in 0..5 {
            let x = random_state(g, &mut r);
            let y = random_state(g, &mut r);
            let ax = adi_stages(&x, &p, &bc, &cfg).unwrap().output;
            let y_adj = AdjointState { eta: y.ca.clone(), mu: y.ct.clone(), gamma: y.cv.clone() };
            let aty = adjoint_step(&y_adj, &p, &bc, &cfg).unwrap().sweep_x;
            let lhs = ax.ca.dot(&y.ca) + ax.ct.dot(&y.ct) + ax.cv.dot(&y.cv);
            let rhs = state_dot(&x, &aty);
            assert!(((lhs - rhs) / lhs).abs() < 1e-12, "{lhs} vs {rhs}");
        }
    }
}

/// Dense propagator of `n` homogeneous steps, columns built by stepping unit states.
fn dense_propagator(p: &ParameterSet, bc: &BoundarySpec, cfg: &SolverConfig) -> DMatrix<f64> {
    let g = *p.grid();
    let n = g.len();
    let mut m = DMatrix::<f64>::zeros(3 * n, 3 * n);
    for col in 0..3 * n {
        let mut c = ConcentrationState::zeros(g);
        c.species_mut(Species::ALL[col / n]).values_mut()[col % n] = 1.0;
        for _ in 0..cfg.n_steps {
            c = adi_stages(&c, p, bc, cfg).unwrap().output;
        }
        for (si, s) in Species::ALL.into_iter().enumerate() {
            for cell in 0..n {
                m[(si * n + cell, col)] = c.species(s).values()[cell];
            }
        }
    }
    m
}

#[test]
fn adjoint_matches_dense_transpose_of_the_propagator() {
    let g = Grid::new(4, 4, 1.0, 1.0).unwrap();
    let p = scaled_parameters(g, 5);
    let bc = outflow(&g);
    let cfg = SolverConfig { tau: 0.03, n_steps: 3, k0: 0.2 };
    let n = g.len();
    let w = random_field(g, &mut rng(6), -1.0, 1.0);
    let traj = solve_forward(&p, &random_state(g, &mut rng(7)), &bc, &cfg).unwrap();
    let adj = solve_adjoint(&p, &traj, &bc, &cfg, &[ActivitySource { level: 3, weight: w.clone() }]).unwrap();
    let a = dense_propagator(&p, &bc, &cfg);
    let mut wv = DVector::<f64>::zeros(3 * n);
    for s in 0..3 {
        for c in 0..n {
            wv[s * n + c] = w.values()[c];
        }
    }
    let expected = a.transpose() * wv;
    for (si, s) in Species::ALL.into_iter().enumerate() {
        let got = match s {
            Species::Artery => &adj.initial.eta,
            Species::Tissue => &adj.initial.mu,
            Species::Vein => &adj.initial.gamma,
        };
        for c in 0..n {
            let e = expected[si * n + c];
            assert!((got.values()[c] - e).abs() <= 1e-12 * e.abs().max(1.0), "{} vs {e}", got.values()[c]);
        }
    }
}

/// Reaction-only model: negligible diffusion, no velocity, closed domain.
fn reaction_only(g: Grid, k: [f64; 3]) -> ParameterSet {
    let mut v = [0.0; 12];
    v[..3].copy_from_slice(&k);
    for b in [ParamBlock::DA, ParamBlock::DT, ParamBlock::DV] {
        v[b.index()] = 1e-300;
    }
    ParameterSet::constant(g, &v)
}

/// `I - tau M` in A, T, V order, written out independently.
fn reaction_operator(k: [f64; 3], k0: f64, tau: f64) -> Matrix3<f64> {
    let [k1, k2, k3] = k;
    let m = Matrix3::new(-(k0 + k1), 0.0, k3, k1, -(k0 + k2), 0.0, 0.0, k2, -(k0 + k3));
    Matrix3::identity() - m * tau
}

#[test]
fn reaction_only_adjoint_is_the_transposed_recursion() {
    let g = Grid::new(2, 2, 1.0, 1.0).unwrap();
    let k = [0.9, 0.75, 0.6];
    let p = reaction_only(g, k);
    let bc = BoundarySpec::closed(&g);
    let cfg = SolverConfig { tau: 0.1, n_steps: 6, k0: 0.3 };
    let traj = solve_forward(&p, &random_state(g, &mut rng(3)), &bc, &cfg).unwrap();
    let w = ScalarField::from_vec(g, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
    let adj = solve_adjoint(&p, &traj, &bc, &cfg, &[ActivitySource { level: 6, weight: w.clone() }]).unwrap();
    let rt_inv = reaction_operator(k, cfg.k0, cfg.tau).transpose().try_inverse().unwrap();
    for c in 0..4 {
        let mut lam = Vector3::repeat(w.values()[c]);
        for _ in 0..6 {
            lam = rt_inv * lam;
        }
        let got = [adj.initial.eta.values()[c], adj.initial.mu.values()[c], adj.initial.gamma.values()[c]];
        for s in 0..3 {
            assert!((got[s] - lam[s]).abs() < 1e-13 * lam[s].abs().max(1.0), "{got:?} vs {lam:?}");
        }
    }
}

#[test]
fn reaction_only_k1_gradient_matches_closed_form() {
    let g = Grid::new(2, 2, 1.0, 1.0).unwrap();
    let k = [0.9, 0.75, 0.6];
    let p = reaction_only(g, k);
    let bc = BoundarySpec::closed(&g);
    let cfg = SolverConfig { tau: 0.1, n_steps: 5, k0: 0.0 };
    let c0 = random_state(g, &mut rng(9));
    let traj = solve_forward(&p, &c0, &bc, &cfg).unwrap();
    // J = arterial concentration of cell 2 at the last level
    let mut lam = AdjointState::zeros(g);
    lam.eta.values_mut()[2] = 1.0;
    let mut steps = Vec::new();
    for _ in 0..cfg.n_steps {
        let st = adjoint_step(&lam, &p, &bc, &cfg).unwrap();
        lam = st.sweep_x.clone();
        steps.push(st);
    }
    steps.reverse();
    let adj = AdjointTrajectory { steps, initial: lam };
    let grad = data_gradient(&p, &traj, &adj, &bc, &cfg).unwrap();
    // d/dk1 of 1^T R^-n c0 = sum_m 1^T R^-m (-R^-1 dR R^-1) R^-(n-1-m) c0
    let r = reaction_operator(k, 0.0, cfg.tau);
    let ri = r.try_inverse().unwrap();
    let dr = Matrix3::new(cfg.tau, 0.0, 0.0, -cfg.tau, 0.0, 0.0, 0.0, 0.0, 0.0);
    let c = Vector3::new(c0.ca.values()[2], c0.ct.values()[2], c0.cv.values()[2]);
    let ones = Vector3::new(1.0, 0.0, 0.0);
    let mut expected = 0.0;
    for m in 0..5 {
        let left = ri.pow(m as u32);
        let right = ri.pow((5 - 1 - m) as u32);
        expected += (ones.transpose() * left * (-ri * dr * ri) * right * c)[0];
    }
    let got = grad.partial(ParamBlock::K1, 2);
    assert!((got - expected).abs() < 1e-13 * expected.abs(), "{got} vs {expected}");
    for other in [0, 1, 3] {
        assert!(grad.partial(ParamBlock::K1, other).abs() < 1e-200);
    }
}

#[test]
fn raising_k1_away_from_low_k1_data_increases_the_misfit() {
    let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
    let mut truth = phantom(Preset::Constant, g, &REFERENCE_VALUES, &DefectGeometry::default()).unwrap();
    let low = ScalarField::constant(g, 0.6);
    truth.k1 = low;
    let p = phantom(Preset::Constant, g, &REFERENCE_VALUES, &DefectGeometry::default()).unwrap();
    let bc = BoundarySpec::uniform(&g, &[Edge::Top], [1.0, 0.0, 0.0], [700.0, 50.0, 700.0]);
    let model = ForwardModel::new(bolus(g), bc, SolverConfig { tau: 1e-3, n_steps: 40, k0: 0.0 }, 10).unwrap();
    let k = build_projector(g, 8, 12).unwrap();
    let data = model.expected_data(&model.simulate(&truth).unwrap(), &k).unwrap();
    let misfit = Misfit::Kl { projector: &k, data: &data };
    let reg = pdepet_core::phantom::PriorPreset::Informed.regularizer(g);
    let eval = evaluate(&model, &p, &misfit, &reg, 0.0).unwrap();
    let grad = evaluate_gradient(&model, &p, &eval, &misfit, &reg, 0.0).unwrap();
    let mut dir = ParameterSet::zeros(g);
    dir.k1 = ScalarField::constant(g, 1.0);
    assert!(grad.pair(&dir) > 0.0);
}
