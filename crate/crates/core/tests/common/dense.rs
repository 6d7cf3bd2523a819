//! Dense reference implementations of the forward step and the inner
//! parameter update, for grids small enough to assemble full matrices.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use pdepet_core::forward::{BoundarySpec, Edge, FaceCondition};
use pdepet_core::grid::{Grid, ScalarField};
use pdepet_core::params::{ParamBlock, ParameterSet, Species};
use pdepet_core::recon::ReconConfig;
use pdepet_core::{ConcentrationState, SolverConfig};

pub fn bern(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x / x.exp_m1()
    }
}

/// Dense matrix and right-hand side of one transport sweep for one species,
/// assembled cell by cell from the face fluxes.
pub fn dense_sweep(p: &ParameterSet, bc: &BoundarySpec, tau: f64, s: Species, along_x: bool) -> (DMatrix<f64>, DVector<f64>) {
    let g = *p.grid();
    let n = g.len();
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    let d = p.diffusivity(s);
    let v = p.velocity(s);
    let (vel, h) = if along_x { (&v.x, g.hx) } else { (&v.y, g.hy) };
    let r = tau / h;
    let (len, lines) = if along_x { (g.nx, g.ny) } else { (g.ny, g.nx) };
    let cell = |line: usize, m: usize| if along_x { g.idx(m, line) } else { g.idx(line, m) };
    for line in 0..lines {
        for m in 0..len - 1 {
            let (l, rr) = (cell(line, m), cell(line, m + 1));
            let df = 0.5 * (d.values()[l] + d.values()[rr]);
            let vf = -0.5 * (vel.values()[l] + vel.values()[rr]);
            let pe = vf * h / df;
            let (cl, cr) = (df / h * bern(-pe), df / h * bern(pe));
            // flux F = cl C_l - cr C_r leaves l and enters rr
            a[(l, l)] += r * cl;
            a[(l, rr)] -= r * cr;
            a[(rr, l)] -= r * cl;
            a[(rr, rr)] += r * cr;
        }
        let (lo_edge, hi_edge) = if along_x { (Edge::Left, Edge::Right) } else { (Edge::Bottom, Edge::Top) };
        for (edge, m) in [(lo_edge, 0), (hi_edge, len - 1)] {
            let c = cell(line, m);
            match bc.edge(edge)[line] {
                FaceCondition::Inflow { j_in } => rhs[c] += r * j_in[s.index()],
                FaceCondition::Outflow { v_out } => a[(c, c)] += r * v_out[s.index()],
            }
        }
    }
    (a, rhs)
}

pub fn to_vec(f: &ScalarField) -> DVector<f64> {
    DVector::from_column_slice(f.values())
}

/// One step through dense solves, returning (after_x, after_y, output) per species in A, T, V order.
pub fn dense_step(c: &ConcentrationState, p: &ParameterSet, bc: &BoundarySpec, cfg: &SolverConfig) -> [[DVector<f64>; 3]; 3] {
    let mut after_x = Vec::new();
    let mut after_y = Vec::new();
    for s in Species::ALL {
        let (ax, bx) = dense_sweep(p, bc, cfg.tau, s, true);
        let x = ax.lu().solve(&(to_vec(c.species(s)) + bx)).unwrap();
        let (ay, by) = dense_sweep(p, bc, cfg.tau, s, false);
        let y = ay.lu().solve(&(x.clone() + by)).unwrap();
        after_x.push(x);
        after_y.push(y);
    }
    let n = p.grid().len();
    let mut out = [DVector::zeros(n), DVector::zeros(n), DVector::zeros(n)];
    for cell in 0..n {
        let (k1, k2, k3, k0, t) = (p.k1.values()[cell], p.k2.values()[cell], p.k3.values()[cell], cfg.k0, cfg.tau);
        // dC/dt = M C in A, T, V order
        let m = Matrix3::new(
            -(k0 + k1), 0.0, k3,
            k1, -(k0 + k2), 0.0,
            0.0, k2, -(k0 + k3),
        );
        let rm = Matrix3::identity() - m * t;
        let b = Vector3::new(after_y[0][cell], after_y[1][cell], after_y[2][cell]);
        let x = rm.lu().solve(&b).unwrap();
        for s in 0..3 {
            out[s][cell] = x[s];
        }
    }
    let ax = [after_x[0].clone(), after_x[1].clone(), after_x[2].clone()];
    let ay = [after_y[0].clone(), after_y[1].clone(), after_y[2].clone()];
    [ax, ay, out]
}

/// Zero-flux five-point Laplacian as a dense matrix.
pub fn dense_laplacian(g: &Grid) -> DMatrix<f64> {
    let n = g.len();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.idx(i, j);
            let mut link = |o: usize, h: f64| {
                l[(c, o)] += 1.0 / (h * h);
                l[(c, c)] -= 1.0 / (h * h);
            };
            if i > 0 {
                link(g.idx(i - 1, j), g.hx);
            }
            if i + 1 < g.nx {
                link(g.idx(i + 1, j), g.hx);
            }
            if j > 0 {
                link(g.idx(i, j - 1), g.hy);
            }
            if j + 1 < g.ny {
                link(g.idx(i, j + 1), g.hy);
            }
        }
    }
    l
}

/// Proximal step of every block by a dense solve, clamped to the bounds.
pub fn dense_inner_update(q: &ParameterSet, grad: &ParameterSet, cfg: &ReconConfig, scale: f64) -> ParameterSet {
    let g = *q.grid();
    let lap = dense_laplacian(&g);
    let n = g.len();
    let mut out = ParameterSet::zeros(g);
    for b in ParamBlock::ALL {
        let k = b.index();
        let tau = cfg.inner_step * cfg.block_step[k] * scale / cfg.damping;
        let (a, x) = (cfg.alpha * cfg.regularizer.alpha[k], cfg.alpha * cfg.regularizer.xi[k]);
        let m = DMatrix::<f64>::identity(n, n) * (1.0 + 2.0 * tau * a) - &lap * (2.0 * tau * x);
        let rhs = DVector::from_iterator(
            n,
            (0..n).map(|c| {
                q.block(b).values()[c] - tau * grad.block(b).values()[c]
                    + 2.0 * tau * a * cfg.regularizer.prior.block(b).values()[c]
            }),
        );
        let sol = m.lu().solve(&rhs).unwrap();
        let (lo, hi) = cfg.bounds.interval(b);
        for (v, s) in out.block_mut(b).values_mut().iter_mut().zip(sol.iter()) {
            *v = s.clamp(lo, hi);
        }
    }
    out
}
