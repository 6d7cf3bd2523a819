use std::f64::consts::PI;

use super::misfit::{evaluate, evaluate_gradient, Evaluation, ForwardModel, Misfit};
use super::outer::ReconConfig;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::params::{project_in_place, ParamBlock, ParameterSet};

/// Direct solver for `(a - b Δ_h) q = r` with the zero-flux five-point
/// Laplacian, diagonalised by the cosine basis along each axis.
#[derive(Debug, Clone)]
pub struct ScreenedPoisson {
    grid: Grid,
    basis_x: Vec<f64>,
    basis_y: Vec<f64>,
    /// Eigenvalues of `-Δ_h` along each axis (nonnegative).
    eig_x: Vec<f64>,
    eig_y: Vec<f64>,
}

/// Orthonormal cosine basis, `q[i * n + k]`, and the eigenvalues of the 1-D operator.
fn cosine_basis(n: usize, h: f64) -> (Vec<f64>, Vec<f64>) {
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let c = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            q[i * n + k] = c * (PI * k as f64 * (i as f64 + 0.5) / n as f64).cos();
        }
    }
    let eig = (0..n)
        .map(|k| {
            let s = (PI * k as f64 / (2.0 * n as f64)).sin();
            4.0 * s * s / (h * h)
        })
        .collect();
    (q, eig)
}

impl ScreenedPoisson {
    pub fn new(grid: Grid) -> Self {
        let (basis_x, eig_x) = cosine_basis(grid.nx, grid.hx);
        let (basis_y, eig_y) = cosine_basis(grid.ny, grid.hy);
        Self {
            grid,
            basis_x,
            basis_y,
            eig_x,
            eig_y,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Solve `(a - b Δ_h) q = rhs` for `a > 0`, `b >= 0`.
    pub fn solve(&self, a: f64, b: f64, rhs: &ScalarField) -> Result<ScalarField> {
        if !rhs.grid().same_shape(&self.grid) {
            return Err(Error::ShapeMismatch("screened Poisson right-hand side on wrong grid".into()));
        }
        if !(a > 0.0 && b >= 0.0) {
            return Err(Error::InvalidConfig(format!("screened Poisson needs a > 0, b >= 0 (a={a}, b={b})")));
        }
        if b == 0.0 {
            return Ok(rhs.map(|v| v / a));
        }
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let r = rhs.values();
        // t[k, j] = sum_i Qx[i, k] r[i, j]
        let mut t = vec![0.0; nx * ny];
        for j in 0..ny {
            for k in 0..nx {
                t[k + nx * j] = (0..nx).map(|i| self.basis_x[i * nx + k] * r[i + nx * j]).sum();
            }
        }
        // s[k, l] = sum_j t[k, j] Qy[j, l], divided by the eigenvalue
        let mut s = vec![0.0; nx * ny];
        for l in 0..ny {
            for k in 0..nx {
                let v: f64 = (0..ny).map(|j| t[k + nx * j] * self.basis_y[j * ny + l]).sum();
                s[k + nx * l] = v / (a + b * (self.eig_x[k] + self.eig_y[l]));
            }
        }
        // back: t[k, j] = sum_l s[k, l] Qy[j, l]; q[i, j] = sum_k Qx[i, k] t[k, j]
        for j in 0..ny {
            for k in 0..nx {
                t[k + nx * j] = (0..ny).map(|l| s[k + nx * l] * self.basis_y[j * ny + l]).sum();
            }
        }
        let mut q = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                q[i + nx * j] = (0..nx).map(|k| self.basis_x[i * nx + k] * t[k + nx * j]).sum();
            }
        }
        ScalarField::from_vec(self.grid, q)
    }
}

/// One forward-backward update: explicit step on the data gradient,
/// implicit step on `alpha R`, projection onto the bounds.
///
/// Block `b` uses the step `inner_step * block_step[b] * scale / damping`.
pub fn inner_update(
    q: &ParameterSet,
    data_gradient: &ParameterSet,
    cfg: &ReconConfig,
    scale: f64,
    solver: &ScreenedPoisson,
) -> Result<ParameterSet> {
    let reg = &cfg.regularizer;
    let mut out = ParameterSet::zeros(*q.grid());
    for b in ParamBlock::ALL {
        let n = b.index();
        let tau = cfg.inner_step * cfg.block_step[n] * scale / cfg.damping;
        let ta = 2.0 * tau * cfg.alpha * reg.alpha[n];
        let tx = 2.0 * tau * cfg.alpha * reg.xi[n];
        let mut rhs = q.block(b).clone();
        rhs.axpy(-tau, data_gradient.block(b));
        rhs.axpy(ta, reg.prior.block(b));
        *out.block_mut(b) = solver.solve(1.0 + ta, tx, &rhs)?;
    }
    project_in_place(&mut out, &cfg.bounds);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct InnerOutcome {
    pub parameters: ParameterSet,
    pub iterations: usize,
    /// Number of times the step was halved.
    pub halvings: usize,
    /// Step scale in use when the inner loop ended.
    pub scale: f64,
    pub initial_value: f64,
    pub final_value: f64,
}

fn relative_change(a: &ParameterSet, b: &ParameterSet) -> f64 {
    let diff = a.max_abs_diff(b);
    ParamBlock::ALL
        .into_iter()
        .map(|blk| {
            let size = a.block(blk).values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            diff[blk.index()] / size.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

/// Fit the parameters to the EM activities `u_half` with surrogate weights
/// `weight`, starting from `p_k` with step scale `scale`.
pub fn parameter_half_step(
    p_k: &ParameterSet,
    u_half: &[crate::grid::ScalarField],
    weight: &[crate::grid::ScalarField],
    cfg: &ReconConfig,
    model: &ForwardModel,
    scale: f64,
) -> Result<InnerOutcome> {
    let misfit = Misfit::Weighted { target: u_half, weight };
    let solver = ScreenedPoisson::new(*p_k.grid());
    let reg = &cfg.regularizer;
    let mut q = p_k.clone();
    let mut eval: Evaluation = evaluate(model, &q, &misfit, reg, cfg.alpha)?;
    let initial_value = eval.total;
    let mut scale = scale;
    let mut halvings = 0;
    let mut iterations = 0;
    'outer: while iterations < cfg.inner_iterations {
        let grad = evaluate_gradient(model, &q, &eval, &misfit, reg, 0.0)?;
        loop {
            let cand = inner_update(&q, &grad, cfg, scale, &solver)?;
            let ev = evaluate(model, &cand, &misfit, reg, cfg.alpha)?;
            if !ev.total.is_finite() {
                return Err(Error::NonFiniteObjective {
                    iteration: iterations,
                    detail: "inner surrogate objective".into(),
                });
            }
            if ev.total <= eval.total + cfg.monotone_tolerance * eval.total.abs() {
                iterations += 1;
                let change = relative_change(&cand, &q);
                q = cand;
                eval = ev;
                if change < cfg.inner_tolerance {
                    break 'outer;
                }
                break;
            }
            halvings += 1;
            scale *= 0.5;
            if halvings > cfg.max_halvings {
                break 'outer;
            }
        }
    }
    Ok(InnerOutcome {
        parameters: q,
        iterations,
        halvings,
        scale,
        initial_value,
        final_value: eval.total,
    })
}
