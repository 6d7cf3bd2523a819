use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::misfit::{evaluate, evaluate_gradient, ForwardModel, Misfit};
use crate::adjoint::{directional_derivative, GradientSet};
use crate::error::Result;
use crate::params::{ParamBlock, ParameterSet};
use crate::regularizer::RegularizerConfig;

/// One analytic-versus-finite-difference comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckRow {
    pub block: ParamBlock,
    /// Cell of a unit perturbation, or `None` for a random direction over the block.
    pub cell: Option<usize>,
    pub analytic: f64,
    pub fd: f64,
    /// Step (relative to the block magnitude) giving the best agreement.
    pub eps: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub rows: Vec<GradcheckRow>,
}

impl GradcheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_err).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("block,cell,analytic,fd,rel_err\n");
        for r in &self.rows {
            let cell = r.cell.map_or_else(|| "dir".to_string(), |c| c.to_string());
            let _ = writeln!(s, "{},{},{:e},{:e},{:e}", r.block, cell, r.analytic, r.fd, r.rel_err);
        }
        s
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Compare the adjoint gradient of `misfit + alpha R` with central
/// differences, per block along a random direction and at the cell with the
/// largest partial derivative. Steps are `eps * max|p_b|` for each `eps` in
/// `eps_sweep`; the best agreement is kept.
#[allow(clippy::too_many_arguments)]
pub fn gradient_check(
    model: &ForwardModel,
    p: &ParameterSet,
    misfit: &Misfit<'_>,
    reg: &RegularizerConfig,
    alpha: f64,
    eps_sweep: &[f64],
    seed: u64,
) -> Result<GradcheckReport> {
    let eval = evaluate(model, p, misfit, reg, alpha)?;
    let grad: GradientSet = evaluate_gradient(model, p, &eval, misfit, reg, alpha)?;
    let objective = |q: &ParameterSet| Ok(evaluate(model, q, misfit, reg, alpha)?.total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = *p.grid();
    let mut rows = Vec::new();
    for b in ParamBlock::ALL {
        let magnitude = p.block(b).values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let magnitude = if magnitude > 0.0 { magnitude } else { 1.0 };

        let mut dir = ParameterSet::zeros(g);
        for v in dir.block_mut(b).values_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let best_cell = grad
            .block(b)
            .values()
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .map(|(c, _)| c)
            .unwrap_or(0);
        let mut unit = ParameterSet::zeros(g);
        unit.block_mut(b).values_mut()[best_cell] = 1.0;

        for (cell, d) in [(None, dir), (Some(best_cell), unit)] {
            let analytic = grad.pair(&d);
            let mut best: Option<(f64, f64, f64)> = None;
            for &eps in eps_sweep {
                let fd = directional_derivative(objective, p, &d, eps * magnitude)?;
                let e = rel_err(analytic, fd);
                if best.is_none_or(|(_, _, be)| e < be) {
                    best = Some((fd, eps, e));
                }
            }
            let (fd, eps, rel_err) = best.expect("eps sweep must not be empty");
            rows.push(GradcheckRow {
                block: b,
                cell,
                analytic,
                fd,
                eps,
                rel_err,
            });
        }
    }
    Ok(GradcheckReport { rows })
}
