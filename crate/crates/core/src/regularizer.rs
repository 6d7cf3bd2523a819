//! Quadratic prior + smoothness regulariser on the parameter blocks.
//!
//! `R(p) = sum_b  ∫ alpha_b (p_b - p*_b)^2 + xi_b |∇p_b|^2 dx`
//!
//! with cell-midpoint quadrature and forward differences (no flux across
//! the outer boundary). Gradients are returned with respect to the
//! area-weighted inner product, so the directional derivative along `q` is
//! `cell_area * sum(g * q)`.

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::params::{BlockValues, ParamBlock, ParameterSet};

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizerConfig {
    /// Prior (a-priori) value for every block.
    pub prior: ParameterSet,
    /// Weight of the squared distance to the prior.
    pub alpha: BlockValues,
    /// Weight of the squared gradient norm.
    pub xi: BlockValues,
}

impl RegularizerConfig {
    pub fn validate(&self) -> Result<()> {
        self.prior.check_consistent()?;
        for b in ParamBlock::ALL {
            let (a, x) = (self.alpha[b.index()], self.xi[b.index()]);
            if !(a.is_finite() && x.is_finite() && a >= 0.0 && x >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "regulariser weights for {b} must be finite and >= 0 (alpha={a}, xi={x})"
                )));
            }
        }
        Ok(())
    }

    /// Same configuration with all weights multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for n in 0..12 {
            out.alpha[n] *= factor;
            out.xi[n] *= factor;
        }
        out
    }
}

/// Sum of squared forward differences, each divided by the spacing squared.
fn gradient_energy(f: &ScalarField) -> f64 {
    let g = *f.grid();
    let (ihx2, ihy2) = (1.0 / (g.hx * g.hx), 1.0 / (g.hy * g.hy));
    let mut e = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = f.at(i, j);
            if i + 1 < g.nx {
                let d = f.at(i + 1, j) - c;
                e += d * d * ihx2;
            }
            if j + 1 < g.ny {
                let d = f.at(i, j + 1) - c;
                e += d * d * ihy2;
            }
        }
    }
    e
}

/// Five-point Laplacian with zero-flux closure at the outer boundary.
pub fn neumann_laplacian(f: &ScalarField) -> ScalarField {
    let g = *f.grid();
    let (ihx2, ihy2) = (1.0 / (g.hx * g.hx), 1.0 / (g.hy * g.hy));
    ScalarField::from_fn(g, |i, j| {
        let c = f.at(i, j);
        let mut s = 0.0;
        if i > 0 {
            s += (f.at(i - 1, j) - c) * ihx2;
        }
        if i + 1 < g.nx {
            s += (f.at(i + 1, j) - c) * ihx2;
        }
        if j > 0 {
            s += (f.at(i, j - 1) - c) * ihy2;
        }
        if j + 1 < g.ny {
            s += (f.at(i, j + 1) - c) * ihy2;
        }
        s
    })
}

pub fn regularizer_value(p: &ParameterSet, r: &RegularizerConfig) -> Result<f64> {
    p.check_same_grid(&r.prior)?;
    let area = p.grid().cell_area();
    let mut total = 0.0;
    for b in ParamBlock::ALL {
        let (alpha, xi) = (r.alpha[b.index()], r.xi[b.index()]);
        let field = p.block(b);
        if alpha != 0.0 {
            let dist: f64 = field
                .values()
                .iter()
                .zip(r.prior.block(b).values())
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            total += alpha * dist * area;
        }
        if xi != 0.0 {
            total += xi * gradient_energy(field) * area;
        }
    }
    Ok(total)
}

/// L2 gradient: `2 alpha_b (p_b - p*_b) - 2 xi_b Δ_h p_b` for every block.
pub fn regularizer_gradient(p: &ParameterSet, r: &RegularizerConfig) -> Result<ParameterSet> {
    p.check_same_grid(&r.prior)?;
    let mut out = ParameterSet::zeros(*p.grid());
    for b in ParamBlock::ALL {
        let (alpha, xi) = (r.alpha[b.index()], r.xi[b.index()]);
        let field = p.block(b);
        let prior = r.prior.block(b);
        let lap = if xi != 0.0 {
            Some(neumann_laplacian(field))
        } else {
            None
        };
        let dst = out.block_mut(b).values_mut();
        for (n, d) in dst.iter_mut().enumerate() {
            let mut v = 2.0 * alpha * (field.values()[n] - prior.values()[n]);
            if let Some(l) = &lap {
                v -= 2.0 * xi * l.values()[n];
            }
            *d = v;
        }
    }
    Ok(out)
}

/// Area-weighted pairing of a gradient with a direction.
pub fn l2_pairing(gradient: &ParameterSet, direction: &ParameterSet) -> f64 {
    gradient.dot(direction) * gradient.grid().cell_area()
}
