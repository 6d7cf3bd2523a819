use crate::error::Result;
use crate::params::{ParamBlock, ParameterSet};

/// One central-difference partial derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSample {
    pub block: ParamBlock,
    pub cell: usize,
    pub value: f64,
}

/// `(J(p + eps e) - J(p - eps e)) / (2 eps)` along the unit vector of each sampled cell.
pub fn finite_difference_gradient<F>(
    objective: F,
    p: &ParameterSet,
    cells: &[(ParamBlock, usize)],
    eps: f64,
) -> Result<Vec<FdSample>>
where
    F: Fn(&ParameterSet) -> Result<f64>,
{
    assert!(eps > 0.0, "finite-difference step must be positive");
    let mut out = Vec::with_capacity(cells.len());
    for &(block, cell) in cells {
        let mut plus = p.clone();
        plus.block_mut(block).values_mut()[cell] += eps;
        let mut minus = p.clone();
        minus.block_mut(block).values_mut()[cell] -= eps;
        let value = (objective(&plus)? - objective(&minus)?) / (2.0 * eps);
        out.push(FdSample { block, cell, value });
    }
    Ok(out)
}

/// Central difference of `objective` along `direction`.
pub fn directional_derivative<F>(objective: F, p: &ParameterSet, direction: &ParameterSet, eps: f64) -> Result<f64>
where
    F: Fn(&ParameterSet) -> Result<f64>,
{
    assert!(eps > 0.0, "finite-difference step must be positive");
    let mut plus = p.clone();
    plus.axpy(eps, direction);
    let mut minus = p.clone();
    minus.axpy(-eps, direction);
    Ok((objective(&plus)? - objective(&minus)?) / (2.0 * eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn quadratic(p: &ParameterSet) -> Result<f64> {
        Ok(ParamBlock::ALL
            .into_iter()
            .enumerate()
            .map(|(n, b)| {
                p.block(b)
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(c, &v)| (n + 1) as f64 * v * v + (c as f64) * v)
                    .sum::<f64>()
            })
            .sum())
    }

    #[test]
    fn exact_for_quadratics() {
        let g = Grid::new(3, 3, 1.0, 1.0).unwrap();
        let p = ParameterSet::constant(g, &[0.3; 12]);
        let cells: Vec<_> = ParamBlock::ALL.iter().map(|&b| (b, 4)).collect();
        let fd = finite_difference_gradient(quadratic, &p, &cells, 0.125).unwrap();
        for (n, s) in fd.iter().enumerate() {
            let exact = 2.0 * (n + 1) as f64 * 0.3 + 4.0;
            assert!((s.value - exact).abs() < 1e-12, "{} {}", s.value, exact);
        }
    }

    #[test]
    fn zero_direction_gives_zero() {
        let g = Grid::new(3, 3, 1.0, 1.0).unwrap();
        let p = ParameterSet::constant(g, &[0.3; 12]);
        let d = directional_derivative(quadratic, &p, &ParameterSet::zeros(g), 1e-4).unwrap();
        assert_eq!(d, 0.0);
    }
}
