//! Uniform rectangular grids and the scalar / vector fields living on them.
//!
//! Cells are indexed `(i, j)` with `i` along x (columns) and `j` along y
//! (rows). Storage is row-major: the flat index is `i + nx * j`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    /// Coordinates of the centre of cell (0, 0).
    pub origin: (f64, f64),
}

impl Grid {
    /// Grid of `nx * ny` cells covering `[0, lx] x [0, ly]`.
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells per direction, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "extent must be positive and finite, got {lx}x{ly}"
            )));
        }
        let hx = lx / nx as f64;
        let hy = ly / ny as f64;
        Ok(Self {
            nx,
            ny,
            hx,
            hy,
            origin: (0.5 * hx, 0.5 * hy),
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        i + self.nx * j
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn extent(&self) -> (f64, f64) {
        (self.hx * self.nx as f64, self.hy * self.ny as f64)
    }

    /// Centre of cell `(i, j)`.
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin.0 + i as f64 * self.hx,
            self.origin.1 + j as f64 * self.hy,
        )
    }

    /// Same cell layout, tolerant to rounding in the spacing.
    pub fn same_shape(&self, other: &Grid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && (self.hx - other.hx).abs() <= 1e-12 * self.hx.abs().max(other.hx.abs())
            && (self.hy - other.hy).abs() <= 1e-12 * self.hy.abs().max(other.hy.abs())
    }

    /// Grid with every cell split into `factor x factor` sub-cells.
    pub fn refined(&self, factor: usize) -> Result<Grid> {
        if factor == 0 {
            return Err(Error::InvalidGrid("refinement factor must be >= 1".into()));
        }
        let (lx, ly) = self.extent();
        Grid::new(self.nx * factor, self.ny * factor, lx, ly)
    }
}

/// One real value per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_vec(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "field has {} values, grid {}x{} needs {}",
                values.len(),
                grid.nx,
                grid.ny,
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(i, j));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    pub fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid.same_shape(&other.grid) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{}x{} field vs {}x{} field",
                self.grid.nx, self.grid.ny, other.grid.nx, other.grid.ny
            )))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Cell-midpoint quadrature of the field over the domain.
    pub fn integral(&self) -> f64 {
        self.sum() * self.grid.cell_area()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn dot(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += a * y;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.values {
            *v *= a;
        }
    }

    /// Average over each `factor x factor` block of fine cells.
    pub fn restrict(&self, factor: usize, coarse: Grid) -> Result<ScalarField> {
        if coarse.nx * factor != self.grid.nx || coarse.ny * factor != self.grid.ny {
            return Err(Error::ShapeMismatch(format!(
                "cannot restrict {}x{} by {} onto {}x{}",
                self.grid.nx, self.grid.ny, factor, coarse.nx, coarse.ny
            )));
        }
        let w = 1.0 / (factor * factor) as f64;
        Ok(ScalarField::from_fn(coarse, |i, j| {
            let mut s = 0.0;
            for jj in 0..factor {
                for ii in 0..factor {
                    s += self.at(i * factor + ii, j * factor + jj);
                }
            }
            s * w
        }))
    }

    /// Piecewise-constant prolongation onto a refined grid.
    pub fn prolong(&self, factor: usize, fine: Grid) -> Result<ScalarField> {
        if self.grid.nx * factor != fine.nx || self.grid.ny * factor != fine.ny {
            return Err(Error::ShapeMismatch(format!(
                "cannot prolong {}x{} by {} onto {}x{}",
                self.grid.nx, self.grid.ny, factor, fine.nx, fine.ny
            )));
        }
        Ok(ScalarField::from_fn(fine, |i, j| {
            self.at(i / factor, j / factor)
        }))
    }
}

/// Two components (x, y) per cell, in cm/s for velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    pub fn constant(grid: Grid, vx: f64, vy: f64) -> Self {
        Self {
            x: ScalarField::constant(grid, vx),
            y: ScalarField::constant(grid, vy),
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0, 0.0)
    }

    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_grid_spacing() {
        let g = Grid::new(65, 65, 1.0, 1.0).unwrap();
        assert_eq!(g.len(), 4225);
        assert!((g.hx - 1.0 / 65.0).abs() < 1e-15);
        assert!((g.hy - 1.0 / 65.0).abs() < 1e-15);

        let g = Grid::new(2, 2, 2.0, 2.0).unwrap();
        assert_eq!((g.hx, g.hy), (1.0, 1.0));
        assert_eq!(g.origin, (0.5, 0.5));

        let g = Grid::new(8, 4, 1.0, 1.0).unwrap();
        assert_eq!((g.hx, g.hy), (0.125, 0.25));
        assert_eq!(g.origin, (0.0625, 0.125));
    }

    #[test]
    fn build_grid_rejects_bad_sizes() {
        assert!(Grid::new(1, 4, 1.0, 1.0).is_err());
        assert!(Grid::new(4, 0, 1.0, 1.0).is_err());
        assert!(Grid::new(4, 4, 0.0, 1.0).is_err());
        assert!(Grid::new(4, 4, 1.0, -2.0).is_err());
        assert!(Grid::new(4, 4, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn field_shape_is_checked() {
        let g = Grid::new(3, 2, 1.0, 1.0).unwrap();
        assert!(ScalarField::from_vec(g, vec![0.0; 5]).is_err());
        let f = ScalarField::from_fn(g, |i, j| (i + 10 * j) as f64);
        assert_eq!(f.values(), &[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
    }

    #[test]
    fn restrict_after_prolong_is_identity() {
        let coarse = Grid::new(3, 4, 1.0, 2.0).unwrap();
        let fine = coarse.refined(2).unwrap();
        let f = ScalarField::from_fn(coarse, |i, j| (i * 7 + j * 3) as f64 * 0.5);
        let back = f.prolong(2, fine).unwrap().restrict(2, coarse).unwrap();
        assert_eq!(back, f);
    }
}
