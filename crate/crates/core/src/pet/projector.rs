//! Parallel-beam system matrix with exact line-length weights.

use rayon::prelude::*;

use super::sinogram::SinogramFrame;
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

/// Sparse nonnegative operator from image space (`nx*ny`) to sinogram
/// space (`n_angles*n_bins`), stored by rows and by columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    grid: Grid,
    n_angles: usize,
    n_bins: usize,
    bin_width: f64,
    row_ptr: Vec<usize>,
    row_cols: Vec<u32>,
    row_vals: Vec<f64>,
    col_ptr: Vec<usize>,
    col_rows: Vec<u32>,
    col_vals: Vec<f64>,
    sensitivity: ScalarField,
}

/// Parametric range `[t0, t1]` of the line `p + t d` inside the box, if any.
pub fn clip_to_box(p: (f64, f64), d: (f64, f64), lo: (f64, f64), hi: (f64, f64)) -> Option<(f64, f64)> {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for (pc, dc, l, h) in [(p.0, d.0, lo.0, hi.0), (p.1, d.1, lo.1, hi.1)] {
        if dc.abs() < 1e-15 {
            if pc < l || pc > h {
                return None;
            }
        } else {
            let (a, b) = ((l - pc) / dc, (h - pc) / dc);
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
    }
    (t1 > t0).then_some((t0, t1))
}

/// Geometry of ray `bin` at angle index `angle`: a point on the line and its unit direction.
pub fn ray(grid: &Grid, n_angles: usize, n_bins: usize, angle: usize, bin: usize) -> ((f64, f64), (f64, f64)) {
    let (lx, ly) = grid.extent();
    let lo = (grid.origin.0 - 0.5 * grid.hx, grid.origin.1 - 0.5 * grid.hy);
    let centre = (lo.0 + 0.5 * lx, lo.1 + 0.5 * ly);
    let width = (lx * lx + ly * ly).sqrt() / n_bins as f64;
    let theta = std::f64::consts::PI * angle as f64 / n_angles as f64;
    let (sin, cos) = theta.sin_cos();
    let s = (bin as f64 + 0.5 - 0.5 * n_bins as f64) * width;
    ((centre.0 + s * cos, centre.1 + s * sin), (-sin, cos))
}

/// Pixel intersection lengths of one line (Siddon-style plane crossings).
fn trace(grid: &Grid, p: (f64, f64), d: (f64, f64)) -> Vec<(u32, f64)> {
    let lo = (grid.origin.0 - 0.5 * grid.hx, grid.origin.1 - 0.5 * grid.hy);
    let (lx, ly) = grid.extent();
    let hi = (lo.0 + lx, lo.1 + ly);
    let Some((t0, t1)) = clip_to_box(p, d, lo, hi) else {
        return Vec::new();
    };
    let mut ts = vec![t0, t1];
    if d.0.abs() >= 1e-15 {
        for k in 0..=grid.nx {
            let t = (lo.0 + k as f64 * grid.hx - p.0) / d.0;
            if t > t0 && t < t1 {
                ts.push(t);
            }
        }
    }
    if d.1.abs() >= 1e-15 {
        for k in 0..=grid.ny {
            let t = (lo.1 + k as f64 * grid.hy - p.1) / d.1;
            if t > t0 && t < t1 {
                ts.push(t);
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    let mut out: Vec<(u32, f64)> = Vec::new();
    for w in ts.windows(2) {
        let len = w[1] - w[0];
        if len <= 1e-14 * (lx + ly) {
            continue;
        }
        let tm = 0.5 * (w[0] + w[1]);
        let (x, y) = (p.0 + tm * d.0, p.1 + tm * d.1);
        let i = (((x - lo.0) / grid.hx).floor() as isize).clamp(0, grid.nx as isize - 1) as usize;
        let j = (((y - lo.1) / grid.hy).floor() as isize).clamp(0, grid.ny as isize - 1) as usize;
        let col = grid.idx(i, j) as u32;
        match out.iter_mut().find(|(c, _)| *c == col) {
            Some(e) => e.1 += len,
            None => out.push((col, len)),
        }
    }
    out.sort_by_key(|e| e.0);
    out
}

impl Projector {
    /// `n_angles` equally spaced angles in `[0, pi)`, `n_bins` bins spanning the grid diagonal.
    pub fn new(grid: Grid, n_angles: usize, n_bins: usize) -> Result<Self> {
        if n_angles == 0 || n_bins == 0 {
            return Err(Error::DegenerateGeometry(format!(
                "need at least one angle and one bin, got {n_angles}x{n_bins}"
            )));
        }
        let rows: Vec<Vec<(u32, f64)>> = (0..n_angles * n_bins)
            .into_par_iter()
            .map(|r| {
                let (p, d) = ray(&grid, n_angles, n_bins, r / n_bins, r % n_bins);
                trace(&grid, p, d)
            })
            .collect();
        let triples = rows
            .iter()
            .enumerate()
            .flat_map(|(r, entries)| entries.iter().map(move |&(c, w)| (r as u32, c, w)));
        let (lx, ly) = grid.extent();
        let bin_width = (lx * lx + ly * ly).sqrt() / n_bins as f64;
        Self::from_triples(grid, n_angles, n_bins, bin_width, triples.collect())
    }

    /// Build from `(row, col, weight)` triples; duplicates are summed.
    pub fn from_triples(
        grid: Grid,
        n_angles: usize,
        n_bins: usize,
        bin_width: f64,
        mut triples: Vec<(u32, u32, f64)>,
    ) -> Result<Self> {
        let n_rows = n_angles * n_bins;
        let n_cols = grid.len();
        for &(r, c, w) in &triples {
            if r as usize >= n_rows || c as usize >= n_cols || !(w >= 0.0 && w.is_finite()) {
                return Err(Error::DegenerateGeometry(format!(
                    "bad matrix entry ({r}, {c}, {w}) for a {n_rows}x{n_cols} operator"
                )));
            }
        }
        triples.sort_by_key(|&(r, c, _)| (r, c));
        triples.dedup_by(|b, a| {
            if a.0 == b.0 && a.1 == b.1 {
                a.2 += b.2;
                true
            } else {
                false
            }
        });
        let mut row_ptr = vec![0usize; n_rows + 1];
        for &(r, _, _) in &triples {
            row_ptr[r as usize + 1] += 1;
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let row_cols = triples.iter().map(|t| t.1).collect();
        let row_vals = triples.iter().map(|t| t.2).collect();

        let mut by_col = triples.clone();
        by_col.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; n_cols + 1];
        for &(_, c, _) in &by_col {
            col_ptr[c as usize + 1] += 1;
        }
        for c in 0..n_cols {
            col_ptr[c + 1] += col_ptr[c];
        }
        let col_rows = by_col.iter().map(|t| t.0).collect();
        let col_vals = by_col.iter().map(|t| t.2).collect();

        let mut k = Self {
            grid,
            n_angles,
            n_bins,
            bin_width,
            row_ptr,
            row_cols,
            row_vals,
            col_ptr,
            col_rows,
            col_vals,
            sensitivity: ScalarField::zeros(grid),
        };
        let ones = SinogramFrame::constant(n_angles, n_bins, 1.0, 0);
        k.sensitivity = k.backproject(&ones)?;
        Ok(k)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_rows(&self) -> usize {
        self.n_angles * self.n_bins
    }

    pub fn n_cols(&self) -> usize {
        self.grid.len()
    }

    pub fn nnz(&self) -> usize {
        self.row_vals.len()
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// Backprojection of the all-ones sinogram, `K^T 1`.
    pub fn sensitivity(&self) -> &ScalarField {
        &self.sensitivity
    }

    /// Stored entries of one row as `(col, weight)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.row_cols[span.clone()]
            .iter()
            .zip(&self.row_vals[span])
            .map(|(&c, &w)| (c as usize, w))
    }

    /// Stored entries of one column as `(row, weight)`.
    pub fn column(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.col_ptr[c]..self.col_ptr[c + 1];
        self.col_rows[span.clone()]
            .iter()
            .zip(&self.col_vals[span])
            .map(|(&r, &w)| (r as usize, w))
    }

    /// All entries as `(row, col, weight)` in row-major order.
    pub fn triples(&self) -> Vec<(u32, u32, f64)> {
        (0..self.n_rows())
            .flat_map(|r| self.row(r).map(move |(c, w)| (r as u32, c as u32, w)))
            .collect()
    }

    /// Same operator with every weight multiplied by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Result<Projector> {
        let mut t = self.triples();
        for e in &mut t {
            e.2 *= factor;
        }
        Projector::from_triples(self.grid, self.n_angles, self.n_bins, self.bin_width, t)
    }

    pub fn project(&self, u: &ScalarField) -> Result<SinogramFrame> {
        if !u.grid().same_shape(&self.grid) {
            return Err(Error::ShapeMismatch(format!(
                "image is {}x{}, projector expects {}x{}",
                u.grid().nx,
                u.grid().ny,
                self.grid.nx,
                self.grid.ny
            )));
        }
        let x = u.values();
        let values: Vec<f64> = (0..self.n_rows())
            .into_par_iter()
            .map(|r| self.row(r).map(|(c, w)| w * x[c]).sum())
            .collect();
        Ok(SinogramFrame::from_values(self.n_angles, self.n_bins, values, 0))
    }

    pub fn backproject(&self, g: &SinogramFrame) -> Result<ScalarField> {
        if g.n_angles() != self.n_angles || g.n_bins() != self.n_bins {
            return Err(Error::ShapeMismatch(format!(
                "sinogram is {}x{}, projector expects {}x{}",
                g.n_angles(),
                g.n_bins(),
                self.n_angles,
                self.n_bins
            )));
        }
        let y = g.values();
        let values: Vec<f64> = (0..self.n_cols())
            .into_par_iter()
            .map(|c| self.column(c).map(|(r, w)| w * y[r]).sum())
            .collect();
        ScalarField::from_vec(self.grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_square() {
        let r = clip_to_box((0.5, -1.0), (0.0, 1.0), (0.0, 0.0), (1.0, 1.0)).unwrap();
        assert!((r.0 - 1.0).abs() < 1e-15 && (r.1 - 2.0).abs() < 1e-15);
        assert!(clip_to_box((1.5, 0.0), (0.0, 1.0), (0.0, 0.0), (1.0, 1.0)).is_none());
    }

    #[test]
    fn degenerate_geometry_is_rejected() {
        let g = Grid::new(4, 4, 1.0, 1.0).unwrap();
        assert!(Projector::new(g, 0, 5).is_err());
        assert!(Projector::new(g, 5, 0).is_err());
        assert!(Projector::from_triples(g, 1, 1, 1.0, vec![(0, 99, 1.0)]).is_err());
        assert!(Projector::from_triples(g, 1, 1, 1.0, vec![(0, 1, -1.0)]).is_err());
    }

    #[test]
    fn diagonal_ray_crosses_diagonal_cells() {
        let g = Grid::new(4, 4, 1.0, 1.0).unwrap();
        let entries = trace(&g, (0.5, 0.5), (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2));
        let total: f64 = entries.iter().map(|e| e.1).sum();
        assert!((total - 2f64.sqrt()).abs() < 1e-14);
        for (c, w) in entries {
            let (i, j) = (c as usize % 4, c as usize / 4);
            assert_eq!(i, j);
            assert!((w - 2f64.sqrt() / 4.0).abs() < 1e-14);
        }
    }
}
