//! Flux boundary conditions on the four edges of the grid.

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Left, Edge::Right, Edge::Bottom, Edge::Top];

    pub fn name(self) -> &'static str {
        match self {
            Edge::Left => "left",
            Edge::Right => "right",
            Edge::Bottom => "bottom",
            Edge::Top => "top",
        }
    }

    pub fn from_name(s: &str) -> Option<Edge> {
        Edge::ALL.into_iter().find(|e| e.name() == s)
    }
}

/// Condition on one boundary face, per species in (A, T, V) order.
///
/// `Inflow` prescribes the flux entering the cell (activity/(cm^2 s)); a
/// zero inflow is an isolated face. `Outflow` removes `v_out * C` through
/// the face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceCondition {
    Inflow { j_in: [f64; 3] },
    Outflow { v_out: [f64; 3] },
}

impl FaceCondition {
    pub const CLOSED: FaceCondition = FaceCondition::Outflow { v_out: [0.0; 3] };
}

/// Boundary faces of every edge: `left`/`right` indexed by row, `bottom`/`top` by column.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub left: Vec<FaceCondition>,
    pub right: Vec<FaceCondition>,
    pub bottom: Vec<FaceCondition>,
    pub top: Vec<FaceCondition>,
}

impl BoundarySpec {
    /// No flux through any face.
    pub fn closed(grid: &Grid) -> Self {
        Self {
            left: vec![FaceCondition::CLOSED; grid.ny],
            right: vec![FaceCondition::CLOSED; grid.ny],
            bottom: vec![FaceCondition::CLOSED; grid.nx],
            top: vec![FaceCondition::CLOSED; grid.nx],
        }
    }

    /// Inflow edges get `j_in`, every other edge gets outflow speed `v_out`.
    pub fn uniform(grid: &Grid, inflow: &[Edge], j_in: [f64; 3], v_out: [f64; 3]) -> Self {
        let cond = |e: Edge| {
            if inflow.contains(&e) {
                FaceCondition::Inflow { j_in }
            } else {
                FaceCondition::Outflow { v_out }
            }
        };
        Self {
            left: vec![cond(Edge::Left); grid.ny],
            right: vec![cond(Edge::Right); grid.ny],
            bottom: vec![cond(Edge::Bottom); grid.nx],
            top: vec![cond(Edge::Top); grid.nx],
        }
    }

    /// Listed edges get their inflow flux; on every other edge species `s`
    /// leaves with the outward normal component of its transport velocity
    /// `transport[s]` (zero where it points inwards).
    pub fn advective(grid: &Grid, inflow: &[(Edge, [f64; 3])], transport: [[f64; 2]; 3]) -> Self {
        let cond = |e: Edge| {
            if let Some(&(_, j_in)) = inflow.iter().find(|(f, _)| *f == e) {
                return FaceCondition::Inflow { j_in };
            }
            let v_out = transport.map(|[wx, wy]| {
                let normal = match e {
                    Edge::Left => -wx,
                    Edge::Right => wx,
                    Edge::Bottom => -wy,
                    Edge::Top => wy,
                };
                normal.max(0.0)
            });
            FaceCondition::Outflow { v_out }
        };
        Self {
            left: vec![cond(Edge::Left); grid.ny],
            right: vec![cond(Edge::Right); grid.ny],
            bottom: vec![cond(Edge::Bottom); grid.nx],
            top: vec![cond(Edge::Top); grid.nx],
        }
    }

    pub fn edge(&self, e: Edge) -> &[FaceCondition] {
        match e {
            Edge::Left => &self.left,
            Edge::Right => &self.right,
            Edge::Bottom => &self.bottom,
            Edge::Top => &self.top,
        }
    }

    pub fn edge_mut(&mut self, e: Edge) -> &mut Vec<FaceCondition> {
        match e {
            Edge::Left => &mut self.left,
            Edge::Right => &mut self.right,
            Edge::Bottom => &mut self.bottom,
            Edge::Top => &mut self.top,
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        for e in Edge::ALL {
            let want = match e {
                Edge::Left | Edge::Right => grid.ny,
                Edge::Bottom | Edge::Top => grid.nx,
            };
            let faces = self.edge(e);
            if faces.len() != want {
                return Err(Error::ShapeMismatch(format!(
                    "{} edge has {} faces, grid needs {}",
                    e.name(),
                    faces.len(),
                    want
                )));
            }
            for f in faces {
                let vals = match f {
                    FaceCondition::Inflow { j_in } => j_in,
                    FaceCondition::Outflow { v_out } => v_out,
                };
                if vals.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::InvalidConfig(format!(
                        "boundary values on the {} edge must be finite and >= 0",
                        e.name()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Same faces on the grid refined by `factor` (each face split in `factor` pieces).
    pub fn refined(&self, factor: usize) -> Self {
        let rep = |v: &Vec<FaceCondition>| {
            v.iter()
                .flat_map(|f| std::iter::repeat_n(*f, factor))
                .collect::<Vec<_>>()
        };
        Self {
            left: rep(&self.left),
            right: rep(&self.right),
            bottom: rep(&self.bottom),
            top: rep(&self.top),
        }
    }

    pub fn is_closed(&self) -> bool {
        Edge::ALL.into_iter().all(|e| {
            self.edge(e).iter().all(|f| match f {
                FaceCondition::Inflow { j_in } => j_in.iter().all(|&v| v == 0.0),
                FaceCondition::Outflow { v_out } => v_out.iter().all(|&v| v == 0.0),
            })
        })
    }
}
