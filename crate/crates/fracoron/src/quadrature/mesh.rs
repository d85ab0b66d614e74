//! Feature-graded dyadic meshes for the singular double integrals.
//!
//! A mesh is the leaf set of a quadtree (octree/bintree in 3/1 dimensions)
//! over a cube centered at the field anchor. Cells refine until their side
//! is below the local feature scale divided by the grading quality, so cell
//! size tracks distance to the features the field declares.

use crate::error::{Error, Result};
use crate::geom::{Pt, MAX_DIM};
use crate::quadrature::field::Feature;

#[derive(Debug, Clone, Copy)]
pub struct Cell {
    pub lo: Pt,
    pub hi: Pt,
    pub center: Pt,
    pub side: f64,
}

impl Cell {
    fn new(lo: Pt, side: f64, dim: usize) -> Self {
        let mut hi = lo;
        let mut center = lo;
        for k in 0..dim {
            hi[k] = lo[k] + side;
            center[k] = lo[k] + 0.5 * side;
        }
        Cell {
            lo,
            hi,
            center,
            side,
        }
    }

    /// Distance between the two cell boxes (0 when they touch or overlap).
    pub fn box_distance(&self, other: &Cell, dim: usize) -> f64 {
        let mut d2 = 0.0;
        for k in 0..dim {
            let d = (self.lo[k] - other.hi[k]).max(other.lo[k] - self.hi[k]).max(0.0);
            d2 += d * d;
        }
        d2.sqrt()
    }

    pub fn dist_to_point(&self, p: &Pt, dim: usize) -> f64 {
        let mut d2 = 0.0;
        for k in 0..dim {
            let d = (self.lo[k] - p[k]).max(p[k] - self.hi[k]).max(0.0);
            d2 += d * d;
        }
        d2.sqrt()
    }

    pub fn volume(&self, dim: usize) -> f64 {
        self.side.powi(dim as i32)
    }
}

#[derive(Debug)]
pub struct Mesh {
    pub dim: usize,
    pub anchor: Pt,
    /// Half-extent of the computational region around the anchor: the root
    /// box half-width (and, in 3-D, the radius of the inscribed sphere the
    /// exterior handling works against). Fields are zero outside it.
    pub sphere_radius: f64,
    pub cells: Vec<Cell>,
}

/// Hard cap so a bad feature list cannot exhaust memory.
pub const MAX_CELLS: usize = 400_000;
const MAX_DEPTH: usize = 44;

/// Builds the graded mesh. `quality` is the grading ratio (cells per local
/// feature scale). With `clip_to_sphere` set, leaves fully outside the
/// inscribed sphere are dropped (the 3-D exterior handling works against
/// the sphere; in 1-D/2-D it works against the box and all cells are kept).
pub fn build_mesh(
    dim: usize,
    anchor: Pt,
    sphere_radius: f64,
    features: &[Feature],
    quality: f64,
    clip_to_sphere: bool,
) -> Result<Mesh> {
    assert!(dim >= 1 && dim <= MAX_DIM);
    assert!(sphere_radius > 0.0 && quality >= 1.0);
    let mut root_lo = [0.0; MAX_DIM];
    for k in 0..dim {
        root_lo[k] = anchor[k] - sphere_radius;
    }
    let root = Cell::new(root_lo, 2.0 * sphere_radius, dim);
    let mut cells = Vec::new();
    let mut stack = vec![(root, 0usize)];
    while let Some((cell, depth)) = stack.pop() {
        if clip_to_sphere && cell.dist_to_point(&anchor, dim) > sphere_radius {
            continue;
        }
        let hint = features
            .iter()
            .map(|f| f.hint_over_box(&cell.lo, &cell.hi, dim))
            .fold(f64::INFINITY, f64::min);
        let target = (hint / quality).max(sphere_radius * 2.0f64.powi(-(MAX_DEPTH as i32)));
        if cell.side > target && depth < MAX_DEPTH {
            let half = 0.5 * cell.side;
            for corner in 0..(1usize << dim) {
                let mut lo = cell.lo;
                for k in 0..dim {
                    if corner >> k & 1 == 1 {
                        lo[k] += half;
                    }
                }
                stack.push((Cell::new(lo, half, dim), depth + 1));
            }
        } else {
            cells.push(cell);
            if cells.len() > MAX_CELLS {
                return Err(Error::QuadratureFailure {
                    context: format!("mesh exceeded {MAX_CELLS} cells"),
                    rel_err: f64::INFINITY,
                    rel_tol: 0.0,
                });
            }
        }
    }
    // Deterministic order independent of stack traversal details.
    cells.sort_by(|a, b| {
        a.lo[0]
            .total_cmp(&b.lo[0])
            .then(a.lo[1].total_cmp(&b.lo[1]))
            .then(a.lo[2].total_cmp(&b.lo[2]))
            .then(a.side.total_cmp(&b.side))
    });
    Ok(Mesh {
        dim,
        anchor,
        sphere_radius,
        cells,
    })
}
