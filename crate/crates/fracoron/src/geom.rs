//! Small fixed-capacity point/vector helpers.
//!
//! The spatial dimension is a runtime value between 1 and 3, so points are
//! stored as `[f64; 3]` with unused components pinned to zero. All distance
//! and dot products take the active dimension explicitly.

/// Maximum supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// A point (or vector) in dimension `<= MAX_DIM`; trailing components are zero.
pub type Pt = [f64; MAX_DIM];

/// The zero point.
pub const ORIGIN: Pt = [0.0; MAX_DIM];

#[inline]
pub fn pt1(x: f64) -> Pt {
    [x, 0.0, 0.0]
}

#[inline]
pub fn pt2(x: f64, y: f64) -> Pt {
    [x, y, 0.0]
}

#[inline]
pub fn pt3(x: f64, y: f64, z: f64) -> Pt {
    [x, y, z]
}

/// Builds a point from the first `dim` entries of `c`, zero-filling the rest.
pub fn pt_from_slice(c: &[f64]) -> Pt {
    let mut p = ORIGIN;
    for (i, v) in c.iter().take(MAX_DIM).enumerate() {
        p[i] = *v;
    }
    p
}

#[inline]
pub fn dot(a: &Pt, b: &Pt, dim: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..dim {
        s += a[k] * b[k];
    }
    s
}

#[inline]
pub fn sub(a: &Pt, b: &Pt) -> Pt {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Pt, b: &Pt) -> Pt {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &Pt, c: f64) -> Pt {
    [a[0] * c, a[1] * c, a[2] * c]
}

#[inline]
pub fn norm_sq(a: &Pt, dim: usize) -> f64 {
    dot(a, a, dim)
}

#[inline]
pub fn norm(a: &Pt, dim: usize) -> f64 {
    norm_sq(a, dim).sqrt()
}

#[inline]
pub fn dist(a: &Pt, b: &Pt, dim: usize) -> f64 {
    let d = sub(a, b);
    norm(&d, dim)
}

/// Surface measure of the unit sphere `S^{dim-1}`: 2, 2π, 4π for dim 1..3.
pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Volume of the unit ball in `dim` dimensions.
pub fn ball_volume(dim: usize) -> f64 {
    sphere_area(dim) / dim as f64
}

/// Sums `values` with a fixed pairwise-tree topology.
///
/// Used for every parallel reduction in the crate so that results do not
/// depend on thread scheduling: terms are produced into an indexed buffer
/// and folded here in a deterministic order.
pub fn tree_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let mid = n / 2;
            tree_sum(&values[..mid]) + tree_sum(&values[mid..])
        }
    }
}
