//! Annular domains and grid functions (the discrete zero-exterior space).

use crate::error::{Error, Result};
use crate::geom::{dist, Pt, MAX_DIM};
use crate::params::FracParams;

/// An axis-aligned box, `lo[k] <= x[k] <= hi[k]` for active axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box_ {
    pub lo: Pt,
    pub hi: Pt,
}

/// The computational domain `Ω = { r_inner < |x - center| < r_outer }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusDomain {
    dim: usize,
    center: Pt,
    r_inner: f64,
    r_outer: f64,
    bounding_box: Box_,
}

impl AnnulusDomain {
    /// Annulus with the tight cubic bounding box `center ± r_outer`.
    pub fn new(dim: usize, center: Pt, r_inner: f64, r_outer: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidParams(format!("dim must be in 1..=3, got {dim}")));
        }
        if !(r_inner > 0.0 && r_outer > r_inner) {
            return Err(Error::InvalidParams(format!(
                "need 0 < r_inner < r_outer, got {r_inner}, {r_outer}"
            )));
        }
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for k in 0..dim {
            lo[k] = center[k] - r_outer;
            hi[k] = center[k] + r_outer;
        }
        Ok(Self {
            dim,
            center,
            r_inner,
            r_outer,
            bounding_box: Box_ { lo, hi },
        })
    }

    /// Replaces the bounding box; it must be cubic and contain the closed annulus.
    pub fn with_bounding_box(mut self, bbox: Box_) -> Result<Self> {
        let w = bbox.hi[0] - bbox.lo[0];
        for k in 0..self.dim {
            let wk = bbox.hi[k] - bbox.lo[k];
            if (wk - w).abs() > 1e-12 * w.abs() {
                return Err(Error::InvalidParams(
                    "bounding box must have equal extents per axis".into(),
                ));
            }
            if bbox.lo[k] > self.center[k] - self.r_outer
                || bbox.hi[k] < self.center[k] + self.r_outer
            {
                return Err(Error::InvalidParams(
                    "bounding box must contain the closed annulus".into(),
                ));
            }
        }
        self.bounding_box = bbox;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> Pt {
        self.center
    }

    pub fn r_inner(&self) -> f64 {
        self.r_inner
    }

    pub fn r_outer(&self) -> f64 {
        self.r_outer
    }

    pub fn bounding_box(&self) -> Box_ {
        self.bounding_box
    }

    /// Strict interior test.
    pub fn contains(&self, x: &Pt) -> bool {
        let r = dist(x, &self.center, self.dim);
        r > self.r_inner && r < self.r_outer
    }

    /// The affine image `x -> factor * (x - center)`: an origin-centered
    /// annulus scaled by `factor`. The Rayleigh quotient is invariant under
    /// this map, which is what lets the solver work in a normalized frame.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        AnnulusDomain::new(
            self.dim,
            [0.0; MAX_DIM],
            self.r_inner * factor,
            self.r_outer * factor,
        )
    }
}

/// Values on a uniform grid over the bounding box, zero outside `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    domain: AnnulusDomain,
    resolution: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
}

/// Minimum number of interior nodes for a usable grid.
pub const MIN_INTERIOR_NODES: usize = 8;

/// Zero-initialized grid over the domain's bounding box.
///
/// The mask is true exactly at nodes strictly inside the annulus.
pub fn make_grid(domain: &AnnulusDomain, resolution: usize) -> Result<GridFunction> {
    if resolution < 4 {
        return Err(Error::InvalidParams(format!(
            "resolution must be at least 4, got {resolution}"
        )));
    }
    let n_nodes = resolution.pow(domain.dim() as u32);
    let mut mask = vec![false; n_nodes];
    let mut interior = 0usize;
    for idx in 0..n_nodes {
        let x = node_coord(domain, resolution, idx);
        if domain.contains(&x) {
            mask[idx] = true;
            interior += 1;
        }
    }
    if interior < MIN_INTERIOR_NODES {
        return Err(Error::DegenerateDomain {
            interior,
            min: MIN_INTERIOR_NODES,
        });
    }
    Ok(GridFunction {
        domain: *domain,
        resolution,
        values: vec![0.0; n_nodes],
        mask,
    })
}

/// Coordinates of node `idx` (row-major) on the uniform grid.
pub fn node_coord(domain: &AnnulusDomain, resolution: usize, idx: usize) -> Pt {
    let bbox = domain.bounding_box();
    let dim = domain.dim();
    let h = grid_spacing(domain, resolution);
    let mut x = [0.0; MAX_DIM];
    let mut rem = idx;
    for k in (0..dim).rev() {
        let i = rem % resolution;
        rem /= resolution;
        x[k] = bbox.lo[k] + i as f64 * h;
    }
    x
}

/// Uniform spacing `h` of a grid with `resolution` nodes per axis.
pub fn grid_spacing(domain: &AnnulusDomain, resolution: usize) -> f64 {
    let bbox = domain.bounding_box();
    (bbox.hi[0] - bbox.lo[0]) / (resolution - 1) as f64
}

impl GridFunction {
    pub fn domain(&self) -> &AnnulusDomain {
        &self.domain
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn spacing(&self) -> f64 {
        grid_spacing(&self.domain, self.resolution)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn coord(&self, idx: usize) -> Pt {
        node_coord(&self.domain, self.resolution, idx)
    }

    /// Interior (masked-in) node indices in increasing order.
    pub fn interior_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
    }

    pub fn interior_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Writes `f(x)` into interior nodes; exterior stays zero.
    pub fn fill_interior(&mut self, mut f: impl FnMut(&Pt) -> f64) {
        for idx in 0..self.values.len() {
            if self.mask[idx] {
                let x = self.coord(idx);
                self.values[idx] = f(&x);
            }
        }
    }

    /// Applies `f` to interior values in place.
    pub fn map_interior(&mut self, mut f: impl FnMut(f64) -> f64) {
        for idx in 0..self.values.len() {
            if self.mask[idx] {
                self.values[idx] = f(self.values[idx]);
            }
        }
    }

    /// Sets one interior value; panics if the node is exterior.
    pub fn set(&mut self, idx: usize, v: f64) {
        assert!(self.mask[idx], "cannot write to an exterior node");
        self.values[idx] = v;
    }

    /// Scales all values by `c`.
    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    /// `self <- self + c * other` on the shared grid.
    pub fn axpy(&mut self, c: f64, other: &GridFunction) {
        assert_eq!(self.values.len(), other.values.len());
        for (v, w) in self.values.iter_mut().zip(&other.values) {
            *v += c * w;
        }
    }

    /// True iff every exterior value is exactly zero and all values finite.
    pub fn zero_exterior_ok(&self) -> bool {
        self.values
            .iter()
            .zip(&self.mask)
            .all(|(v, &m)| v.is_finite() && (m || *v == 0.0))
    }

    /// Positive and negative parts (`u = u⁺ - u⁻`, both nonnegative).
    pub fn split_signs(&self) -> (GridFunction, GridFunction) {
        let mut plus = self.clone();
        let mut minus = self.clone();
        for i in 0..self.values.len() {
            plus.values[i] = self.values[i].max(0.0);
            minus.values[i] = (-self.values[i]).max(0.0);
        }
        (plus, minus)
    }
}

/// Samples a callable into the grid interior (a discrete `X₀` element).
pub fn sample_into_grid(
    domain: &AnnulusDomain,
    resolution: usize,
    f: impl Fn(&Pt) -> f64,
) -> Result<GridFunction> {
    let mut g = make_grid(domain, resolution)?;
    g.fill_interior(|x| f(x));
    Ok(g)
}

/// A `FracParams`-aware count: nodes per axis needed so `h <= target`.
pub fn resolution_for_spacing(domain: &AnnulusDomain, target_h: f64) -> usize {
    let bbox = domain.bounding_box();
    let w = bbox.hi[0] - bbox.lo[0];
    ((w / target_h).ceil() as usize + 1).max(4)
}

/// Guard used by the discrete form assembly: `nodes²` pairs must stay within
/// the budget.
pub fn check_pair_budget(params: &FracParams, nodes: usize, budget: usize) -> Result<()> {
    let _ = params;
    let pairs = nodes.saturating_mul(nodes);
    if pairs > budget {
        return Err(Error::PairBudget {
            nodes,
            pairs,
            budget,
        });
    }
    Ok(())
}
