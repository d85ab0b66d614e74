//! Galerkin analogue of the zero-exterior energy space: pairwise weights
//! over the grid, restricted to the degrees of freedom inside the annulus.

use rayon::prelude::*;

use crate::domain::{grid_spacing, make_grid, AnnulusDomain, GridFunction};
use crate::error::{Error, Result};
use crate::geom::{dist, tree_sum, Pt};
use crate::params::FracParams;

/// Default cap on `interior² ` stored weights.
pub const DEFAULT_PAIR_BUDGET: usize = 40_000_000;

/// Discrete nonlocal form.
///
/// For zero-exterior grid functions the double sum over the pair set `Q`
/// (all pairs with at least one node in the annulus) reduces to interior
/// pair weights plus a per-node coupling against the exterior grid nodes:
///
/// `a(u,v) = Σ_{i≠j} w_ij (u_i-u_j)(v_i-v_j) + 2 Σ_i E_i u_i v_i`,
///
/// with `w_ij = h^{2N} / |x_i - x_j|^{N+2s}` and `E_i` the summed weight
/// from node `i` to every masked-out node of the bounding box.
#[derive(Debug, Clone)]
pub struct NonlocalForm {
    domain: AnnulusDomain,
    resolution: usize,
    params: FracParams,
    h: f64,
    /// Grid indices of the interior degrees of freedom, ascending.
    interior: Vec<usize>,
    coords: Vec<Pt>,
    /// Dense symmetric interior weights, row-major, zero diagonal.
    weights: Vec<f64>,
    /// Exterior coupling per interior node.
    exterior: Vec<f64>,
    /// Human-readable description of the near-pair policy.
    diagonal_policy: &'static str,
}

/// Assembles the form with the default pair budget.
pub fn assemble_form(
    domain: &AnnulusDomain,
    resolution: usize,
    params: &FracParams,
) -> Result<NonlocalForm> {
    assemble_form_with_budget(domain, resolution, params, DEFAULT_PAIR_BUDGET)
}

/// Assembles the form, failing fast if the interior pair count would exceed
/// `budget`.
pub fn assemble_form_with_budget(
    domain: &AnnulusDomain,
    resolution: usize,
    params: &FracParams,
    budget: usize,
) -> Result<NonlocalForm> {
    if domain.dim() != params.dim() {
        return Err(Error::InvalidParams(
            "domain and parameter dimensions disagree".into(),
        ));
    }
    let grid = make_grid(domain, resolution)?;
    let h = grid_spacing(domain, resolution);
    let interior: Vec<usize> = grid.interior_indices().collect();
    let n = interior.len();
    if n.saturating_mul(n) > budget {
        return Err(Error::PairBudget {
            nodes: n,
            pairs: n * n,
            budget,
        });
    }
    let coords: Vec<Pt> = interior.iter().map(|&i| grid.coord(i)).collect();
    let exterior_coords: Vec<Pt> = (0..grid.len())
        .filter(|&i| !grid.mask()[i])
        .map(|i| grid.coord(i))
        .collect();

    let dim = params.dim();
    let pow = params.dim() as f64 + 2.0 * params.s();
    let w_scale = h.powi(2 * dim as i32);
    // Near-pair policy: pairs closer than the grid spacing are dropped. On a
    // uniform grid this excludes only the self-pairs.
    let min_dist = h * (1.0 - 1e-12);

    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = coords[i];
            let mut row = vec![0.0; n];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = dist(&xi, &coords[j], dim);
                if d < min_dist {
                    continue;
                }
                row[j] = w_scale / d.powf(pow);
            }
            let mut ext_terms: Vec<f64> = exterior_coords
                .iter()
                .map(|xj| {
                    let d = dist(&xi, xj, dim);
                    if d < min_dist {
                        0.0
                    } else {
                        w_scale / d.powf(pow)
                    }
                })
                .collect();
            ext_terms.sort_by(f64::total_cmp);
            let ext = tree_sum(&ext_terms);
            (row, ext)
        })
        .collect();

    let mut weights = vec![0.0; n * n];
    let mut exterior = vec![0.0; n];
    for (i, (row, ext)) in rows.into_iter().enumerate() {
        weights[i * n..(i + 1) * n].copy_from_slice(&row);
        exterior[i] = ext;
    }

    Ok(NonlocalForm {
        domain: *domain,
        resolution,
        params: *params,
        h,
        interior,
        coords,
        weights,
        exterior,
        diagonal_policy: "drop pairs with |x_i - x_j| < h (self-pairs only on a uniform grid)",
    })
}

impl NonlocalForm {
    pub fn domain(&self) -> &AnnulusDomain {
        &self.domain
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn params(&self) -> &FracParams {
        &self.params
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn dof(&self) -> usize {
        self.interior.len()
    }

    pub fn interior_indices(&self) -> &[usize] {
        &self.interior
    }

    pub fn dof_coords(&self) -> &[Pt] {
        &self.coords
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.dof() + j]
    }

    pub fn exterior_coupling(&self) -> &[f64] {
        &self.exterior
    }

    pub fn diagonal_policy(&self) -> &'static str {
        self.diagonal_policy
    }

    /// Extracts the interior degrees of freedom of a grid function.
    pub fn restrict(&self, u: &GridFunction) -> Vec<f64> {
        assert_eq!(u.resolution(), self.resolution);
        self.interior.iter().map(|&i| u.values()[i]).collect()
    }

    /// Writes interior values back into a zero-exterior grid function.
    pub fn extend(&self, dof: &[f64]) -> Result<GridFunction> {
        let mut g = make_grid(&self.domain, self.resolution)?;
        for (k, &i) in self.interior.iter().enumerate() {
            g.set(i, dof[k]);
        }
        Ok(g)
    }

    /// `(Au)_i = (D_i + E_i) u_i - Σ_j w_ij u_j`, so `a(u,v) = 2 uᵀAv`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.dof();
        assert_eq!(u.len(), n);
        (0..n)
            .into_par_iter()
            .map(|i| {
                let row = &self.weights[i * n..(i + 1) * n];
                let mut coupled = 0.0;
                let mut diag = 0.0;
                for j in 0..n {
                    coupled += row[j] * u[j];
                    diag += row[j];
                }
                (diag + self.exterior[i]) * u[i] - coupled
            })
            .collect()
    }

    /// Bilinear form value `a(u,v)`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let av = self.apply(v);
        2.0 * u.iter().zip(&av).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Quadratic form value `a(u,u)` by direct pair summation (independent
    /// of [`NonlocalForm::apply`]; used as a cross-check and for clarity).
    pub fn quadratic_direct(&self, u: &[f64]) -> f64 {
        let n = self.dof();
        let parts: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let row = &self.weights[i * n..(i + 1) * n];
                let mut sum = 0.0;
                for j in 0..n {
                    let d = u[i] - u[j];
                    sum += row[j] * d * d;
                }
                sum + 2.0 * self.exterior[i] * u[i] * u[i]
            })
            .collect();
        tree_sum(&parts)
    }
}
