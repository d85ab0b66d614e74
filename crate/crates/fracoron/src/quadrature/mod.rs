//! Continuum norms: Gagliardo seminorm, inner product, critical integrals,
//! and the Rayleigh quotient for closed-form fields.

mod engine;
pub mod field;
pub mod mesh;

pub use field::{Decay, Feature, FieldFn};

use crate::error::{Error, Result};
use crate::geom::{dist, Pt};
use crate::params::{FracParams, QuadratureConfig};
use engine::{bilinear_form, local_sum, lp_from_prepared, Prepared};

/// `‖u‖² = ∬ |u(x)-u(y)|² / |x-y|^{N+2s} dx dy`.
pub fn gagliardo_sq(u: &FieldFn, params: &FracParams, q: &QuadratureConfig) -> Result<f64> {
    let prep = Prepared::new(&[u], params, q)?;
    bilinear_form(&prep, 0, 0, q)
}

/// `<u,v> = ∬ (u(x)-u(y))(v(x)-v(y)) / |x-y|^{N+2s} dx dy`.
pub fn inner(u: &FieldFn, v: &FieldFn, params: &FracParams, q: &QuadratureConfig) -> Result<f64> {
    let prep = Prepared::new(&[u, v], params, q)?;
    bilinear_form(&prep, 0, 1, q)
}

/// `∫ |u|^p dx` with an analytic tail beyond the mesh for decaying fields.
pub fn lp_integral(u: &FieldFn, p: f64, params: &FracParams, q: &QuadratureConfig) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::InvalidParams(format!("lp_integral needs p >= 1, got {p}")));
    }
    let prep = Prepared::new(&[u], params, q)?;
    lp_from_prepared(&prep, 0, p, params, q)
}

/// Rayleigh quotient `‖u‖² / N(u)` with `N(u) = (∫|u|^{2N/(N-2s)})^{(N-2s)/N}`.
pub fn rayleigh(u: &FieldFn, params: &FracParams, q: &QuadratureConfig) -> Result<f64> {
    let prep = Prepared::new(&[u], params, q)?;
    let p = params.critical_p();
    let lp = lp_from_prepared(&prep, 0, p, params, q)?;
    if !(lp > 0.0) {
        return Err(Error::ZeroFunction("rayleigh"));
    }
    let gag = bilinear_form(&prep, 0, 0, q)?;
    Ok(gag / lp.powf((params.dim() as f64 - 2.0 * params.s()) / params.dim() as f64))
}

/// Critical-mass barycenter `∫_{B_K} x |u(x)|^p dx` for a field with
/// `∫|u|^p = 1`; `K` is measured from the origin.
pub fn barycenter_field(
    u: &FieldFn,
    k_radius: f64,
    params: &FracParams,
    q: &QuadratureConfig,
) -> Result<Pt> {
    let prep = Prepared::new(&[u], params, q)?;
    let p = params.critical_p();
    let dim = params.dim();
    let origin = [0.0; 3];
    let mut out = [0.0; 3];
    for k in 0..dim {
        out[k] = local_sum(&prep, |x, vals| {
            let v = vals[0].abs();
            if v == 0.0 || dist(x, &origin, dim) > k_radius {
                0.0
            } else {
                x[k] * v.powf(p)
            }
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{pt1, ORIGIN};

    fn params_1d() -> FracParams {
        FracParams::new(1, 0.25).unwrap()
    }

    /// Smooth compactly supported 1-D test field: a bump of width ~1.
    fn bump_field() -> FieldFn {
        let f = |x: &Pt| -> f64 {
            let t = x[0];
            if t.abs() >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - t * t)).exp()
            }
        };
        let g = move |x: &Pt| -> Pt {
            let t = x[0];
            if t.abs() >= 1.0 {
                ORIGIN
            } else {
                let e = (1.0 - 1.0 / (1.0 - t * t)).exp();
                let d = -2.0 * t / ((1.0 - t * t) * (1.0 - t * t));
                pt1(e * d)
            }
        };
        FieldFn::compact(f, g, 1.0, 0.5)
    }

    #[test]
    fn zero_field_has_zero_seminorm() {
        let params = params_1d();
        let q = QuadratureConfig::standard();
        let z = FieldFn::zero();
        assert_eq!(gagliardo_sq(&z, &params, &q).unwrap(), 0.0);
        assert_eq!(lp_integral(&z, 2.0, &params, &q).unwrap(), 0.0);
    }

    #[test]
    fn inner_with_zero_vanishes_and_is_symmetric() {
        let params = params_1d();
        let q = QuadratureConfig::standard();
        let u = bump_field();
        let z = FieldFn::zero();
        let uz = inner(&u, &z, &params, &q).unwrap();
        assert!(uz.abs() < 1e-12);
        let uu = inner(&u, &u, &params, &q).unwrap();
        let gg = gagliardo_sq(&u, &params, &q).unwrap();
        assert!((uu - gg).abs() <= 1e-10 * gg.abs().max(1.0));
    }

    #[test]
    fn rayleigh_is_scale_invariant() {
        let params = params_1d();
        let q = QuadratureConfig::standard();
        let u = bump_field();
        let r1 = rayleigh(&u, &params, &q).unwrap();
        let r2 = rayleigh(&u.scaled(2.0), &params, &q).unwrap();
        assert!((r1 - r2).abs() <= 1e-9 * r1, "{r1} vs {r2}");
    }

    #[test]
    fn rayleigh_rejects_zero() {
        let params = params_1d();
        let q = QuadratureConfig::standard();
        match rayleigh(&FieldFn::zero(), &params, &q) {
            Err(Error::ZeroFunction(_)) => {}
            other => panic!("expected zero-function error, got {other:?}"),
        }
    }

    #[test]
    fn missing_gradient_without_lipschitz_is_a_capability_error() {
        let params = params_1d();
        let q = QuadratureConfig::standard();
        let u = FieldFn::new(|x: &Pt| (1.0 - x[0] * x[0]).max(0.0), 1.0, Decay::Zero)
            .with_feature(Feature::Point {
                at: ORIGIN,
                scale: 1.0,
            });
        match gagliardo_sq(&u, &params, &q) {
            Err(Error::Capability(_)) => {}
            other => panic!("expected capability error, got {other:?}"),
        }
        // With a Lipschitz constant the engine accepts the field.
        let u = u.with_lipschitz(2.0);
        assert!(gagliardo_sq(&u, &params, &q).unwrap() > 0.0);
    }
}
