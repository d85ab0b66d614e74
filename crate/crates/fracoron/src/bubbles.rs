//! The extremal bubble family, the radial cutoff, truncated bubbles, the
//! critical-norm normalization, and the radial parameter interpolation used
//! by the initial min-max family.

use crate::error::{Error, Result};
use crate::geom::{norm, scale as pt_scale, sub, Pt, ORIGIN};
use crate::params::{FracParams, QuadratureConfig};
use crate::quadrature::{lp_integral, Decay, Feature, FieldFn};

/// `x^e` with fast paths for the exponents the parameter grid produces.
#[inline]
pub(crate) fn pow_fast(x: f64, e: f64) -> f64 {
    if e == 0.5 {
        x.sqrt()
    } else if e == 0.25 {
        x.sqrt().sqrt()
    } else if e == 0.75 {
        let r = x.sqrt();
        r * r.sqrt()
    } else if e == 1.0 {
        x
    } else {
        x.powf(e)
    }
}

/// The profile `U_{ε,z}(x) = (ε / (ε² + |x-z|²))^{(N-2s)/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bubble {
    pub eps: f64,
    pub z: Pt,
}

impl Bubble {
    pub fn new(eps: f64, z: Pt) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParams(format!("bubble eps must be positive, got {eps}")));
        }
        Ok(Self { eps, z })
    }

    pub fn eval(&self, params: &FracParams, x: &Pt) -> f64 {
        let r2 = crate::geom::norm_sq(&sub(x, &self.z), params.dim());
        pow_fast(self.eps / (self.eps * self.eps + r2), params.bubble_exponent())
    }

    /// `∇U = -(N-2s) U(x) (x-z) / (ε² + |x-z|²)`.
    pub fn grad(&self, params: &FracParams, x: &Pt) -> Pt {
        let d = sub(x, &self.z);
        let r2 = crate::geom::norm_sq(&d, params.dim());
        let denom = self.eps * self.eps + r2;
        let u = pow_fast(self.eps / denom, params.bubble_exponent());
        let c = -(params.dim() as f64 - 2.0 * params.s()) * u / denom;
        pt_scale(&d, c)
    }

    /// Wraps the bubble as a quadrature field (power decay, anchored at `z`).
    pub fn field(&self, params: &FracParams) -> FieldFn {
        let b = *self;
        let p = *params;
        let n2s = params.dim() as f64 - 2.0 * params.s();
        FieldFn::new(
            move |x: &Pt| b.eval(&p, x),
            self.eps,
            Decay::Power {
                amplitude: pow_fast(self.eps, 0.5 * n2s),
                exponent: n2s,
            },
        )
        .with_gradient(move |x: &Pt| b.grad(&p, x))
        .with_anchor(self.z)
        .with_feature(Feature::Point {
            at: self.z,
            scale: self.eps,
        })
    }
}

/// Smooth radial cutoff: zero on `|x| <= 2δ` and `|x| >= 4`, one on
/// `4δ <= |x| <= 3`, with `|∇φ| <= 1/δ` on the inner ramp and `|∇φ| <= 2`
/// on the outer one. The ramps are quintic smoothsteps; the constructor
/// verifies all bounds by dense sampling and rejects a bad profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub delta: f64,
}

/// Quintic smoothstep and its derivative on [0,1].
fn smoothstep(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0)
    } else {
        let v = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
        let d = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        (v, d)
    }
}

impl Cutoff {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.05) {
            return Err(Error::InvalidParams(format!(
                "cutoff delta must lie in (0, 1/20], got {delta}"
            )));
        }
        let c = Self { delta };
        c.verify_profile()?;
        Ok(c)
    }

    /// Radial profile value and radial derivative at radius `r >= 0`.
    pub fn profile(&self, r: f64) -> (f64, f64) {
        let d = self.delta;
        if r <= 2.0 * d {
            (0.0, 0.0)
        } else if r < 4.0 * d {
            let (v, dv) = smoothstep((r - 2.0 * d) / (2.0 * d));
            (v, dv / (2.0 * d))
        } else if r <= 3.0 {
            (1.0, 0.0)
        } else if r < 4.0 {
            let (v, dv) = smoothstep(r - 3.0);
            (1.0 - v, -dv)
        } else {
            (0.0, 0.0)
        }
    }

    pub fn eval(&self, x: &Pt) -> f64 {
        self.profile(norm(x, 3)).0
    }

    pub fn grad(&self, x: &Pt) -> Pt {
        let r = norm(x, 3);
        if r == 0.0 {
            return ORIGIN;
        }
        let (_, dv) = self.profile(r);
        pt_scale(x, dv / r)
    }

    fn verify_profile(&self) -> Result<()> {
        let d = self.delta;
        let samples = 4000;
        for i in 0..=samples {
            let r = 4.5 * i as f64 / samples as f64;
            let (v, dv) = self.profile(r);
            let ok = (0.0..=1.0).contains(&v)
                && (r > 2.0 * d || v == 0.0)
                && (!(4.0 * d..=3.0).contains(&r) || v == 1.0)
                && (r < 4.0 || v == 0.0)
                && (r > 4.0 * d || dv.abs() <= 1.0 / d + 1e-9)
                && dv.abs() <= (1.0 / d + 1e-9).max(2.0);
            // Outside the inner ball the paper's bound is 2.
            let outer_ok = r <= 4.0 * d || dv.abs() <= 2.0 + 1e-9;
            if !(ok && outer_ok) {
                return Err(Error::InvalidParams(format!(
                    "cutoff profile violates its bounds at r = {r}: v = {v}, dv = {dv}"
                )));
            }
        }
        Ok(())
    }

    /// Wraps the cutoff as a compactly supported quadrature field.
    pub fn field(&self) -> FieldFn {
        let c = *self;
        let d = self.delta;
        FieldFn::new(move |x: &Pt| c.eval(x), 4.0, Decay::Zero)
            .with_gradient(move |x: &Pt| c.grad(x))
            .with_anchor(ORIGIN)
            .with_feature(Feature::Ring {
                center: ORIGIN,
                radius: 3.0 * d,
                width: 2.0 * d,
            })
            .with_feature(Feature::Ring {
                center: ORIGIN,
                radius: 3.5,
                width: 1.0,
            })
    }
}

/// `u_{δ,ε,z} = φ_δ · U_{ε,z}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedBubble {
    pub cutoff: Cutoff,
    pub bubble: Bubble,
}

impl TruncatedBubble {
    pub fn new(cutoff: Cutoff, bubble: Bubble) -> Self {
        Self { cutoff, bubble }
    }

    pub fn eval(&self, params: &FracParams, x: &Pt) -> f64 {
        let phi = self.cutoff.eval(x);
        if phi == 0.0 {
            0.0
        } else {
            phi * self.bubble.eval(params, x)
        }
    }

    /// Product rule: `∇(φU) = U ∇φ + φ ∇U`.
    pub fn grad(&self, params: &FracParams, x: &Pt) -> Pt {
        let phi = self.cutoff.eval(x);
        let gphi = self.cutoff.grad(x);
        if phi == 0.0 && gphi == ORIGIN {
            return ORIGIN;
        }
        let u = self.bubble.eval(params, x);
        let gu = self.bubble.grad(params, x);
        [
            u * gphi[0] + phi * gu[0],
            u * gphi[1] + phi * gu[1],
            u * gphi[2] + phi * gu[2],
        ]
    }

    /// Quadrature field: compactly supported in `B_4`, anchored at the
    /// cutoff center with both the cutoff rings and the bubble core as
    /// features.
    pub fn field(&self, params: &FracParams) -> FieldFn {
        let t = *self;
        let p = *params;
        let d = self.cutoff.delta;
        FieldFn::new(move |x: &Pt| t.eval(&p, x), 4.0, Decay::Zero)
            .with_gradient(move |x: &Pt| t.grad(&p, x))
            .with_anchor(ORIGIN)
            .with_feature(Feature::Point {
                at: self.bubble.z,
                scale: self.bubble.eps,
            })
            .with_feature(Feature::Ring {
                center: ORIGIN,
                radius: 3.0 * d,
                width: 2.0 * d,
            })
            .with_feature(Feature::Ring {
                center: ORIGIN,
                radius: 3.5,
                width: 1.0,
            })
    }
}

/// `Π(u) = u / ‖u‖_{L^{2N/(N-2s)}}`: returned field has critical norm 1.
pub fn normalize(u: &FieldFn, params: &FracParams, q: &QuadratureConfig) -> Result<FieldFn> {
    let p = params.critical_p();
    let lp = lp_integral(u, p, params, q)?;
    if !(lp > 1e-280) {
        return Err(Error::ZeroFunction("normalize"));
    }
    Ok(u.scaled(lp.powf(-1.0 / p)))
}

/// Radial interpolation for the initial family: `ε̄` on `[0, 1/2]`, linear
/// from `ε̄` to `ε` on `[1/2, 1]`.
pub fn h_interp(eps_bar: f64, eps: f64, t: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= eps_bar && eps_bar <= 0.05) {
        return Err(Error::InvalidParams(format!(
            "need 0 < eps <= eps_bar <= 1/20, got eps = {eps}, eps_bar = {eps_bar}"
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParams(format!("h_interp needs t in [0,1], got {t}")));
    }
    if t <= 0.5 {
        Ok(eps_bar)
    } else {
        Ok(2.0 * (1.0 - t) * eps_bar + (2.0 * t - 1.0) * eps)
    }
}
