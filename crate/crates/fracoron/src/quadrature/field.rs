//! Closed-form scalar fields handed to the quadrature engine.

use std::sync::Arc;

use crate::geom::{dist, norm, sub, Pt, ORIGIN};

/// How a field behaves beyond `support_radius` (measured from `anchor`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    /// Identically zero outside the support ball.
    Zero,
    /// `|u(x)| ~ amplitude * |x - anchor|^{-exponent}` beyond the support radius.
    Power { amplitude: f64, exponent: f64 },
}

/// A localized structure the mesh must resolve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feature {
    /// Self-similar feature: the field varies on scale `max(scale, |x - at|)`.
    Point { at: Pt, scale: f64 },
    /// A spherical shell of the given width around `center`.
    Ring { center: Pt, radius: f64, width: f64 },
}

/// Grading: a point feature asks for cells no larger than its distance up
/// to this multiple of the feature scale; beyond it the mesh coarsens to
/// cells comparable to the distance itself (the pair rules resolve the
/// kernel by distance ratios, and the fields are smooth out there).
const FAR_RELAX: f64 = 24.0;

fn relax_point_hint(scale: f64, d: f64) -> f64 {
    let near = scale.max(d);
    if d > FAR_RELAX * scale {
        near.max(4.0 * (d - 0.75 * FAR_RELAX * scale))
    } else {
        near
    }
}

impl Feature {
    /// Local variation scale of the field at `x` due to this feature.
    pub fn hint_at(&self, x: &Pt, dim: usize) -> f64 {
        match *self {
            Feature::Point { at, scale } => relax_point_hint(scale, dist(x, &at, dim)),
            Feature::Ring {
                center,
                radius,
                width,
            } => width.max((dist(x, &center, dim) - radius).abs()),
        }
    }

    /// Conservative lower bound of [`Feature::hint_at`] over an axis box.
    pub fn hint_over_box(&self, lo: &Pt, hi: &Pt, dim: usize) -> f64 {
        match *self {
            Feature::Point { at, scale } => {
                relax_point_hint(scale, box_point_dist(lo, hi, &at, dim))
            }
            Feature::Ring {
                center,
                radius,
                width,
            } => {
                let dmin = box_point_dist(lo, hi, &center, dim);
                let dmax = box_point_far_dist(lo, hi, &center, dim);
                let ring_dist = if radius >= dmin && radius <= dmax {
                    0.0
                } else {
                    (dmin - radius).abs().min((dmax - radius).abs())
                };
                width.max(ring_dist)
            }
        }
    }
}

fn box_point_dist(lo: &Pt, hi: &Pt, p: &Pt, dim: usize) -> f64 {
    let mut d2 = 0.0;
    for k in 0..dim {
        let d = (lo[k] - p[k]).max(0.0).max(p[k] - hi[k]);
        d2 += d * d;
    }
    d2.sqrt()
}

fn box_point_far_dist(lo: &Pt, hi: &Pt, p: &Pt, dim: usize) -> f64 {
    let mut d2 = 0.0;
    for k in 0..dim {
        let d = (p[k] - lo[k]).abs().max((hi[k] - p[k]).abs());
        d2 += d * d;
    }
    d2.sqrt()
}

type Evaluator = Arc<dyn Fn(&Pt) -> f64 + Send + Sync>;
type Gradient = Arc<dyn Fn(&Pt) -> Pt + Send + Sync>;

/// A scalar field on `R^N` given by callables, plus the metadata the
/// quadrature engine needs: decay model, feature list for mesh grading,
/// and the anchor the mesh is centered on.
#[derive(Clone)]
pub struct FieldFn {
    evaluator: Evaluator,
    gradient: Option<Gradient>,
    support_radius: f64,
    decay: Decay,
    anchor: Pt,
    features: Vec<Feature>,
    lipschitz: Option<f64>,
}

impl FieldFn {
    pub fn new(
        evaluator: impl Fn(&Pt) -> f64 + Send + Sync + 'static,
        support_radius: f64,
        decay: Decay,
    ) -> Self {
        Self {
            evaluator: Arc::new(evaluator),
            gradient: None,
            support_radius,
            decay,
            anchor: ORIGIN,
            features: Vec::new(),
            lipschitz: None,
        }
    }

    pub fn with_gradient(mut self, gradient: impl Fn(&Pt) -> Pt + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn with_anchor(mut self, anchor: Pt) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn with_feature(mut self, f: Feature) -> Self {
        self.features.push(f);
        self
    }

    pub fn eval(&self, x: &Pt) -> f64 {
        (self.evaluator)(x)
    }

    pub fn grad(&self, x: &Pt) -> Option<Pt> {
        self.gradient.as_ref().map(|g| g(x))
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn decay(&self) -> Decay {
        self.decay
    }

    pub fn anchor(&self) -> Pt {
        self.anchor
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    /// Local variation scale at `x`: the minimum over features.
    pub fn scale_hint(&self, x: &Pt, dim: usize) -> f64 {
        self.features
            .iter()
            .map(|f| f.hint_at(x, dim))
            .fold(f64::INFINITY, f64::min)
    }

    /// `c * u`, preserving all metadata (decay amplitude rescaled).
    pub fn scaled(&self, c: f64) -> FieldFn {
        let eval = self.evaluator.clone();
        let grad = self.gradient.clone();
        FieldFn {
            evaluator: Arc::new(move |x| c * eval(x)),
            gradient: grad.map(|g| {
                let g = g.clone();
                Arc::new(move |x: &Pt| {
                    let v = g(x);
                    [c * v[0], c * v[1], c * v[2]]
                }) as Gradient
            }),
            support_radius: self.support_radius,
            decay: match self.decay {
                Decay::Zero => Decay::Zero,
                Decay::Power {
                    amplitude,
                    exponent,
                } => Decay::Power {
                    amplitude: amplitude * c.abs(),
                    exponent,
                },
            },
            anchor: self.anchor,
            features: self.features.clone(),
            lipschitz: self.lipschitz.map(|l| l * c.abs()),
        }
    }

    /// Multiplies by a radial quintic ramp that is 1 inside `r_lo` and 0
    /// outside `r_hi` (measured from the anchor). Used by the engine to clip
    /// slowly decaying fields to a compact support without creating a jump.
    pub fn clipped(&self, r_lo: f64, r_hi: f64) -> FieldFn {
        let eval = self.evaluator.clone();
        let grad = self.gradient.clone();
        let anchor = self.anchor;
        let psi = move |x: &Pt| -> (f64, f64) {
            // value and radial derivative of the ramp
            let r = norm(&sub(x, &anchor), 3);
            if r <= r_lo {
                (1.0, 0.0)
            } else if r >= r_hi {
                (0.0, 0.0)
            } else {
                let t = (r - r_lo) / (r_hi - r_lo);
                let v = 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
                let dv = -30.0 * t * t * (1.0 - t) * (1.0 - t) / (r_hi - r_lo);
                (v, dv)
            }
        };
        let psi2 = psi.clone();
        let mut features = self.features.clone();
        features.push(Feature::Ring {
            center: anchor,
            radius: 0.5 * (r_lo + r_hi),
            width: r_hi - r_lo,
        });
        FieldFn {
            evaluator: Arc::new(move |x| {
                let (v, _) = psi(x);
                if v == 0.0 {
                    0.0
                } else {
                    v * eval(x)
                }
            }),
            gradient: grad.map(|g| {
                let g = g.clone();
                let e = self.evaluator.clone();
                Arc::new(move |x: &Pt| {
                    let (v, dv) = psi2(x);
                    if v == 0.0 && dv == 0.0 {
                        return ORIGIN;
                    }
                    let gu = g(x);
                    let u = e(x);
                    let d = sub(x, &anchor);
                    let r = norm(&d, 3).max(1e-300);
                    [
                        v * gu[0] + u * dv * d[0] / r,
                        v * gu[1] + u * dv * d[1] / r,
                        v * gu[2] + u * dv * d[2] / r,
                    ]
                }) as Gradient
            }),
            support_radius: r_hi,
            decay: Decay::Zero,
            anchor,
            features,
            lipschitz: self.lipschitz,
        }
    }

    /// A field with one self-similar feature and uniform metadata, handy for
    /// test fields: compactly supported inside `support_radius`.
    pub fn compact(
        evaluator: impl Fn(&Pt) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Pt) -> Pt + Send + Sync + 'static,
        support_radius: f64,
        feature_scale: f64,
    ) -> Self {
        FieldFn::new(evaluator, support_radius, Decay::Zero)
            .with_gradient(gradient)
            .with_feature(Feature::Point {
                at: ORIGIN,
                scale: feature_scale,
            })
    }

    /// The identically-zero field.
    pub fn zero() -> Self {
        FieldFn::new(|_| 0.0, 1.0, Decay::Zero)
            .with_gradient(|_| ORIGIN)
            .with_feature(Feature::Point {
                at: ORIGIN,
                scale: 1.0,
            })
    }
}

impl std::fmt::Debug for FieldFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldFn")
            .field("support_radius", &self.support_radius)
            .field("decay", &self.decay)
            .field("anchor", &self.anchor)
            .field("features", &self.features)
            .finish_non_exhaustive()
    }
}
