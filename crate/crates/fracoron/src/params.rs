//! Problem parameters `(N, s)`, the normalization constant `C(N,s)`, and the
//! quadrature configuration shared by every integral routine.

use crate::error::{Error, Result};
use crate::geom::sphere_area;

/// Dimension and fractional order, with the optional cached constant `C(N,s)`.
///
/// The constant normalizes the singular-integral definition of the operator:
/// `C(N,s) = (∫ (1 - cos ζ₁) / |ζ|^{N+2s} dζ)^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    dim: usize,
    s: f64,
    c_ns: Option<f64>,
}

impl FracParams {
    /// Validates `dim >= 1`, `s ∈ (0,1)` and `dim > 2s`.
    pub fn new(dim: usize, s: f64) -> Result<Self> {
        if dim == 0 || dim > crate::geom::MAX_DIM {
            return Err(Error::InvalidParams(format!(
                "dim must be in 1..={}, got {dim}",
                crate::geom::MAX_DIM
            )));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParams(format!("s must lie in (0,1), got {s}")));
        }
        if dim as f64 <= 2.0 * s {
            return Err(Error::InvalidParams(format!(
                "need dim > 2s, got dim = {dim}, 2s = {}",
                2.0 * s
            )));
        }
        Ok(Self { dim, s, c_ns: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// The exponent `(N - 2s)/2` governing the bubble profile.
    pub fn bubble_exponent(&self) -> f64 {
        (self.dim as f64 - 2.0 * self.s) / 2.0
    }

    /// The critical exponent `2N/(N - 2s)`.
    pub fn critical_p(&self) -> f64 {
        2.0 * self.dim as f64 / (self.dim as f64 - 2.0 * self.s)
    }

    /// Cached `C(N,s)` if it has been attached.
    pub fn cached_c_ns(&self) -> Option<f64> {
        self.c_ns
    }

    /// Returns a copy with the constant computed and cached.
    pub fn with_c_ns(mut self, q: &QuadratureConfig) -> Result<Self> {
        let c = c_ns(&self, q)?;
        self.c_ns = Some(c);
        Ok(self)
    }
}

/// Knobs for the quadrature routines.
///
/// `far_subdivisions` controls panel counts away from singular points,
/// `near_radius` the radius of the diagonal split, `near_refinement` the
/// depth of the graded refinement toward singular points, `tail_radius`
/// where the computational domain is cut and analytic tail handling takes
/// over, and `rel_tol` the convergence target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub far_subdivisions: usize,
    pub near_radius: f64,
    pub near_refinement: usize,
    pub tail_radius: f64,
    pub rel_tol: f64,
}

impl QuadratureConfig {
    pub fn new(
        far_subdivisions: usize,
        near_radius: f64,
        near_refinement: usize,
        tail_radius: f64,
        rel_tol: f64,
    ) -> Result<Self> {
        let cfg = Self {
            far_subdivisions,
            near_radius,
            near_refinement,
            tail_radius,
            rel_tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.far_subdivisions == 0
            || self.near_refinement == 0
            || !(self.near_radius > 0.0)
            || !(self.tail_radius > 0.0)
            || !(self.rel_tol > 0.0)
        {
            return Err(Error::InvalidParams(
                "quadrature config fields must all be positive".into(),
            ));
        }
        if self.near_radius >= self.tail_radius {
            return Err(Error::InvalidParams(
                "near_radius must be smaller than tail_radius".into(),
            ));
        }
        Ok(())
    }

    /// Library default: `rel_tol = 1e-4`.
    pub fn standard() -> Self {
        Self {
            far_subdivisions: 4,
            near_radius: 1.0,
            near_refinement: 12,
            tail_radius: 256.0,
            rel_tol: 1e-4,
        }
    }

    /// Tight settings for oracle cross-checks: `rel_tol = 1e-6`.
    pub fn oracle() -> Self {
        Self {
            far_subdivisions: 6,
            near_radius: 1.0,
            near_refinement: 14,
            tail_radius: 1024.0,
            rel_tol: 1e-6,
        }
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self::standard()
    }
}

// ---------------------------------------------------------------------------
// C(N,s) by quadrature of the defining integral.
//
// The integral over R^N factorizes exactly in cylindrical coordinates
// (t = ζ₁, r = |ζ'|):
//
//   ∫ (1 - cos ζ₁)/|ζ|^{N+2s} dζ
//     = ω_{N-2} · K(N,s) · 2 ∫_0^∞ (1 - cos t)/t^{1+2s} dt,   N >= 2,
//
// with K(N,s) = ∫_0^∞ u^{N-2} (1 + u²)^{-(N+2s)/2} du (substitute r = |t| u),
// and equals 2 ∫_0^∞ (1 - cos t)/t^{1+2s} dt for N = 1. Both factors are
// one-dimensional: a panel-doubling Gauss rule on the bulk, a power series
// from 1 - cos t ~ t²/2 near zero, and for the oscillatory tail beyond
// tail_radius the closed-form radial integral T^{-2s}/(2s) minus an
// integration-by-parts remainder whose last term bounds the error.
// ---------------------------------------------------------------------------

/// Computes `C(N,s)` from its defining integral.
pub fn c_ns(params: &FracParams, q: &QuadratureConfig) -> Result<f64> {
    if let Some(c) = params.c_ns {
        return Ok(c);
    }
    let (value, _deltas) = c_ns_with_refinement_history(params, q)?;
    Ok(value)
}

/// Same as [`c_ns`] but also returns the refinement deltas of the bulk
/// quadrature (successive panel-doubling differences), used to check that
/// the refinement converges monotonically in magnitude.
pub fn c_ns_with_refinement_history(
    params: &FracParams,
    q: &QuadratureConfig,
) -> Result<(f64, Vec<f64>)> {
    q.validate()?;
    let n = params.dim;
    let s = params.s;

    let (osc, deltas) = one_minus_cos_integral(s, q)?;
    let integral = if n == 1 {
        2.0 * osc
    } else {
        let k = profile_factor(n, s, q)?;
        sphere_area(n - 1) * k * 2.0 * osc
    };
    if !(integral > 0.0) || !integral.is_finite() {
        return Err(Error::QuadratureFailure {
            context: format!("C({n},{s}) integrand sum not positive/finite"),
            rel_err: f64::INFINITY,
            rel_tol: q.rel_tol,
        });
    }
    Ok((1.0 / integral, deltas))
}

/// Closed-form reference `C(N,s) = s 4^s Γ((N+2s)/2) / (π^{N/2} Γ(1-s))`,
/// used as an independent cross-check of the quadrature route.
pub fn c_ns_reference(params: &FracParams) -> f64 {
    let n = params.dim as f64;
    let s = params.s;
    s * 4f64.powf(s) * gamma((n + 2.0 * s) / 2.0)
        / (std::f64::consts::PI.powf(n / 2.0) * gamma(1.0 - s))
}

/// `L(s) = ∫_0^∞ (1 - cos t)/t^{1+2s} dt`, with panel-doubling deltas.
fn one_minus_cos_integral(s: f64, q: &QuadratureConfig) -> Result<(f64, Vec<f64>)> {
    let a = q.near_radius.min(q.tail_radius * 0.5);
    let t_cut = q.tail_radius;

    // |t| <= a: alternating series from 1 - cos t = Σ (-1)^{k+1} t^{2k}/(2k)!.
    let mut near = 0.0;
    let mut fact = 1.0f64; // (2k)!
    for k in 1..=q.near_refinement.max(8) {
        fact *= ((2 * k - 1) * (2 * k)) as f64;
        let term = if k % 2 == 1 { 1.0 } else { -1.0 } * a.powf(2.0 * k as f64 - 2.0 * s)
            / (fact * (2.0 * k as f64 - 2.0 * s));
        near += term;
        if term.abs() < 1e-18 * near.abs() {
            break;
        }
    }

    // a <= t <= T: composite Gauss with panel doubling until the update is
    // below rel_tol; the deltas must shrink for the run to count as converged.
    let f = |t: f64| (1.0 - t.cos()) / t.powf(1.0 + 2.0 * s);
    let (bulk, deltas) = refine_to_tolerance(&f, a, t_cut, q.far_subdivisions.max(4), q.rel_tol)?;

    // t >= T: ∫ t^{-1-2s} dt has the closed form T^{-2s}/(2s); the cosine
    // remainder is expanded by parts with a power-law bound on the last term.
    let tail_power = t_cut.powf(-2.0 * s) / (2.0 * s);
    let (osc_tail, osc_bound) = cos_tail(t_cut, 1.0 + 2.0 * s, 6);
    let total = near + bulk + tail_power - osc_tail;
    if osc_bound > q.rel_tol * total.abs() {
        return Err(Error::QuadratureFailure {
            context: "oscillatory tail bound too large; increase tail_radius".into(),
            rel_err: osc_bound / total.abs(),
            rel_tol: q.rel_tol,
        });
    }
    Ok((total, deltas))
}

/// `K(N,s) = ∫_0^∞ u^{N-2} (1+u²)^{-(N+2s)/2} du` with an asymptotic tail.
fn profile_factor(n: usize, s: f64, q: &QuadratureConfig) -> Result<f64> {
    let p = (n as f64 + 2.0 * s) / 2.0;
    let u_cut = 16.0f64.max(q.tail_radius.sqrt());
    let f = |u: f64| u.powi(n as i32 - 2) * (1.0 + u * u).powf(-p);
    let (bulk, _) = refine_to_tolerance(&f, 0.0, u_cut, q.far_subdivisions.max(4), q.rel_tol * 0.1)?;

    // (1+u²)^{-p} = u^{-2p} Σ_k binom(-p,k) u^{-2k}; integrate termwise.
    let mut tail = 0.0;
    let mut coeff = 1.0f64; // binom(-p, k)
    for k in 0..12 {
        let kf = k as f64;
        let expo = 2.0 * p - (n as f64 - 2.0) + 2.0 * kf - 1.0; // u^{-expo-1} antiderivative power
        tail += coeff * u_cut.powf(-expo) / expo;
        coeff *= -(p + kf) / (kf + 1.0);
    }
    Ok(bulk + tail)
}

/// `∫_T^∞ t^{-a} cos t dt` by repeated integration by parts.
///
/// Returns the value and a bound on the truncated remainder.
fn cos_tail(t: f64, a: f64, terms: usize) -> (f64, f64) {
    // C(a) = -T^{-a} sin T + a [ T^{-a-1} cos T - (a+1) C(a+2) ].
    let mut value = 0.0;
    let mut prefactor = 1.0;
    let mut ak = a;
    for _ in 0..terms {
        value += prefactor * (-t.powf(-ak) * t.sin() + ak * t.powf(-ak - 1.0) * t.cos());
        prefactor *= -ak * (ak + 1.0);
        ak += 2.0;
    }
    let bound = prefactor.abs() * t.powf(1.0 - ak) / (ak - 1.0);
    (value, bound)
}

/// Composite 16-point Gauss-Legendre with panel doubling until `rel_tol`.
fn refine_to_tolerance(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    initial_panels: usize,
    rel_tol: f64,
) -> Result<(f64, Vec<f64>)> {
    const MAX_LEVELS: usize = 12;
    let mut panels = initial_panels;
    let mut prev = composite_gauss(f, a, b, panels);
    let mut deltas = Vec::new();
    for _ in 0..MAX_LEVELS {
        panels *= 2;
        let next = composite_gauss(f, a, b, panels);
        let delta = (next - prev).abs();
        deltas.push(delta);
        if delta <= rel_tol * next.abs() {
            return Ok((next, deltas));
        }
        prev = next;
    }
    Err(Error::QuadratureFailure {
        context: format!("panel refinement on [{a}, {b}] did not converge"),
        rel_err: deltas.last().copied().unwrap_or(f64::INFINITY) / prev.abs().max(f64::MIN_POSITIVE),
        rel_tol,
    })
}

/// 16-point Gauss-Legendre nodes/weights on (-1, 1), positive half.
pub(crate) const GL16_X: [f64; 8] = [
    0.095_012_509_837_637_440_185,
    0.281_603_550_779_258_913_230,
    0.458_016_777_657_227_386_342,
    0.617_876_244_402_643_748_447,
    0.755_404_408_355_003_033_895,
    0.865_631_202_387_831_743_880,
    0.944_575_023_073_232_576_078,
    0.989_400_934_991_649_932_596,
];
pub(crate) const GL16_W: [f64; 8] = [
    0.189_450_610_455_068_496_285,
    0.182_603_415_044_923_588_867,
    0.169_156_519_395_002_538_189,
    0.149_595_988_816_576_732_081,
    0.124_628_971_255_533_872_052,
    0.095_158_511_682_492_784_810,
    0.062_253_523_938_647_892_863,
    0.027_152_459_411_754_094_852,
];

fn composite_gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        for i in 0..8 {
            sum += GL16_W[i] * half * (f(mid - half * GL16_X[i]) + f(mid + half * GL16_X[i]));
        }
    }
    sum
}

// ---------------------------------------------------------------------------
// Log-gamma (Lanczos, g = 7, n = 9) for the closed-form reference.
// ---------------------------------------------------------------------------

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for positive real arguments (with reflection below 1/2).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let z = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + 7.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
    }
}
