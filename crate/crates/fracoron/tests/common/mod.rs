//! Shared oracle machinery for the integration tests: a dense brute-force
//! double Riemann sum in one dimension (uniform grid, diagonal band excluded
//! and replaced by its first-order bound, window exterior by the closed-form
//! radial kernel integral) and seeded smooth random test fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fracoron::geom::{pt1, Pt, ORIGIN};
use fracoron::quadrature::FieldFn;

pub struct BruteField {
    pub eval: Box<dyn Fn(f64) -> f64>,
    pub grad: Box<dyn Fn(f64) -> f64>,
    /// `u(x) ~ amplitude |x|^{-exponent}` beyond the window (None: zero).
    pub tail: Option<(f64, f64)>,
}

/// Dense brute-force Gagliardo energy on `[-l, l]` with `n` uniform nodes.
///
/// Pairs closer than `band` grid steps are excluded and replaced by the
/// first-order bound `Σ u'(x)² · 2 r^{2-2s}/(2-2s) h`. The exterior of the
/// window is expanded per node as `(u(x) - u(y))² ≈ u(y)² - 2 u(y) u(x) +
/// u(x)²` with `u(x)` replaced by its tail law and each kernel moment
/// integrated by a plain log-spaced rule; for compactly supported fields
/// only the closed-form `u(y)²` moment survives.
pub fn brute_force_1d(field: &BruteField, s: f64, l: f64, n: usize, band: usize) -> f64 {
    let h = 2.0 * l / n as f64;
    let xs: Vec<f64> = (0..n).map(|i| -l + (i as f64 + 0.5) * h).collect();
    let us: Vec<f64> = xs.iter().map(|&x| (field.eval)(x)).collect();
    let kern: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 {
                0.0
            } else {
                (k as f64 * h).powf(-(1.0 + 2.0 * s))
            }
        })
        .collect();
    let mut sum = 0.0;
    for i in 0..n {
        let ui = us[i];
        for j in (i + band + 1)..n {
            let d = ui - us[j];
            sum += d * d * kern[j - i];
        }
    }
    sum *= 2.0 * h * h; // unordered pairs counted once above

    // Diagonal band |x - y| <= (band + 1/2) h via the first-order expansion.
    let r = (band as f64 + 0.5) * h;
    let mut band_sum = 0.0;
    for &x in &xs {
        let g = (field.grad)(x);
        band_sum += g * g;
    }
    band_sum *= h * 2.0 * r.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);

    // Exterior kernel moments: m_p(y) = ∫_{|x|>l} tail(|x|)^p K(x-y) dx,
    // integrated log-spaced in the kernel distance so the near-edge spike
    // is resolved exactly from its lower limit.
    let moment = |y: f64, p_tail: f64, amp: f64, expo: f64| -> f64 {
        let mut acc = 0.0;
        let steps = 600;
        let t_max = 34.0;
        let dt = t_max / steps as f64;
        // Side x > l: distance w = x - y starts at l - y.
        let w0 = l - y;
        // Side x < -l: distance v = y - x starts at l + y.
        let v0 = l + y;
        for k in 0..steps {
            let t = (k as f64 + 0.5) * dt;
            let w = w0 * t.exp();
            let x = y + w;
            acc += (amp * x.powf(-expo)).powf(p_tail) * w.powf(-(1.0 + 2.0 * s)) * w * dt;
            let v = v0 * t.exp();
            let x2 = v - y; // |x| for the left side
            acc += (amp * x2.powf(-expo)).powf(p_tail) * v.powf(-(1.0 + 2.0 * s)) * v * dt;
        }
        acc
    };
    let mut ext = 0.0;
    match field.tail {
        None => {
            for i in 0..n {
                if us[i] == 0.0 {
                    continue;
                }
                ext += us[i]
                    * us[i]
                    * ((l - xs[i]).powf(-2.0 * s) + (l + xs[i]).powf(-2.0 * s))
                    / (2.0 * s);
            }
        }
        Some((amp, expo)) => {
            for i in 0..n {
                let k0 = ((l - xs[i]).powf(-2.0 * s) + (l + xs[i]).powf(-2.0 * s)) / (2.0 * s);
                let k1 = moment(xs[i], 1.0, amp, expo);
                let k2 = moment(xs[i], 2.0, amp, expo);
                ext += us[i] * us[i] * k0 - 2.0 * us[i] * k1 + k2;
            }
        }
    }
    ext *= 2.0 * h;

    // Pairs with both points outside the window (tail-tail), by a direct
    // log-log midpoint sum of the power-law profile.
    let tail_tail = match field.tail {
        None => 0.0,
        Some((amp, expo)) => {
            let grid = 500;
            let t_max = 34.0;
            let dt = t_max / grid as f64;
            let mut same = 0.0;
            let mut opp = 0.0;
            for a in 0..grid {
                let x = ((a as f64 + 0.5) * dt).exp();
                let ux = x.powf(-expo);
                for b in 0..grid {
                    if a == b {
                        continue;
                    }
                    let y = ((b as f64 + 0.5) * dt).exp();
                    let uy = y.powf(-expo);
                    let d = ux - uy;
                    let jac = x * y * dt * dt;
                    same += d * d * (x - y).abs().powf(-(1.0 + 2.0 * s)) * jac;
                    opp += d * d * (x + y).powf(-(1.0 + 2.0 * s)) * jac;
                }
            }
            amp * amp * l.powf(1.0 - 2.0 * expo - 2.0 * s) * (2.0 * same + 2.0 * opp)
        }
    };

    sum + band_sum + ext + tail_tail
}

/// Seeded smooth compactly supported 1-D field with an analytic gradient:
/// a squared-cosine window times a low random trigonometric polynomial.
pub fn smooth_random_field_1d(seed: u64) -> (FieldFn, BruteField) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l0 = 1.0 + rng.gen_range(0.0..1.0);
    let coeffs: Vec<(f64, f64, f64)> = (1..=4)
        .map(|k| {
            (
                rng.gen_range(-1.0..1.0),
                k as f64 * std::f64::consts::PI / l0,
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let coeffs2 = coeffs.clone();
    let window = move |t: f64| -> (f64, f64) {
        // cos² window on [-l0, l0], C¹ at the endpoints.
        if t.abs() >= l0 {
            (0.0, 0.0)
        } else {
            let a = std::f64::consts::PI * t / (2.0 * l0);
            let c = a.cos();
            (c * c, -std::f64::consts::PI / l0 * c * a.sin())
        }
    };
    let window2 = window.clone();
    let series = move |t: f64| -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for &(a, w, phi) in &coeffs {
            v += a * (w * t + phi).cos();
            d -= a * w * (w * t + phi).sin();
        }
        (v + 1.5, d)
    };
    let series2 = series.clone();

    let eval = move |x: &Pt| -> f64 {
        let (wv, _) = window(x[0]);
        if wv == 0.0 {
            0.0
        } else {
            let (sv, _) = series(x[0]);
            wv * sv
        }
    };
    let grad = move |x: &Pt| -> Pt {
        let (wv, wd) = window2(x[0]);
        if wv == 0.0 && wd == 0.0 {
            return ORIGIN;
        }
        let (sv, sd) = series2(x[0]);
        pt1(wv * sd + wd * sv)
    };
    let field = FieldFn::compact(eval, grad, l0, 0.4);

    // Independent closures for the brute-force side.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l0b = 1.0 + rng.gen_range(0.0..1.0);
    let coeffs_b: Vec<(f64, f64, f64)> = (1..=4)
        .map(|k| {
            (
                rng.gen_range(-1.0..1.0),
                k as f64 * std::f64::consts::PI / l0b,
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let coeffs_b2 = coeffs_b.clone();
    let brute = BruteField {
        tail: None,
        eval: Box::new(move |t| {
            if t.abs() >= l0b {
                return 0.0;
            }
            let a = std::f64::consts::PI * t / (2.0 * l0b);
            let w = a.cos() * a.cos();
            let mut v = 0.0;
            for &(c, om, phi) in &coeffs_b {
                v += c * (om * t + phi).cos();
            }
            w * (v + 1.5)
        }),
        grad: Box::new(move |t| {
            if t.abs() >= l0b {
                return 0.0;
            }
            let a = std::f64::consts::PI * t / (2.0 * l0b);
            let w = a.cos() * a.cos();
            let wd = -std::f64::consts::PI / l0b * a.cos() * a.sin();
            let mut v = 0.0;
            let mut d = 0.0;
            for &(c, om, phi) in &coeffs_b2 {
                v += c * (om * t + phi).cos();
                d -= c * om * (om * t + phi).sin();
            }
            w * d + wd * (v + 1.5)
        }),
    };
    (field, brute)
}
