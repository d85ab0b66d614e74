//! Numerical verification of the truncation estimates and the Rayleigh gap:
//! energy excess and critical-norm deficit of truncated bubbles, log-log
//! scaling fits, and the constructive search for the bubble scale.

use crate::bubbles::{Bubble, Cutoff, TruncatedBubble};
use crate::error::{Error, Result};
use crate::geom::{norm, Pt, ORIGIN};
use crate::params::{FracParams, QuadratureConfig};
use crate::quadrature::{gagliardo_sq, lp_integral, rayleigh};

/// Result of a log-log scaling fit over a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    /// The raw sweep `(parameter, measured)` pairs in sweep order.
    pub sweep: Vec<(f64, f64)>,
    pub fitted_slope: f64,
    pub r_squared: f64,
    /// Subtracted plateau (0 when no baseline subtraction was requested).
    pub baseline: f64,
}

/// Default margin factor in the gap criterion (must lie in `(2^{-2s/N}, 1)`).
pub const DEFAULT_VARPI: f64 = 0.95;

fn check_truncation_ranges(t: &TruncatedBubble, params: &FracParams) -> Result<()> {
    let eps = t.bubble.eps;
    let delta = t.cutoff.delta;
    if !(eps > 0.0 && eps <= 0.05) {
        return Err(Error::InvalidParams(format!(
            "estimate routines need eps in (0, 1/20], got {eps}"
        )));
    }
    if !(delta > 0.0 && delta <= 0.05) {
        return Err(Error::InvalidParams(format!(
            "estimate routines need delta in (0, 1/20], got {delta}"
        )));
    }
    if norm(&t.bubble.z, params.dim()) > 1.0 + 1e-12 {
        return Err(Error::InvalidParams(
            "estimate routines need the bubble center in the closed unit ball".into(),
        ));
    }
    Ok(())
}

/// `‖u_{δ,ε,z}‖² - ‖U_{ε,z}‖²` (may be negative; the bound is one-sided).
pub fn energy_excess(
    t: &TruncatedBubble,
    params: &FracParams,
    q: &QuadratureConfig,
) -> Result<f64> {
    check_truncation_ranges(t, params)?;
    let truncated = gagliardo_sq(&t.field(params), params, q)?;
    let full = gagliardo_sq(&t.bubble.field(params), params, q)?;
    Ok(truncated - full)
}

/// `∫|U_{ε,z}|^p - ∫|u_{δ,ε,z}|^p ≥ 0` at the critical exponent.
pub fn norm_deficit(
    t: &TruncatedBubble,
    params: &FracParams,
    q: &QuadratureConfig,
) -> Result<f64> {
    check_truncation_ranges(t, params)?;
    let p = params.critical_p();
    let full = lp_integral(&t.bubble.field(params), p, params, q)?;
    let truncated = lp_integral(&t.field(params), p, params, q)?;
    Ok(full - truncated)
}

/// Least-squares slope and `r²` of `log y` against `log x`.
///
/// With `subtract_baseline`, the `y` value at the smallest `x` is treated as
/// a plateau: it is subtracted from the remaining points (which must stay
/// positive) and the baseline point itself is excluded from the fit.
pub fn fit_scaling(sweep: &[(f64, f64)], subtract_baseline: bool) -> Result<ScalingReport> {
    if sweep.len() < 4 {
        return Err(Error::InvalidParams(format!(
            "fit_scaling needs at least 4 sweep points, got {}",
            sweep.len()
        )));
    }
    if sweep.iter().any(|&(x, _)| !(x > 0.0)) {
        return Err(Error::FitDomain("sweep abscissae must be positive".into()));
    }
    let mut pts: Vec<(f64, f64)> = sweep.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (baseline, fit_pts) = if subtract_baseline {
        let base = pts[0].1;
        let rest: Vec<(f64, f64)> = pts[1..].iter().map(|&(x, y)| (x, y - base)).collect();
        (base, rest)
    } else {
        (0.0, pts)
    };
    if fit_pts.iter().any(|&(_, y)| !(y > 0.0)) {
        return Err(Error::FitDomain(
            "nonpositive values after baseline subtraction".into(),
        ));
    }
    let logs: Vec<(f64, f64)> = fit_pts.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::FitDomain("sweep abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(ScalingReport {
        sweep: sweep.to_vec(),
        fitted_slope: slope,
        r_squared,
        baseline,
    })
}

/// Per-sample outcome of the gap check.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub eps_bar: f64,
    pub varpi: f64,
    /// Reference Rayleigh value of the bubble family.
    pub s_ref: f64,
    /// The admissible ceiling `ϖ 2^{2s/N} S`.
    pub bound: f64,
    pub quotients: Vec<(Pt, f64)>,
    pub max_quotient: f64,
    pub passes: bool,
}

/// Reference `S`: the Rayleigh quotient of the unit bubble, computed at the
/// oracle tolerance (every family member gives the same value).
pub fn reference_rayleigh(params: &FracParams) -> Result<f64> {
    let u = Bubble::new(1.0, ORIGIN)?.field(params);
    rayleigh(&u, params, &QuadratureConfig::oracle())
}

/// Checks `R(Π(u_{ε̄²,ε̄,z})) ≤ ϖ 2^{2s/N} S` over the given centers
/// (the quotient is scale-invariant, so normalization does not change it).
pub fn rayleigh_gap(
    eps_bar: f64,
    z_samples: &[Pt],
    varpi: f64,
    s_ref: f64,
    params: &FracParams,
    q: &QuadratureConfig,
) -> Result<GapReport> {
    if !(eps_bar > 0.0 && eps_bar <= 0.05) {
        return Err(Error::InvalidParams(format!(
            "rayleigh_gap needs eps_bar in (0, 1/20], got {eps_bar}"
        )));
    }
    let n = params.dim() as f64;
    let bound = varpi * 2f64.powf(2.0 * params.s() / n) * s_ref;
    let delta = eps_bar * eps_bar;
    let cutoff = Cutoff::new(delta)?;
    let mut quotients = Vec::with_capacity(z_samples.len());
    let mut max_quotient = f64::NEG_INFINITY;
    for &z in z_samples {
        let t = TruncatedBubble::new(cutoff, Bubble::new(eps_bar, z)?);
        check_truncation_ranges(&t, params)?;
        let r = rayleigh(&t.field(params), params, q)?;
        max_quotient = max_quotient.max(r);
        quotients.push((z, r));
    }
    Ok(GapReport {
        eps_bar,
        varpi,
        s_ref,
        bound,
        quotients,
        max_quotient,
        passes: max_quotient <= bound,
    })
}

/// Constructive choice of `ε̄`: the largest value in a dyadic sweep from
/// 1/20 downward for which the gap criterion holds.
pub fn select_eps_bar(
    z_samples: &[Pt],
    varpi: f64,
    s_ref: f64,
    params: &FracParams,
    q: &QuadratureConfig,
    max_halvings: usize,
) -> Result<GapReport> {
    let mut eps_bar = 0.05;
    for _ in 0..=max_halvings {
        let report = rayleigh_gap(eps_bar, z_samples, varpi, s_ref, params, q)?;
        if report.passes {
            return Ok(report);
        }
        eps_bar *= 0.5;
    }
    Err(Error::QuadratureFailure {
        context: format!("no eps_bar in the dyadic sweep down to {eps_bar} passes the gap"),
        rel_err: f64::NAN,
        rel_tol: q.rel_tol,
    })
}

/// Low-discrepancy centers in the closed unit ball (golden-angle spiral,
/// rotated by a seed-derived phase so distinct seeds give distinct sets).
pub fn z_samples_disk(count: usize, seed: u64) -> Vec<Pt> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let phase = (seed as f64) * 0.618_033_988_749_894_9 % 1.0 * std::f64::consts::TAU;
    (0..count)
        .map(|i| {
            let r = (((i as f64) + 0.5) / count as f64).sqrt();
            let theta = i as f64 * golden + phase;
            [r * theta.cos(), r * theta.sin(), 0.0]
        })
        .collect()
}

/// Equispaced centers on the unit circle, rotated by a seed-derived phase.
pub fn z_samples_boundary(count: usize, seed: u64) -> Vec<Pt> {
    let phase = (seed as f64) * 0.618_033_988_749_894_9 % 1.0 * std::f64::consts::TAU;
    (0..count)
        .map(|i| {
            let theta = i as f64 * std::f64::consts::TAU / count as f64 + phase;
            [theta.cos(), theta.sin(), 0.0]
        })
        .collect()
}

/// Dyadic delta sweep `δ = ε · 2^{-k}`, `k = count..1`, plus the finer
/// baseline probe `δ = ε · 2^{-(count+2)}` used for plateau subtraction.
pub fn delta_sweep_values(eps: f64, count: usize) -> (f64, Vec<f64>) {
    let baseline = eps * 0.5f64.powi(count as i32 + 2);
    let sweep = (1..=count).rev().map(|k| eps * 0.5f64.powi(k as i32)).collect();
    (baseline, sweep)
}

/// Runs the energy-excess sweep over `δ` at fixed `(ε, z)`; returns
/// `(baseline point, sweep points)` as `(δ, excess)` pairs.
pub fn excess_sweep(
    eps: f64,
    z: Pt,
    count: usize,
    params: &FracParams,
    q: &QuadratureConfig,
) -> Result<((f64, f64), Vec<(f64, f64)>)> {
    let (base_delta, deltas) = delta_sweep_values(eps, count);
    let bubble = Bubble::new(eps, z)?;
    // The untruncated energy is shared by the whole sweep.
    let full = gagliardo_sq(&bubble.field(params), params, q)?;
    let run = |delta: f64| -> Result<f64> {
        let t = TruncatedBubble::new(Cutoff::new(delta)?, bubble);
        check_truncation_ranges(&t, params)?;
        let truncated = gagliardo_sq(&t.field(params), params, q)?;
        Ok(truncated - full)
    };
    let baseline = (base_delta, run(base_delta)?);
    let mut sweep = Vec::with_capacity(deltas.len());
    for d in deltas {
        sweep.push((d, run(d)?));
    }
    Ok((baseline, sweep))
}

/// Runs the critical-norm deficit sweep over `δ` at fixed `(ε, z)`.
pub fn deficit_sweep(
    eps: f64,
    z: Pt,
    count: usize,
    params: &FracParams,
    q: &QuadratureConfig,
) -> Result<((f64, f64), Vec<(f64, f64)>)> {
    let (base_delta, deltas) = delta_sweep_values(eps, count);
    let bubble = Bubble::new(eps, z)?;
    let p = params.critical_p();
    let full = lp_integral(&bubble.field(params), p, params, q)?;
    let run = |delta: f64| -> Result<f64> {
        let t = TruncatedBubble::new(Cutoff::new(delta)?, bubble);
        check_truncation_ranges(&t, params)?;
        let truncated = lp_integral(&t.field(params), p, params, q)?;
        Ok(full - truncated)
    };
    let baseline = (base_delta, run(base_delta)?);
    let mut sweep = Vec::with_capacity(deltas.len());
    for d in deltas {
        sweep.push((d, run(d)?));
    }
    Ok((baseline, sweep))
}
