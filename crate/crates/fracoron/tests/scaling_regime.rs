//! Scaling checks for the truncation estimates in the regime where the
//! dyadic sweep stays below the core-swallowing turnover: the bubble center
//! sits away from the cutoff center, so the inner dead zone only clips the
//! bubble tail and the predicted powers of δ govern the whole sweep.

use fracoron::bubbles::{Bubble, Cutoff, TruncatedBubble};
use fracoron::estimates::{
    deficit_sweep, energy_excess, excess_sweep, fit_scaling, norm_deficit, z_samples_boundary,
};
use fracoron::geom::pt2;
use fracoron::params::{FracParams, QuadratureConfig};

fn params() -> FracParams {
    FracParams::new(2, 0.5).unwrap()
}

#[test]
fn excess_scales_with_the_predicted_power_off_center() {
    let params = params();
    let q = QuadratureConfig::standard();
    let (baseline, sweep) = excess_sweep(0.05, pt2(0.75, 0.0), 4, &params, &q).unwrap();
    let mut all = vec![baseline];
    all.extend_from_slice(&sweep);
    let fit = fit_scaling(&all, true).unwrap();
    // N - 2s = 1 here.
    assert!(
        fit.fitted_slope >= 0.8,
        "slope {} below 0.8 (N-2s)",
        fit.fitted_slope
    );
    assert!(fit.r_squared >= 0.9, "r² = {}", fit.r_squared);
}

#[test]
fn deficit_scales_with_dimension_off_center() {
    let params = params();
    let q = QuadratureConfig::standard();
    let (baseline, sweep) = deficit_sweep(0.05, pt2(0.75, 0.0), 4, &params, &q).unwrap();
    for (d, v) in std::iter::once(&baseline).chain(sweep.iter()) {
        assert!(*v >= 0.0, "deficit at {d} negative: {v}");
    }
    let mut all = vec![baseline];
    all.extend_from_slice(&sweep);
    let fit = fit_scaling(&all, true).unwrap();
    assert!(
        (fit.fitted_slope - 2.0).abs() <= 0.15 * 2.0,
        "slope {} not within 15% of N = 2",
        fit.fitted_slope
    );
    assert!(fit.r_squared >= 0.9);
}

#[test]
fn excess_respects_the_one_sided_bound_model() {
    // The ratio excess / model must stay bounded across the sweep:
    // max ratio < 10 x median ratio with the fitted prefactor finite.
    let params = params();
    let q = QuadratureConfig::standard();
    let eps = 0.05f64;
    let model = |delta: f64| -> f64 {
        let t = delta / eps;
        t + t.powi(3) + eps
    };
    let (baseline, sweep) = excess_sweep(eps, pt2(0.75, 0.0), 4, &params, &q).unwrap();
    let mut ratios: Vec<f64> = std::iter::once(&baseline)
        .chain(sweep.iter())
        .map(|&(d, v)| v / model(d))
        .collect();
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    let max = *ratios.last().unwrap();
    assert!(max.is_finite() && median > 0.0);
    assert!(max < 10.0 * median, "ratios {ratios:?}");
}

#[test]
fn boundary_ring_variants_are_bounded() {
    // For centers in the outer half-ring with δ = ε² the excess obeys the
    // ε-only bound and the deficit the ε^N bound, both with a bounded
    // prefactor across a small ε ladder.
    let params = params();
    let q = QuadratureConfig::standard();
    let mut excess_ratios = Vec::new();
    let mut deficit_ratios = Vec::new();
    for (i, &eps) in [0.05f64, 0.035, 0.025].iter().enumerate() {
        let delta = eps * eps;
        let z = z_samples_boundary(3, 9)[i];
        let t = TruncatedBubble::new(Cutoff::new(delta).unwrap(), Bubble::new(eps, z).unwrap());
        let excess = energy_excess(&t, &params, &q).unwrap();
        // ε^{N-2s} (1 + δ^{-2s}) with N-2s = 1 and 2s = 1.
        let excess_model = eps * (1.0 + 1.0 / delta);
        excess_ratios.push(excess / excess_model);
        let deficit = norm_deficit(&t, &params, &q).unwrap();
        assert!(deficit >= 0.0);
        deficit_ratios.push(deficit / eps.powi(2));
    }
    let bound = |rs: &[f64]| rs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // One-sided bounds: the prefactors stay of moderate size.
    assert!(
        bound(&excess_ratios) < 50.0,
        "excess ratios {excess_ratios:?}"
    );
    assert!(
        bound(&deficit_ratios) < 50.0,
        "deficit ratios {deficit_ratios:?}"
    );
}
