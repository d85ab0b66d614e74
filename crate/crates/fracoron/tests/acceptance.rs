//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers (run with `--nocapture` to see them). Tolerances are
//! pinned here and nowhere else.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fracoron::bubbles::{normalize, Bubble, Cutoff, TruncatedBubble};
use fracoron::discrete::{
    assemble_form, discrete_bubble_reference, minmax_solve, sign_split_check, MinMaxConfig,
};
use fracoron::domain::{sample_into_grid, AnnulusDomain};
use fracoron::error::Error;
use fracoron::estimates::{
    deficit_sweep, excess_sweep, fit_scaling, rayleigh_gap, reference_rayleigh, z_samples_boundary,
    z_samples_disk,
};
use fracoron::geom::{dist, norm, pt1, pt2, ORIGIN};
use fracoron::params::{c_ns, c_ns_reference, FracParams, QuadratureConfig};
use fracoron::quadrature::{barycenter_field, gagliardo_sq, rayleigh};

mod common;
use common::{brute_force_1d, smooth_random_field_1d, BruteField};

#[test]
fn criterion_01_constant_matches_gamma_oracle() {
    let q = QuadratureConfig::oracle();
    let mut worst = 0.0f64;
    for (dim, s) in [(1usize, 0.25), (2, 0.5), (3, 0.75)] {
        let t0 = Instant::now();
        let params = FracParams::new(dim, s).unwrap();
        let c = c_ns(&params, &q).unwrap();
        let reference = c_ns_reference(&params);
        let rel = (c - reference).abs() / reference;
        let elapsed = t0.elapsed();
        assert!(
            rel <= 1e-6,
            "C({dim},{s}) = {c} vs oracle {reference} (rel {rel:.3e})"
        );
        assert!(
            elapsed.as_secs_f64() <= 10.0,
            "C({dim},{s}) took {elapsed:?} (> 10 s)"
        );
        worst = worst.max(rel);
    }
    println!("[criterion 01] PASS: constant matches the Gamma oracle, worst rel {worst:.3e}");
}

#[test]
fn criterion_02_seminorm_matches_brute_force_1d() {
    let t0 = Instant::now();
    let s = 0.25;
    let params = FracParams::new(1, s).unwrap();
    let q = QuadratureConfig::standard();

    // The bubble itself.
    let bubble = Bubble::new(1.0, ORIGIN).unwrap();
    let p2 = params;
    let brute_field = BruteField {
        eval: Box::new(move |x| bubble.eval(&p2, &pt1(x))),
        grad: Box::new(move |x| bubble.grad(&p2, &pt1(x))[0]),
        tail: Some((1.0, 0.5)),
    };
    let brute = brute_force_1d(&brute_field, s, 800.0, 64_000, 4);
    let engine = gagliardo_sq(&bubble.field(&params), &params, &q).unwrap();
    let rel_bubble = (engine - brute).abs() / brute;
    assert!(rel_bubble <= 0.02, "bubble: {engine} vs {brute} ({rel_bubble:.4})");

    // Five seeded smooth compactly supported fields.
    let mut worst = rel_bubble;
    for seed in 0..5u64 {
        let (field, brute_field) = smooth_random_field_1d(seed);
        let b = brute_force_1d(&brute_field, s, 40.0, 32_000, 4);
        let e = gagliardo_sq(&field, &params, &q).unwrap();
        let rel = (e - b).abs() / b;
        assert!(rel <= 0.02, "field {seed}: {e} vs {b} ({rel:.4})");
        worst = worst.max(rel);
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() <= 60.0, "took {elapsed:?} (> 60 s)");
    println!(
        "[criterion 02] PASS: brute-force equivalence, worst rel {worst:.4} in {elapsed:.1?}"
    );
}

#[test]
fn criterion_03_bubble_family_invariance() {
    let params = FracParams::new(2, 0.5).unwrap();
    let q = QuadratureConfig::standard();
    let mut values = Vec::new();
    for eps in [0.5, 1.0, 2.0] {
        for z in [ORIGIN, pt2(1.0, 0.0)] {
            values.push(
                rayleigh(&Bubble::new(eps, z).unwrap().field(&params), &params, &q).unwrap(),
            );
        }
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / lo;
    assert!(spread <= 1e-3, "family spread {spread:.3e} (values {values:?})");
    println!("[criterion 03] PASS: family quotient spread {spread:.3e} about {lo:.6}");
}

// The two scaling criteria pin the bubble center to the cutoff center
// (z = 0). There, once the inner dead zone 2δ reaches a fraction of the
// bubble scale ε, removing the bubble core outweighs the cut cost: the
// measured excess rises, turns over, and goes negative within the stated
// sweep δ ∈ ε·{1/16..1/2} (the one-sided estimate still holds; the
// monotone power-law premise of the fit does not). Both criteria are
// implemented exactly as stated and fail at z = 0; the same fits pass
// cleanly in the regime the estimates govern (see tests/scaling_regime.rs,
// which keeps the sweep away from the core-swallowing turnover).

#[test]
fn criterion_04_energy_excess_scaling() {
    let params = FracParams::new(2, 0.5).unwrap();
    let q = QuadratureConfig::standard();
    let (baseline, sweep) = excess_sweep(0.05, ORIGIN, 4, &params, &q).unwrap();
    let mut all = vec![baseline];
    all.extend_from_slice(&sweep);
    let n2s = 1.0; // N - 2s
    match fit_scaling(&all, true) {
        Ok(fit) => {
            let pass = fit.fitted_slope >= 0.8 * n2s && fit.r_squared >= 0.9;
            println!(
                "[criterion 04] {}: excess slope {:.3} (need >= 0.8), r² = {:.4}, sweep {:?}",
                if pass { "PASS" } else { "FAIL" },
                fit.fitted_slope,
                fit.r_squared,
                all
            );
            assert!(
                pass,
                "excess slope {} (need >= 0.8 with r² >= 0.9, got r² = {}); sweep {all:?}",
                fit.fitted_slope, fit.r_squared
            );
        }
        Err(e) => {
            println!(
                "[criterion 04] FAIL: excess turns over within the stated sweep \
                 (plateau-subtracted values go nonpositive at z = 0): {e}; sweep {all:?}"
            );
            panic!(
                "excess scaling fit impossible at the stated parameters (z = 0): {e}; \
                 measured sweep {all:?}; the off-center regime passes, see scaling_regime.rs"
            );
        }
    }
}

#[test]
fn criterion_05_norm_deficit_scaling() {
    let params = FracParams::new(2, 0.5).unwrap();
    let q = QuadratureConfig::standard();
    let (baseline, sweep) = deficit_sweep(0.05, ORIGIN, 4, &params, &q).unwrap();
    for (d, v) in std::iter::once(&baseline).chain(sweep.iter()) {
        assert!(*v >= 0.0, "deficit at delta {d} is negative: {v}");
    }
    let mut all = vec![baseline];
    all.extend_from_slice(&sweep);
    let fit = fit_scaling(&all, true).unwrap();
    let n = 2.0;
    let pass = (fit.fitted_slope - n).abs() <= 0.15 * n;
    println!(
        "[criterion 05] {}: deficit >= 0 everywhere; slope {:.3} (need within 15% of 2), r² = {:.4}, sweep {:?}",
        if pass { "PASS" } else { "FAIL" },
        fit.fitted_slope,
        fit.r_squared,
        all
    );
    assert!(
        pass,
        "deficit slope {} not within 15% of N = {n} (saturates at z = 0 where the dead \
         zone swallows most of the critical mass by δ = ε/2); sweep {all:?}; the \
         off-center regime passes, see scaling_regime.rs",
        fit.fitted_slope
    );
}

#[test]
fn criterion_06_rayleigh_gap() {
    let t0 = Instant::now();
    let params = FracParams::new(2, 0.5).unwrap();
    let q = QuadratureConfig::standard();
    let s_ref = reference_rayleigh(&params).unwrap();
    let zs = z_samples_disk(16, 0);
    let report = rayleigh_gap(0.05, &zs, 0.95, s_ref, &params, &q).unwrap();
    assert!(
        report.passes,
        "max quotient {} exceeds bound {}",
        report.max_quotient, report.bound
    );
    // Infimum property: every truncation quotient sits above the reference.
    for (z, r) in &report.quotients {
        assert!(
            *r >= s_ref * (1.0 - 1e-3),
            "quotient {r} at {z:?} below the reference {s_ref}"
        );
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() <= 600.0, "took {elapsed:?} (> 10 min)");
    println!(
        "[criterion 06] PASS: gap max {:.5} <= bound {:.5} (S = {:.5}) in {elapsed:.1?}",
        report.max_quotient, report.bound, s_ref
    );
}

#[test]
fn criterion_07_identity_suite() {
    let params = FracParams::new(2, 0.5).unwrap();
    let domain = AnnulusDomain::new(2, ORIGIN, 0.3, 2.0).unwrap();
    let form = assemble_form(&domain, 16, &params).unwrap();
    let n = form.dof();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // Lambda-link gradient identity at 1e-10.
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let nv = fracoron::discrete::functional_n(&form, &v);
    for x in &mut v {
        *x /= nv.sqrt();
    }
    let lambda = fracoron::discrete::link_lambda(&form, &v).unwrap();
    let lv: Vec<f64> = v.iter().map(|x| lambda * x).collect();
    let gi = fracoron::discrete::grad_i(&form, &lv);
    let gr = fracoron::discrete::grad_r(&form, &v).unwrap();
    let scale = gr.iter().map(|g| g.abs()).fold(1.0f64, f64::max);
    let link_err = gi
        .iter()
        .zip(&gr)
        .map(|(a, b)| (a - 0.5 * lambda * b).abs())
        .fold(0.0f64, f64::max)
        / scale;
    assert!(link_err <= 1e-10, "link identity error {link_err:.3e}");

    // Tangent projection identities at 1e-12.
    let (y, z) = fracoron::discrete::tangent_project(&form, &v).unwrap();
    let gn = fracoron::discrete::grad_n(&form, &v).unwrap();
    let ortho = fracoron::discrete::dot_h(&form, &z, &gn).abs()
        / (fracoron::discrete::norm_h(&form, &gn) * fracoron::discrete::norm_h(&form, &z));
    assert!(ortho <= 1e-12, "orthogonality {ortho:.3e}");
    let z2 = fracoron::discrete::dot_h(&form, &z, &z);
    let gr2 = fracoron::discrete::dot_h(&form, &gr, &gr);
    let along = fracoron::discrete::dot_h(&form, &gr, &y);
    let pyth = (z2 - (gr2 - along * along)).abs() / gr2;
    assert!(pyth <= 1e-12, "pythagoras {pyth:.3e}");
    let z_dot_gr = (fracoron::discrete::dot_h(&form, &z, &gr) - z2).abs() / z2.max(1e-300);
    assert!(z_dot_gr <= 1e-12, "<Z, grad R> = ||Z||² failed: {z_dot_gr:.3e}");

    // Sign-split identity at 1e-10 relative.
    let g = sample_into_grid(&domain, 16, |x| (4.0 * x[0]).sin() + 0.4 * x[1]).unwrap();
    let (lhs, rhs) = sign_split_check(&g, &form);
    let split = (lhs - rhs).abs() / lhs;
    assert!(split <= 1e-10, "sign split {split:.3e}");

    // Flow: constraint conserved at 1e-10, level monotone.
    let cfg = fracoron::discrete::FlowConfig::default();
    let start: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let mut state = fracoron::discrete::flow_state(&form, start, &cfg).unwrap();
    let mut drift_max = 0.0f64;
    let mut monotone = true;
    let mut prev = state.level;
    for _ in 0..40 {
        state = match fracoron::discrete::flow_step(&state, &form, &cfg) {
            Ok(s) => s,
            Err(Error::Stagnation { .. }) => break,
            Err(e) => panic!("{e}"),
        };
        drift_max = drift_max.max((fracoron::discrete::functional_n(&form, &state.u) - 1.0).abs());
        monotone &= state.level <= prev + 1e-12;
        prev = state.level;
    }
    assert!(drift_max <= 1e-10, "constraint drift {drift_max:.3e}");
    assert!(monotone, "level increased along the flow");

    println!(
        "[criterion 07] PASS: link {link_err:.1e}, ortho {ortho:.1e}, pyth {pyth:.1e}, split {split:.1e}, drift {drift_max:.1e}, monotone"
    );
}

#[test]
fn criterion_08_gradient_finite_difference_oracle() {
    let params = FracParams::new(2, 0.5).unwrap();
    let domain = AnnulusDomain::new(2, ORIGIN, 0.3, 2.0).unwrap();
    let form = assemble_form(&domain, 24, &params).unwrap();
    let n = form.dof();
    let hn = form.spacing().powi(2);
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let u: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.2)).collect();
    let gr = fracoron::discrete::grad_r(&form, &u).unwrap();
    let gn = fracoron::discrete::grad_n(&form, &u).unwrap();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for dir in 0..10 {
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut up = u.clone();
        let mut um = u.clone();
        for i in 0..n {
            up[i] += h * d[i];
            um[i] -= h * d[i];
        }
        let fd_r = (fracoron::discrete::functional_r(&form, &up).unwrap()
            - fracoron::discrete::functional_r(&form, &um).unwrap())
            / (2.0 * h);
        let an_r = hn * gr.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
        let rel_r = (fd_r - an_r).abs() / an_r.abs().max(1e-12);
        assert!(rel_r <= 1e-5, "dir {dir}: grad_R fd {fd_r} vs {an_r} ({rel_r:.2e})");
        let fd_n = (fracoron::discrete::functional_n(&form, &up)
            - fracoron::discrete::functional_n(&form, &um))
            / (2.0 * h);
        let an_n = hn * gn.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
        let rel_n = (fd_n - an_n).abs() / an_n.abs().max(1e-12);
        assert!(rel_n <= 1e-5, "dir {dir}: grad_N fd {fd_n} vs {an_n} ({rel_n:.2e})");
        worst = worst.max(rel_r.max(rel_n));
    }
    println!("[criterion 08] PASS: gradients match finite differences, worst rel {worst:.2e}");
}

#[test]
fn criterion_09_end_to_end_solve() {
    let t0 = Instant::now();
    let params = FracParams::new(2, 0.5).unwrap();
    let domain = AnnulusDomain::new(2, ORIGIN, 0.1, 4.0).unwrap();
    let cfg = MinMaxConfig::default();
    let (report, solution) = minmax_solve(&domain, 48, 0.05, &params, &cfg).unwrap();

    assert_eq!(report.initial_degree, Some(1), "initial degree");
    assert_eq!(report.degree, Some(1), "degree after flow");
    let upper = 2f64.powf(0.5) * report.s_h;
    assert!(
        report.s_h < report.level_c && report.level_c < upper,
        "window: s_h = {}, c = {}, upper = {upper}",
        report.s_h,
        report.level_c
    );
    assert!(report.window_ok);
    assert!(
        report.positivity_ok,
        "converged member is not node-positive"
    );
    assert!(
        report.residual <= report.residual_bound,
        "residual {} > 1e-4 ||u|| = {}",
        report.residual,
        report.residual_bound
    );
    // Every flowed member sits at or above the discrete reference.
    for (i, lvl) in report.member_levels.iter().enumerate() {
        assert!(
            *lvl >= report.s_h * (1.0 - 0.05),
            "member {i} level {lvl} below s_h {}",
            report.s_h
        );
    }
    assert!(solution.zero_exterior_ok());
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() <= 1800.0, "took {elapsed:?} (> 30 min)");
    println!(
        "[criterion 09] PASS: window {:.4} < {:.4} < {:.4}, degree 1, positive, residual {:.2e} <= {:.2e}, in {elapsed:.0?}",
        report.s_h, report.level_c, upper, report.residual, report.residual_bound
    );
}

#[test]
fn criterion_10_barycenter_boundary_estimate() {
    let params = FracParams::new(2, 0.5).unwrap();
    let q = QuadratureConfig::standard();
    let eps_bar = 0.05;
    let delta = eps_bar * eps_bar;
    // K = sup{|x| : x in Ω} + 1 for the solver's reference annulus.
    let k_radius = 4.0 + 1.0;
    let mut worst = 0.0f64;
    for z in z_samples_boundary(8, 0) {
        let t = TruncatedBubble::new(
            Cutoff::new(delta).unwrap(),
            Bubble::new(eps_bar, z).unwrap(),
        );
        let normalized = normalize(&t.field(&params), &params, &q).unwrap();
        let beta = barycenter_field(&normalized, k_radius, &params, &q).unwrap();
        let err = dist(&beta, &z, 2);
        assert!(err <= 0.5, "z = {z:?}: |beta - z| = {err}");
        worst = worst.max(err);
    }
    println!("[criterion 10] PASS: barycenter within {worst:.2e} (<= 0.5) of the center");
}

#[test]
fn criterion_11_discrete_reference_trend() {
    let params = FracParams::new(2, 0.5).unwrap();
    let domain = AnnulusDomain::new(2, ORIGIN, 0.1, 4.0).unwrap();
    let s_cont = reference_rayleigh(&params).unwrap();
    let cfg = MinMaxConfig::default();
    let mut raw = Vec::new();
    let mut refined = Vec::new();
    for res in [24usize, 32, 48] {
        let form = assemble_form(&domain, res, &params).unwrap();
        let (s_h, _, s_raw) = discrete_bubble_reference(&form, &cfg).unwrap();
        raw.push(s_raw);
        refined.push(s_h);
    }
    // The sampled-bubble quotient approaches the continuum value
    // monotonically from below as the grid refines.
    for w in raw.windows(2) {
        assert!(
            (s_cont - w[1]).abs() < (s_cont - w[0]).abs(),
            "trend not monotone toward S = {s_cont}: {raw:?}"
        );
    }
    println!(
        "[criterion 11] PASS: sampled quotient {raw:?} -> S = {s_cont:.4} (refined reference {refined:?})"
    );
}

#[test]
fn criterion_06b_quotients_dominate_reference() {
    // Companion check to the gap: the quotient of any evaluated truncation
    // stays above the family reference (infimum property), here on the
    // boundary ring where the truncation bites hardest.
    let params = FracParams::new(2, 0.5).unwrap();
    let q = QuadratureConfig::standard();
    let s_ref = reference_rayleigh(&params).unwrap();
    let delta = 0.05 * 0.05;
    for z in z_samples_boundary(4, 1) {
        let t = TruncatedBubble::new(Cutoff::new(delta).unwrap(), Bubble::new(0.05, z).unwrap());
        let r = rayleigh(&t.field(&params), &params, &q).unwrap();
        assert!(r >= s_ref * (1.0 - 1e-3), "{r} < {s_ref}");
    }
    let _ = norm(&ORIGIN, 2);
    println!("[criterion 06b] PASS: truncation quotients dominate the reference");
}
