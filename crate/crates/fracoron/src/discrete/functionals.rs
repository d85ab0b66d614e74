//! Discrete functionals on the zero-exterior grid space, their gradients
//! under the `h^N`-weighted node inner product, and the tangent projection
//! onto the critical-norm constraint manifold.

use crate::discrete::form::NonlocalForm;
use crate::error::{Error, Result};

/// `h^N Σ f_i g_i` over the interior degrees of freedom.
pub fn dot_h(form: &NonlocalForm, f: &[f64], g: &[f64]) -> f64 {
    let hn = form.spacing().powi(form.params().dim() as i32);
    hn * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
}

pub fn norm_h(form: &NonlocalForm, f: &[f64]) -> f64 {
    dot_h(form, f, f).sqrt()
}

/// Raw critical mass `M(u) = h^N Σ |u_i|^p`.
pub fn critical_mass(form: &NonlocalForm, u: &[f64]) -> f64 {
    let p = form.params().critical_p();
    let hn = form.spacing().powi(form.params().dim() as i32);
    hn * u.iter().map(|&v| v.abs().powf(p)).sum::<f64>()
}

/// Constraint functional `N(u) = M(u)^{(N-2s)/N}` (degree-2 homogeneous).
pub fn functional_n(form: &NonlocalForm, u: &[f64]) -> f64 {
    let params = form.params();
    let theta = (params.dim() as f64 - 2.0 * params.s()) / params.dim() as f64;
    critical_mass(form, u).powf(theta)
}

/// Free energy `I(u) = ½‖u‖² - (N-2s)/(2N) ∫|u|^p`.
pub fn functional_i(form: &NonlocalForm, u: &[f64]) -> f64 {
    let params = form.params();
    let frac = (params.dim() as f64 - 2.0 * params.s()) / (2.0 * params.dim() as f64);
    0.5 * form.quadratic_direct(u) - frac * critical_mass(form, u)
}

/// Rayleigh quotient `R(u) = ‖u‖² / N(u)`.
pub fn functional_r(form: &NonlocalForm, u: &[f64]) -> Result<f64> {
    let n = functional_n(form, u);
    if !(n > 1e-280) {
        return Err(Error::ZeroFunction("functional_r"));
    }
    Ok(form.quadratic_direct(u) / n)
}

/// Gradient of `N` under the `h^N` product: `2 M^{θ-1} |u_i|^{p-2} u_i`.
pub fn grad_n(form: &NonlocalForm, u: &[f64]) -> Result<Vec<f64>> {
    let params = form.params();
    let p = params.critical_p();
    let theta = (params.dim() as f64 - 2.0 * params.s()) / params.dim() as f64;
    let m = critical_mass(form, u);
    if !(m > 1e-280) {
        return Err(Error::ZeroFunction("grad_n"));
    }
    let c = 2.0 * m.powf(theta - 1.0);
    Ok(u.iter()
        .map(|&v| c * v.abs().powf(p - 2.0) * v)
        .collect())
}

/// Gradient of the quadratic form: `4 (Au)_i / h^N`.
pub fn grad_quadratic(form: &NonlocalForm, u: &[f64]) -> Vec<f64> {
    let hn = form.spacing().powi(form.params().dim() as i32);
    form.apply(u).into_iter().map(|v| 4.0 * v / hn).collect()
}

/// Gradient of the Rayleigh quotient: `(∇‖u‖² N - ‖u‖² ∇N) / N²`.
pub fn grad_r(form: &NonlocalForm, u: &[f64]) -> Result<Vec<f64>> {
    let n = functional_n(form, u);
    if !(n > 1e-280) {
        return Err(Error::ZeroFunction("grad_r"));
    }
    let a = form.quadratic_direct(u);
    let ga = grad_quadratic(form, u);
    let gn = grad_n(form, u)?;
    Ok(ga
        .iter()
        .zip(&gn)
        .map(|(ga_i, gn_i)| (ga_i * n - a * gn_i) / (n * n))
        .collect())
}

/// Gradient of the free energy: `2(Au)_i/h^N - |u_i|^{p-2} u_i`.
pub fn grad_i(form: &NonlocalForm, u: &[f64]) -> Vec<f64> {
    let params = form.params();
    let p = params.critical_p();
    let hn = form.spacing().powi(params.dim() as i32);
    form.apply(u)
        .into_iter()
        .zip(u)
        .map(|(au, &v)| 2.0 * au / hn - v.abs().powf(p - 2.0) * v)
        .collect()
}

/// Tangent projection at `u`: the normalized constraint gradient `Y` and
/// the projected Rayleigh gradient `Z = ∇R - <∇R,Y> Y`.
pub fn tangent_project(form: &NonlocalForm, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let gn = grad_n(form, u)?;
    let gn_norm = norm_h(form, &gn);
    if !(gn_norm > 1e-280) {
        return Err(Error::ZeroFunction("tangent_project"));
    }
    let y: Vec<f64> = gn.iter().map(|v| v / gn_norm).collect();
    let gr = grad_r(form, u)?;
    let proj = dot_h(form, &gr, &y);
    let z: Vec<f64> = gr.iter().zip(&y).map(|(g, yy)| g - proj * yy).collect();
    Ok((y, z))
}

/// `λ` of the stationarity link: `λ^{4s/(N-2s)} = ‖v‖² / ∫|v|^p`.
pub fn link_lambda(form: &NonlocalForm, v: &[f64]) -> Result<f64> {
    let m = critical_mass(form, v);
    if !(m > 1e-280) {
        return Err(Error::ZeroFunction("link_lambda"));
    }
    let ratio = form.quadratic_direct(v) / m;
    let params = form.params();
    Ok(ratio.powf((params.dim() as f64 - 2.0 * params.s()) / (4.0 * params.s())))
}

/// Pointwise weak residual of the rescaled Euler-Lagrange equation against
/// the nodal test functions: `r_i = a(u, e_i) - h^N |u_i|^{p-2} u_i`.
pub fn weak_residual(form: &NonlocalForm, u: &[f64]) -> Vec<f64> {
    let params = form.params();
    let p = params.critical_p();
    let hn = form.spacing().powi(params.dim() as i32);
    form.apply(u)
        .into_iter()
        .zip(u)
        .map(|(au, &v)| 2.0 * au - hn * v.abs().powf(p - 2.0) * v)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::form::assemble_form;
    use crate::domain::AnnulusDomain;
    use crate::geom::ORIGIN;
    use crate::params::FracParams;

    fn setup() -> NonlocalForm {
        let params = FracParams::new(2, 0.5).unwrap();
        let domain = AnnulusDomain::new(2, ORIGIN, 0.3, 2.0).unwrap();
        assemble_form(&domain, 12, &params).unwrap()
    }

    fn test_vector(form: &NonlocalForm, k: usize) -> Vec<f64> {
        (0..form.dof())
            .map(|i| ((i * 7 + k * 13) as f64 * 0.37).sin() + 0.2)
            .collect()
    }

    #[test]
    fn i_vanishes_at_zero() {
        let form = setup();
        assert_eq!(functional_i(&form, &vec![0.0; form.dof()]), 0.0);
    }

    #[test]
    fn r_is_scale_invariant() {
        let form = setup();
        let u = test_vector(&form, 1);
        let r = functional_r(&form, &u).unwrap();
        for sigma in [0.5, 3.0] {
            let su: Vec<f64> = u.iter().map(|v| sigma * v).collect();
            let rs = functional_r(&form, &su).unwrap();
            assert!((rs - r).abs() <= 1e-12 * r, "sigma {sigma}: {rs} vs {r}");
        }
    }

    #[test]
    fn r_rejects_zero() {
        let form = setup();
        assert!(functional_r(&form, &vec![0.0; form.dof()]).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let form = setup();
        let u = test_vector(&form, 2);
        let hn = form.spacing().powi(2);
        let gr = grad_r(&form, &u).unwrap();
        let gn = grad_n(&form, &u).unwrap();
        let h = 1e-6;
        for dir in 0..10 {
            let d = test_vector(&form, 10 + dir);
            let mut up = u.clone();
            let mut um = u.clone();
            for i in 0..u.len() {
                up[i] += h * d[i];
                um[i] -= h * d[i];
            }
            let fd_r = (functional_r(&form, &up).unwrap() - functional_r(&form, &um).unwrap())
                / (2.0 * h);
            let an_r = hn * gr.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
            assert!(
                (fd_r - an_r).abs() <= 1e-5 * an_r.abs().max(1e-10),
                "dir {dir}: fd {fd_r} vs {an_r}"
            );
            let fd_n =
                (functional_n(&form, &up) - functional_n(&form, &um)) / (2.0 * h);
            let an_n = hn * gn.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
            assert!(
                (fd_n - an_n).abs() <= 1e-6 * an_n.abs().max(1e-10),
                "dir {dir}: fd {fd_n} vs {an_n}"
            );
        }
    }

    #[test]
    fn grad_r_is_tangent_to_rays() {
        // Degree-0 homogeneity: <∇R(u), u>_h = 0.
        let form = setup();
        let u = test_vector(&form, 3);
        let gr = grad_r(&form, &u).unwrap();
        let along = dot_h(&form, &gr, &u);
        let scale = norm_h(&form, &gr) * norm_h(&form, &u);
        assert!(along.abs() <= 1e-12 * scale, "{along} vs {scale}");
    }

    #[test]
    fn grad_n_euler_identity() {
        // Degree-2 homogeneity: <∇N(u), u>_h = 2 N(u) > 0.
        let form = setup();
        let u = test_vector(&form, 4);
        let gn = grad_n(&form, &u).unwrap();
        let along = dot_h(&form, &gn, &u);
        let n = functional_n(&form, &u);
        assert!((along - 2.0 * n).abs() <= 1e-12 * n);
        assert!(along > 0.0);
    }

    #[test]
    fn tangent_projection_identities() {
        let form = setup();
        let mut u = test_vector(&form, 5);
        // Normalize onto the constraint manifold.
        let nval = functional_n(&form, &u);
        for v in &mut u {
            *v /= nval.sqrt();
        }
        let (y, z) = tangent_project(&form, &u).unwrap();
        assert!((norm_h(&form, &y) - 1.0).abs() <= 1e-12);
        let gn = grad_n(&form, &u).unwrap();
        let z_dot_gn = dot_h(&form, &z, &gn);
        assert!(z_dot_gn.abs() <= 1e-12 * norm_h(&form, &gn) * norm_h(&form, &z).max(1.0));
        // <Z, ∇R> = ‖Z‖² and the Pythagoras split.
        let gr = grad_r(&form, &u).unwrap();
        let z2 = dot_h(&form, &z, &z);
        assert!((dot_h(&form, &z, &gr) - z2).abs() <= 1e-12 * z2.max(1e-12));
        let gr2 = dot_h(&form, &gr, &gr);
        let along = dot_h(&form, &gr, &y);
        assert!((z2 - (gr2 - along * along)).abs() <= 1e-12 * gr2.max(1e-12));
    }

    #[test]
    fn link_rescaling_maps_levels() {
        // With N(v) = 1 and R(v) = c, the rescaled free energy is
        // I(λv) = (s/N) c^{N/(2s)}.
        let form = setup();
        let mut v = test_vector(&form, 9);
        let nval = functional_n(&form, &v);
        for x in &mut v {
            *x /= nval.sqrt();
        }
        let c = functional_r(&form, &v).unwrap();
        let lambda = link_lambda(&form, &v).unwrap();
        let lv: Vec<f64> = v.iter().map(|x| lambda * x).collect();
        let level = functional_i(&form, &lv);
        let params = form.params();
        let expect = params.s() / params.dim() as f64
            * c.powf(params.dim() as f64 / (2.0 * params.s()));
        assert!(
            (level - expect).abs() <= 1e-12 * expect,
            "{level} vs {expect}"
        );
    }

    #[test]
    fn link_identity_componentwise() {
        // With N(v) = 1 and λ from the link, ∇I(λv) = (λ/2) ∇R(v).
        let form = setup();
        let mut v = test_vector(&form, 6);
        let nval = functional_n(&form, &v);
        for x in &mut v {
            *x /= nval.sqrt();
        }
        assert!((functional_n(&form, &v) - 1.0).abs() < 1e-12);
        let lambda = link_lambda(&form, &v).unwrap();
        let lv: Vec<f64> = v.iter().map(|x| lambda * x).collect();
        let gi = grad_i(&form, &lv);
        let gr = grad_r(&form, &v).unwrap();
        let scale = gr.iter().map(|g| g.abs()).fold(0.0f64, f64::max);
        for i in 0..v.len() {
            let lhs = gi[i];
            let rhs = 0.5 * lambda * gr[i];
            assert!(
                (lhs - rhs).abs() <= 1e-10 * scale.max(1.0),
                "component {i}: {lhs} vs {rhs}"
            );
        }
    }
}
