//! Projected descent of the Rayleigh quotient on the discrete constraint
//! manifold: backtracking line search along the negative tangent gradient
//! with renormalization after every step.
//!
//! The continuous min-max argument uses this flow as a deformation device:
//! members ride the velocity field `-2ηα/‖Z‖² Z`, where `α` is a cut
//! function that freezes members whose level is farther than `2η` from the
//! target level and `η` fixes the displacement budget, so one unit of time
//! drags the near-target slice below the target. Used as a solver neither
//! knob is needed — the same stationary points are reached by plain
//! backtracking descent with a monotone level — so `α` and `η` are not
//! implemented.

use crate::discrete::form::NonlocalForm;
use crate::discrete::functionals::{
    critical_mass, functional_n, functional_r, norm_h, tangent_project,
};
use crate::error::{Error, Result};

/// Flow iterate on the constraint manifold.
#[derive(Debug, Clone)]
pub struct FlowState {
    /// Interior degrees of freedom with `N(u) = 1`.
    pub u: Vec<f64>,
    /// Current Rayleigh level.
    pub level: f64,
    /// Norm of the projected gradient at `u`.
    pub grad_norm: f64,
    /// Last accepted step length.
    pub step: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FlowConfig {
    /// Constraint drift tolerance (checked, not merely hoped for).
    pub constraint_tol: f64,
    /// Armijo fraction for the line search.
    pub armijo: f64,
    /// Smallest step length before stagnation is reported.
    pub min_step: f64,
    /// Projected-gradient norm below which the state is stationary.
    pub stationary_tol: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            constraint_tol: 1e-10,
            armijo: 0.1,
            min_step: 1e-14,
            stationary_tol: 1e-9,
        }
    }
}

/// Projects `u` onto the constraint manifold (`N(u) = 1`) by scaling.
pub fn renormalize(form: &NonlocalForm, u: &mut [f64]) -> Result<()> {
    let n = functional_n(form, u);
    if !(n > 1e-280) {
        return Err(Error::ZeroFunction("renormalize"));
    }
    let c = 1.0 / n.sqrt();
    for v in u.iter_mut() {
        *v *= c;
    }
    Ok(())
}

/// Builds the initial flow state from arbitrary nonzero interior values.
pub fn flow_state(form: &NonlocalForm, mut u: Vec<f64>, _cfg: &FlowConfig) -> Result<FlowState> {
    renormalize(form, &mut u)?;
    let level = functional_r(form, &u)?;
    let (_, z) = tangent_project(form, &u)?;
    Ok(FlowState {
        u,
        level,
        grad_norm: norm_h(form, &z),
        step: cfg_initial_step(level),
    })
}

fn cfg_initial_step(level: f64) -> f64 {
    // Dimensionally, steps move u by δu ~ t‖∇R‖; starting near the level
    // scale keeps the first backtracks short.
    1.0 / level.abs().max(1.0)
}

/// One projected-descent step.
///
/// The new iterate is renormalized onto the manifold; the level never
/// increases beyond line-search tolerance. A vanishing projected gradient
/// returns the state unchanged; failure to find any decreasing step yields
/// the stagnation error.
pub fn flow_step(state: &FlowState, form: &NonlocalForm, cfg: &FlowConfig) -> Result<FlowState> {
    let drift = (functional_n(form, &state.u) - 1.0).abs();
    if drift > cfg.constraint_tol {
        return Err(Error::ConstraintViolation {
            drift,
            tol: cfg.constraint_tol,
        });
    }
    let (_, z) = tangent_project(form, &state.u)?;
    let z_norm2 = crate::discrete::functionals::dot_h(form, &z, &z);
    let z_norm = z_norm2.sqrt();
    if z_norm <= cfg.stationary_tol {
        let mut out = state.clone();
        out.grad_norm = z_norm;
        return Ok(out);
    }

    // R along the ray u - t z, evaluated without renormalizing (R is
    // homogeneous of degree zero, so the renormalized point has the same
    // level). The quadratic part expands in t with three fixed numbers.
    let au = form.apply(&state.u);
    let az = form.apply(&z);
    let auu = 2.0 * dot(&state.u, &au);
    let auz = 2.0 * dot(&state.u, &az);
    let azz = 2.0 * dot(&z, &az);
    let params = form.params();
    let theta = (params.dim() as f64 - 2.0 * params.s()) / params.dim() as f64;
    let p = params.critical_p();
    let hn = form.spacing().powi(params.dim() as i32);

    let level_at = |t: f64| -> f64 {
        let quad = auu - 2.0 * t * auz + t * t * azz;
        let mut mass = 0.0;
        for (ui, zi) in state.u.iter().zip(&z) {
            let v: f64 = ui - t * zi;
            mass += v.abs().powf(p);
        }
        quad / (hn * mass).powf(theta)
    };

    let mut t = state.step.max(cfg.min_step);
    // Try growing once; then backtrack.
    if level_at(2.0 * t) < level_at(t) {
        t *= 2.0;
    }
    let mut accepted = None;
    while t >= cfg.min_step {
        let candidate = level_at(t);
        if candidate <= state.level - cfg.armijo * t * z_norm2 {
            accepted = Some((t, candidate));
            break;
        }
        t *= 0.5;
    }
    let Some((t, _)) = accepted else {
        return Err(Error::Stagnation {
            steps: 0,
            level: state.level,
        });
    };

    let mut u_new: Vec<f64> = state
        .u
        .iter()
        .zip(&z)
        .map(|(ui, zi)| ui - t * zi)
        .collect();
    renormalize(form, &mut u_new)?;
    let level = functional_r(form, &u_new)?;
    let (_, z_new) = tangent_project(form, &u_new)?;
    Ok(FlowState {
        u: u_new,
        level,
        grad_norm: norm_h(form, &z_new),
        step: t,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Outcome of running the flow to stationarity.
#[derive(Debug, Clone)]
pub struct DescentOutcome {
    pub state: FlowState,
    pub steps: usize,
    pub stagnated: bool,
}

/// Runs [`flow_step`] until the projected gradient is below `z_tol`, the
/// step budget runs out, or the line search stagnates.
pub fn descend(
    start: FlowState,
    form: &NonlocalForm,
    cfg: &FlowConfig,
    z_tol: f64,
    max_steps: usize,
) -> Result<DescentOutcome> {
    let mut state = start;
    for step in 0..max_steps {
        if state.grad_norm <= z_tol {
            return Ok(DescentOutcome {
                state,
                steps: step,
                stagnated: false,
            });
        }
        match flow_step(&state, form, cfg) {
            Ok(next) => state = next,
            Err(Error::Stagnation { .. }) => {
                return Ok(DescentOutcome {
                    state,
                    steps: step,
                    stagnated: true,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(DescentOutcome {
        state,
        steps: max_steps,
        stagnated: false,
    })
}

/// Mass-aware helper exposed for tests: constraint value of a state.
pub fn constraint_value(form: &NonlocalForm, state: &FlowState) -> f64 {
    functional_n(form, &state.u)
}

/// Convenience: `M(u)` (used by reports).
pub fn mass(form: &NonlocalForm, u: &[f64]) -> f64 {
    critical_mass(form, u)
}
