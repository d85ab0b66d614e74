//! Grid Galerkin analogue of the zero-exterior space: the nonlocal form,
//! the constrained functionals and their gradients, the projected descent
//! flow, and the min-max solver with its certification report.

pub mod dump;
pub mod flow;
pub mod form;
pub mod functionals;
pub mod minmax;

pub use dump::{fmt_g17, read_field, write_field};
pub use flow::{descend, flow_state, flow_step, DescentOutcome, FlowConfig, FlowState};
pub use form::{assemble_form, assemble_form_with_budget, NonlocalForm, DEFAULT_PAIR_BUDGET};
pub use functionals::{
    critical_mass, dot_h, functional_i, functional_n, functional_r, grad_i, grad_n,
    grad_quadratic, grad_r, link_lambda, norm_h, tangent_project, weak_residual,
};
pub use minmax::{
    barycenter, discrete_bubble_reference, family_mesh, minmax_solve, sign_change_degree_1d,
    sign_split_check, winding_degree, winding_degree_in_dim, MinMaxConfig, MinMaxReport,
};
