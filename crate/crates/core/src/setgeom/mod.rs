//! Support functions of convex moment-inequality sets and interval geometry.

mod barrier;
mod direction;
mod hausdorff;
mod hj_support;
mod interval;

pub use barrier::{
    linearization_coeffs, support_solve, support_value, SolveStatus, SolverOptions, SupportSolveResult, SupportSolver,
};
pub use direction::{Direction, SphereGrid};
pub use hausdorff::{hausdorff_via_support, support_excess};
pub use hj_support::{hj_feasible_mu, hj_support, HjSupport};
pub use interval::{contraction, envelope, hausdorff_interval, IntervalSet};
