//! Seeded random streams, the scalar distributions the samplers need, and
//! empirical quantiles.

mod dist;
mod normal;
mod quantile;
mod rng;

pub use dist::{draw_beta, draw_dirichlet, draw_dirichlet_flat, draw_gamma, draw_mvnormal, draw_std_normal, draw_uniform};
pub use normal::{std_normal_cdf, std_normal_quantile};
pub use quantile::{empirical_quantile, EmpiricalSample};
pub use rng::RngStream;
