use crate::error::{Error, Result};
use crate::models::MomentModel;
use crate::scalar::Scalar;

use super::{support_value, SphereGrid};

fn support_pair<T: Scalar, M: MomentModel<T> + ?Sized>(model: &M, a: &[T], b: &[T], grid: &SphereGrid<T>) -> Result<Vec<(T, T)>> {
    let dom = |e: Error| match e {
        Error::Infeasible => Error::Domain("Hausdorff distance needs nonempty sets".into()),
        other => other,
    };
    grid.iter()
        .map(|nu| Ok((support_value(model, a, nu).map_err(dom)?, support_value(model, b, nu).map_err(dom)?)))
        .collect()
}

/// `max_ν |S_A(ν) − S_B(ν)|` over the grid; exact when `d = 1` and the grid is `{±1}`.
pub fn hausdorff_via_support<T: Scalar, M: MomentModel<T> + ?Sized>(
    model: &M,
    phi_a: &[T],
    phi_b: &[T],
    grid: &SphereGrid<T>,
) -> Result<T> {
    Ok(support_pair(model, phi_a, phi_b, grid)?
        .into_iter()
        .fold(T::zero(), |m, (a, b)| m.max((a - b).abs())))
}

/// `max_ν (S_A(ν) − S_B(ν))`: `A ⊆ B^ε` exactly when this is at most `ε` (up to grid mesh).
pub fn support_excess<T: Scalar, M: MomentModel<T> + ?Sized>(
    model: &M,
    phi_a: &[T],
    phi_b: &[T],
    grid: &SphereGrid<T>,
) -> Result<T> {
    Ok(support_pair(model, phi_a, phi_b, grid)?
        .into_iter()
        .fold(T::neg_infinity(), |m, (a, b)| m.max(a - b)))
}
