//! Moment-inequality models `Θ(φ) = {θ ∈ Θ : Ψ(θ, φ) ≤ 0}` and their samplers.

mod hj;
mod interval_mean;
mod interval_regression;
mod missing_data;
mod polytope;

use std::fmt;
use std::str::FromStr;

pub use hj::{hj_phi_from_moments, HansenJagannathan, HjDgp, HjReplication};
pub use interval_mean::{GaussianLocation, IntervalMean};
pub use interval_regression::{IntervalRegression, RegressionDgp};
pub use missing_data::{BetaPrior, MissingCounts, MissingData, PointEstimate};
pub use polytope::Polytope;

use crate::error::{param, Error, Result};
use crate::linalg::Matrix;
use crate::samplekit::RngStream;
use crate::scalar::Scalar;
use crate::setgeom::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelTag {
    IntervalMean,
    IntervalRegression,
    MissingData,
    HansenJagannathan,
    Polytope,
    Custom,
}

impl ModelTag {
    pub fn name(self) -> &'static str {
        match self {
            Self::IntervalMean => "interval-mean",
            Self::IntervalRegression => "interval-regression",
            Self::MissingData => "missing-data",
            Self::HansenJagannathan => "hj",
            Self::Polytope => "polytope",
            Self::Custom => "custom",
        }
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "interval-mean" | "gaussian" | "gaussian-interval" => Self::IntervalMean,
            "interval-regression" => Self::IntervalRegression,
            "missing-data" => Self::MissingData,
            "hj" => Self::HansenJagannathan,
            "polytope" => Self::Polytope,
            other => return Err(Error::Config(format!("unknown model {other:?}"))),
        })
    }
}

/// Compact parameter box `Θ = ∏ [loⱼ, hiⱼ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaBox<T> {
    lo: Vec<T>,
    hi: Vec<T>,
}

impl<T: Scalar> ThetaBox<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return param("box bounds must be nonempty and of equal length");
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return param("box needs finite bounds with lo < hi");
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(d: usize, lo: T, hi: T) -> Result<Self> {
        Self::new(vec![lo; d], vec![hi; d])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[T] {
        &self.lo
    }

    pub fn hi(&self) -> &[T] {
        &self.hi
    }

    pub fn center(&self) -> Vec<T> {
        self.lo.iter().zip(&self.hi).map(|(&a, &b)| (a + b) / T::lit(2.0)).collect()
    }

    pub fn contains(&self, theta: &[T], tol: T) -> bool {
        theta.len() == self.dim()
            && theta.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&x, (&a, &b))| x >= a - tol && x <= b + tol)
    }
}

impl ThetaBox<f64> {
    pub fn sample_uniform(&self, stream: &mut RngStream) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(&a, &b)| crate::samplekit::draw_uniform(stream, a, b)).collect()
    }
}

/// A convex moment-inequality model, optionally with affine equalities `C(φ) θ = e(φ)`.
///
/// Methods take raw slices for speed; [`psi_checked`] adds tag and shape validation.
pub trait MomentModel<T: Scalar>: Send + Sync {
    fn tag(&self) -> ModelTag;
    fn dim_theta(&self) -> usize;
    fn dim_phi(&self) -> usize;
    fn num_inequalities(&self) -> usize;
    fn num_equalities(&self) -> usize {
        0
    }
    fn theta_box(&self) -> &ThetaBox<T>;

    fn psi(&self, theta: &[T], phi: &[T]) -> Vec<T>;

    /// k × d Jacobian in θ.
    fn grad_theta_psi(&self, theta: &[T], phi: &[T]) -> Matrix<T>;

    /// d × d Hessian of `Ψᵢ` in θ; central differences of the gradient by default.
    fn hess_theta_psi(&self, theta: &[T], phi: &[T], i: usize) -> Matrix<T> {
        let d = theta.len();
        let mut h = Matrix::zeros(d, d);
        let mut x = theta.to_vec();
        for j in 0..d {
            let step = T::epsilon().cbrt() * theta[j].abs().max(T::one());
            let orig = x[j];
            x[j] = orig + step;
            let gp = self.grad_theta_psi(&x, phi);
            x[j] = orig - step;
            let gm = self.grad_theta_psi(&x, phi);
            x[j] = orig;
            for r in 0..d {
                h[(r, j)] = (gp[(i, r)] - gm[(i, r)]) / (step + step);
            }
        }
        for r in 0..d {
            for c in 0..r {
                let s = (h[(r, c)] + h[(c, r)]) / T::lit(2.0);
                h[(r, c)] = s;
                h[(c, r)] = s;
            }
        }
        h
    }

    /// True when every `Ψᵢ` is affine in θ, so Hessians vanish.
    fn affine_in_theta(&self) -> bool {
        false
    }

    /// k × d_φ Jacobian in φ.
    fn grad_phi_psi(&self, theta: &[T], phi: &[T]) -> Matrix<T>;

    /// `(C, e)` with the equalities `C θ = e`, when the model has any.
    fn equalities(&self, _phi: &[T]) -> Option<(Matrix<T>, Vec<T>)> {
        None
    }

    /// k₂ × d_φ Jacobian of `C θ − e` in φ.
    fn grad_phi_equalities(&self, _theta: &[T], _phi: &[T]) -> Option<Matrix<T>> {
        None
    }

    /// Exact support value when a closed form applies to this `φ`.
    fn closed_support(&self, _phi: &[T], _nu: &Direction<T>) -> Option<Result<T>> {
        None
    }

    fn check_phi(&self, phi: &[T]) -> Result<()> {
        if phi.len() != self.dim_phi() {
            return param(format!("{}: φ has length {}, expected {}", self.tag(), phi.len(), self.dim_phi()));
        }
        if phi.iter().any(|v| !v.is_finite()) {
            return param(format!("{}: φ has non-finite entries", self.tag()));
        }
        Ok(())
    }
}

/// φ together with the model it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiVector<T> {
    pub tag: ModelTag,
    pub values: Vec<T>,
}

/// θ together with the model it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPoint<T> {
    pub tag: ModelTag,
    pub values: Vec<T>,
}

impl<T> PhiVector<T> {
    pub fn new(tag: ModelTag, values: Vec<T>) -> Self {
        Self { tag, values }
    }
}

impl<T> ThetaPoint<T> {
    pub fn new(tag: ModelTag, values: Vec<T>) -> Self {
        Self { tag, values }
    }
}

fn check_tags<T: Scalar, M: MomentModel<T> + ?Sized>(model: &M, theta: &ThetaPoint<T>, phi: &PhiVector<T>) -> Result<()> {
    if theta.tag != model.tag() || phi.tag != model.tag() {
        return param(format!("tag mismatch: model {}, θ {}, φ {}", model.tag(), theta.tag, phi.tag));
    }
    if theta.values.len() != model.dim_theta() {
        return param(format!("θ has length {}, expected {}", theta.values.len(), model.dim_theta()));
    }
    model.check_phi(&phi.values)
}

pub fn psi_checked<T: Scalar, M: MomentModel<T> + ?Sized>(
    model: &M,
    theta: &ThetaPoint<T>,
    phi: &PhiVector<T>,
) -> Result<Vec<T>> {
    check_tags(model, theta, phi)?;
    Ok(model.psi(&theta.values, &phi.values))
}

pub fn grad_phi_psi_checked<T: Scalar, M: MomentModel<T> + ?Sized>(
    model: &M,
    theta: &ThetaPoint<T>,
    phi: &PhiVector<T>,
) -> Result<Matrix<T>> {
    check_tags(model, theta, phi)?;
    Ok(model.grad_phi_psi(&theta.values, &phi.values))
}

/// Models whose φ is a smooth function of sample means of the data columns.
pub trait MeanFunctional: Send + Sync {
    fn phi_from_means(&self, means: &[f64]) -> Result<Vec<f64>>;
}

/// Conditional prior `π(θ | φ)` used to draw θ alongside each φ draw.
pub trait ThetaPrior: Send + Sync {
    /// `None` when `Θ(φ)` is empty.
    fn sample_theta(&self, stream: &mut RngStream, phi: &[f64]) -> Result<Option<Vec<f64>>>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tag_roundtrip() {
        for t in [ModelTag::IntervalMean, ModelTag::IntervalRegression, ModelTag::MissingData, ModelTag::HansenJagannathan] {
            assert_eq!(t.name().parse::<ModelTag>().unwrap(), t);
        }
        assert!(matches!("nope".parse::<ModelTag>(), Err(Error::Config(_))));
    }

    #[test]
    fn box_validation() {
        assert!(ThetaBox::new(vec![0.0], vec![0.0]).is_err());
        assert!(ThetaBox::new(vec![0.0, 1.0], vec![1.0]).is_err());
        let b = ThetaBox::cube(2, -1.0, 1.0).unwrap();
        assert!(b.contains(&[0.5, -1.0], 0.0));
        assert!(!b.contains(&[1.5, 0.0], 0.0));
        assert_eq!(b.center(), vec![0.0, 0.0]);
    }

    #[test]
    fn checked_psi_rejects_tag_mismatch() {
        let m = MissingData::<f64>::new();
        let theta = ThetaPoint::new(ModelTag::MissingData, vec![0.5]);
        let phi = PhiVector::new(ModelTag::IntervalMean, vec![0.7, 0.5]);
        assert!(matches!(psi_checked(&m, &theta, &phi), Err(Error::Parameter(_))));
        let phi = PhiVector::new(ModelTag::MissingData, vec![0.7, 0.5]);
        assert!(psi_checked(&m, &theta, &phi).is_ok());
        let short = PhiVector::new(ModelTag::MissingData, vec![0.7]);
        assert!(psi_checked(&m, &theta, &short).is_err());
    }
}
