use super::{ModelTag, MomentModel, ThetaBox};
use crate::error::{param, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Linear moment model `G θ ≤ h`, `C θ = e` with `φ = (h, e)`.
///
/// Useful as a test bed for the generic solver and as the affine-equality case.
#[derive(Debug, Clone)]
pub struct Polytope<T> {
    g: Matrix<T>,
    c: Option<Matrix<T>>,
    bbox: ThetaBox<T>,
}

impl<T: Scalar> Polytope<T> {
    pub fn new(g: Matrix<T>, c: Option<Matrix<T>>, bbox: ThetaBox<T>) -> Result<Self> {
        if g.cols() != bbox.dim() || c.as_ref().is_some_and(|c| c.cols() != bbox.dim()) {
            return param("constraint matrices must have one column per θ coordinate");
        }
        Ok(Self { g, c, bbox })
    }

    fn k2(&self) -> usize {
        self.c.as_ref().map_or(0, Matrix::rows)
    }
}

impl<T: Scalar> MomentModel<T> for Polytope<T> {
    fn tag(&self) -> ModelTag {
        ModelTag::Polytope
    }
    fn dim_theta(&self) -> usize {
        self.bbox.dim()
    }
    fn dim_phi(&self) -> usize {
        self.g.rows() + self.k2()
    }
    fn num_inequalities(&self) -> usize {
        self.g.rows()
    }
    fn num_equalities(&self) -> usize {
        self.k2()
    }
    fn theta_box(&self) -> &ThetaBox<T> {
        &self.bbox
    }

    fn psi(&self, theta: &[T], phi: &[T]) -> Vec<T> {
        self.g.matvec(theta).into_iter().zip(phi).map(|(a, &h)| a - h).collect()
    }

    fn grad_theta_psi(&self, _theta: &[T], _phi: &[T]) -> Matrix<T> {
        self.g.clone()
    }

    fn affine_in_theta(&self) -> bool {
        true
    }

    fn grad_phi_psi(&self, _theta: &[T], _phi: &[T]) -> Matrix<T> {
        let k = self.g.rows();
        let mut j = Matrix::zeros(k, self.dim_phi());
        for i in 0..k {
            j[(i, i)] = -T::one();
        }
        j
    }

    fn equalities(&self, phi: &[T]) -> Option<(Matrix<T>, Vec<T>)> {
        let k = self.g.rows();
        self.c.as_ref().map(|c| (c.clone(), phi[k..].to_vec()))
    }

    fn grad_phi_equalities(&self, _theta: &[T], _phi: &[T]) -> Option<Matrix<T>> {
        let (k, k2) = (self.g.rows(), self.k2());
        (k2 > 0).then(|| {
            let mut j = Matrix::zeros(k2, self.dim_phi());
            for i in 0..k2 {
                j[(i, k + i)] = -T::one();
            }
            j
        })
    }
}
