use super::{MeanFunctional, ModelTag, MomentModel, ThetaBox, ThetaPrior};
use crate::dpposterior::{sample_with_rejection, DataMatrix, PosteriorDraws};
use crate::error::{param, Result};
use crate::linalg::Matrix;
use crate::samplekit::{draw_std_normal, draw_uniform, RngStream};
use crate::scalar::Scalar;
use crate::setgeom::Direction;

/// Interval-censored mean: `Θ(φ) = [φ₁, φ₂]` with `φ = (E Y₁, E Y₂)`.
#[derive(Debug, Clone)]
pub struct IntervalMean<T> {
    bbox: ThetaBox<T>,
}

impl<T: Scalar> IntervalMean<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        Ok(Self { bbox: ThetaBox::new(vec![lo], vec![hi])? })
    }
}

impl<T: Scalar> Default for IntervalMean<T> {
    fn default() -> Self {
        Self::new(T::lit(-100.0), T::lit(100.0)).expect("valid default box")
    }
}

impl<T: Scalar> MomentModel<T> for IntervalMean<T> {
    fn tag(&self) -> ModelTag {
        ModelTag::IntervalMean
    }
    fn dim_theta(&self) -> usize {
        1
    }
    fn dim_phi(&self) -> usize {
        2
    }
    fn num_inequalities(&self) -> usize {
        2
    }
    fn theta_box(&self) -> &ThetaBox<T> {
        &self.bbox
    }

    fn psi(&self, theta: &[T], phi: &[T]) -> Vec<T> {
        vec![phi[0] - theta[0], theta[0] - phi[1]]
    }

    fn grad_theta_psi(&self, _theta: &[T], _phi: &[T]) -> Matrix<T> {
        Matrix::from_vec(2, 1, vec![-T::one(), T::one()]).expect("2x1")
    }

    fn affine_in_theta(&self) -> bool {
        true
    }

    fn grad_phi_psi(&self, _theta: &[T], _phi: &[T]) -> Matrix<T> {
        Matrix::diag(&[T::one(), -T::one()])
    }

    /// `S(1) = φ₂`, `S(−1) = −φ₁`, clipped to the box. Applied as-is when `φ₁ > φ₂`.
    fn closed_support(&self, phi: &[T], nu: &Direction<T>) -> Option<Result<T>> {
        let v = nu.as_slice()[0];
        let (lo, hi) = (self.bbox.lo()[0], self.bbox.hi()[0]);
        Some(Ok(if v >= T::zero() { v * phi[1].min(hi) } else { v * phi[0].max(lo) }))
    }
}

impl MeanFunctional for IntervalMean<f64> {
    fn phi_from_means(&self, means: &[f64]) -> Result<Vec<f64>> {
        if means.len() != 2 {
            return param("interval-mean needs two columns (Y1, Y2)");
        }
        Ok(means.to_vec())
    }
}

impl ThetaPrior for IntervalMean<f64> {
    fn sample_theta(&self, stream: &mut RngStream, phi: &[f64]) -> Result<Option<Vec<f64>>> {
        let lo = phi[0].max(self.bbox.lo()[0]);
        let hi = phi[1].min(self.bbox.hi()[0]);
        Ok((lo <= hi).then(|| vec![draw_uniform(stream, lo, hi)]))
    }
}

/// Independent `Y₁ ~ N(φ₁, 1)`, `Y₂ ~ N(φ₂, 1)` with standard normal priors on φ.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianLocation;

impl GaussianLocation {
    pub fn simulate(stream: &mut RngStream, n: usize, phi0: [f64; 2]) -> Result<DataMatrix> {
        let mut data = Vec::with_capacity(2 * n);
        for _ in 0..n {
            data.push(phi0[0] + draw_std_normal(stream));
            data.push(phi0[1] + draw_std_normal(stream));
        }
        DataMatrix::with_names(n, 2, data, vec!["y1".into(), "y2".into()])
    }

    /// Posterior mode and mean `n/(1+n) · Ȳ`.
    pub fn point_estimate(data: &DataMatrix) -> Vec<f64> {
        let n = data.n() as f64;
        data.column_means().into_iter().map(|m| m * n / (1.0 + n)).collect()
    }

    /// Exact conjugate draws `φᵢ ~ N(Ȳᵢ n/(1+n), 1/(1+n))`.
    pub fn posterior(stream: &RngStream, data: &DataMatrix, draws: usize) -> Result<PosteriorDraws> {
        let center = Self::point_estimate(data);
        let sd = (1.0 / (1.0 + data.n() as f64)).sqrt();
        sample_with_rejection(stream, draws, ModelTag::IntervalMean, |s| {
            Ok(center.iter().map(|&c| c + sd * draw_std_normal(s)).collect())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_and_gradients() {
        let m = IntervalMean::<f64>::default();
        assert_eq!(m.psi(&[2.0], &[0.0, 1.0]), vec![-2.0, 1.0]);
        let g = m.grad_phi_psi(&[0.3], &[0.0, 1.0]);
        assert_eq!(g.as_slice(), &[1.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn closed_support_values() {
        let m = IntervalMean::<f64>::default();
        let up = Direction::axis(1, 0, true);
        let dn = Direction::axis(1, 0, false);
        assert_eq!(m.closed_support(&[0.2, 0.9], &up).unwrap().unwrap(), 0.9);
        assert_eq!(m.closed_support(&[0.2, 0.9], &dn).unwrap().unwrap(), -0.2);
    }

    #[test]
    fn gaussian_posterior_mean() {
        let n = 100;
        let data = DataMatrix::from_vec(n, 2, [1.0, 3.0].repeat(n)).unwrap();
        let d = GaussianLocation::posterior(&RngStream::new(1, 0), &data, 10_000).unwrap();
        let mean = d.mean();
        assert!((mean[0] - 100.0 / 101.0).abs() < 0.01);
        let est = GaussianLocation::point_estimate(&data);
        assert!((est[0] - 100.0 / 101.0).abs() < 1e-12 && (est[1] - 300.0 / 101.0).abs() < 1e-12);
        let var = d.covariance()[(0, 0)];
        assert!((var - 1.0 / 101.0).abs() < 0.001);
    }
}
