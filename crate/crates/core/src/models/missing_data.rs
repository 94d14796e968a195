use super::{MeanFunctional, ModelTag, MomentModel, ThetaBox, ThetaPrior};
use crate::dpposterior::{sample_with_rejection, DataMatrix, PosteriorDraws};
use crate::error::{param, Error, Result};
use crate::linalg::Matrix;
use crate::samplekit::{draw_beta, draw_uniform, RngStream};
use crate::scalar::Scalar;
use crate::setgeom::Direction;

/// Binary outcome with missingness: `θ = P(Y=1)`, `φ = (P(M=1), P(Y=1 | M=1))`,
/// `Θ(φ) = [φ₁φ₂, φ₁φ₂ + 1 − φ₁]`.
#[derive(Debug, Clone)]
pub struct MissingData<T> {
    bbox: ThetaBox<T>,
}

impl<T: Scalar> MissingData<T> {
    pub fn new() -> Self {
        Self { bbox: ThetaBox::new(vec![T::zero()], vec![T::one()]).expect("unit box") }
    }
}

impl<T: Scalar> Default for MissingData<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> MomentModel<T> for MissingData<T> {
    fn tag(&self) -> ModelTag {
        ModelTag::MissingData
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
        let p = phi[0] * phi[1];
        vec![p - theta[0], theta[0] - p - T::one() + phi[0]]
    }

    fn grad_theta_psi(&self, _theta: &[T], _phi: &[T]) -> Matrix<T> {
        Matrix::from_vec(2, 1, vec![-T::one(), T::one()]).expect("2x1")
    }

    fn affine_in_theta(&self) -> bool {
        true
    }

    fn grad_phi_psi(&self, _theta: &[T], phi: &[T]) -> Matrix<T> {
        Matrix::from_vec(2, 2, vec![phi[1], phi[0], T::one() - phi[1], -phi[0]]).expect("2x2")
    }

    fn closed_support(&self, phi: &[T], nu: &Direction<T>) -> Option<Result<T>> {
        let v = nu.as_slice()[0];
        let p = phi[0] * phi[1];
        Some(Ok(if v >= T::zero() { v * (p + T::one() - phi[0]) } else { v * p }))
    }
}

impl MeanFunctional for MissingData<f64> {
    /// Columns `(M, M·Y)`.
    fn phi_from_means(&self, means: &[f64]) -> Result<Vec<f64>> {
        if means.len() != 2 {
            return param("missing-data expects columns (m, y)");
        }
        if !(means[0] > 0.0) {
            return Err(Error::Numeric("no observed outcomes".into()));
        }
        Ok(vec![means[0], means[1] / means[0]])
    }
}

impl ThetaPrior for MissingData<f64> {
    fn sample_theta(&self, stream: &mut RngStream, phi: &[f64]) -> Result<Option<Vec<f64>>> {
        let lo = phi[0] * phi[1];
        let hi = lo + 1.0 - phi[0];
        Ok((lo <= hi).then(|| vec![draw_uniform(stream, lo, hi)]))
    }
}

/// Independent Beta priors on `φ₁` and `φ₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPrior {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
}

impl BetaPrior {
    /// Same `(α, β)` for both components.
    pub fn symmetric(alpha: f64, beta: f64) -> Self {
        Self { a1: alpha, b1: beta, a2: alpha, b2: beta }
    }
}

/// Sufficient statistics: `n`, `n₁ = #{M=1}`, `n₂ = #{M=1, Y=1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MissingCounts {
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
}

/// A point estimate of φ; `fallback[j]` marks components where the Beta mode was
/// undefined and the posterior mean was used instead.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimate {
    pub phi: Vec<f64>,
    pub fallback: [bool; 2],
}

fn beta_mode_or_mean(a: f64, b: f64) -> (f64, bool) {
    if a >= 1.0 && b >= 1.0 && a + b > 2.0 {
        ((a - 1.0) / (a + b - 2.0), false)
    } else {
        (a / (a + b), true)
    }
}

impl MissingCounts {
    pub fn new(n: usize, n1: usize, n2: usize) -> Result<Self> {
        if n == 0 || n1 > n || n2 > n1 {
            return param(format!("inconsistent counts n={n}, n1={n1}, n2={n2}"));
        }
        Ok(Self { n, n1, n2 })
    }

    pub fn from_data(data: &DataMatrix) -> Result<Self> {
        if data.p() != 2 {
            return param("missing-data expects columns (m, y)");
        }
        let (mut n1, mut n2) = (0, 0);
        for r in data.rows() {
            if r[0] != 0.0 && r[0] != 1.0 || r[1] != 0.0 && r[1] != 1.0 {
                return param("missing-data columns must be 0/1");
            }
            if r[0] == 1.0 {
                n1 += 1;
                if r[1] == 1.0 {
                    n2 += 1;
                }
            }
        }
        Self::new(data.n(), n1, n2)
    }

    /// Posterior shapes `(α₁+n₁, β₁+n−n₁, α₂+n₂, β₂+n₁−n₂)`.
    pub fn posterior_shapes(&self, prior: &BetaPrior) -> [f64; 4] {
        let (n, n1, n2) = (self.n as f64, self.n1 as f64, self.n2 as f64);
        [prior.a1 + n1, prior.b1 + n - n1, prior.a2 + n2, prior.b2 + n1 - n2]
    }

    /// Posterior mode, falling back to the mean for a component whose mode is undefined.
    pub fn posterior_mode(&self, prior: &BetaPrior) -> PointEstimate {
        let [a1, b1, a2, b2] = self.posterior_shapes(prior);
        let (p1, f1) = beta_mode_or_mean(a1, b1);
        let (p2, f2) = beta_mode_or_mean(a2, b2);
        PointEstimate { phi: vec![p1, p2], fallback: [f1, f2] }
    }

    pub fn posterior_mean(&self, prior: &BetaPrior) -> Vec<f64> {
        let [a1, b1, a2, b2] = self.posterior_shapes(prior);
        vec![a1 / (a1 + b1), a2 / (a2 + b2)]
    }

    /// Exact conjugate draws; with `n₁ = 0` the `φ₂` draw is from its prior.
    pub fn posterior(&self, stream: &RngStream, prior: &BetaPrior, draws: usize) -> Result<PosteriorDraws> {
        let [a1, b1, a2, b2] = self.posterior_shapes(prior);
        sample_with_rejection(stream, draws, ModelTag::MissingData, |s| Ok(vec![draw_beta(s, a1, b1)?, draw_beta(s, a2, b2)?]))
    }
}

impl MissingData<f64> {
    /// Rows `(M, M·Y)` with `M ~ Bernoulli(φ₁)`, `Y | M=1 ~ Bernoulli(φ₂)`.
    pub fn simulate(stream: &mut RngStream, n: usize, phi0: [f64; 2]) -> Result<DataMatrix> {
        let mut data = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let m = draw_uniform(stream, 0.0, 1.0) < phi0[0];
            let y = draw_uniform(stream, 0.0, 1.0) < phi0[1];
            data.push(if m { 1.0 } else { 0.0 });
            data.push(if m && y { 1.0 } else { 0.0 });
        }
        DataMatrix::with_names(n, 2, data, vec!["m".into(), "y".into()])
    }

    /// Bernoulli Fisher information `diag(1/(φ₁(1−φ₁)), φ₁/(φ₂(1−φ₂)))` per observation.
    pub fn fisher_information(phi: &[f64]) -> Matrix<f64> {
        Matrix::diag(&[1.0 / (phi[0] * (1.0 - phi[0])), phi[0] / (phi[1] * (1.0 - phi[1]))])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_at_truth() {
        let m = MissingData::<f64>::new();
        let v = m.psi(&[0.5], &[0.7, 0.5]);
        assert!((v[0] + 0.15).abs() < 1e-15 && (v[1] + 0.15).abs() < 1e-15);
        let up = m.closed_support(&[0.7, 0.5], &Direction::axis(1, 0, true)).unwrap().unwrap();
        let dn = m.closed_support(&[0.7, 0.5], &Direction::axis(1, 0, false)).unwrap().unwrap();
        assert!((up - 0.65).abs() < 1e-15 && (dn + 0.35).abs() < 1e-15);
        assert!((up + dn - 0.3).abs() < 1e-15);
    }

    #[test]
    fn conjugate_posterior_and_mode() {
        let c = MissingCounts::new(100, 70, 35).unwrap();
        let prior = BetaPrior::symmetric(1.0, 1.0);
        assert_eq!(c.posterior_shapes(&prior), [71.0, 31.0, 36.0, 36.0]);
        let est = c.posterior_mode(&prior);
        assert!((est.phi[0] - 0.7).abs() < 1e-15 && (est.phi[1] - 0.5).abs() < 1e-15);
        assert_eq!(est.fallback, [false, false]);
        let d = c.posterior(&RngStream::new(1, 0), &prior, 10_000).unwrap();
        let m = d.mean();
        assert!((m[0] - 71.0 / 102.0).abs() < 0.01 && (m[1] - 0.5).abs() < 0.01);
    }

    #[test]
    fn mode_fallback_and_empty_observed() {
        let c = MissingCounts::new(10, 0, 0).unwrap();
        let est = c.posterior_mode(&BetaPrior::symmetric(0.1, 0.1));
        assert_eq!(est.fallback, [true, true]);
        assert!((est.phi[1] - 0.5).abs() < 1e-15);
        let d = c.posterior(&RngStream::new(2, 0), &BetaPrior::symmetric(2.0, 2.0), 20_000).unwrap();
        assert!((d.mean()[1] - 0.5).abs() < 0.01);
        assert!(MissingCounts::new(10, 11, 0).is_err());
    }

    #[test]
    fn simulated_frequencies() {
        let data = MissingData::simulate(&mut RngStream::new(5, 0), 100_000, [0.7, 0.5]).unwrap();
        let c = MissingCounts::from_data(&data).unwrap();
        assert!((c.n1 as f64 / c.n as f64 - 0.7).abs() < 0.01);
        assert!((c.n2 as f64 / c.n1 as f64 - 0.5).abs() < 0.01);
        let phi = MissingData::<f64>::new().phi_from_means(&data.column_means()).unwrap();
        assert!((phi[0] - 0.7).abs() < 0.01 && (phi[1] - 0.5).abs() < 0.01);
    }
}
