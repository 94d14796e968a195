use super::{MeanFunctional, ModelTag, MomentModel, ThetaBox, ThetaPrior};
use crate::dpposterior::{draw_dp_second_moment, sample_with_rejection, DataMatrix, DpConfig, PosteriorDraws};
use crate::error::{param, Error, Result};
use crate::linalg::{cholesky_solve, Matrix};
use crate::samplekit::{draw_std_normal, draw_uniform, RngStream};
use crate::scalar::Scalar;
use crate::setgeom::{hj_support, Direction};

/// Mean–variance bound on stochastic discount factors: `θ = (μ, σ²)` with
/// `σ² ≥ φ₁μ² − 2φ₂μ + φ₃` on the box `[0, μ̄] × [0, σ̄²]`.
#[derive(Debug, Clone)]
pub struct HansenJagannathan<T> {
    bbox: ThetaBox<T>,
}

impl<T: Scalar> HansenJagannathan<T> {
    pub fn new(mu_max: T, var_max: T) -> Result<Self> {
        Ok(Self { bbox: ThetaBox::new(vec![T::zero(), T::zero()], vec![mu_max, var_max])? })
    }

    pub fn mu_max(&self) -> T {
        self.bbox.hi()[0]
    }

    pub fn var_max(&self) -> T {
        self.bbox.hi()[1]
    }

    /// Frontier `σ²_φ(μ) = φ₁μ² − 2φ₂μ + φ₃`.
    pub fn frontier(phi: &[T], mu: T) -> T {
        phi[0] * mu * mu - T::lit(2.0) * phi[1] * mu + phi[2]
    }
}

impl<T: Scalar> Default for HansenJagannathan<T> {
    /// `μ̄ = 1.4`, `σ̄² = 6`.
    fn default() -> Self {
        Self::new(T::lit(1.4), T::lit(6.0)).expect("valid default box")
    }
}

impl<T: Scalar> MomentModel<T> for HansenJagannathan<T> {
    fn tag(&self) -> ModelTag {
        ModelTag::HansenJagannathan
    }
    fn dim_theta(&self) -> usize {
        2
    }
    fn dim_phi(&self) -> usize {
        3
    }
    fn num_inequalities(&self) -> usize {
        1
    }
    fn theta_box(&self) -> &ThetaBox<T> {
        &self.bbox
    }

    fn psi(&self, theta: &[T], phi: &[T]) -> Vec<T> {
        vec![Self::frontier(phi, theta[0]) - theta[1]]
    }

    fn grad_theta_psi(&self, theta: &[T], phi: &[T]) -> Matrix<T> {
        let two = T::lit(2.0);
        Matrix::from_vec(1, 2, vec![two * phi[0] * theta[0] - two * phi[1], -T::one()]).expect("1x2")
    }

    fn hess_theta_psi(&self, _theta: &[T], phi: &[T], _i: usize) -> Matrix<T> {
        Matrix::diag(&[T::lit(2.0) * phi[0], T::zero()])
    }

    fn grad_phi_psi(&self, theta: &[T], _phi: &[T]) -> Matrix<T> {
        let mu = theta[0];
        Matrix::from_vec(1, 3, vec![mu * mu, -T::lit(2.0) * mu, T::one()]).expect("1x3")
    }

    fn closed_support(&self, phi: &[T], nu: &Direction<T>) -> Option<Result<T>> {
        Some(hj_support(phi, nu, &self.bbox).map(|s| s.value))
    }
}

/// `φ = (mᵀΣ⁻¹m, mᵀΣ⁻¹ι, ιᵀΣ⁻¹ι)`.
pub fn hj_phi_from_moments(mean: &[f64], cov: &Matrix<f64>) -> Result<Vec<f64>> {
    let n = mean.len();
    if cov.rows() != n || cov.cols() != n {
        return param("covariance shape does not match mean");
    }
    let l = cov.cholesky()?;
    let a = cholesky_solve(&l, mean);
    let b = cholesky_solve(&l, &vec![1.0; n]);
    let phi1: f64 = mean.iter().zip(&a).map(|(x, y)| x * y).sum();
    let phi2: f64 = a.iter().sum();
    let phi3: f64 = b.iter().sum();
    Ok(vec![phi1, phi2, phi3])
}

impl HansenJagannathan<f64> {
    /// Posterior draws of φ through joint DP draws of `(m, Σ)`; singular Σ draws are redrawn.
    pub fn posterior(stream: &RngStream, data: &DataMatrix, cfg: &DpConfig, draws: usize) -> Result<PosteriorDraws> {
        sample_with_rejection(stream, draws, ModelTag::HansenJagannathan, |s| {
            let (m, cov) = draw_dp_second_moment(s, data, cfg)?;
            hj_phi_from_moments(&m, &cov)
        })
    }

    /// Appends the upper triangle of `R Rᵀ` to each return row, so that φ becomes a
    /// function of column means.
    pub fn augment(data: &DataMatrix) -> Result<DataMatrix> {
        let n_assets = data.p();
        let p = n_assets + n_assets * (n_assets + 1) / 2;
        let mut out = Vec::with_capacity(data.n() * p);
        for r in data.rows() {
            out.extend_from_slice(r);
            for i in 0..n_assets {
                for j in i..n_assets {
                    out.push(r[i] * r[j]);
                }
            }
        }
        DataMatrix::from_vec(data.n(), p, out)
    }
}

impl MeanFunctional for HansenJagannathan<f64> {
    /// Means of augmented rows `(R, vech(R Rᵀ))`.
    fn phi_from_means(&self, means: &[f64]) -> Result<Vec<f64>> {
        let p = means.len();
        let n = (((8 * p + 9) as f64).sqrt() as usize - 3) / 2;
        if n == 0 || n + n * (n + 1) / 2 != p {
            return param("HJ means must be augmented (R, vech(R Rᵀ)) columns");
        }
        let m = &means[..n];
        let mut cov = Matrix::zeros(n, n);
        let mut k = n;
        for i in 0..n {
            for j in i..n {
                let c = means[k] - m[i] * m[j];
                cov[(i, j)] = c;
                cov[(j, i)] = c;
                k += 1;
            }
        }
        hj_phi_from_moments(m, &cov)
    }
}

impl ThetaPrior for HansenJagannathan<f64> {
    /// `μ ~ U[0, μ̄]`, then `σ² ~ U[σ²_φ(μ), σ̄²]`; μ values whose frontier exceeds `σ̄²` are redrawn.
    fn sample_theta(&self, stream: &mut RngStream, phi: &[f64]) -> Result<Option<Vec<f64>>> {
        if hj_support(phi, &Direction::axis(2, 1, true), &self.bbox).is_err() {
            return Ok(None);
        }
        let (mu_max, var_max) = (self.mu_max(), self.var_max());
        for _ in 0..100_000 {
            let mu = draw_uniform(stream, 0.0, mu_max);
            let floor = Self::frontier(phi, mu).max(0.0);
            if floor <= var_max {
                return Ok(Some(vec![mu, draw_uniform(stream, floor, var_max)]));
            }
        }
        Err(Error::Numeric("feasible μ range too narrow for the hierarchical prior".into()))
    }
}

/// Factor model `R_t = Λ f_t + u_t + c ι` with `Λ` entries `N(0,1)` and `f`, `u` uniform on `[−w, w]`.
#[derive(Debug, Clone, Copy)]
pub struct HjDgp {
    pub assets: usize,
    pub factors: usize,
    pub shift: f64,
    pub half_width: f64,
}

impl Default for HjDgp {
    fn default() -> Self {
        Self { assets: 5, factors: 2, shift: 2.0, half_width: 2.0 }
    }
}

/// One draw of the loadings together with the implied true moments.
#[derive(Debug, Clone)]
pub struct HjReplication {
    pub dgp: HjDgp,
    pub loadings: Matrix<f64>,
}

impl HjDgp {
    pub fn replication(&self, stream: &mut RngStream) -> Result<HjReplication> {
        let vals = (0..self.assets * self.factors).map(|_| draw_std_normal(stream)).collect();
        Ok(HjReplication { dgp: *self, loadings: Matrix::from_vec(self.assets, self.factors, vals)? })
    }
}

impl HjReplication {
    pub fn true_mean(&self) -> Vec<f64> {
        vec![self.dgp.shift; self.dgp.assets]
    }

    /// `Σ = (w²/3)(ΛΛᵀ + I)`: the uniform factors and errors each have variance `w²/3`.
    pub fn true_covariance(&self) -> Matrix<f64> {
        let mut s = self.loadings.matmul(&self.loadings.transpose()).expect("square");
        for i in 0..self.dgp.assets {
            s[(i, i)] += 1.0;
        }
        s.scale(self.dgp.half_width * self.dgp.half_width / 3.0);
        s
    }

    pub fn true_phi(&self) -> Result<Vec<f64>> {
        hj_phi_from_moments(&self.true_mean(), &self.true_covariance())
    }

    pub fn simulate(&self, stream: &mut RngStream, n: usize) -> Result<DataMatrix> {
        let (na, nf, w) = (self.dgp.assets, self.dgp.factors, self.dgp.half_width);
        let mut data = Vec::with_capacity(n * na);
        for _ in 0..n {
            let f: Vec<f64> = (0..nf).map(|_| draw_uniform(stream, -w, w)).collect();
            let lf = self.loadings.matvec(&f);
            for v in lf {
                data.push(v + draw_uniform(stream, -w, w) + self.dgp.shift);
            }
        }
        let names = (1..=na).map(|i| format!("r{i}")).collect();
        DataMatrix::with_names(n, na, data, names)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_boundary_example() {
        let m = HansenJagannathan::<f64>::default();
        assert_eq!(m.psi(&[1.0, 1.0], &[1.0, 1.0, 2.0]), vec![0.0]);
        assert_eq!(m.grad_phi_psi(&[0.5, 2.0], &[1.0, 1.0, 2.0]).as_slice(), &[0.25, -1.0, 1.0]);
    }

    #[test]
    fn truth_frontier_touches_zero_at_half() {
        let rep = HjDgp::default().replication(&mut RngStream::new(1, 0)).unwrap();
        let phi = rep.true_phi().unwrap();
        assert!((phi[0] - 4.0 * phi[2]).abs() < 1e-9 * phi[0]);
        assert!((phi[1] - 2.0 * phi[2]).abs() < 1e-9 * phi[0]);
        assert!(HansenJagannathan::frontier(&phi, 0.5).abs() < 1e-9);
    }

    #[test]
    fn simulated_returns_have_mean_two() {
        let rep = HjDgp::default().replication(&mut RngStream::new(2, 0)).unwrap();
        let data = rep.simulate(&mut RngStream::new(2, 1), 10_000).unwrap();
        for m in data.column_means() {
            assert!((m - 2.0).abs() < 0.05, "{m}");
        }
    }

    #[test]
    fn augmented_means_reproduce_sample_phi() {
        let rep = HjDgp::default().replication(&mut RngStream::new(3, 0)).unwrap();
        let data = rep.simulate(&mut RngStream::new(3, 1), 500).unwrap();
        let aug = HansenJagannathan::augment(&data).unwrap();
        let phi = HansenJagannathan::<f64>::default().phi_from_means(&aug.column_means()).unwrap();
        let m = data.column_means();
        let mut cov = Matrix::zeros(5, 5);
        for r in data.rows() {
            for i in 0..5 {
                for j in 0..5 {
                    cov[(i, j)] += (r[i] - m[i]) * (r[j] - m[j]) / 500.0;
                }
            }
        }
        let direct = hj_phi_from_moments(&m, &cov).unwrap();
        for (a, b) in phi.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-8 * b.abs().max(1.0));
        }
    }

    #[test]
    fn posterior_draws_satisfy_cauchy_schwarz() {
        let rep = HjDgp::default().replication(&mut RngStream::new(4, 0)).unwrap();
        let data = rep.simulate(&mut RngStream::new(4, 1), 200).unwrap();
        let d = HansenJagannathan::posterior(&RngStream::new(4, 2), &data, &DpConfig::new(3.0, 50), 500).unwrap();
        for phi in &d.draws {
            assert!(phi[0] > 0.0 && phi[0] * phi[2] - phi[1] * phi[1] >= -1e-9 * phi[0] * phi[2]);
        }
    }
}
