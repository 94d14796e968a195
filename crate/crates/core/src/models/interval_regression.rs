use super::{MeanFunctional, ModelTag, MomentModel, ThetaBox, ThetaPrior};
use crate::dpposterior::DataMatrix;
use crate::error::{param, Error, Result};
use crate::linalg::Matrix;
use crate::samplekit::{draw_std_normal, draw_uniform, RngStream};
use crate::scalar::Scalar;
use crate::setgeom::Direction;

/// Interval regression: `φ₁ ≤ φ₂ θ ≤ φ₃` componentwise, with
/// `φ = (φ₁ ∈ ℝᵈ, vec(φ₂) ∈ ℝ^{d×d} row-major, φ₃ ∈ ℝᵈ)`.
#[derive(Debug, Clone)]
pub struct IntervalRegression<T> {
    d: usize,
    bbox: ThetaBox<T>,
}

impl<T: Scalar> IntervalRegression<T> {
    pub fn new(bbox: ThetaBox<T>) -> Self {
        Self { d: bbox.dim(), bbox }
    }

    /// `Θ = [−2, 2]^d`.
    pub fn with_cube(d: usize) -> Result<Self> {
        Ok(Self::new(ThetaBox::cube(d, T::lit(-2.0), T::lit(2.0))?))
    }

    pub fn split<'a>(&self, phi: &'a [T]) -> (&'a [T], &'a [T], &'a [T]) {
        let d = self.d;
        (&phi[..d], &phi[d..d + d * d], &phi[d + d * d..])
    }

    pub fn design(&self, phi: &[T]) -> Matrix<T> {
        Matrix::from_vec(self.d, self.d, self.split(phi).1.to_vec()).expect("d×d block")
    }

    /// Support of the unboxed parallelotope, from `φ₂⁻¹`.
    fn parallelotope_support(lower: &[T], upper: &[T], inv: &Matrix<T>, nu: &[T]) -> T {
        let r = inv.tmatvec(nu);
        r.iter()
            .zip(lower.iter().zip(upper))
            .map(|(&ri, (&a, &b))| ri * (a + b) / T::lit(2.0) + ri.abs() * (b - a) / T::lit(2.0))
            .sum()
    }
}

impl<T: Scalar> MomentModel<T> for IntervalRegression<T> {
    fn tag(&self) -> ModelTag {
        ModelTag::IntervalRegression
    }
    fn dim_theta(&self) -> usize {
        self.d
    }
    fn dim_phi(&self) -> usize {
        self.d * self.d + 2 * self.d
    }
    fn num_inequalities(&self) -> usize {
        2 * self.d
    }
    fn theta_box(&self) -> &ThetaBox<T> {
        &self.bbox
    }

    fn psi(&self, theta: &[T], phi: &[T]) -> Vec<T> {
        let (lower, _, upper) = self.split(phi);
        let x = self.design(phi).matvec(theta);
        let mut out: Vec<T> = x.iter().zip(upper).map(|(&v, &u)| v - u).collect();
        out.extend(x.iter().zip(lower).map(|(&v, &l)| l - v));
        out
    }

    fn grad_theta_psi(&self, _theta: &[T], phi: &[T]) -> Matrix<T> {
        let d = self.d;
        let (_, a, _) = self.split(phi);
        let mut g = Matrix::zeros(2 * d, d);
        for i in 0..d {
            for j in 0..d {
                g[(i, j)] = a[i * d + j];
                g[(d + i, j)] = -a[i * d + j];
            }
        }
        g
    }

    fn affine_in_theta(&self) -> bool {
        true
    }

    fn grad_phi_psi(&self, theta: &[T], _phi: &[T]) -> Matrix<T> {
        let d = self.d;
        let mut g = Matrix::zeros(2 * d, self.dim_phi());
        for i in 0..d {
            for j in 0..d {
                g[(i, d + i * d + j)] = theta[j];
                g[(d + i, d + i * d + j)] = -theta[j];
            }
            g[(i, d + d * d + i)] = -T::one();
            g[(d + i, i)] = T::one();
        }
        g
    }

    /// `S(ν) = νᵀφ₂⁻¹(φ₁+φ₃)/2 + |νᵀφ₂⁻¹|ᵀ(φ₃−φ₁)/2`, used only when the box does not bind.
    fn closed_support(&self, phi: &[T], nu: &Direction<T>) -> Option<Result<T>> {
        let (lower, _, upper) = self.split(phi);
        if lower.iter().zip(upper).any(|(a, b)| a > b) {
            return Some(Err(Error::Infeasible));
        }
        let inv = match self.design(phi).inverse() {
            Ok(inv) => inv,
            Err(e) => return Some(Err(e)),
        };
        let inside = (0..self.d).all(|j| {
            let up = Direction::axis(self.d, j, true);
            let hi = Self::parallelotope_support(lower, upper, &inv, up.as_slice());
            let lo = -Self::parallelotope_support(lower, upper, &inv, up.neg().as_slice());
            lo >= self.bbox.lo()[j] && hi <= self.bbox.hi()[j]
        });
        inside.then(|| Ok(Self::parallelotope_support(lower, upper, &inv, nu.as_slice())))
    }
}

impl MeanFunctional for IntervalRegression<f64> {
    /// Identity on `(W₁, vec(V), W₂)` means, rejecting a singular `φ₂`.
    fn phi_from_means(&self, means: &[f64]) -> Result<Vec<f64>> {
        if means.len() != self.dim_phi() {
            return param(format!("interval regression expects {} columns", self.dim_phi()));
        }
        self.design(means).lu()?;
        Ok(means.to_vec())
    }
}

impl ThetaPrior for IntervalRegression<f64> {
    /// Uniform on `Θ(φ)`: `θ = φ₂⁻¹ u` with `u` uniform on `[φ₁, φ₃]`, kept if inside the box.
    fn sample_theta(&self, stream: &mut RngStream, phi: &[f64]) -> Result<Option<Vec<f64>>> {
        let (lower, _, upper) = self.split(phi);
        if lower.iter().zip(upper).any(|(a, b)| a > b) {
            return Ok(None);
        }
        let lu = self.design(phi).lu()?;
        for _ in 0..10_000 {
            let u: Vec<f64> = lower.iter().zip(upper).map(|(&a, &b)| draw_uniform(stream, a, b)).collect();
            let theta = lu.solve(&u);
            if self.bbox.contains(&theta, 0.0) {
                return Ok(Some(theta));
            }
        }
        Err(Error::Numeric("uniform draw on the identified set kept leaving the box".into()))
    }
}

/// Simulation design: `W₁ ~ N(0, σ²₁ I)`, `W₂ ~ N(μ₂ ι, I)`, `V = v̄ I + s E` with iid standard normal `E`.
#[derive(Debug, Clone, Copy)]
pub struct RegressionDgp {
    pub d: usize,
    pub w1_var: f64,
    pub w2_mean: f64,
    pub v_mean: f64,
    pub v_noise: f64,
}

impl Default for RegressionDgp {
    fn default() -> Self {
        Self { d: 10, w1_var: 0.5, w2_mean: 5.0, v_mean: 3.0, v_noise: 0.8 }
    }
}

impl RegressionDgp {
    pub fn row_len(&self) -> usize {
        self.d * self.d + 2 * self.d
    }

    pub fn simulate(&self, stream: &mut RngStream, n: usize) -> Result<DataMatrix> {
        let d = self.d;
        let p = self.row_len();
        let sd1 = self.w1_var.sqrt();
        let mut data = Vec::with_capacity(n * p);
        for _ in 0..n {
            data.extend((0..d).map(|_| sd1 * draw_std_normal(stream)));
            for i in 0..d {
                for j in 0..d {
                    let mean = if i == j { self.v_mean } else { 0.0 };
                    data.push(mean + self.v_noise * draw_std_normal(stream));
                }
            }
            data.extend((0..d).map(|_| self.w2_mean + draw_std_normal(stream)));
        }
        let mut names: Vec<String> = (1..=d).map(|i| format!("w1_{i}")).collect();
        names.extend((1..=d).flat_map(|i| (1..=d).map(move |j| format!("v_{i}_{j}"))));
        names.extend((1..=d).map(|i| format!("w2_{i}")));
        DataMatrix::with_names(n, p, data, names)
    }

    /// `φ₀ = (0, vec(v̄ I), μ₂ ι)`.
    pub fn true_phi(&self) -> Vec<f64> {
        let d = self.d;
        let mut phi = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                phi.push(if i == j { self.v_mean } else { 0.0 });
            }
        }
        phi.extend(std::iter::repeat_n(self.w2_mean, d));
        phi
    }
}
