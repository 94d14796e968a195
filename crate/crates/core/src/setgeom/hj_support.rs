//! Closed-form support of the HJ set `{(μ, σ²) ∈ [0, μ̄]×[0, σ̄²] : σ² ≥ φ₁μ² − 2φ₂μ + φ₃}`.
//!
//! On the feasible μ-interval `F = {μ : p(μ) ≤ σ̄²}` the set is `σ² ∈ [max(p(μ), 0), σ̄²]`,
//! so `S(ν) = max_{μ∈F} ν₁μ + ν₂·(σ̄² if ν₂ ≥ 0 else max(p(μ), 0))`. The objective is
//! concave in μ, so it suffices to compare the interval ends, the kinks where `p = 0`,
//! and the stationary point of the arc.

use crate::error::{param, Error, Result};
use crate::models::ThetaBox;
use crate::scalar::Scalar;

use super::Direction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HjSupport<T> {
    pub value: T,
    pub maximizer: [T; 2],
}

/// Feasible μ-interval `[lo, hi]`, or `None` when the frontier clears `σ̄²` on all of `[0, μ̄]`.
pub fn hj_feasible_mu<T: Scalar>(phi: &[T], bbox: &ThetaBox<T>) -> Result<Option<(T, T)>> {
    if phi.len() != 3 || bbox.dim() != 2 {
        return param("HJ support needs φ of length 3 and a 2-d box");
    }
    let (f1, f2, f3) = (phi[0], phi[1], phi[2]);
    if !(f1 > T::zero()) {
        return param("HJ support requires φ₁ > 0");
    }
    let (mu_lo, mu_hi) = (bbox.lo()[0], bbox.hi()[0]);
    let var_max = bbox.hi()[1];
    let disc = f2 * f2 - f1 * (f3 - var_max);
    if disc < T::zero() {
        return Ok(None);
    }
    let r = disc.sqrt();
    let lo = ((f2 - r) / f1).max(mu_lo);
    let hi = ((f2 + r) / f1).min(mu_hi);
    Ok(if lo <= hi { Some((lo, hi)) } else { None })
}

pub fn hj_support<T: Scalar>(phi: &[T], nu: &Direction<T>, bbox: &ThetaBox<T>) -> Result<HjSupport<T>> {
    if nu.dim() != 2 {
        return param("HJ support needs a 2-d direction");
    }
    let (lo, hi) = hj_feasible_mu(phi, bbox)?.ok_or(Error::Infeasible)?;
    let (f1, f2, f3) = (phi[0], phi[1], phi[2]);
    let (var_lo, var_hi) = (bbox.lo()[1], bbox.hi()[1]);
    let (n1, n2) = (nu.as_slice()[0], nu.as_slice()[1]);
    let two = T::lit(2.0);
    let floor = |mu: T| (f1 * mu * mu - two * f2 * mu + f3).max(var_lo);
    let sigma = |mu: T| if n2 >= T::zero() { var_hi } else { floor(mu).min(var_hi) };

    let mut cands = vec![lo, hi];
    if n2 < T::zero() {
        // Kinks where the frontier crosses the box floor.
        let disc = f2 * f2 - f1 * (f3 - var_lo);
        if disc >= T::zero() {
            let r = disc.sqrt();
            cands.push((f2 - r) / f1);
            cands.push((f2 + r) / f1);
        }
        cands.push(f2 / f1 - n1 / (two * n2 * f1));
    }
    let mut best = HjSupport { value: T::neg_infinity(), maximizer: [lo, sigma(lo)] };
    for mu in cands {
        if !(mu >= lo && mu <= hi) {
            continue;
        }
        let s = sigma(mu);
        let v = n1 * mu + n2 * s;
        if v > best.value {
            best = HjSupport { value: v, maximizer: [mu, s] };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_oracle(phi: &[f64], nu: &Direction<f64>, bx: &ThetaBox<f64>, res: usize) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for i in 0..=res {
            let mu = bx.hi()[0] * i as f64 / res as f64;
            for j in 0..=res {
                let s2 = bx.hi()[1] * j as f64 / res as f64;
                if phi[0] * mu * mu - 2.0 * phi[1] * mu + phi[2] <= s2 {
                    best = best.max(nu.dot(&[mu, s2]));
                }
            }
        }
        best
    }

    #[test]
    fn box_top_and_right_root() {
        let bx = ThetaBox::<f64>::new(vec![0.0, 0.0], vec![1.4, 6.0]).unwrap();
        let s = hj_support(&[1.0, 1.0, 2.0], &Direction::axis(2, 1, true), &bx).unwrap();
        assert_eq!(s.value, 6.0);
        // μ² − 2μ + 2 = 6 has roots 1 ± √5; the larger is clipped to μ̄.
        let s = hj_support(&[1.0, 1.0, 2.0], &Direction::axis(2, 0, true), &bx).unwrap();
        assert!((s.value - 1.4).abs() < 1e-12);
        let wide = ThetaBox::new(vec![0.0, 0.0], vec![5.0, 6.0]).unwrap();
        let s = hj_support(&[1.0, 1.0, 2.0], &Direction::axis(2, 0, true), &wide).unwrap();
        assert!((s.value - (1.0 + 5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn infeasible_when_frontier_above_box() {
        let bx = ThetaBox::<f64>::new(vec![0.0, 0.0], vec![1.4, 6.0]).unwrap();
        assert!(matches!(hj_support(&[1.0, 0.0, 7.0], &Direction::axis(2, 1, true), &bx), Err(Error::Infeasible)));
        // Frontier dips below σ̄² only for μ > μ̄.
        assert!(matches!(hj_support(&[1.0, 3.0, 14.5], &Direction::axis(2, 1, true), &bx), Err(Error::Infeasible)));
        assert!(hj_support(&[0.0, 1.0, 1.0], &Direction::axis(2, 1, true), &bx).is_err());
    }

    #[test]
    fn agrees_with_lattice_oracle() {
        let bx = ThetaBox::<f64>::new(vec![0.0, 0.0], vec![1.4, 6.0]).unwrap();
        for phi in [[1.0, 1.0, 2.0], [12.0, 6.0, 3.0], [4.0, 0.5, 0.1], [20.0, 2.0, 5.8]] {
            for k in 0..16 {
                let a = std::f64::consts::TAU * k as f64 / 16.0 + 0.1;
                let nu = Direction::new(vec![a.cos(), a.sin()]).unwrap();
                let s = hj_support(&phi, &nu, &bx).unwrap().value;
                let g = grid_oracle(&phi, &nu, &bx, 2000);
                assert!(s >= g - 1e-12 && s - g < 1e-2, "{phi:?} {a}: {s} vs {g}");
            }
        }
    }
}
