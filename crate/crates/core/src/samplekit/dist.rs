use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use super::RngStream;
use crate::error::{param, Result};
use crate::linalg::Matrix;

pub fn draw_uniform(stream: &mut RngStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * stream.random::<f64>()
}

pub fn draw_std_normal(stream: &mut RngStream) -> f64 {
    StandardNormal.sample(stream)
}

/// Gamma(shape, 1) variate (Marsaglia–Tsang, with the shape-boost for shape < 1).
pub fn draw_gamma(stream: &mut RngStream, shape: f64) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return param(format!("gamma shape must be positive, got {shape}"));
    }
    let g = Gamma::new(shape, 1.0).map_err(|e| crate::Error::Parameter(e.to_string()))?;
    Ok(g.sample(stream))
}

/// Beta(a, b) variate as the ratio X/(X+Y) of independent Gamma(a), Gamma(b).
pub fn draw_beta(stream: &mut RngStream, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return param(format!("beta shapes must be positive, got ({a}, {b})"));
    }
    let ga = Gamma::new(a, 1.0).map_err(|e| crate::Error::Parameter(e.to_string()))?;
    let gb = Gamma::new(b, 1.0).map_err(|e| crate::Error::Parameter(e.to_string()))?;
    loop {
        let x: f64 = ga.sample(stream);
        let y: f64 = gb.sample(stream);
        let s = x + y;
        // Both variates can underflow for tiny shapes; redraw rather than return 0/0.
        if s > 0.0 && s.is_finite() {
            return Ok(x / s);
        }
    }
}

pub fn draw_dirichlet(stream: &mut RngStream, alphas: &[f64]) -> Result<Vec<f64>> {
    if alphas.is_empty() {
        return param("dirichlet needs at least one component");
    }
    if alphas.len() == 1 {
        draw_gamma(stream, alphas[0])?;
        return Ok(vec![1.0]);
    }
    let dists = alphas
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map_err(|_| crate::Error::Parameter(format!("dirichlet shape must be positive, got {a}"))))
        .collect::<Result<Vec<_>>>()?;
    loop {
        let mut g: Vec<f64> = dists.iter().map(|d| d.sample(stream)).collect();
        let s: f64 = g.iter().sum();
        if s > 0.0 && s.is_finite() {
            g.iter_mut().for_each(|v| *v /= s);
            return Ok(g);
        }
    }
}

/// Dirichlet(1, …, 1) of length `n` from normalised unit exponentials.
pub fn draw_dirichlet_flat(stream: &mut RngStream, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return param("dirichlet needs at least one component");
    }
    let mut g: Vec<f64> = (0..n).map(|_| Exp1.sample(stream)).collect();
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    Ok(g)
}

/// Multivariate normal draw; `cov` may be singular but must be PSD.
pub fn draw_mvnormal(stream: &mut RngStream, mean: &[f64], cov: &Matrix<f64>) -> Result<Vec<f64>> {
    let d = mean.len();
    if cov.rows() != d || cov.cols() != d {
        return param("covariance shape does not match mean");
    }
    if !cov.is_symmetric(1e-12 * cov.max_abs().max(1.0)) {
        return Err(crate::Error::Numeric("covariance is not symmetric".into()));
    }
    let l = cov.cholesky_psd(1e-12)?;
    let z: Vec<f64> = (0..d).map(|_| draw_std_normal(stream)).collect();
    let lz = l.matvec(&z);
    Ok(mean.iter().zip(lz).map(|(m, v)| m + v).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn beta_one_one_is_uniform() {
        let mut s = RngStream::new(1, 0);
        let x: Vec<f64> = (0..100_000).map(|_| draw_beta(&mut s, 1.0, 1.0).unwrap()).collect();
        let (m, v) = mean_var(&x);
        assert!((m - 0.5).abs() < 0.01, "{m}");
        assert!((v - 1.0 / 12.0).abs() < 0.003, "{v}");
        assert!(x.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn beta_mean_and_variance() {
        let mut s = RngStream::new(2, 0);
        let x: Vec<f64> = (0..10_000).map(|_| draw_beta(&mut s, 500.0, 3.0).unwrap()).collect();
        assert!((mean_var(&x).0 - 500.0 / 503.0).abs() < 0.005);
        let y: Vec<f64> = (0..100_000).map(|_| draw_beta(&mut s, 2.0, 2.0).unwrap()).collect();
        let expect = 4.0 / (16.0 * 5.0);
        assert!((mean_var(&y).1 - expect).abs() < 0.002);
        let z: Vec<f64> = (0..100_000).map(|_| draw_beta(&mut s, 0.1, 0.1).unwrap()).collect();
        assert!((mean_var(&z).0 - 0.5).abs() < 0.01);
    }

    #[test]
    fn beta_rejects_bad_shapes() {
        let mut s = RngStream::new(0, 0);
        for (a, b) in [(0.0, 1.0), (1.0, -2.0), (f64::NAN, 1.0)] {
            assert!(matches!(draw_beta(&mut s, a, b), Err(crate::Error::Parameter(_))));
        }
    }

    #[test]
    fn dirichlet_examples() {
        let mut s = RngStream::new(3, 0);
        assert_eq!(draw_dirichlet(&mut s, &[1.0]).unwrap(), vec![1.0]);
        assert!(draw_dirichlet(&mut s, &[]).is_err());
        let mut acc = [0.0; 3];
        let reps = 100_000;
        for _ in 0..reps {
            let w = draw_dirichlet(&mut s, &[1.0, 1.0, 1.0]).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            acc.iter_mut().zip(&w).for_each(|(a, b)| *a += b);
        }
        for a in acc {
            assert!((a / reps as f64 - 1.0 / 3.0).abs() < 0.005);
        }
    }

    #[test]
    fn flat_dirichlet_marginal_is_beta() {
        // First component of Dirichlet(1,…,1) of length n is Beta(1, n−1): F(x) = 1 − (1−x)^(n−1).
        let mut s = RngStream::new(4, 0);
        let n = 20;
        let mut x: Vec<f64> = (0..10_000).map(|_| draw_dirichlet_flat(&mut s, n).unwrap()[0]).collect();
        x.sort_by(f64::total_cmp);
        let m = x.len() as f64;
        let ks = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let f = 1.0 - (1.0 - v).powi(n as i32 - 1);
                (f - i as f64 / m).abs().max((f - (i + 1) as f64 / m).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.02, "KS {ks}");
    }

    #[test]
    fn mvnormal_examples() {
        let mut s = RngStream::new(5, 0);
        let reps = 100_000;
        let cov = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for _ in 0..reps {
            let v = draw_mvnormal(&mut s, &[0.0, 0.0], &cov).unwrap();
            sxx += v[0] * v[0];
            syy += v[1] * v[1];
            sxy += v[0] * v[1];
        }
        let r = sxy / (sxx * syy).sqrt();
        assert!((r - 0.5).abs() < 0.02);
        let id = Matrix::identity(2);
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for _ in 0..reps {
            let v = draw_mvnormal(&mut s, &[0.0, 0.0], &id).unwrap();
            a += v[0] * v[0];
            b += v[1] * v[1];
            c += v[0] * v[1];
        }
        let n = reps as f64;
        assert!((a / n - 1.0).abs() < 0.02 && (b / n - 1.0).abs() < 0.02 && (c / n).abs() < 0.02);
        let zero = Matrix::zeros(2, 2);
        assert_eq!(draw_mvnormal(&mut s, &[2.0, 2.0], &zero).unwrap(), vec![2.0, 2.0]);
        let bad = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(draw_mvnormal(&mut s, &[0.0, 0.0], &bad), Err(crate::Error::Numeric(_))));
    }
}
