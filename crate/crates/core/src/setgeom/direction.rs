use crate::error::{param, Result};
use crate::samplekit::std_normal_quantile;
use crate::scalar::{norm2, Scalar};

/// A unit vector on the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction<T> {
    v: Vec<T>,
}

impl<T: Scalar> Direction<T> {
    /// Normalises `v`; fails on zero or non-finite input.
    pub fn new(v: Vec<T>) -> Result<Self> {
        let n = norm2(&v);
        if v.is_empty() || !(n > T::zero()) || !n.is_finite() {
            return param("direction must be a finite nonzero vector");
        }
        Ok(Self { v: v.into_iter().map(|x| x / n).collect() })
    }

    /// Accepts `v` only if it already has unit length (to 1e-12 in double precision).
    pub fn unit(v: Vec<T>) -> Result<Self> {
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(8.0));
        if v.is_empty() || (norm2(&v) - T::one()).abs() > tol {
            return param("direction is not a unit vector");
        }
        Ok(Self { v })
    }

    /// `sign · e_j` in dimension `d`.
    pub fn axis(d: usize, j: usize, positive: bool) -> Self {
        let mut v = vec![T::zero(); d];
        v[j] = if positive { T::one() } else { -T::one() };
        Self { v }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.v
    }

    pub fn neg(&self) -> Self {
        Self { v: self.v.iter().map(|&x| -x).collect() }
    }

    pub fn dot(&self, x: &[T]) -> T {
        crate::scalar::dot(&self.v, x)
    }
}

/// A deterministic list of directions used to discretise a sup over the sphere.
#[derive(Debug, Clone)]
pub struct SphereGrid<T> {
    dirs: Vec<Direction<T>>,
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let (mut f, mut r) = (inv, 0.0);
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

impl<T: Scalar> SphereGrid<T> {
    /// Default resolution: 2 directions for d=1, 256 for d=2, 2048 for d=3, 4096 beyond.
    pub fn for_dim(d: usize) -> Result<Self> {
        let n = match d {
            1 => 2,
            2 => 256,
            3 => 2048,
            _ => 4096,
        };
        Self::with_size(d, n)
    }

    /// `n` directions: both signs for d=1, equally spaced angles for d=2, a Fibonacci
    /// lattice for d=3, and a Halton sequence pushed through the normal quantile beyond.
    pub fn with_size(d: usize, n: usize) -> Result<Self> {
        if d == 0 {
            return param("sphere dimension must be positive");
        }
        if d > PRIMES.len() && d > 1 {
            return param(format!("quasi-random sphere grid supports d ≤ {}", PRIMES.len()));
        }
        if n == 0 {
            return param("sphere grid needs at least one direction");
        }
        let dirs = match d {
            1 => vec![Direction::axis(1, 0, true), Direction::axis(1, 0, false)],
            2 => (0..n)
                .map(|k| {
                    let a = 2.0 * core::f64::consts::PI * k as f64 / n as f64;
                    Direction::new(vec![T::lit(a.cos()), T::lit(a.sin())])
                })
                .collect::<Result<_>>()?,
            3 => {
                let golden = core::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..n)
                    .map(|i| {
                        let z = 1.0 - (2 * i + 1) as f64 / n as f64;
                        let r = (1.0 - z * z).sqrt();
                        let a = golden * i as f64;
                        Direction::new(vec![T::lit(r * a.cos()), T::lit(r * a.sin()), T::lit(z)])
                    })
                    .collect::<Result<_>>()?
            }
            _ => (1..=n as u64)
                .map(|i| {
                    let v = PRIMES[..d]
                        .iter()
                        .map(|&b| std_normal_quantile(radical_inverse(i, b)).map(T::lit))
                        .collect::<Result<Vec<T>>>()?;
                    Direction::new(v)
                })
                .collect::<Result<_>>()?,
        };
        Ok(Self { dirs })
    }

    pub fn from_directions(dirs: Vec<Direction<T>>) -> Result<Self> {
        let d = dirs.first().map(Direction::dim).unwrap_or(0);
        if d == 0 || dirs.iter().any(|x| x.dim() != d) {
            return param("sphere grid needs directions of one common dimension");
        }
        Ok(Self { dirs })
    }

    /// The two directions `±e_j`, used for marginal projections.
    pub fn projection(d: usize, j: usize) -> Self {
        Self { dirs: vec![Direction::axis(d, j, true), Direction::axis(d, j, false)] }
    }

    /// Adds every `±e_j` missing from the grid.
    pub fn with_axes(mut self) -> Self {
        let d = self.dim();
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(16.0));
        for j in 0..d {
            for positive in [true, false] {
                let a = Direction::axis(d, j, positive);
                let present = self
                    .dirs
                    .iter()
                    .any(|x| x.as_slice().iter().zip(a.as_slice()).all(|(p, q)| (*p - *q).abs() <= tol));
                if !present {
                    self.dirs.push(a);
                }
            }
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dirs[0].dim()
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Direction<T>> {
        self.dirs.iter()
    }

    pub fn directions(&self) -> &[Direction<T>] {
        &self.dirs
    }
}

impl<'a, T> IntoIterator for &'a SphereGrid<T> {
    type Item = &'a Direction<T>;
    type IntoIter = core::slice::Iter<'a, Direction<T>>;
    fn into_iter(self) -> Self::IntoIter {
        self.dirs.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direction_normalises() {
        let d = Direction::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(d.as_slice(), &[0.6, 0.8]);
        assert!(Direction::new(vec![0.0, 0.0]).is_err());
        assert!(Direction::<f64>::new(vec![]).is_err());
        assert!(Direction::unit(vec![0.6, 0.8]).is_ok());
        assert!(Direction::unit(vec![1.0, 1.0]).is_err());
        let e = Direction::<f32>::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert!((norm2(e.as_slice()) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn one_dimensional_grid_is_both_signs() {
        let g = SphereGrid::<f64>::for_dim(1).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.directions()[0].as_slice(), &[1.0]);
        assert_eq!(g.directions()[1].as_slice(), &[-1.0]);
        assert_eq!(SphereGrid::<f64>::with_size(1, 99).unwrap().len(), 2);
    }

    #[test]
    fn grids_are_unit_and_reproducible() {
        for d in 2..=6 {
            let a = SphereGrid::<f64>::with_size(d, 300).unwrap();
            let b = SphereGrid::<f64>::with_size(d, 300).unwrap();
            assert_eq!(a.len(), 300);
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x, y);
                assert!((norm2(x.as_slice()) - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(SphereGrid::<f64>::for_dim(2).unwrap().len(), 256);
        assert_eq!(SphereGrid::<f64>::for_dim(3).unwrap().len(), 2048);
    }

    #[test]
    fn fibonacci_grid_covers_sphere() {
        // Every probe direction has a grid point within a small angle.
        let g = SphereGrid::<f64>::for_dim(3).unwrap();
        let probes = SphereGrid::<f64>::with_size(3, 97).unwrap();
        for p in &probes {
            let best = g.iter().map(|x| x.dot(p.as_slice())).fold(-1.0, f64::max);
            assert!(best > 0.995);
        }
    }

    #[test]
    fn axes_are_added_once() {
        let g = SphereGrid::<f64>::with_size(2, 256).unwrap().with_axes();
        assert_eq!(g.len(), 256);
        let g = SphereGrid::<f64>::with_size(2, 10).unwrap().with_axes();
        assert_eq!(g.len(), 12);
        let g = SphereGrid::<f64>::with_size(3, 50).unwrap().with_axes();
        assert_eq!(g.len(), 56);
    }
}
