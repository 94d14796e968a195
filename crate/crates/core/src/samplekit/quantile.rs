use crate::error::{param, Error, Result};
use crate::scalar::Scalar;

/// A finalised (sorted ascending) sample of reals.
#[derive(Debug, Clone)]
pub struct EmpiricalSample<T> {
    values: Vec<T>,
}

impl<T: Scalar> EmpiricalSample<T> {
    /// Sorts the values; NaN entries are rejected. `+∞` is allowed and sorts last.
    pub fn new(mut values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::State("empirical sample is empty".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return param("empirical sample contains NaN");
        }
        values.sort_by(|a, b| a.partial_cmp(b).expect("NaN filtered"));
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// The `⌈p·n⌉`-th order statistic (1-based).
    pub fn quantile(&self, p: f64) -> Result<T> {
        if !(p > 0.0 && p < 1.0) {
            return param(format!("quantile level must lie in (0,1), got {p}"));
        }
        Ok(self.values[order_index(p, self.values.len())])
    }

    /// Fraction of values `≤ x`.
    pub fn ecdf(&self, x: T) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }
}

/// Zero-based index of the `⌈p·n⌉`-th order statistic, robust to `p·n` landing a
/// rounding error above an integer.
pub(crate) fn order_index(p: f64, n: usize) -> usize {
    let x = p * n as f64;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * (n as f64).max(1.0) { r } else { x.ceil() };
    (k.max(1.0) as usize).min(n) - 1
}

pub fn empirical_quantile<T: Scalar>(sample: &EmpiricalSample<T>, p: f64) -> Result<T> {
    sample.quantile(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplekit::{draw_std_normal, RngStream};

    #[test]
    fn order_statistic_examples() {
        let s = EmpiricalSample::new(vec![5.0, 3.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!(s.quantile(0.5).unwrap(), 3.0);
        let s = EmpiricalSample::new((1..=100).map(f64::from).collect()).unwrap();
        assert_eq!(s.quantile(0.95).unwrap(), 95.0);
        assert_eq!(s.quantile(0.9).unwrap(), 90.0);
        assert_eq!(s.quantile(0.951).unwrap(), 96.0);
        assert_eq!(s.quantile(1e-6).unwrap(), 1.0);
    }

    #[test]
    fn empty_and_bad_level() {
        assert!(matches!(EmpiricalSample::<f64>::new(vec![]), Err(Error::State(_))));
        let s = EmpiricalSample::new(vec![1.0f32]).unwrap();
        assert!(s.quantile(1.0).is_err());
        assert!(s.quantile(0.0).is_err());
    }

    #[test]
    fn normal_sample_quantile() {
        let mut r = RngStream::new(11, 0);
        let s = EmpiricalSample::new((0..100_000).map(|_| draw_std_normal(&mut r)).collect()).unwrap();
        assert!((s.quantile(0.95).unwrap() - 1.645).abs() < 0.02);
    }

    #[test]
    fn infinity_sorts_last() {
        let s = EmpiricalSample::new(vec![f64::INFINITY, 1.0, 2.0]).unwrap();
        assert_eq!(s.quantile(0.5).unwrap(), 2.0);
        assert!(s.quantile(0.9).unwrap().is_infinite());
    }
}
