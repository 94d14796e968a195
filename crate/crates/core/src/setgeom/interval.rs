use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A closed interval `[lo, hi]`, possibly empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalSet<T> {
    Empty,
    Closed { lo: T, hi: T },
}

impl<T: Scalar> IntervalSet<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::Domain(format!("interval bounds out of order: [{lo}, {hi}]")));
        }
        Ok(Self::Closed { lo, hi })
    }

    /// `[lo, hi]`, or empty when `lo > hi`.
    pub fn from_bounds(lo: T, hi: T) -> Self {
        if lo <= hi {
            Self::Closed { lo, hi }
        } else {
            Self::Empty
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Self::Empty)
    }

    pub fn lo(&self) -> Option<T> {
        match *self {
            Self::Closed { lo, .. } => Some(lo),
            Self::Empty => None,
        }
    }

    pub fn hi(&self) -> Option<T> {
        match *self {
            Self::Closed { hi, .. } => Some(hi),
            Self::Empty => None,
        }
    }

    pub fn bounds(&self) -> Option<(T, T)> {
        match *self {
            Self::Closed { lo, hi } => Some((lo, hi)),
            Self::Empty => None,
        }
    }

    pub fn length(&self) -> T {
        self.bounds().map_or(T::zero(), |(lo, hi)| hi - lo)
    }

    pub fn contains(&self, x: T) -> bool {
        self.bounds().is_some_and(|(lo, hi)| lo <= x && x <= hi)
    }

    /// `self ⊆ other`; the empty set is contained in everything.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        match (self.bounds(), other.bounds()) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some((a, b)), Some((c, d))) => c <= a && b <= d,
        }
    }

    pub fn envelope(&self, eps: T) -> Self {
        match *self {
            Self::Closed { lo, hi } => Self::Closed { lo: lo - eps, hi: hi + eps },
            Self::Empty => Self::Empty,
        }
    }

    /// Shrinks both ends by `eps`; empty when the interval is shorter than `2·eps`.
    pub fn contraction(&self, eps: T) -> Self {
        match *self {
            Self::Closed { lo, hi } if hi - lo >= eps + eps => Self::Closed { lo: lo + eps, hi: hi - eps },
            _ => Self::Empty,
        }
    }

    /// Support value in direction `±1`.
    pub fn support(&self, positive: bool) -> Option<T> {
        self.bounds().map(|(lo, hi)| if positive { hi } else { -lo })
    }
}

pub fn envelope<T: Scalar>(set: &IntervalSet<T>, eps: T) -> IntervalSet<T> {
    set.envelope(eps)
}

pub fn contraction<T: Scalar>(set: &IntervalSet<T>, eps: T) -> IntervalSet<T> {
    set.contraction(eps)
}

pub fn hausdorff_interval<T: Scalar>(a: &IntervalSet<T>, b: &IntervalSet<T>) -> Result<T> {
    match (a.bounds(), b.bounds()) {
        (Some((a0, a1)), Some((b0, b1))) => Ok((a0 - b0).abs().max((a1 - b1).abs())),
        _ => Err(Error::Domain("Hausdorff distance needs nonempty intervals".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn iv(lo: f64, hi: f64) -> IntervalSet<f64> {
        IntervalSet::new(lo, hi).unwrap()
    }

    fn assert_iv(x: IntervalSet<f64>, lo: f64, hi: f64) {
        let (a, b) = x.bounds().expect("nonempty");
        assert_abs_diff_eq!(a, lo, epsilon = 1e-12);
        assert_abs_diff_eq!(b, hi, epsilon = 1e-12);
    }

    #[test]
    fn envelope_and_contraction_examples() {
        let s = iv(0.35, 0.65);
        assert_iv(s.envelope(0.1), 0.25, 0.75);
        assert!(s.contraction(0.2).is_empty());
        assert_iv(s.contraction(0.1), 0.45, 0.55);
        assert_eq!(s.envelope(0.0), s);
        assert_eq!(s.contraction(0.0), s);
        assert!(IntervalSet::<f64>::Empty.envelope(1.0).is_empty());
    }

    #[test]
    fn hausdorff_examples() {
        let a = iv(0.0, 1.0);
        assert_eq!(hausdorff_interval(&a, &a).unwrap(), 0.0);
        assert_abs_diff_eq!(hausdorff_interval(&a, &iv(0.1, 1.2)).unwrap(), 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(hausdorff_interval(&a, &a.envelope(0.3)).unwrap(), 0.3, epsilon = 1e-12);
        assert!(matches!(hausdorff_interval(&a, &IntervalSet::Empty), Err(Error::Domain(_))));
    }

    #[test]
    fn subset_and_bounds() {
        assert!(IntervalSet::<f64>::Empty.is_subset_of(&iv(0.0, 1.0)));
        assert!(!iv(0.0, 1.0).is_subset_of(&IntervalSet::Empty));
        assert!(iv(0.2, 0.3).is_subset_of(&iv(0.0, 1.0)));
        assert!(!iv(-0.2, 0.3).is_subset_of(&iv(0.0, 1.0)));
        assert!(IntervalSet::new(1.0, 0.0).is_err());
        assert!(IntervalSet::from_bounds(1.0, 0.0).is_empty());
        assert_eq!(iv(2.0, 2.0).length(), 0.0);
        assert_eq!(iv(-1.0, 2.0).support(false), Some(1.0));
    }
}
