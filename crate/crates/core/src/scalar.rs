//! Numeric abstraction for sentiment scores and thresholds.
//!
//! Scores, thresholds and gaps only need subtraction, comparison and
//! conversion from counts, so the fairness code is written against
//! [`Score`] instead of a concrete float. `f32` and `f64` cover the usual
//! scorer outputs; `Ratio<i64>` gives exact arithmetic when a comparison
//! must not depend on rounding (e.g. scores on a 0.05 grid).

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

pub trait Score:
    Num + PartialOrd + Copy + Debug + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// `|self - other|` without requiring `Signed`.
    fn abs_diff(self, other: Self) -> Self {
        if self >= other {
            self - other
        } else {
            other - self
        }
    }

    /// Lossy conversion used for display and JSON export.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar")
    }

    fn is_unit_interval(self) -> bool {
        self >= Self::zero() && self <= Self::one()
    }
}

impl Score for f32 {}
impl Score for f64 {}
impl Score for Ratio<i64> {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abs_diff_is_symmetric_for_floats() {
        let a = 0.25f64;
        let b = 0.05f64;
        assert_eq!(a.abs_diff(b), b.abs_diff(a));
    }

    #[test]
    fn rational_grid_is_exact() {
        let a = Ratio::new(5i64, 20);
        let b = Ratio::new(1i64, 20);
        assert_eq!(a.abs_diff(b), Ratio::new(1, 5));
        assert!(a.is_unit_interval());
        assert!(!Ratio::new(21i64, 20).is_unit_interval());
    }

    #[test]
    fn from_count_divides_exactly() {
        let p = Ratio::<i64>::from_count(5) / Ratio::from_count(12);
        assert_eq!(p, Ratio::new(5, 12));
    }
}
