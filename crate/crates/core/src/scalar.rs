//! Numeric abstraction shared by the cost and geometry code.
//!
//! Everything that is plain field arithmetic (`+ - * /`) is written against
//! [`Scalar`], so it runs on `f32`, `f64` and exact rationals alike. Code that
//! needs logarithms or powers asks for [`Real`] instead.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Field-like number: `f32`, `f64` or [`Exact`].
pub trait Scalar:
    Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    /// `num / den` built without going through a binary float.
    fn ratio(num: i64, den: i64) -> Self {
        let n = Self::from_i64(num).expect("integer representable in scalar type");
        let d = Self::from_i64(den).expect("integer representable in scalar type");
        n / d
    }

    fn approx_from_f64(x: f64) -> Self {
        Self::from_f64(x).expect("finite value representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn abs_diff(self, other: Self) -> Self {
        if self > other {
            self - other
        } else {
            other - self
        }
    }
}

impl<T> Scalar for T where
    T: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

/// Floating-point scalar for the transcendental parts of the model.
pub trait Real: Scalar + Float {}

impl<T: Scalar + Float> Real for T {}

/// Exact rational scalar. Used to check identities that floating point can
/// only approximate (share ratios, capacity fractions).
pub type Exact = Ratio<i64>;

/// Ceiling of a non-negative ratio of counts.
pub(crate) fn ceil_div(n: u64, d: u64) -> u64 {
    n.div_ceil(d)
}
