//! Scalar abstraction for the ambiguity-set algebra.
//!
//! Anything that only adds, compares and scales numbers (the Ω box, the
//! aggregated worst-case LP, the sample-mean cost term, the tightness
//! witness) is written against [`Scalar`] so it can be run in `f64` for
//! production and in exact rationals for checking.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar:
    Num + Signed + PartialOrd + Clone + Debug + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable in scalar type")
    }

    /// Lossy conversion used when handing values to the LP backend.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }
}

impl<T> Scalar for T where
    T: Num
        + Signed
        + PartialOrd
        + Clone
        + Debug
        + FromPrimitive
        + ToPrimitive
        + Send
        + Sync
        + 'static
{
}
