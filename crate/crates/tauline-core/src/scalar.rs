//! Scalar abstraction for the curve algebra.
//!
//! Every curve-valued estimator (step functions, Kaplan-Meier curves, tau and
//! dRMST processes, milestone transforms) is generic over [`Real`], so the
//! same code runs at `f32` or `f64` precision. The data-ingestion, inference,
//! simulation, and CLI layers are pinned to `f64` through the aliases at the
//! crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable as a time or probability value.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Copy + Send + Sync + 'static
{
    /// Conversion from `f64` constants; panics only for non-finite inputs,
    /// which never occur for the literals used internally.
    fn from_f64_lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Conversion from a count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits in scalar")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Copy + Send + Sync + 'static
{
}

/// Total order for sorting scalar slices that are known to be free of NaN.
pub fn cmp_total<T: Real>(a: &T, b: &T) -> std::cmp::Ordering {
    a.partial_cmp(b).expect("NaN excluded by validation")
}
