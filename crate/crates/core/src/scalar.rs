//! Scalar abstraction shared by the statistics and metric-ratio code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::Serialize;

/// Floating-point type the numeric routines are generic over.
///
/// Implemented for `f32` and `f64`. Counts stay exact integers everywhere;
/// only ratios and test statistics go through this trait.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + Serialize + 'static
{
    /// Convert an `f64` literal into this scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal is representable")
    }

    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count is representable")
    }

    fn from_len(n: usize) -> Self {
        Self::from_usize(n).expect("length is representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
