//! Floating-point scalar abstraction shared by the imaging and geometry kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Sample / coordinate type of the numeric kernels: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static {
    /// Converts a literal, panicking only if the value is unrepresentable (never for f32/f64).
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
