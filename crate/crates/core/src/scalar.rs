//! Scalar abstraction shared by the generic geometry, collision and metrics code.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the generic kernels: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Smallest drift tolerance that is meaningful for this precision.
    fn drift_tolerance() -> Self {
        let floor = lit::<Self>(1e-12);
        let eps = Self::default_epsilon() * lit::<Self>(64.0);
        if eps > floor {
            eps
        } else {
            floor
        }
    }
}

impl<T: RealField + Copy + FromPrimitive + ToPrimitive> Real for T {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in scalar type")
}

/// Converts a scalar into `f64` for reporting.
#[inline]
pub fn to_f64<T: Real>(v: T) -> f64 {
    ToPrimitive::to_f64(&v).unwrap_or(f64::NAN)
}
