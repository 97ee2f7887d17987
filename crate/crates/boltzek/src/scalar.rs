//! Scalar abstraction for the generic (small, dense) part of the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Floating point scalar: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync {
    /// Lossy conversion from an `f64` literal.
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    fn eps() -> Self {
        Self::default_epsilon()
    }

    /// A requested tolerance, floored at a small multiple of machine epsilon.
    fn tol(requested: f64) -> Self {
        let floor = Self::eps() * Self::c(64.0);
        let r = Self::c(requested);
        if r > floor {
            r
        } else {
            floor
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
