//! Scalar abstractions shared by every module.
//!
//! Discrete costs only need ring operations and an order, so they are
//! generic over [`Weight`] (which admits exact rationals). Geometry, the
//! continuous loss and the optimizer need transcendental functions and are
//! generic over [`Real`].

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumAssign};

/// Similarity weights and discrete Dasgupta costs.
pub trait Weight:
    Num + NumAssign + Copy + PartialOrd + FromPrimitive + Debug + Send + Sync + 'static
{
}

impl<T> Weight for T where
    T: Num + NumAssign + Copy + PartialOrd + FromPrimitive + Debug + Send + Sync + 'static
{
}

/// Floating point scalars for hyperbolic geometry and optimization.
pub trait Real: Weight + Float + FloatConst {}

impl<T> Real for T where T: Weight + Float + FloatConst {}

/// Converts an `f64` literal into `T`.
///
/// Panics if `T` cannot represent finite `f64` constants, which no supported
/// scalar does.
#[inline]
pub fn lit<T: FromPrimitive>(x: f64) -> T {
    T::from_f64(x).expect("scalar type cannot represent an f64 constant")
}

/// Converts a count into `T`.
#[inline]
pub fn count<T: FromPrimitive>(n: usize) -> T {
    T::from_usize(n).expect("scalar type cannot represent a count")
}
