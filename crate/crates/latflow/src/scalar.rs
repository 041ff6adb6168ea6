//! Scalar abstraction for flow arithmetic.
//!
//! Exact runs use integer quanta ([`crate::Cap`]); the same solver code
//! also accepts floats for quick experiments, at the usual loss of
//! exactness guarantees.

use std::ops::{Add, AddAssign, Sub, SubAssign};

use num_traits::{Bounded, Zero};

/// Arithmetic required by the max-flow solver and the dual-path oracle.
pub trait FlowScalar:
    Copy
    + PartialOrd
    + Zero
    + Bounded
    + Add<Output = Self>
    + Sub<Output = Self>
    + AddAssign
    + SubAssign
    + std::fmt::Debug
{
    /// A finite stand-in for infinite capacity, far from overflow when summed.
    fn infinity() -> Self;

    /// Exact halving for the undirected residual bookkeeping.
    fn half(self) -> Self;

    fn min_val(self, rhs: Self) -> Self {
        if rhs < self {
            rhs
        } else {
            self
        }
    }
}

macro_rules! impl_flow_scalar_int {
    ($($t:ty),*) => {$(
        impl FlowScalar for $t {
            fn infinity() -> Self {
                <$t>::MAX / 4
            }
            fn half(self) -> Self {
                self / 2
            }
        }
    )*};
}

impl_flow_scalar_int!(i32, i64, i128);

macro_rules! impl_flow_scalar_float {
    ($($t:ty),*) => {$(
        impl FlowScalar for $t {
            fn infinity() -> Self {
                <$t>::MAX / 4.0
            }
            fn half(self) -> Self {
                self * 0.5
            }
        }
    )*};
}

impl_flow_scalar_float!(f32, f64);
