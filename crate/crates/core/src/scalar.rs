//! Integer scalar abstraction for token masses.
//!
//! Every quantity the protocol moves around is an integer: initial states,
//! mass numerators, token counts. The simulation is generic over the integer
//! width so that large fixtures can run on `i128` without touching the logic,
//! while the true average is carried as an exact [`Ratio`].

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::iter::Sum;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Signed, ToPrimitive};
use serde::Serialize;

/// Signed machine integer usable as a mass value.
pub trait Mass:
    Integer
    + Signed
    + Copy
    + Hash
    + Debug
    + Display
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Serialize
    + Send
    + Sync
    + 'static
{
    /// Lossless conversion from a scenario value, `None` if it does not fit.
    fn from_state(value: i64) -> Option<Self> {
        Self::from_i64(value)
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }
}

impl<T> Mass for T where
    T: Integer
        + Signed
        + Copy
        + Hash
        + Debug
        + Display
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Serialize
        + Send
        + Sync
        + 'static
{
}

/// `⌊num / den⌋`, rounding toward negative infinity.
#[inline]
pub fn floor_div<T: Mass>(num: T, den: T) -> T {
    num.div_floor(&den)
}

/// `⌈num / den⌉`, rounding toward positive infinity.
#[inline]
pub fn ceil_div<T: Mass>(num: T, den: T) -> T {
    -((-num).div_floor(&den))
}

/// Exact floor of a rational.
pub fn ratio_floor<T: Mass>(q: &Ratio<T>) -> T {
    floor_div(*q.numer(), *q.denom())
}

/// Exact ceiling of a rational.
pub fn ratio_ceil<T: Mass>(q: &Ratio<T>) -> T {
    ceil_div(*q.numer(), *q.denom())
}
