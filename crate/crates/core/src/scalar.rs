//! Scalar abstraction for energies.
//!
//! Factor tables, messages, flows and bounds are all computed in a generic
//! floating-point type so that the same solvers run in `f32` or `f64`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point energy value: `f32` or `f64`.
pub trait Energy:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, saturating to infinity if out of range.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(|| if x < 0.0 { Self::neg_infinity() } else { Self::infinity() })
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Energy for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + LowerExp
        + FromStr
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Absolute tolerance for comparing table entries.
pub const TABLE_TOL: f64 = 1e-9;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lit_round_trips_in_range() {
        assert_eq!(<f64 as Energy>::lit(0.25), 0.25);
        assert_eq!(<f32 as Energy>::lit(0.25), 0.25f32);
        assert!(<f32 as Energy>::lit(1e300).is_infinite());
    }
}
