//! Exact scalar types used for edge weights and path sums.
//!
//! Edge weights are fixed-point numbers stored as an integer count of a
//! global quantum of `2^-32`. Everything downstream of the tree (oracle
//! answers, additivity checks, recovered edge lengths) stays in the same
//! integer type, so path membership is decided by exact equality.

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::str::FromStr;

use num_traits::{Float, NumCast, PrimInt, Unsigned};

/// Number of fractional bits in the fixed-point representation.
pub const QUANTUM_BITS: u32 = 32;

/// Exact, unsigned, additive scalar used for edge weights and distances.
///
/// Implemented for `u32`, `u64` and `u128`. A tree over `W` refuses
/// construction when its total weight does not fit in `W`, which bounds
/// every path sum.
pub trait Weight:
    PrimInt + Unsigned + Hash + Debug + Display + FromStr + Default + Send + Sync + 'static
{
    /// Short name used in diagnostics.
    const NAME: &'static str;

    /// `1.0` in fixed point, if representable.
    fn unit() -> Option<Self> {
        <Self as NumCast>::from(1u64 << QUANTUM_BITS)
    }

    /// Lossy conversion of a quanta count to real units.
    fn to_units<F: Float>(self) -> F {
        let q: F = <F as NumCast>::from(self).unwrap_or_else(F::infinity);
        q / <F as NumCast>::from(1u64 << QUANTUM_BITS).unwrap()
    }

    /// Halve an even value exactly.
    fn half(self) -> Self {
        self >> 1
    }
}

impl Weight for u32 {
    const NAME: &'static str = "u32";
}

impl Weight for u64 {
    const NAME: &'static str = "u64";
}

impl Weight for u128 {
    const NAME: &'static str = "u128";
}

/// Convert a real length in units to the nearest quanta count.
///
/// Returns `None` for negative, non-finite or unrepresentable input.
pub fn quantize<W: Weight, F: Float>(units: F) -> Option<W> {
    if !units.is_finite() || units < F::zero() {
        return None;
    }
    let scale = <F as NumCast>::from(1u64 << QUANTUM_BITS)?;
    <W as NumCast>::from((units * scale).round())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_is_two_to_the_32() {
        assert_eq!(u64::unit(), Some(1u64 << 32));
        assert_eq!(u128::unit(), Some(1u128 << 32));
        assert_eq!(u32::unit(), None);
    }

    #[test]
    fn quantize_rounds_to_nearest() {
        assert_eq!(quantize::<u64, f64>(1.0), Some(1u64 << 32));
        assert_eq!(quantize::<u64, f64>(0.5), Some(1u64 << 31));
        assert_eq!(quantize::<u64, f32>(2.0), Some(1u64 << 33));
        assert_eq!(quantize::<u64, f64>(-1.0), None);
        assert_eq!(quantize::<u32, f64>(2.0), None);
        assert_eq!(quantize::<u64, f64>(f64::NAN), None);
    }

    #[test]
    fn to_units_roundtrip() {
        let w: u128 = 3 << 32;
        assert_eq!(w.to_units::<f64>(), 3.0);
    }
}
