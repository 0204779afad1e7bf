//! Scalar abstraction for the model and filter arithmetic.
//!
//! Everything numeric in this crate is generic over [`Float`], which is
//! implemented for `f32` and `f64`. The CLI and the concrete aliases at the
//! crate root use `f64`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating point scalar: `f32` or `f64`.
pub trait Float:
    RealField
    + Copy
    + Default
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Display
    + LowerExp
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Conversion from an `f64` literal (lossy for `f32`).
    fn of(value: f64) -> Self;

    /// Widening conversion back to `f64`.
    fn as_f64(self) -> f64;

    /// Whether the value is neither infinite nor NaN.
    fn finite(self) -> bool;

    /// One standard normal draw.
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Float for f32 {
    fn of(value: f64) -> Self {
        value as f32
    }

    fn as_f64(self) -> f64 {
        f64::from(self)
    }

    fn finite(self) -> bool {
        self.is_finite()
    }

    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Float for f64 {
    fn of(value: f64) -> Self {
        value
    }

    fn as_f64(self) -> f64 {
        self
    }

    fn finite(self) -> bool {
        self.is_finite()
    }

    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        assert_eq!(f64::of(1.25), 1.25);
        assert_eq!(f32::of(1.25), 1.25f32);
        assert_eq!(1.25f32.as_f64(), 1.25);
        assert!(!f64::of(f64::INFINITY).finite());
    }

    #[test]
    fn std_normal_is_deterministic_per_seed() {
        use rand::SeedableRng;
        let mut a = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let mut b = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..10 {
            assert_eq!(f64::std_normal(&mut a), f64::std_normal(&mut b));
        }
    }
}
