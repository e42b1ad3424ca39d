//! Scalar abstraction for the closed-form activity models.

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar: `f32` or `f64`.
///
/// The closed-form activity models are generic over this trait so the same
/// formulas serve single- and double-precision callers. Everything above the
/// dynamics layer (scenario files, traces, the executor) works in `f64`; see
/// the aliases at the crate root.
pub trait Real: Float + FloatConst + FromPrimitive + std::fmt::Debug + 'static {
    /// Lossy conversion for error payloads and diagnostics.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half() -> Self {
        Self::one() / Self::two()
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    fn halve<T: Real>(x: T) -> T {
        x * T::half()
    }

    #[test]
    fn works_for_both_precisions() {
        assert_eq!(halve(3.0_f32), 1.5_f32);
        assert_eq!(halve(3.0_f64), 1.5_f64);
        assert_eq!(f64::two(), 2.0);
    }
}
