//! Floating-point abstraction shared by every module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the simulator is generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    /// Lossy conversion from a cycle count.
    fn from_count(count: u32) -> Self {
        Self::from_u32(count).expect("cycle count representable in scalar type")
    }

    /// `self / √2`, rounded as if computed against the exact constant.
    ///
    /// The stored `FRAC_1_SQRT_2` is off by half an ulp; the residual is folded
    /// back in with a fused multiply-add. A balanced split followed by
    /// recombination then returns a unit amplitude bit-for-bit.
    fn div_sqrt2(self) -> Self {
        let residual = Self::lit(
            (std::f64::consts::FRAC_1_SQRT_2 - Self::FRAC_1_SQRT_2().to_f64().unwrap_or_default())
                + FRAC_1_SQRT_2_F64_RESIDUAL,
        );
        self.mul_add(Self::FRAC_1_SQRT_2(), self * residual)
    }
}

/// `1/√2 - f64::FRAC_1_SQRT_2`, evaluated at 200-bit precision.
const FRAC_1_SQRT_2_F64_RESIDUAL: f64 = -4.833646656726457e-17;

impl Scalar for f32 {}
impl Scalar for f64 {}
