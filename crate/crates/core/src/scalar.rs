use std::fmt::{Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::field::{Activation, ExactScalar, Rational, Sign};

/// Scalar type carried by labels and weights.
///
/// Implemented for `f32`/`f64` and for the exact types `Rational` and
/// [`ExactScalar`]. Only the exact types give sound equality tests; float
/// runs are for quick experiments and compare bitwise.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    const EXACT: bool;

    fn from_rational(q: &Rational) -> Self;

    /// Image of an exact surd, if representable.
    fn from_surd(x: &ExactScalar) -> Option<Self>;

    /// Square root of a non-negative rational, if representable.
    fn sqrt_rational(q: &Rational) -> Option<Self>;

    fn signum(&self) -> Sign;

    fn checked_inv(&self) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// Exact value when the scalar is known to be rational.
    fn to_rational(&self) -> Option<Rational>;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&Rational::new(num.into(), den.into()))
    }

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    /// Treated as zero during elimination.
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn cmp_value(&self, other: &Self) -> std::cmp::Ordering {
        (other.clone() - self.clone()).signum().to_ordering().reverse()
    }

    fn activate(&self, sigma: Activation) -> Self {
        match sigma {
            Activation::Identity => self.clone(),
            Activation::Relu => {
                if self.signum() == Sign::Positive {
                    self.clone()
                } else {
                    Self::zero()
                }
            }
            Activation::Sign => Self::from_int(self.signum().as_i32() as i64),
        }
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_rational(q: &Rational) -> Self {
                ToPrimitive::to_f64(q).unwrap_or(f64::NAN) as $t
            }

            fn from_surd(x: &ExactScalar) -> Option<Self> {
                Some(x.to_f64() as $t)
            }

            fn sqrt_rational(q: &Rational) -> Option<Self> {
                let v = ToPrimitive::to_f64(q)?;
                (v >= 0.0).then(|| v.sqrt() as $t)
            }

            fn signum(&self) -> Sign {
                if *self > 0.0 {
                    Sign::Positive
                } else if *self < 0.0 {
                    Sign::Negative
                } else {
                    Sign::Zero
                }
            }

            fn checked_inv(&self) -> Option<Self> {
                (*self != 0.0).then(|| 1.0 / *self)
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn to_rational(&self) -> Option<Rational> {
                Rational::from_float(*self)
            }

            fn is_negligible(&self) -> bool {
                self.abs() <= 1e-9
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn from_surd(x: &ExactScalar) -> Option<Self> {
        x.to_rational()
    }

    fn sqrt_rational(q: &Rational) -> Option<Self> {
        ExactScalar::sqrt_rational(q)?.to_rational()
    }

    fn signum(&self) -> Sign {
        if self.is_positive() {
            Sign::Positive
        } else if self.is_negative() {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    fn checked_inv(&self) -> Option<Self> {
        (!self.is_zero()).then(|| self.recip())
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }
}

impl Scalar for ExactScalar {
    const EXACT: bool = true;

    fn from_rational(q: &Rational) -> Self {
        ExactScalar::from_rational(q.clone())
    }

    fn from_surd(x: &ExactScalar) -> Option<Self> {
        Some(x.clone())
    }

    fn sqrt_rational(q: &Rational) -> Option<Self> {
        ExactScalar::sqrt_rational(q)
    }

    fn signum(&self) -> Sign {
        self.sign()
    }

    fn checked_inv(&self) -> Option<Self> {
        self.invert().ok()
    }

    fn to_f64(&self) -> f64 {
        ExactScalar::to_f64(self)
    }

    fn to_rational(&self) -> Option<Rational> {
        ExactScalar::to_rational(self)
    }
}
