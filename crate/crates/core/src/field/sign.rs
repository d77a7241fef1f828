use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{ExactScalar, Sign};

const START_BITS: u64 = 64;

/// Certified sign of an exact scalar.
///
/// Each irrational term is enclosed using integer square roots at `k`
/// fractional bits; `k` doubles until the summed interval excludes zero.
/// A nonzero element always terminates since its value is a fixed nonzero real.
pub(crate) fn sign(x: &ExactScalar) -> Sign {
    if x.is_zero() {
        return Sign::Zero;
    }
    if let Some(q) = x.to_rational() {
        return rational_sign(&q);
    }
    let mut bits = START_BITS;
    loop {
        let (lo, hi) = enclose(x, bits);
        if lo.is_positive() {
            return Sign::Positive;
        }
        if hi.is_negative() {
            return Sign::Negative;
        }
        bits *= 2;
    }
}

fn rational_sign(q: &BigRational) -> Sign {
    if q.is_positive() {
        Sign::Positive
    } else if q.is_negative() {
        Sign::Negative
    } else {
        Sign::Zero
    }
}

/// Rational `lo <= x <= hi`, each irrational term rounded at `bits` fractional bits.
pub(crate) fn bounds(x: &ExactScalar, bits: u64) -> (BigRational, BigRational) {
    let scale = BigRational::from_integer(BigInt::one() << bits);
    let (lo, hi) = enclose(x, bits);
    (lo / scale.clone(), hi / scale)
}

/// Interval `[lo, hi]` containing `x`, both scaled by `2^bits`.
fn enclose(x: &ExactScalar, bits: u64) -> (BigRational, BigRational) {
    let scale = BigInt::one() << bits;
    let mut lo = BigRational::zero();
    let mut hi = BigRational::zero();
    for (r, c) in x.terms() {
        if r == 1 {
            let v = c * BigRational::from_integer(scale.clone());
            lo += v.clone();
            hi += v;
            continue;
        }
        let floor = (BigInt::from(r) << (2 * bits)).sqrt();
        let a = c * BigRational::from_integer(floor.clone());
        let b = c * BigRational::from_integer(floor + 1);
        if c.is_positive() {
            lo += a;
            hi += b;
        } else {
            lo += b;
            hi += a;
        }
    }
    (lo, hi)
}
