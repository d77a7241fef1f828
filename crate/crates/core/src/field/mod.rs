//! Exact arithmetic over the multi-quadratic field: finite rational linear
//! combinations of square roots of squarefree positive integers.
//!
//! [`ExactScalar`] is the scalar used for every label, weight and parameter
//! that comes out of a graph file or a synthesized network. Equality is a
//! structural comparison of the coefficient maps, which is sound because
//! square roots of distinct squarefree integers are linearly independent over
//! the rationals. Signs are decided by certified interval evaluation.

mod parse;
mod sign;
mod surd;

pub use num_rational::BigRational as Rational;
pub use parse::parse_scalar;
pub use surd::{factorize, squarefree_split, Activation, ExactScalar, MAX_INVERT_PRIMES};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("radicand must be a positive integer, got {0}")]
    NonPositiveRadicand(i128),
    #[error("division by zero")]
    DivisionByZero,
    #[error("inversion needs {0} prime generators, limit is {MAX_INVERT_PRIMES}")]
    TooManyPrimes(usize),
    #[error("cannot parse scalar {text:?}: {reason}")]
    Parse { text: String, reason: String },
}

/// Three-valued sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn as_i32(self) -> i32 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }

    pub fn to_ordering(self) -> std::cmp::Ordering {
        match self {
            Sign::Negative => std::cmp::Ordering::Less,
            Sign::Zero => std::cmp::Ordering::Equal,
            Sign::Positive => std::cmp::Ordering::Greater,
        }
    }
}
