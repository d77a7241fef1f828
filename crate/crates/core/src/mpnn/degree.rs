use std::collections::BTreeMap;

use num_traits::{One, Signed};

use super::MpnnError;
use crate::field::{ExactScalar, Rational, Sign};
use crate::scalar::Scalar;

/// A positive function of the vertex degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DegreeFn {
    One,
    /// `1/d`
    InvDeg,
    /// `d^(-1/2)`
    InvSqrtDeg,
    /// `1/(1+d)`
    InvDegPlusOne,
    /// `(1+d)^(-1/2)`
    InvSqrtDegPlusOne,
    /// `(r + (1-r) d)^(-1/2)`
    InvSqrtAffine(Rational),
    /// Explicit values on the degrees that occur.
    Table(BTreeMap<usize, ExactScalar>),
}

fn ratio(n: usize, d: usize) -> Rational {
    Rational::new((n as i64).into(), (d as i64).into())
}

impl DegreeFn {
    /// Exact value at degree `d >= 1`.
    pub fn eval_exact(&self, d: usize) -> Result<ExactScalar, MpnnError> {
        let inv_sqrt = |q: Rational| {
            ExactScalar::sqrt_rational(&q.recip())
                .ok_or_else(|| MpnnError::NotRepresentable(format!("sqrt(1/{q})")))
        };
        let v = match self {
            DegreeFn::One => ExactScalar::one(),
            DegreeFn::InvDeg => ExactScalar::from_rational(ratio(1, d)),
            DegreeFn::InvSqrtDeg => inv_sqrt(ratio(d, 1))?,
            DegreeFn::InvDegPlusOne => ExactScalar::from_rational(ratio(1, d + 1)),
            DegreeFn::InvSqrtDegPlusOne => inv_sqrt(ratio(d + 1, 1))?,
            DegreeFn::InvSqrtAffine(r) => {
                let base = r + (Rational::one() - r) * ratio(d, 1);
                if !base.is_positive() {
                    return Err(MpnnError::DegreeFn(format!("r + (1-r)d = {base} at d = {d}")));
                }
                inv_sqrt(base)?
            }
            DegreeFn::Table(t) => t
                .get(&d)
                .cloned()
                .ok_or_else(|| MpnnError::DegreeFn(format!("no table entry for degree {d}")))?,
        };
        if v.sign() != Sign::Positive {
            return Err(MpnnError::DegreeFn(format!("value {v} at degree {d} is not positive")));
        }
        Ok(v)
    }

    pub fn eval<S: Scalar>(&self, d: usize) -> Result<S, MpnnError> {
        let v = self.eval_exact(d)?;
        S::from_surd(&v).ok_or_else(|| MpnnError::NotRepresentable(v.to_string()))
    }

    pub fn is_one(&self) -> bool {
        match self {
            DegreeFn::One => true,
            DegreeFn::InvSqrtAffine(r) => r.is_one(),
            DegreeFn::Table(t) => t.values().all(|v| *v == ExactScalar::one()),
            _ => false,
        }
    }

    /// Short name used in JSON; tables have none.
    pub fn name(&self) -> Option<String> {
        Some(match self {
            DegreeFn::One => "one".into(),
            DegreeFn::InvDeg => "inv-deg".into(),
            DegreeFn::InvSqrtDeg => "inv-sqrt-deg".into(),
            DegreeFn::InvDegPlusOne => "inv-deg-plus-one".into(),
            DegreeFn::InvSqrtDegPlusOne => "inv-sqrt-deg-plus-one".into(),
            DegreeFn::InvSqrtAffine(r) => format!("inv-sqrt-affine:{r}"),
            DegreeFn::Table(_) => return None,
        })
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "one" => DegreeFn::One,
            "inv-deg" => DegreeFn::InvDeg,
            "inv-sqrt-deg" => DegreeFn::InvSqrtDeg,
            "inv-deg-plus-one" => DegreeFn::InvDegPlusOne,
            "inv-sqrt-deg-plus-one" => DegreeFn::InvSqrtDegPlusOne,
            other => {
                let r = other.strip_prefix("inv-sqrt-affine:")?;
                DegreeFn::InvSqrtAffine(r.parse().ok()?)
            }
        })
    }
}
