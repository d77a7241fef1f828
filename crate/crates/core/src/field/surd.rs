use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{FieldError, Sign};

/// Inversion multiplies by conjugates over every prime generator; past this
/// many primes the conjugate product is refused.
pub const MAX_INVERT_PRIMES: usize = 12;

/// An element of the field generated over the rationals by square roots.
///
/// Stored as a map from squarefree radicand to nonzero rational coefficient;
/// radicand `1` holds the rational part. The zero value has no terms.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct ExactScalar {
    terms: BTreeMap<u64, BigRational>,
}

/// Activation applied entrywise to labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sign,
    Relu,
    #[serde(rename = "none")]
    Identity,
}

/// Prime factorization by trial division, as `(prime, exponent)` pairs.
pub fn factorize(mut r: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut f = 2u64;
    while f.saturating_mul(f) <= r {
        if r % f == 0 {
            let mut e = 0;
            while r % f == 0 {
                r /= f;
                e += 1;
            }
            out.push((f, e));
        }
        f += if f == 2 { 1 } else { 2 };
    }
    if r > 1 {
        out.push((r, 1));
    }
    out
}

/// Splits `r` as `outside^2 * inside` with `inside` squarefree.
pub fn squarefree_split(r: u64) -> (u64, u64) {
    let mut outside = 1u64;
    let mut inside = 1u64;
    for (p, e) in factorize(r) {
        outside *= p.pow(e / 2);
        if e % 2 == 1 {
            inside *= p;
        }
    }
    (outside, inside)
}

fn radicand_product(r: u64, s: u64) -> (u64, u64) {
    // sqrt(r) * sqrt(s) = g * sqrt((r/g) * (s/g)) for squarefree r, s.
    let g = r.gcd(&s);
    let inside = (r / g)
        .checked_mul(s / g)
        .expect("radicand product exceeds 64 bits");
    (g, inside)
}

impl ExactScalar {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_rational(BigRational::one())
    }

    pub fn from_rational(q: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(1, q);
        }
        Self { terms }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(n.into()))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(BigRational::new(num.into(), den.into()))
    }

    /// `sqrt(r)` for any positive integer `r`.
    pub fn sqrt(r: u64) -> Self {
        let (outside, inside) = squarefree_split(r);
        let mut terms = BTreeMap::new();
        if r > 0 {
            terms.insert(inside, BigRational::from_integer(outside.into()));
        }
        Self { terms }
    }

    /// Square root of a non-negative rational `a/b`, as `sqrt(a*b)/b`.
    /// Returns `None` for negative input or when `a*b` does not fit in 64 bits.
    pub fn sqrt_rational(q: &BigRational) -> Option<Self> {
        if q.is_negative() {
            return None;
        }
        if q.is_zero() {
            return Some(Self::zero());
        }
        let prod = (q.numer() * q.denom()).to_u64()?;
        let root = Self::sqrt(prod);
        Some(root * Self::from_rational(BigRational::new(BigInt::one(), q.denom().clone())))
    }

    /// Builds a value from `(radicand, coefficient)` pairs, reducing radicands
    /// to squarefree form and merging like terms.
    pub fn normalize<I>(raw: I) -> Result<Self, FieldError>
    where
        I: IntoIterator<Item = (i128, BigRational)>,
    {
        let mut out = Self::zero();
        for (r, c) in raw {
            if r <= 0 {
                return Err(FieldError::NonPositiveRadicand(r));
            }
            let r = u64::try_from(r).map_err(|_| FieldError::NonPositiveRadicand(r))?;
            let (outside, inside) = squarefree_split(r);
            out.add_term(inside, c * BigRational::from_integer(outside.into()));
        }
        Ok(out)
    }

    fn add_term(&mut self, radicand: u64, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.get_mut(&radicand) {
            Some(existing) => {
                *existing += coeff;
                if existing.is_zero() {
                    self.terms.remove(&radicand);
                }
            }
            None => {
                self.terms.insert(radicand, coeff);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, &BigRational)> {
        self.terms.iter().map(|(r, c)| (*r, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_rational(&self) -> bool {
        self.terms.keys().all(|&r| r == 1)
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        if self.is_rational() {
            Some(self.terms.get(&1).cloned().unwrap_or_else(BigRational::zero))
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(r, c)| c.to_f64().unwrap_or(f64::NAN) * (*r as f64).sqrt())
            .sum()
    }

    /// Distinct primes dividing any radicand.
    pub fn prime_generators(&self) -> BTreeSet<u64> {
        self.terms
            .keys()
            .flat_map(|&r| factorize(r).into_iter().map(|(p, _)| p))
            .collect()
    }

    /// Image under the field automorphism `sqrt(p) -> -sqrt(p)`.
    pub fn conjugate(&self, prime: u64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(&r, c)| if r % prime == 0 { (r, -c.clone()) } else { (r, c.clone()) })
            .collect();
        Self { terms }
    }

    /// Multiplicative inverse.
    ///
    /// The denominator is rationalized one prime generator at a time: after
    /// multiplying by the conjugate over `p` the running product no longer
    /// involves `sqrt(p)`. The accumulated multiplier is the product of all
    /// nontrivial sign-flip conjugates of `self`.
    pub fn invert(&self) -> Result<Self, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let primes = self.prime_generators();
        if primes.len() > MAX_INVERT_PRIMES {
            return Err(FieldError::TooManyPrimes(primes.len()));
        }
        let mut denom = self.clone();
        let mut numer = Self::one();
        for p in primes {
            let conj = denom.conjugate(p);
            if conj == denom {
                continue;
            }
            denom = &denom * &conj;
            numer = &numer * &conj;
        }
        let norm = denom
            .to_rational()
            .expect("conjugate product over all generators is rational");
        Ok(numer.scale(&norm.recip()))
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        let terms = self.terms.iter().map(|(&r, c)| (r, c * k)).collect();
        Self { terms }
    }

    pub fn sign(&self) -> Sign {
        super::sign::sign(self)
    }

    /// Rational bounds `lo <= self <= hi` tightening as `bits` grows.
    pub fn bounds(&self, bits: u64) -> (BigRational, BigRational) {
        super::sign::bounds(self, bits)
    }

    pub fn abs(&self) -> Self {
        if self.sign() == Sign::Negative {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn activate(&self, sigma: Activation) -> Self {
        match sigma {
            Activation::Identity => self.clone(),
            Activation::Relu => {
                if self.sign() == Sign::Positive {
                    self.clone()
                } else {
                    Self::zero()
                }
            }
            Activation::Sign => Self::from_integer(self.sign().as_i32() as i64),
        }
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (&r, c)) in self.terms.iter().enumerate() {
            let negative = c.is_negative();
            if i == 0 {
                if negative {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if negative { " - " } else { " + " })?;
            }
            let mag = c.abs();
            if r == 1 {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "sqrt({r})")?;
            } else {
                write!(f, "{mag}*sqrt({r})")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactScalar({self})")
    }
}

impl From<BigRational> for ExactScalar {
    fn from(q: BigRational) -> Self {
        Self::from_rational(q)
    }
}

impl From<i64> for ExactScalar {
    fn from(n: i64) -> Self {
        Self::from_integer(n)
    }
}

impl<'a> Add<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn add(self, rhs: &'a ExactScalar) -> ExactScalar {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&ExactScalar> for ExactScalar {
    fn add_assign(&mut self, rhs: &ExactScalar) {
        for (&r, c) in &rhs.terms {
            self.add_term(r, c.clone());
        }
    }
}

impl AddAssign for ExactScalar {
    fn add_assign(&mut self, rhs: ExactScalar) {
        for (r, c) in rhs.terms {
            self.add_term(r, c);
        }
    }
}

impl Add for ExactScalar {
    type Output = ExactScalar;
    fn add(mut self, rhs: ExactScalar) -> ExactScalar {
        self += rhs;
        self
    }
}

impl SubAssign<&ExactScalar> for ExactScalar {
    fn sub_assign(&mut self, rhs: &ExactScalar) {
        for (&r, c) in &rhs.terms {
            self.add_term(r, -c.clone());
        }
    }
}

impl<'a> Sub<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn sub(self, rhs: &'a ExactScalar) -> ExactScalar {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for ExactScalar {
    type Output = ExactScalar;
    fn sub(mut self, rhs: ExactScalar) -> ExactScalar {
        self -= &rhs;
        self
    }
}

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(mut self) -> ExactScalar {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl<'a> Mul<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn mul(self, rhs: &'a ExactScalar) -> ExactScalar {
        let mut out = ExactScalar::zero();
        for (&r, a) in &self.terms {
            for (&s, b) in &rhs.terms {
                let (outside, inside) = radicand_product(r, s);
                let mut c = a * b;
                if outside != 1 {
                    c *= BigRational::from_integer(outside.into());
                }
                out.add_term(inside, c);
            }
        }
        out
    }
}

impl Mul for ExactScalar {
    type Output = ExactScalar;
    fn mul(self, rhs: ExactScalar) -> ExactScalar {
        &self * &rhs
    }
}

impl MulAssign<&ExactScalar> for ExactScalar {
    fn mul_assign(&mut self, rhs: &ExactScalar) {
        *self = &*self * rhs;
    }
}

impl Div for ExactScalar {
    type Output = ExactScalar;
    /// Panics on division by zero, like rational division does.
    fn div(self, rhs: ExactScalar) -> ExactScalar {
        let inv = rhs.invert().expect("division of exact scalars");
        &self * &inv
    }
}

impl Zero for ExactScalar {
    fn zero() -> Self {
        ExactScalar::zero()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for ExactScalar {
    fn one() -> Self {
        ExactScalar::one()
    }
}

impl Sum for ExactScalar {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |acc, x| acc + x)
    }
}

impl Product for ExactScalar {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::one(), |acc, x| acc * x)
    }
}

impl PartialOrd for ExactScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        (self - other).sign().to_ordering()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn s(text: &str) -> ExactScalar {
        crate::field::parse_scalar(text).unwrap()
    }

    #[test]
    fn normalize_reduces_and_merges() {
        let a = ExactScalar::normalize([(12, q(1, 1))]).unwrap();
        assert_eq!(a.terms().collect::<Vec<_>>(), vec![(3, &q(2, 1))]);
        let b = ExactScalar::normalize([(2, q(1, 2)), (2, q(1, 2))]).unwrap();
        assert_eq!(b, ExactScalar::sqrt(2));
        let c = ExactScalar::normalize([(1, q(3, 1)), (1, q(-3, 1))]).unwrap();
        assert!(c.is_zero());
        assert_eq!(c.num_terms(), 0);
    }

    #[test]
    fn normalize_rejects_bad_radicand() {
        assert_eq!(
            ExactScalar::normalize([(0, q(1, 1))]),
            Err(FieldError::NonPositiveRadicand(0))
        );
        assert!(ExactScalar::normalize([(-4, q(1, 1))]).is_err());
    }

    #[test]
    fn addition_examples() {
        assert_eq!(s("1/2") + ExactScalar::zero(), s("1/2"));
        assert_eq!(s("1/2*sqrt(2)") + s("1/2*sqrt(2)"), s("sqrt(2)"));
        assert_eq!(s("1 + sqrt(2)") + s("1 - sqrt(2)"), s("2"));
    }

    #[test]
    fn multiplication_examples() {
        assert_eq!(ExactScalar::sqrt(2) * ExactScalar::sqrt(3), ExactScalar::sqrt(6));
        assert_eq!(ExactScalar::sqrt(2) * ExactScalar::sqrt(2), s("2"));
        assert_eq!(s("1 + sqrt(2)") * s("1 - sqrt(2)"), s("-1"));
        assert_eq!(ExactScalar::sqrt(6) * ExactScalar::sqrt(10), s("2*sqrt(15)"));
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(ExactScalar::sqrt(2).invert().unwrap(), s("1/2*sqrt(2)"));
        assert_eq!(s("1 + sqrt(2)").invert().unwrap(), s("sqrt(2) - 1"));
        assert_eq!(ExactScalar::zero().invert(), Err(FieldError::DivisionByZero));
        let x = s("1 + sqrt(2) + sqrt(3) + 1/5*sqrt(30)");
        assert_eq!(&x * &x.invert().unwrap(), ExactScalar::one());
    }

    #[test]
    fn inversion_refuses_too_many_primes() {
        let primes = [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];
        let x: ExactScalar = primes.iter().map(|&p| ExactScalar::sqrt(p)).sum();
        assert_eq!(x.invert(), Err(FieldError::TooManyPrimes(13)));
    }

    #[test]
    fn activation_examples() {
        assert!(s("-3/2").activate(Activation::Relu).is_zero());
        assert_eq!(s("sqrt(2) - 1").activate(Activation::Relu), s("sqrt(2) - 1"));
        assert_eq!(s("sqrt(2) - 1").activate(Activation::Sign), s("1"));
        assert_eq!(s("1 - sqrt(3)").activate(Activation::Sign), s("-1"));
        assert_eq!(ExactScalar::zero().activate(Activation::Sign), ExactScalar::zero());
    }

    #[test]
    fn canonical_printing() {
        assert_eq!(s("1/4*sqrt(2) + 1/2").to_string(), "1/2 + 1/4*sqrt(2)");
        assert_eq!(s("-sqrt(2)").to_string(), "-sqrt(2)");
        assert_eq!(s("1/6*sqrt(6)").to_string(), "1/6*sqrt(6)");
        assert_eq!(s("3 - 2*sqrt(5)").to_string(), "3 - 2*sqrt(5)");
        assert_eq!(ExactScalar::zero().to_string(), "0");
    }

    #[test]
    fn sqrt_of_rationals() {
        assert_eq!(ExactScalar::sqrt_rational(&q(1, 4)).unwrap(), s("1/2"));
        assert_eq!(ExactScalar::sqrt_rational(&q(1, 2)).unwrap(), s("1/2*sqrt(2)"));
        assert_eq!(ExactScalar::sqrt_rational(&q(3, 2)).unwrap(), s("1/2*sqrt(6)"));
        assert!(ExactScalar::sqrt_rational(&q(-1, 2)).is_none());
    }

    #[test]
    fn ordering_is_numeric() {
        let mut v = vec![s("sqrt(3)"), s("3/2"), s("sqrt(2)"), s("-1"), s("7/4")];
        v.sort();
        let printed: Vec<String> = v.iter().map(ToString::to_string).collect();
        assert_eq!(printed, ["-1", "sqrt(2)", "3/2", "sqrt(3)", "7/4"]);
    }

    #[test]
    fn factorization() {
        assert_eq!(factorize(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(squarefree_split(72), (6, 2));
        assert_eq!(squarefree_split(1), (1, 1));
    }
}
