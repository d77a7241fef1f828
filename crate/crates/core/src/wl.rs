//! Weisfeiler-Lehman colour refinement, and the injective encoding that lets
//! an anonymous MPNN compute the same colours with a sum aggregator.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use std::sync::{Arc, Mutex};

use crate::field::{ExactScalar, Rational};
use crate::mpnn::{run_mpnn, wrap_comb_aggr, AggrFn, CombFn, MpnnError, MpnnSpec};
use crate::graph::{partition_of, LabelledGraph, Partition};
use crate::scalar::Scalar;

/// Largest label index accepted by [`h_inject`]; beyond it the base-(n+1)
/// digit positions stop being practical to materialize.
pub const MAX_TAU: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WlError {
    #[error("label index {0} exceeds the limit {MAX_TAU}")]
    TauTooLarge(String),
    #[error("label index must be positive")]
    ZeroTau,
    #[error("multiset of size {size} exceeds vertex count {n}")]
    BagTooLarge { size: usize, n: usize },
    #[error("value {0} is not a sum of encoded labels from the dictionary")]
    NotInImage(String),
    #[error("label {0} is not in the dictionary")]
    UnknownLabel(String),
    #[error("label entry {0} has no integer-polynomial encoding here")]
    Unencodable(String),
    #[error("encoded run: {0}")]
    Encoded(String),
}

/// Colour classes per round, index 0 being the initial labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WlTrace {
    pub rounds: Vec<Partition>,
    pub stabilized_at: Option<usize>,
}

impl WlTrace {
    pub fn partitions(&self) -> &[Partition] {
        &self.rounds
    }

    /// Number of refinement rounds recorded.
    pub fn num_rounds(&self) -> usize {
        self.rounds.len() - 1
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }
}

/// One refinement round: the new colour of `v` is its old colour together
/// with the sorted list of its neighbours' colours, numbered by first use.
pub fn wl_step<S: Scalar>(g: &LabelledGraph<S>, current: &Partition) -> Partition {
    let mut dict: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
    let mut ids = Vec::with_capacity(g.n());
    for v in 0..g.n() {
        let mut nb: Vec<usize> = g.neighbours(v).iter().map(|&u| current.class_of(u)).collect();
        nb.sort_unstable();
        let next = dict.len();
        ids.push(*dict.entry((current.class_of(v), nb)).or_insert(next));
    }
    Partition::from_ids(&ids)
}

/// Refines until two consecutive rounds have the same number of classes, or
/// `max_rounds` rounds have been done.
pub fn wl_run<S: Scalar>(g: &LabelledGraph<S>, max_rounds: Option<usize>) -> WlTrace {
    let mut rounds = vec![partition_of(g.labels())];
    let mut stabilized_at = None;
    while max_rounds.map_or(true, |m| rounds.len() <= m) {
        let next = wl_step(g, rounds.last().unwrap());
        let same = next.num_classes() == rounds.last().unwrap().num_classes();
        rounds.push(next);
        if same {
            stabilized_at = Some(rounds.len() - 1);
            break;
        }
    }
    WlTrace { rounds, stabilized_at }
}

/// Exactly `rounds` refinement rounds, continuing past stabilization.
pub fn wl_rounds<S: Scalar>(g: &LabelledGraph<S>, rounds: usize) -> WlTrace {
    let mut out = vec![partition_of(g.labels())];
    let mut stabilized_at = None;
    for t in 1..=rounds {
        let next = wl_step(g, &out[t - 1]);
        if stabilized_at.is_none() && next.num_classes() == out[t - 1].num_classes() {
            stabilized_at = Some(t);
        }
        out.push(next);
    }
    WlTrace { rounds: out, stabilized_at }
}

/// An algebraic number given by an integer polynomial `a_0 + a_1 x + ...`
/// and an isolating interval `[n1/d1, n2/d2]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraicCode {
    pub poly: Vec<BigInt>,
    pub n1: BigInt,
    pub d1: BigInt,
    pub n2: BigInt,
    pub d2: BigInt,
}

impl AlgebraicCode {
    /// The rational `a/b` as the root of `b x - a` isolated by `[a/b, a/b]`.
    pub fn from_rational(q: &Rational) -> Self {
        let (a, b) = (q.numer().clone(), q.denom().clone());
        Self { poly: vec![-a.clone(), b.clone()], n1: a.clone(), d1: b.clone(), n2: a, d2: b }
    }

    pub fn zero_input() -> Self {
        let z = BigInt::zero();
        Self { poly: Vec::new(), n1: z.clone(), d1: z.clone(), n2: z.clone(), d2: z }
    }
}

/// The `k`-th prime, 1-based.
pub fn nth_prime(k: usize) -> u64 {
    assert!(k >= 1);
    let mut found = 0;
    let mut c = 1u64;
    loop {
        c += 1;
        if (2..).take_while(|d| d * d <= c).all(|d| c % d != 0) {
            found += 1;
            if found == k {
                return c;
            }
        }
    }
}

fn prime_power(i: usize, z: &BigInt) -> BigUint {
    let (idx, e) = if z.sign() != num_bigint::Sign::Minus { (2 * i, z.clone()) } else { (2 * i + 1, -z) };
    let e = e.to_u32().expect("exponent fits in 32 bits");
    BigUint::from(nth_prime(idx)).pow(e)
}

/// Prime-power injection of an algebraic code into the positive integers.
pub fn alpha_encode(x: &AlgebraicCode) -> BigUint {
    let mut out = prime_power(1, &x.n1) * prime_power(2, &x.n2) * prime_power(3, &x.d1) * prime_power(4, &x.d2);
    for (i, a) in x.poly.iter().enumerate() {
        out *= prime_power(i + 5, a);
    }
    out
}

/// Cantor pairing of two naturals.
pub fn cantor_pair(a: &BigUint, b: &BigUint) -> BigUint {
    let s = a + b;
    (&s * (&s + 1u32)) / 2u32 + b
}

/// Left-nested Cantor tuple; a single entry maps to itself.
pub fn cantor_tuple(xs: &[BigUint]) -> BigUint {
    let mut it = xs.iter();
    let first = it.next().cloned().unwrap_or_else(BigUint::zero);
    it.fold(first, |acc, x| cantor_pair(&acc, x))
}

/// Injective positive index of a label vector.
pub trait LabelIndex {
    fn tau(&self, label: &[ExactScalar]) -> Result<u64, WlError>;
}

/// The prime-power index: `alpha` on each entry, combined by the Cantor tuple.
/// Only rational entries are encoded.
#[derive(Debug, Clone, Copy, Default)]
pub struct PrimePowerTau;

impl PrimePowerTau {
    pub fn tau_big(&self, label: &[ExactScalar]) -> Result<BigUint, WlError> {
        let codes = label
            .iter()
            .map(|x| {
                x.to_rational()
                    .map(|q| alpha_encode(&AlgebraicCode::from_rational(&q)))
                    .ok_or_else(|| WlError::Unencodable(x.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(cantor_tuple(&codes))
    }
}

impl LabelIndex for PrimePowerTau {
    fn tau(&self, label: &[ExactScalar]) -> Result<u64, WlError> {
        let t = self.tau_big(label)?;
        match t.to_u64() {
            Some(v) if v <= MAX_TAU => Ok(v),
            _ => Err(WlError::TauTooLarge(t.to_string())),
        }
    }
}

/// Index by position in a fixed list of labels, starting at 1.
#[derive(Debug, Clone, Default)]
pub struct DictionaryTau {
    entries: Vec<Vec<ExactScalar>>,
}

impl DictionaryTau {
    pub fn new(entries: Vec<Vec<ExactScalar>>) -> Self {
        let mut out = Self::default();
        for e in entries {
            if !out.entries.contains(&e) {
                out.entries.push(e);
            }
        }
        out
    }

    pub fn entries(&self) -> &[Vec<ExactScalar>] {
        &self.entries
    }
}

impl LabelIndex for DictionaryTau {
    fn tau(&self, label: &[ExactScalar]) -> Result<u64, WlError> {
        self.entries
            .iter()
            .position(|e| e == label)
            .map(|p| p as u64 + 1)
            .ok_or_else(|| WlError::UnknownLabel(format_label(label)))
    }
}

fn format_label(label: &[ExactScalar]) -> String {
    let cells: Vec<String> = label.iter().map(ToString::to_string).collect();
    format!("({})", cells.join(", "))
}

fn base_power(n: usize, tau: u64) -> Result<BigInt, WlError> {
    if tau == 0 {
        return Err(WlError::ZeroTau);
    }
    if tau > MAX_TAU {
        return Err(WlError::TauTooLarge(tau.to_string()));
    }
    Ok(num_traits::pow(BigInt::from(n + 1), tau as usize))
}

/// `(n+1)^(-tau)`: a single nonzero base-(n+1) digit at position `tau`.
pub fn h_inject(tau: u64, n: usize) -> Result<Rational, WlError> {
    Ok(Rational::new(BigInt::one(), base_power(n, tau)?))
}

/// Sum of the encoded labels of a multiset of at most `n` labels.
pub fn phi_sum(bag: &[Vec<ExactScalar>], n: usize, index: &impl LabelIndex) -> Result<Rational, WlError> {
    if bag.len() > n {
        return Err(WlError::BagTooLarge { size: bag.len(), n });
    }
    let mut sum = Rational::zero();
    for x in bag {
        sum += h_inject(index.tau(x)?, n)?;
    }
    Ok(sum)
}

/// Recovers the multiset from its encoded sum by reading one base-(n+1) digit
/// per dictionary label. Labels come out in dictionary order.
pub fn phi_inverse(
    value: &Rational,
    n: usize,
    dictionary: &[Vec<ExactScalar>],
    index: &impl LabelIndex,
) -> Result<Vec<Vec<ExactScalar>>, WlError> {
    let not_in_image = || WlError::NotInImage(value.to_string());
    let base = BigInt::from(n + 1);
    let mut bag = Vec::new();
    let mut rebuilt = Rational::zero();
    for label in dictionary {
        let tau = index.tau(label)?;
        let scaled = value * Rational::from_integer(base_power(n, tau)?);
        let digit = scaled.floor().to_integer().mod_floor(&base);
        let count = digit.to_usize().ok_or_else(not_in_image)?;
        if count > 0 {
            rebuilt += Rational::from_integer(digit) * h_inject(tau, n)?;
            bag.extend(std::iter::repeat(label.clone()).take(count));
        }
    }
    if rebuilt != *value || bag.len() > n {
        return Err(not_in_image());
    }
    Ok(bag)
}

/// WL as an anonymous MPNN. Messages are `h_inject` of the neighbour's label,
/// the sum is decoded with `phi_inverse`, and the update hashes the pair
/// (own label, decoded multiset) to a fresh integer id, which becomes the
/// next 1-dimensional label.
///
/// The label index is a dictionary over the distinct initial labels followed
/// by the ids `0..n*rounds`, so every index stays small.
pub fn encoded_wl_spec(g: &LabelledGraph<ExactScalar>, rounds: usize) -> MpnnSpec<ExactScalar> {
    let n = g.n();
    let mut entries = g.labels().unique_rows();
    entries.extend((0..n * rounds).map(|k| vec![ExactScalar::from_integer(k as i64)]));
    let index = Arc::new(DictionaryTau::new(entries));
    let wrap = |e: WlError| MpnnError::Custom(e.to_string());

    let idx = Arc::clone(&index);
    let aggr_h: AggrFn<ExactScalar> =
        Arc::new(move |y| Ok(vec![ExactScalar::from_rational(h_inject(idx.tau(y).map_err(wrap)?, n).map_err(wrap)?)]));

    let idx = Arc::clone(&index);
    let aggr_g: AggrFn<ExactScalar> = Arc::new(move |m| {
        let value = m[0].to_rational().ok_or_else(|| MpnnError::Custom(format!("message sum {} is irrational", m[0])))?;
        let bag = phi_inverse(&value, n, idx.entries(), idx.as_ref()).map_err(wrap)?;
        let mut counts = vec![ExactScalar::zero(); idx.entries().len()];
        for label in &bag {
            let t = idx.tau(label).map_err(wrap)? as usize;
            counts[t - 1] += ExactScalar::one();
        }
        Ok(counts)
    });

    let seen: Mutex<HashMap<(Vec<ExactScalar>, Vec<ExactScalar>), i64>> = Mutex::new(HashMap::new());
    let comb: CombFn<ExactScalar> = Arc::new(move |x, counts| {
        let mut seen = seen.lock().expect("hash dictionary poisoned");
        let next = seen.len() as i64;
        let id = *seen.entry((x.to_vec(), counts.to_vec())).or_insert(next);
        Ok(vec![ExactScalar::from_integer(id)])
    });

    wrap_comb_aggr(comb, aggr_h, aggr_g, rounds)
}

/// Partitions of [`encoded_wl_spec`] for rounds `0..=rounds`.
pub fn encoded_wl_run(g: &LabelledGraph<ExactScalar>, rounds: usize) -> Result<Vec<Partition>, WlError> {
    let trace = run_mpnn(g, &encoded_wl_spec(g, rounds)).map_err(|e| WlError::Encoded(e.to_string()))?;
    Ok(trace.partitions)
}
