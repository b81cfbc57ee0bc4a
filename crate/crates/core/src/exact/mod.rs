//! Exact coefficient extraction by truncated-series dynamic programming.
//!
//! The engine is generic over a [`Semiring`]; the public entry points pick
//! big integers, big rationals or floats depending on the weights.

mod engine;
mod rings;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::grammar::Grammar;
use crate::oracle::WeightVector;
use crate::scalar::Scalar;

pub use engine::Semiring;
pub use rings::{DualRing, ProfileRing, Profiles, WeightedRing};

use engine::{compute, Compiled, Node, Series};

/// Largest size accepted by [`weighted_coeffs`].
pub const MAX_SIZE: usize = 2000;
/// Largest number of words [`enumerate_words`] will list.
pub const MAX_WORDS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("grammar is not well-founded: {0}")]
    NotWellFounded(String),
    #[error("size {n} exceeds the ceiling {ceiling}")]
    SizeCeiling { n: usize, ceiling: usize },
    #[error("profile sums to {sum}, expected {n}")]
    ProfileMismatch { sum: usize, n: usize },
    #[error("expected {expected} letters, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{count} words of size {n} exceed the enumeration limit")]
    TooMany { count: String, n: usize },
    #[error("no word of size {0}")]
    ZeroCoefficient(usize),
}

impl ExactError {
    pub fn code(&self) -> &'static str {
        match self {
            ExactError::NotWellFounded(_) => "not_well_founded",
            ExactError::SizeCeiling { .. } => "size_ceiling",
            ExactError::ProfileMismatch { .. } => "profile_mismatch",
            ExactError::DimensionMismatch { .. } => "dimension_mismatch",
            ExactError::TooMany { .. } => "too_many",
            ExactError::ZeroCoefficient(_) => "zero_coefficient",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithmeticMode {
    Integer,
    Rational,
    Float,
}

/// Weights in the representation used for exact counting.
#[derive(Debug, Clone, PartialEq)]
pub enum ExactWeights {
    Unit(usize),
    Rational(Vec<BigRational>),
    Float(Vec<f64>),
}

fn small_fraction(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let dens = (1..=1000u64).chain((4..=9).map(|e| 10u64.pow(e)));
    for d in dens {
        let num = (x * d as f64).round();
        if num / d as f64 == x && num.abs() < 1e15 {
            return Some(BigRational::new(BigInt::from(num as i64), BigInt::from(d)));
        }
    }
    None
}

impl ExactWeights {
    /// Integer mode for all-unit weights, rational mode when every weight
    /// is a fraction with a small denominator (`1..=1000` or a power of
    /// ten), floating point otherwise.
    pub fn from_f64(w: &[f64]) -> Self {
        if w.iter().all(|&x| x == 1.0) {
            return ExactWeights::Unit(w.len());
        }
        match w.iter().map(|&x| small_fraction(x)).collect::<Option<Vec<_>>>() {
            Some(r) => ExactWeights::Rational(r),
            None => ExactWeights::Float(w.to_vec()),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ExactWeights::Unit(k) => *k,
            ExactWeights::Rational(v) => v.len(),
            ExactWeights::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> ArithmeticMode {
        match self {
            ExactWeights::Unit(_) => ArithmeticMode::Integer,
            ExactWeights::Rational(_) => ArithmeticMode::Rational,
            ExactWeights::Float(_) => ArithmeticMode::Float,
        }
    }
}

/// A coefficient in one of the three arithmetic modes.
#[derive(Debug, Clone, PartialEq)]
pub enum ExactNumber {
    Integer(BigUint),
    Rational(BigRational),
    Float(f64),
}

impl ExactNumber {
    pub fn is_zero(&self) -> bool {
        match self {
            ExactNumber::Integer(x) => x.is_zero(),
            ExactNumber::Rational(x) => x.is_zero(),
            ExactNumber::Float(x) => *x == 0.0,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExactNumber::Integer(x) => x.to_f64().unwrap_or(f64::INFINITY),
            ExactNumber::Rational(x) => x.to_f64().unwrap_or(f64::NAN),
            ExactNumber::Float(x) => *x,
        }
    }

    /// Natural logarithm, accurate for values far beyond the `f64` range.
    pub fn ln(&self) -> f64 {
        match self {
            ExactNumber::Integer(x) => ln_biguint(x),
            ExactNumber::Rational(x) => {
                if x.is_zero() {
                    f64::NEG_INFINITY
                } else {
                    ln_biguint(x.numer().magnitude()) - ln_biguint(x.denom().magnitude())
                }
            }
            ExactNumber::Float(x) => x.ln(),
        }
    }

    pub fn as_integer(&self) -> Option<&BigUint> {
        match self {
            ExactNumber::Integer(x) => Some(x),
            _ => None,
        }
    }
}

pub(crate) fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

impl fmt::Display for ExactNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactNumber::Integer(x) => write!(f, "{x}"),
            ExactNumber::Rational(x) => write!(f, "{x}"),
            ExactNumber::Float(x) => write!(f, "{x:e}"),
        }
    }
}

/// Integers and rationals serialize as decimal strings (they routinely
/// exceed 64 bits), floats as numbers.
impl Serialize for ExactNumber {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExactNumber::Float(x) => s.serialize_f64(*x),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

/// Coefficients `P_0..=P_{n_max}` of every nonterminal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoeffTable {
    pub mode: ArithmeticMode,
    pub n_max: usize,
    pub axiom: usize,
    pub coeffs: Vec<Vec<ExactNumber>>,
}

impl CoeffTable {
    pub fn axiom_coeffs(&self) -> &[ExactNumber] {
        &self.coeffs[self.axiom]
    }

    pub fn get(&self, nonterminal: usize, n: usize) -> &ExactNumber {
        &self.coeffs[nonterminal][n]
    }
}

/// Counts of words with a given occurrence profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OccurrenceCount {
    pub n: usize,
    pub occ: Vec<u32>,
    #[serde(serialize_with = "as_decimal")]
    pub value: BigUint,
}

fn as_decimal<S: Serializer>(x: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

fn rules_of<E: Clone>(s: &Series<E>, m: usize, f: impl Fn(&E) -> ExactNumber) -> Vec<Vec<ExactNumber>> {
    (0..m).map(|j| s.rule(j).iter().map(&f).collect()).collect()
}

/// Weighted coefficients `P_n = sum_{|u| = n} w(u)` for `n <= n_max`, per
/// nonterminal, in the arithmetic selected by [`ExactWeights::from_f64`].
pub fn weighted_coeffs<T: Scalar>(g: &Grammar, w: &WeightVector<T>, n_max: usize) -> Result<CoeffTable, ExactError> {
    let w: Vec<f64> = w.as_slice().iter().map(|x| x.as_f64()).collect();
    weighted_coeffs_exact(g, &ExactWeights::from_f64(&w), n_max)
}

pub fn weighted_coeffs_exact(g: &Grammar, w: &ExactWeights, n_max: usize) -> Result<CoeffTable, ExactError> {
    if w.len() != g.k() {
        return Err(ExactError::DimensionMismatch {
            expected: g.k(),
            got: w.len(),
        });
    }
    if n_max > MAX_SIZE {
        return Err(ExactError::SizeCeiling {
            n: n_max,
            ceiling: MAX_SIZE,
        });
    }
    let c = Compiled::new(g)?;
    let m = g.num_nonterminals();
    let coeffs = match w {
        ExactWeights::Unit(k) => {
            let ring = WeightedRing {
                weights: vec![BigUint::one(); *k],
            };
            rules_of(&compute(&c, &ring, n_max), m, |x| ExactNumber::Integer(x.clone()))
        }
        ExactWeights::Rational(ws) => {
            let ring = WeightedRing { weights: ws.clone() };
            rules_of(&compute(&c, &ring, n_max), m, |x| ExactNumber::Rational(x.clone()))
        }
        ExactWeights::Float(ws) => {
            let ring = WeightedRing { weights: ws.clone() };
            rules_of(&compute(&c, &ring, n_max), m, |x| ExactNumber::Float(*x))
        }
    };
    Ok(CoeffTable {
        mode: w.mode(),
        n_max,
        axiom: g.axiom(),
        coeffs,
    })
}

/// Runs the engine over a caller-supplied semiring and returns the
/// axiom's coefficients `0..=n_max`.
pub fn axiom_series<S: Semiring>(g: &Grammar, ring: &S, n_max: usize) -> Result<Vec<S::Elem>, ExactError> {
    let c = Compiled::new(g)?;
    let mut s = compute(&c, ring, n_max);
    Ok(std::mem::take(&mut s.coef[g.axiom()]))
}

/// Number of words of size `n` with the given letter counts.
pub fn multivariate_coeffs(g: &Grammar, n: usize, profile: &[u32]) -> Result<OccurrenceCount, ExactError> {
    if profile.len() != g.k() {
        return Err(ExactError::DimensionMismatch {
            expected: g.k(),
            got: profile.len(),
        });
    }
    let sum: usize = profile.iter().map(|&x| x as usize).sum();
    if sum != n {
        return Err(ExactError::ProfileMismatch { sum, n });
    }
    let ring = ProfileRing {
        k: g.k(),
        cap: Some(profile.to_vec()),
    };
    let series = axiom_series(g, &ring, n)?;
    let value = series[n].get(profile).cloned().unwrap_or_default();
    Ok(OccurrenceCount {
        n,
        occ: profile.to_vec(),
        value,
    })
}

/// Every occurrence profile of size `n` with its word count, sorted by
/// profile.
pub fn occurrence_distribution(g: &Grammar, n: usize) -> Result<Vec<OccurrenceCount>, ExactError> {
    let ring = ProfileRing { k: g.k(), cap: None };
    let series = axiom_series(g, &ring, n)?;
    Ok(series[n]
        .iter()
        .map(|(p, v)| OccurrenceCount {
            n,
            occ: p.clone(),
            value: v.clone(),
        })
        .collect())
}

fn ratio_to_f64(num: &BigRational, den: &BigRational) -> f64 {
    (num / den).to_f64().unwrap_or(f64::NAN)
}

/// `(P_n, E_n[N_i])`: the total weight of size-`n` words and the expected
/// letter counts under the weighted distribution restricted to size `n`.
pub fn fixed_size_expectations(g: &Grammar, w: &ExactWeights, n: usize) -> Result<(ExactNumber, Vec<f64>), ExactError> {
    if w.len() != g.k() {
        return Err(ExactError::DimensionMismatch {
            expected: g.k(),
            got: w.len(),
        });
    }
    if n > MAX_SIZE {
        return Err(ExactError::SizeCeiling { n, ceiling: MAX_SIZE });
    }
    let big = |x: &BigUint| BigRational::from_integer(BigInt::from(x.clone()));
    match w {
        ExactWeights::Unit(k) => {
            let ring = DualRing {
                weights: vec![BigUint::one(); *k],
            };
            let (p, grad) = axiom_series(g, &ring, n)?.swap_remove(n);
            if p.is_zero() {
                return Err(ExactError::ZeroCoefficient(n));
            }
            let e = grad.iter().map(|x| ratio_to_f64(&big(x), &big(&p))).collect();
            Ok((ExactNumber::Integer(p), e))
        }
        ExactWeights::Rational(ws) => {
            let ring = DualRing { weights: ws.clone() };
            let (p, grad) = axiom_series(g, &ring, n)?.swap_remove(n);
            if p.is_zero() {
                return Err(ExactError::ZeroCoefficient(n));
            }
            let e = grad.iter().map(|x| ratio_to_f64(x, &p)).collect();
            Ok((ExactNumber::Rational(p), e))
        }
        ExactWeights::Float(ws) => {
            let ring = DualRing { weights: ws.clone() };
            let (p, grad) = axiom_series(g, &ring, n)?.swap_remove(n);
            if p == 0.0 {
                return Err(ExactError::ZeroCoefficient(n));
            }
            let e = grad.iter().map(|x| x / p).collect();
            Ok((ExactNumber::Float(p), e))
        }
    }
}

type Words = Rc<Vec<Vec<usize>>>;

struct Lister<'a> {
    c: &'a Compiled,
    s: &'a Series<BigUint>,
    memo: HashMap<(usize, usize), Words>,
}

impl Lister<'_> {
    fn words(&mut self, v: usize, n: usize) -> Words {
        if let Some(w) = self.memo.get(&(v, n)) {
            return w.clone();
        }
        let mut out: Vec<Vec<usize>> = Vec::new();
        if !self.s.coef[v][n].is_zero() {
            match &self.c.nodes[v] {
                Node::Eps => out.push(vec![]),
                Node::Atom(l) => out.push(vec![*l]),
                Node::Rule(r) => out.extend(self.words(*r, n).iter().cloned()),
                Node::Union(cs) => {
                    for &ch in cs {
                        out.extend(self.words(ch, n).iter().cloned());
                    }
                }
                Node::Prod(a, b) => {
                    let (a, b) = (*a, *b);
                    for i in self.s.support[a].clone().into_iter().take_while(|&i| i <= n) {
                        if self.s.coef[b][n - i].is_zero() {
                            continue;
                        }
                        let (xs, ys) = (self.words(a, i), self.words(b, n - i));
                        for x in xs.iter() {
                            for y in ys.iter() {
                                out.push(x.iter().chain(y).copied().collect());
                            }
                        }
                    }
                }
                Node::Seq(a) => {
                    if n == 0 {
                        out.push(vec![]);
                    }
                    let a = *a;
                    for i in self.s.support[a].clone().into_iter().take_while(|&i| i <= n) {
                        if i == 0 || self.s.coef[v][n - i].is_zero() {
                            continue;
                        }
                        let (xs, ys) = (self.words(a, i), self.words(v, n - i));
                        for x in xs.iter() {
                            for y in ys.iter() {
                                out.push(x.iter().chain(y).copied().collect());
                            }
                        }
                    }
                }
            }
        }
        let out = Rc::new(out);
        self.memo.insert((v, n), out.clone());
        out
    }
}

/// All words of size `n`, without duplicates, in lexicographic order of
/// letter indices.
pub fn enumerate_words(g: &Grammar, n: usize) -> Result<Vec<Vec<usize>>, ExactError> {
    let c = Compiled::new(g)?;
    let ring = WeightedRing {
        weights: vec![BigUint::one(); g.k()],
    };
    let s = compute(&c, &ring, n);
    let count = &s.coef[g.axiom()][n];
    if *count > BigUint::from(MAX_WORDS) {
        return Err(ExactError::TooMany {
            count: count.to_string(),
            n,
        });
    }
    let mut lister = Lister {
        c: &c,
        s: &s,
        memo: HashMap::new(),
    };
    let words = lister.words(g.axiom(), n);
    let set: BTreeSet<Vec<usize>> = words.iter().cloned().collect();
    Ok(set.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar;

    const BINARY: &str = "S = 'a' S | 'b' S | _;";
    const DYCK: &str = "D = _ | 'a' D 'b' D;";

    fn unit(src: &str, n: usize) -> Vec<u64> {
        let g = parse_grammar(src).unwrap();
        weighted_coeffs_exact(&g, &ExactWeights::Unit(g.k()), n)
            .unwrap()
            .axiom_coeffs()
            .iter()
            .map(|x| x.as_integer().unwrap().to_u64().unwrap())
            .collect()
    }

    #[test]
    fn binary_powers_of_two() {
        assert_eq!(unit(BINARY, 10), (0..=10).map(|n| 1u64 << n).collect::<Vec<_>>());
    }

    #[test]
    fn dyck_catalan() {
        assert_eq!(unit(DYCK, 8), vec![1, 0, 1, 0, 2, 0, 5, 0, 14]);
    }

    #[test]
    fn epsilon_grammar() {
        assert_eq!(unit("S = _;", 3), vec![1, 0, 0, 0]);
    }

    #[test]
    fn sequences_and_left_recursion() {
        // Compositions of n into parts 1 and 2: Fibonacci.
        assert_eq!(unit("S = ('a' | 'b' 'b')*;", 7), vec![1, 1, 2, 3, 5, 8, 13, 21]);
        assert_eq!(unit("S = S 'a' | 'b';", 4), vec![0, 1, 1, 1, 1]);
        // Nested sequences: compositions of n, 2^(n-1).
        assert_eq!(unit("S = ('a' 'a'*)*;", 5), vec![1, 1, 2, 4, 8, 16]);
    }

    #[test]
    fn mode_selection() {
        assert_eq!(ExactWeights::from_f64(&[1.0, 1.0]).mode(), ArithmeticMode::Integer);
        assert_eq!(ExactWeights::from_f64(&[2.0, 0.5]).mode(), ArithmeticMode::Rational);
        assert_eq!(ExactWeights::from_f64(&[0.1, 1.0]).mode(), ArithmeticMode::Rational);
        assert_eq!(ExactWeights::from_f64(&[std::f64::consts::PI]).mode(), ArithmeticMode::Float);
    }

    #[test]
    fn rational_weights() {
        let g = parse_grammar(BINARY).unwrap();
        let t = weighted_coeffs(&g, &WeightVector::new(vec![2.0, 1.0]).unwrap(), 4).unwrap();
        assert_eq!(t.mode, ArithmeticMode::Rational);
        let got: Vec<f64> = t.axiom_coeffs().iter().map(ExactNumber::to_f64).collect();
        assert_eq!(got, vec![1.0, 3.0, 9.0, 27.0, 81.0]);
    }

    #[test]
    fn profiles() {
        let b = parse_grammar(BINARY).unwrap();
        assert_eq!(multivariate_coeffs(&b, 4, &[2, 2]).unwrap().value, BigUint::from(6u32));
        let d = parse_grammar(DYCK).unwrap();
        assert_eq!(multivariate_coeffs(&d, 4, &[2, 2]).unwrap().value, BigUint::from(2u32));
        assert!(multivariate_coeffs(&d, 4, &[3, 1]).unwrap().value.is_zero());
        assert_eq!(
            multivariate_coeffs(&d, 4, &[3, 2]).unwrap_err(),
            ExactError::ProfileMismatch { sum: 5, n: 4 }
        );
        let dist = occurrence_distribution(&b, 3).unwrap();
        let counts: Vec<u32> = dist.iter().map(|o| o.value.to_u32().unwrap()).collect();
        assert_eq!(counts, vec![1, 3, 3, 1]);
    }

    #[test]
    fn fixed_size_letter_means() {
        let g = parse_grammar(BINARY).unwrap();
        let (_, e) = fixed_size_expectations(&g, &ExactWeights::from_f64(&[2.0, 1.0]), 3).unwrap();
        assert!((e[0] - 2.0).abs() < 1e-15);
        let (_, e) = fixed_size_expectations(&g, &ExactWeights::Float(vec![2.0, 1.0]), 3).unwrap();
        assert!((e[0] - 2.0).abs() < 1e-12);
        let d = parse_grammar(DYCK).unwrap();
        assert_eq!(
            fixed_size_expectations(&d, &ExactWeights::Unit(2), 3).unwrap_err(),
            ExactError::ZeroCoefficient(3)
        );
    }

    #[test]
    fn listing() {
        let b = parse_grammar(BINARY).unwrap();
        assert_eq!(enumerate_words(&b, 2).unwrap(), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        let d = parse_grammar(DYCK).unwrap();
        assert_eq!(enumerate_words(&d, 4).unwrap(), vec![vec![0, 0, 1, 1], vec![0, 1, 0, 1]]);
        assert!(enumerate_words(&d, 3).unwrap().is_empty());
        assert!(matches!(enumerate_words(&b, 17), Err(ExactError::TooMany { .. })));
    }

    #[test]
    fn ambiguity_shows_in_listing() {
        // Two derivations of "a": the count sees both, the listing one.
        let g = parse_grammar("S = 'a' | T; T = 'a';").unwrap();
        assert_eq!(unit("S = 'a' | T; T = 'a';", 1), vec![0, 2]);
        assert_eq!(enumerate_words(&g, 1).unwrap().len(), 1);
    }

    #[test]
    fn big_logarithms() {
        let x = BigUint::one() << 5000u32;
        assert!((ln_biguint(&x) - 5000.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }
}
