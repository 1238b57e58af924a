//! Exact summability exponents.
//!
//! Exponents live in `[1, ∞]` and are stored as arbitrary-precision
//! rationals with an explicit infinity sentinel, so reciprocals, tail sums
//! and conjugates are exact and equality checks carry no tolerance.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExponentError {
    #[error("exponent `{0}` is below 1; summability exponents live in [1, inf]")]
    BelowOne(String),
    #[error("cannot parse `{0}` as an exponent; expected an integer, a fraction `a/b`, or `inf`")]
    Parse(String),
    #[error("fraction `{0}` has a zero denominator")]
    ZeroDenominator(String),
    #[error("exponent vector must have at least one entry")]
    Empty,
    #[error("index k={k} out of range for a vector of length {len} (k is 1-based)")]
    IndexOutOfRange { k: usize, len: usize },
    #[error("exponent vectors have mismatched lengths {0} and {1}")]
    LengthMismatch(usize, usize),
}

/// A summability exponent in `[1, ∞]`. `reciprocal(∞) = 0` exactly.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Exponent {
    Finite(BigRational),
    Infinity,
}

impl Exponent {
    /// Builds a finite exponent, rejecting values below 1.
    pub fn new(value: BigRational) -> Result<Self, ExponentError> {
        if value < BigRational::one() {
            return Err(ExponentError::BelowOne(value.to_string()));
        }
        Ok(Exponent::Finite(value))
    }

    pub fn from_integer(n: u64) -> Result<Self, ExponentError> {
        Self::new(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(numer: i64, denom: i64) -> Result<Self, ExponentError> {
        if denom == 0 {
            return Err(ExponentError::ZeroDenominator(format!("{numer}/{denom}")));
        }
        Self::new(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn infinity() -> Self {
        Exponent::Infinity
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    /// `1/p` as an exact rational; zero for `p = ∞`.
    pub fn reciprocal(&self) -> BigRational {
        match self {
            Exponent::Finite(v) => v.recip(),
            Exponent::Infinity => BigRational::zero(),
        }
    }

    /// The Hölder conjugate `p*` with `1/p + 1/p* = 1`; `1* = ∞` and `∞* = 1`.
    pub fn conjugate(&self) -> Exponent {
        match self {
            Exponent::Infinity => Exponent::Finite(BigRational::one()),
            Exponent::Finite(v) => {
                if v.is_one() {
                    Exponent::Infinity
                } else {
                    // p/(p-1) >= 1 whenever p > 1.
                    Exponent::Finite(v / (v - BigRational::one()))
                }
            }
        }
    }

    /// Builds the exponent whose reciprocal is `recip`; `recip = 0` gives ∞.
    /// Fails when `recip` is negative or exceeds 1 (exponent below 1).
    pub fn from_reciprocal(recip: &BigRational) -> Result<Self, ExponentError> {
        if recip.is_zero() {
            Ok(Exponent::Infinity)
        } else if recip.is_negative() {
            Err(ExponentError::BelowOne(format!("1/({recip})")))
        } else {
            Self::new(recip.recip())
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Exponent::Finite(v) => v.to_f64().unwrap_or(f64::INFINITY),
            Exponent::Infinity => f64::INFINITY,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Exponent::Finite(v) => Some(v),
            Exponent::Infinity => None,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(v) => write!(f, "{v}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = ExponentError;

    /// Accepts `inf`, an integer like `4`, or a fraction like `12/5`.
    /// Decimals are rejected so exactness is preserved end to end.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "inf" {
            return Ok(Exponent::Infinity);
        }
        let (numer, denom) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), Some(d.trim())),
            None => (s, None),
        };
        let numer: BigInt = numer
            .parse()
            .map_err(|_| ExponentError::Parse(s.to_string()))?;
        let denom: BigInt = match denom {
            Some(d) => d.parse().map_err(|_| ExponentError::Parse(s.to_string()))?,
            None => BigInt::one(),
        };
        if denom.is_zero() {
            return Err(ExponentError::ZeroDenominator(s.to_string()));
        }
        Exponent::new(BigRational::new(numer, denom))
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// An ordered vector of exponents `(p_1, …, p_m)`, `m ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExponentVector {
    entries: Vec<Exponent>,
}

impl ExponentVector {
    pub fn new(entries: Vec<Exponent>) -> Result<Self, ExponentError> {
        if entries.is_empty() {
            return Err(ExponentError::Empty);
        }
        Ok(ExponentVector { entries })
    }

    /// The constant vector `(p, …, p)` of length `m`.
    pub fn constant(p: Exponent, m: usize) -> Result<Self, ExponentError> {
        Self::new(vec![p; m.max(1).min(m)])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn entries(&self) -> &[Exponent] {
        &self.entries
    }

    /// 1-based access, matching the index convention used throughout.
    pub fn get(&self, k: usize) -> Result<&Exponent, ExponentError> {
        if k == 0 || k > self.entries.len() {
            return Err(ExponentError::IndexOutOfRange {
                k,
                len: self.entries.len(),
            });
        }
        Ok(&self.entries[k - 1])
    }

    /// Tail sum `|1/p|_{≥k} = Σ_{i=k}^{m} 1/p_i`, exact. `k` is 1-based.
    pub fn tail_sum(&self, k: usize) -> Result<BigRational, ExponentError> {
        if k == 0 || k > self.entries.len() {
            return Err(ExponentError::IndexOutOfRange {
                k,
                len: self.entries.len(),
            });
        }
        Ok(self.entries[k - 1..]
            .iter()
            .map(Exponent::reciprocal)
            .sum())
    }

    /// `|1/p| = tail_sum(1)`.
    pub fn reciprocal_sum(&self) -> BigRational {
        self.tail_sum(1).expect("vectors are nonempty")
    }

    /// Componentwise `self_k ≥ other_k`; errors on length mismatch.
    pub fn dominates(&self, other: &ExponentVector) -> Result<bool, ExponentError> {
        if self.len() != other.len() {
            return Err(ExponentError::LengthMismatch(self.len(), other.len()));
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .all(|(a, b)| a.reciprocal() <= b.reciprocal()))
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Exponent> {
        self.entries.iter()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.entries.iter().map(Exponent::as_f64).collect()
    }

    /// Renders as `"5, 3"`, the format used by schedule tables.
    pub fn display_list(&self) -> String {
        self.entries
            .iter()
            .map(Exponent::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_list())
    }
}

impl FromStr for ExponentVector {
    type Err = ExponentError;

    /// Parses a comma-separated list of exponents, e.g. `3,2` or `7/2,inf`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let entries = s
            .split(',')
            .map(|part| part.parse())
            .collect::<Result<Vec<Exponent>, _>>()?;
        ExponentVector::new(entries)
    }
}

impl Serialize for ExponentVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.entries.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExponentVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let entries = Vec::<Exponent>::deserialize(deserializer)?;
        ExponentVector::new(entries).map_err(D::Error::custom)
    }
}

/// Convenience for tests and fixtures: parse or panic.
pub fn exp(s: &str) -> Exponent {
    s.parse().expect("valid exponent literal")
}

/// Convenience for tests and fixtures: parse or panic.
pub fn expvec(s: &str) -> ExponentVector {
    s.parse().expect("valid exponent vector literal")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["1", "2", "12/5", "inf", "1000000007/3"] {
            let e: Exponent = s.parse().unwrap();
            assert_eq!(e.to_string(), s);
        }
        // Non-reduced fractions normalize.
        assert_eq!(exp("10/4").to_string(), "5/2");
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(matches!(
            "0.5".parse::<Exponent>(),
            Err(ExponentError::Parse(_))
        ));
        assert!(matches!(
            "4/0".parse::<Exponent>(),
            Err(ExponentError::ZeroDenominator(_))
        ));
        assert!(matches!(
            "1/2".parse::<Exponent>(),
            Err(ExponentError::BelowOne(_))
        ));
        assert!(matches!(
            "-3".parse::<Exponent>(),
            Err(ExponentError::BelowOne(_))
        ));
        assert!("".parse::<Exponent>().is_err());
        assert!("infinity".parse::<Exponent>().is_err());
    }

    #[test]
    fn reciprocal_of_infinity_is_exactly_zero() {
        assert!(Exponent::infinity().reciprocal().is_zero());
    }

    #[test]
    fn conjugates() {
        assert_eq!(exp("1").conjugate(), Exponent::Infinity);
        assert_eq!(exp("inf").conjugate(), exp("1"));
        assert_eq!(exp("2").conjugate(), exp("2"));
        assert_eq!(exp("4").conjugate(), exp("4/3"));
        assert_eq!(exp("12/5").conjugate(), exp("12/7"));
        // Involution.
        for s in ["1", "3/2", "2", "17/5", "inf"] {
            assert_eq!(exp(s).conjugate().conjugate(), exp(s));
        }
    }

    #[test]
    fn tail_sums() {
        assert_eq!(expvec("2,2,1").tail_sum(2).unwrap(), rat(3, 2));
        assert_eq!(expvec("inf,inf").tail_sum(1).unwrap(), rat(0, 1));
        assert_eq!(expvec("3,2").tail_sum(1).unwrap(), rat(5, 6));
        assert!(matches!(
            expvec("3,2").tail_sum(0),
            Err(ExponentError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            expvec("3,2").tail_sum(3),
            Err(ExponentError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn vector_parsing() {
        assert_eq!(expvec("3,2").len(), 2);
        assert_eq!(expvec("7/2, inf").entries()[1], Exponent::Infinity);
        assert!("".parse::<ExponentVector>().is_err());
        assert!("3,,2".parse::<ExponentVector>().is_err());
    }

    #[test]
    fn dominance_is_componentwise() {
        assert!(expvec("5,2").dominates(&expvec("3,2")).unwrap());
        assert!(!expvec("5,2").dominates(&expvec("3,3")).unwrap());
        assert!(expvec("inf,inf").dominates(&expvec("9,9")).unwrap());
        assert!(matches!(
            expvec("5,2").dominates(&expvec("3,2,1")),
            Err(ExponentError::LengthMismatch(2, 3))
        ));
    }

    #[test]
    fn serde_uses_fraction_strings() {
        let v = expvec("4,3,12/5");
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"["4","3","12/5"]"#);
        let back: ExponentVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        let inf = Exponent::infinity();
        assert_eq!(serde_json::to_string(&inf).unwrap(), r#""inf""#);
    }
}
