//! Additive `p`-adic valuations on the rationals.
//!
//! `v(x)` is carried as an exact rational, with `+∞` as a separate variant
//! for `v(0)`. `|x|_p = p^(-v(x))`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::arith::{fmt_rational, parse_rational, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlaceError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("ramification index must be at least 1")]
    BadRamification,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(Rational),
    Infinite,
}

impl Valuation {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Valuation::Infinite)
    }

    /// Multiplies by a nonnegative integer; `0 · ∞ = 0` (the empty product).
    pub fn scale(&self, n: usize) -> Valuation {
        match self {
            Valuation::Finite(v) => Valuation::Finite(v * Rational::from_integer(n.into())),
            Valuation::Infinite if n == 0 => Valuation::Finite(Rational::zero()),
            Valuation::Infinite => Valuation::Infinite,
        }
    }

    pub fn neg_finite(&self) -> Option<Rational> {
        self.finite().map(|v| -v)
    }
}

impl From<Rational> for Valuation {
    fn from(v: Rational) -> Self {
        Valuation::Finite(v)
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::Infinite, Valuation::Infinite) => Ordering::Equal,
            (Valuation::Infinite, _) => Ordering::Greater,
            (_, Valuation::Infinite) => Ordering::Less,
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
        }
    }
}

impl Add for &Valuation {
    type Output = Valuation;

    fn add(self, rhs: &Valuation) -> Valuation {
        match (self, rhs) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinite,
        }
    }
}

impl Add for Valuation {
    type Output = Valuation;

    fn add(self, rhs: Valuation) -> Valuation {
        &self + &rhs
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{}", fmt_rational(v)),
            Valuation::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Valuation {
    type Err = crate::arith::ArithError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "+inf" | "∞" => Ok(Valuation::Infinite),
            t => parse_rational(t).map(Valuation::Finite),
        }
    }
}

impl Serialize for Valuation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Valuation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite place of a number field, seen through the residue prime `p`
/// and the ramification index `e` over ℚ. The normalized value group is
/// `(1/e)ℤ` in valuation units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Place {
    p: u64,
    e: u64,
}

impl Place {
    pub fn new(p: u64, e: u64) -> Result<Self, PlaceError> {
        if !crate::arith::is_prime_u64(p) {
            return Err(PlaceError::NotPrime(p));
        }
        if e == 0 {
            return Err(PlaceError::BadRamification);
        }
        Ok(Place { p, e })
    }

    /// The place of ℚ over `p`.
    pub fn rational(p: u64) -> Result<Self, PlaceError> {
        Place::new(p, 1)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn e(&self) -> u64 {
        self.e
    }

    pub fn with_ramification(&self, e: u64) -> Result<Self, PlaceError> {
        Place::new(self.p, e)
    }

    pub fn val(&self, x: &Rational) -> Valuation {
        val(x, self.p)
    }

    pub fn val_int(&self, n: &BigInt) -> Option<u64> {
        val_int(n, self.p)
    }

    pub fn in_value_group(&self, sigma: &Rational) -> bool {
        in_value_group(sigma, self.e)
    }

    pub fn ln_p(&self) -> f64 {
        (self.p as f64).ln()
    }
}

/// `v_p(n)` for a nonzero integer; `None` for zero.
pub fn val_int(n: &BigInt, p: u64) -> Option<u64> {
    if n.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut n = n.clone();
    let mut k = 0;
    // Strip large powers first so huge valuations stay cheap.
    let mut chunk = pb.clone();
    let mut chunk_k = 1u64;
    loop {
        let (q, r) = n.div_rem(&chunk);
        if r.is_zero() {
            n = q;
            k += chunk_k;
            if chunk_k < 1 << 20 {
                chunk = &chunk * &chunk;
                chunk_k *= 2;
            }
        } else if chunk_k > 1 {
            chunk = pb.clone();
            chunk_k = 1;
        } else {
            break;
        }
    }
    Some(k)
}

/// Additive `p`-adic valuation of a rational. `p` is assumed prime; callers
/// that take user input go through [`Place::new`].
pub fn val(x: &Rational, p: u64) -> Valuation {
    match (val_int(x.numer(), p), val_int(x.denom(), p)) {
        (None, _) => Valuation::Infinite,
        (Some(a), Some(b)) => {
            let a = Rational::from_integer(a.into());
            let b = Rational::from_integer(b.into());
            Valuation::Finite(a - b)
        }
        (Some(_), None) => unreachable!("denominator of a rational is nonzero"),
    }
}

/// `σ ∈ (1/e)ℤ`, i.e. `σ·e` is an integer.
pub fn in_value_group(sigma: &Rational, e: u64) -> bool {
    (sigma * Rational::from_integer(e.into())).is_integer()
}

/// `p^(-v)` as a float, for display.
pub fn abs_from_val(v: &Valuation, p: u64) -> f64 {
    match v {
        Valuation::Infinite => 0.0,
        Valuation::Finite(v) => (p as f64).powf(-v.to_f64().unwrap_or(f64::NAN)),
    }
}
