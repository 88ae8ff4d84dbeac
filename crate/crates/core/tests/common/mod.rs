#![allow(dead_code)]

use nadyn::arith::Rational;
use nadyn::polynomial::RationalPoly;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use proptest::prelude::*;

pub const PRIMES: [u64; 4] = [2, 3, 5, 7];

pub fn prime() -> impl Strategy<Value = u64> {
    proptest::sample::select(PRIMES.to_vec())
}

pub fn pow_p(p: u64, k: i32) -> Rational {
    let base = Rational::from_integer(BigInt::from(p));
    if k >= 0 {
        num_traits::pow(base, k as usize)
    } else {
        Rational::one() / num_traits::pow(base, (-k) as usize)
    }
}

/// Raw material for a rational with interesting valuation at any small
/// prime: `(n/d)·p^k`.
pub type RatSeed = (i64, i64, i32);

pub fn rat_seed() -> impl Strategy<Value = RatSeed> {
    (-40i64..=40, 1i64..=30, -4i32..=4)
}

pub fn nonzero_seed() -> impl Strategy<Value = RatSeed> {
    rat_seed().prop_filter("nonzero", |s| s.0 != 0)
}

pub fn from_seed(p: u64, s: RatSeed) -> Rational {
    Rational::new(s.0.into(), s.1.into()) * pow_p(p, s.2)
}

pub fn small_rational() -> impl Strategy<Value = Rational> {
    (-60i64..=60, 1i64..=40).prop_map(|(n, d)| Rational::new(n.into(), d.into()))
}

pub fn nonzero_rational() -> impl Strategy<Value = Rational> {
    small_rational().prop_filter("nonzero", |x| !x.is_zero())
}

/// Coefficient seeds of a polynomial of degree exactly `deg` (leading
/// seed nonzero).
pub fn poly_seeds(deg: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<RatSeed>> {
    deg.prop_flat_map(|d| {
        (proptest::collection::vec(rat_seed(), d), nonzero_seed()).prop_map(|(mut v, lead)| {
            v.push(lead);
            v
        })
    })
}

pub fn poly_from_seeds(p: u64, seeds: &[RatSeed]) -> RationalPoly {
    RationalPoly::new(seeds.iter().map(|s| from_seed(p, *s)).collect())
}

/// Small-coefficient polynomial with exact degree in `deg`.
pub fn small_poly(deg: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = RationalPoly> {
    deg.prop_flat_map(|d| {
        (
            proptest::collection::vec(small_rational(), d),
            nonzero_rational(),
        )
            .prop_map(|(mut v, lead)| {
                v.push(lead);
                RationalPoly::new(v)
            })
    })
}

/// Radius exponent with a small denominator.
pub fn rho() -> impl Strategy<Value = Rational> {
    (-12i64..=12, 1i64..=4).prop_map(|(n, d)| Rational::new(n.into(), d.into()))
}
