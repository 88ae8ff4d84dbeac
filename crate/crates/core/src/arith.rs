//! Shared exact-arithmetic helpers: rational parsing and printing, integer
//! factorisation for small inputs, and overflow-free logarithms of big values.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("invalid rational literal `{0}`")]
    BadRational(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("integer {0} is too large to factor")]
    FactorLimit(BigUint),
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"n"` or `"n/d"` (optional sign, surrounding whitespace ignored).
pub fn parse_rational(s: &str) -> Result<Rational, ArithError> {
    let t = s.trim();
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| ArithError::BadRational(s.to_string()))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| ArithError::BadRational(s.to_string()))?;
    if den.is_zero() {
        return Err(ArithError::ZeroDenominator(s.to_string()));
    }
    Ok(Rational::new(num, den))
}

/// Canonical text form: `"n"` for integers, `"n/d"` otherwise.
pub fn fmt_rational(x: &Rational) -> String {
    x.to_string()
}

/// Natural log of `|n|` without converting `n` to a float first.
pub fn ln_abs_int(n: &BigInt) -> f64 {
    let m = n.magnitude();
    let bits = m.bits();
    if bits <= 1000 {
        return m.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (m >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Natural log of `|x|`; `-inf` for zero.
pub fn ln_abs(x: &Rational) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    ln_abs_int(x.numer()) - ln_abs_int(x.denom())
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        if x.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Bits needed to write `x` as a reduced fraction.
pub fn bit_size(x: &Rational) -> u64 {
    x.numer().bits() + x.denom().bits()
}

/// lcm of the denominators of `xs` (1 for an empty list).
pub fn common_denominator<'a>(xs: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    xs.into_iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % q == 0 {
            return n == q;
        }
    }
    miller_rabin(&BigUint::from(n))
}

const SMALL_BASES: [u32; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

// Deterministic below 3.3e24; a strong probable-prime test beyond that.
fn miller_rabin(n: &BigUint) -> bool {
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for b in SMALL_BASES {
        let b = BigUint::from(b);
        if *n == b {
            return true;
        }
        if (n % &b).is_zero() {
            return false;
        }
    }
    let n1 = n - &one;
    let s = n1.trailing_zeros().unwrap_or(0);
    let d = &n1 >> s;
    'bases: for b in SMALL_BASES {
        let mut x = BigUint::from(b).modpow(&d, n);
        if x == one || x == n1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

fn pollard_brent(n: &BigUint, seed: u32) -> Option<BigUint> {
    let one = BigUint::one();
    let c = BigUint::from(seed);
    let f = |x: &BigUint| (x * x + &c) % n;
    let mut y = BigUint::from(2u32 + seed);
    let mut r: u64 = 1;
    let mut q = BigUint::one();
    let mut g = BigUint::one();
    let mut x = y.clone();
    let mut ys = y.clone();
    let m = 64u64;
    let mut budget: u64 = 1 << 22;
    while g == one {
        x = y.clone();
        for _ in 0..r {
            y = f(&y);
        }
        let mut k = 0;
        while k < r && g == one {
            ys = y.clone();
            for _ in 0..m.min(r - k) {
                y = f(&y);
                let diff = if x > y { &x - &y } else { &y - &x };
                q = (q * diff) % n;
            }
            g = q.gcd(n);
            k += m;
        }
        r *= 2;
        budget = budget.checked_sub(r)?;
    }
    if &g == n {
        loop {
            ys = f(&ys);
            let diff = if x > ys { &x - &ys } else { &ys - &x };
            g = diff.gcd(n);
            if g != one {
                break;
            }
        }
    }
    (&g != n).then_some(g)
}

fn split_into(n: BigUint, out: &mut Vec<BigUint>) -> Result<(), ArithError> {
    if n.is_one() {
        return Ok(());
    }
    if miller_rabin(&n) {
        out.push(n);
        return Ok(());
    }
    if n.bits() > 160 {
        return Err(ArithError::FactorLimit(n));
    }
    for seed in 1..20u32 {
        if let Some(f) = pollard_brent(&n, seed) {
            let rest = &n / &f;
            split_into(f, out)?;
            return split_into(rest, out);
        }
    }
    Err(ArithError::FactorLimit(n))
}

/// Prime factorisation `[(q, k), ...]` in increasing order of `q`.
pub fn factorize(n: &BigUint) -> Result<Vec<(BigUint, u32)>, ArithError> {
    let mut n = n.clone();
    let mut primes: Vec<BigUint> = Vec::new();
    if n.is_zero() {
        return Ok(Vec::new());
    }
    let mut q = 2u32;
    while q < 10_000 && n > BigUint::one() {
        let qb = BigUint::from(q);
        while (&n % &qb).is_zero() {
            n /= &qb;
            primes.push(qb.clone());
        }
        q += if q == 2 { 1 } else { 2 };
    }
    split_into(n, &mut primes)?;
    primes.sort();
    let mut out: Vec<(BigUint, u32)> = Vec::new();
    for p in primes {
        match out.last_mut() {
            Some((q, k)) if *q == p => *k += 1,
            _ => out.push((p, 1)),
        }
    }
    Ok(out)
}

/// All positive divisors of `n`, unordered.
pub fn divisors(n: &BigUint) -> Result<Vec<BigUint>, ArithError> {
    let mut divs = vec![BigUint::one()];
    for (q, k) in factorize(n)? {
        let mut next = Vec::with_capacity(divs.len() * (k as usize + 1));
        for d in &divs {
            let mut acc = d.clone();
            next.push(acc.clone());
            for _ in 0..k {
                acc *= &q;
                next.push(acc.clone());
            }
        }
        divs = next;
    }
    Ok(divs)
}

/// Inverse of `a` modulo `m` for coprime `a`, `m`; result in `[0, m)`.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.extended_gcd(m);
    if !e.gcd.is_one() {
        return None;
    }
    Some(e.x.mod_floor(m))
}

/// Serde adapters writing rationals as `"n/d"` strings.
pub mod serde_rational {
    use super::{fmt_rational, parse_rational, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(D::Error::custom)
    }
}

/// As [`serde_rational`], with `null` for `None`.
pub mod serde_opt_rational {
    use super::{fmt_rational, parse_rational, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(x) => s.serialize_some(&fmt_rational(x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| parse_rational(&s).map_err(D::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        assert_eq!(parse_rational("1/2").unwrap(), rat(1, 2));
        assert_eq!(parse_rational(" -6/4 ").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert_eq!(fmt_rational(&rat(-3, 1)), "-3");
        assert_eq!(fmt_rational(&rat(2, 6)), "1/3");
    }

    #[test]
    fn factor_small_and_semiprime() {
        let f = factorize(&BigUint::from(360u32)).unwrap();
        let f: Vec<(u32, u32)> = f.into_iter().map(|(p, k)| (p.to_u32().unwrap(), k)).collect();
        assert_eq!(f, vec![(2, 3), (3, 2), (5, 1)]);
        let n = BigUint::from(1_000_003u64) * BigUint::from(998_244_353u64);
        let f = factorize(&n).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(divisors(&BigUint::from(12u32)).unwrap().len(), 6);
    }

    #[test]
    fn primes() {
        let ps: Vec<u64> = (0..30).filter(|&n| is_prime_u64(n)).collect();
        assert_eq!(ps, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert!(is_prime_u64(1_000_000_007));
        assert!(!is_prime_u64(1_000_000_007 * 3));
    }

    #[test]
    fn big_logs() {
        let big = BigInt::from(3u32).pow(2000);
        let l = ln_abs_int(&big);
        assert!((l - 2000.0 * 3f64.ln()).abs() < 1e-9 * l);
        assert!((ln_abs(&rat(1, 8)) + 8f64.ln()).abs() < 1e-15);
    }
}
