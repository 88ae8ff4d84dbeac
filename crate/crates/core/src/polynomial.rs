//! Dense univariate polynomials with exact rational coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::arith::{common_denominator, divisors, fmt_rational, ArithError, Rational};

/// Largest iterate degree [`RationalPoly::iterate`] builds by default.
pub const DEFAULT_DEGREE_CAP: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("iterate degree {degree}^{steps} exceeds the degree cap {cap}")]
    DegreeCap { degree: usize, steps: u32, cap: u64 },
    #[error("every rational is fixed by the identity map")]
    IdentityMap,
    #[error("polynomial must have degree at least {0}")]
    DegreeTooSmall(usize),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// `a_0 + a_1 X + ... + a_d X^d`, stored low degree first with no trailing
/// zeros. The zero polynomial has an empty coefficient list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RationalPoly {
    coeffs: Vec<Rational>,
}

impl RationalPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        RationalPoly { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| crate::arith::int(c)).collect())
    }

    pub fn zero() -> Self {
        RationalPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    /// The identity map `X`.
    pub fn x() -> Self {
        Self::new(vec![Rational::zero(), Rational::one()])
    }

    /// `X - b`.
    pub fn linear(b: &Rational) -> Self {
        Self::new(vec![-b.clone(), Rational::one()])
    }

    pub fn monomial(c: Rational, k: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Rational {
        self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn leading(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    /// Degree, failing when it is below `min`.
    pub fn degree_at_least(&self, min: usize) -> Result<usize, PolyError> {
        match self.degree() {
            Some(d) if d >= min => Ok(d),
            _ => Err(PolyError::DegreeTooSmall(min)),
        }
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &RationalPoly) -> Self {
        self.coeffs.iter().rev().fold(Self::zero(), |acc, c| {
            &(&acc * inner) + &Self::constant(c.clone())
        })
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Rational::from_integer(i.into()))
                .collect(),
        )
    }

    /// Coefficients `c_0..c_d` of the expansion `P(X) = Σ c_n (X - a)^n`,
    /// i.e. `c_n = P^(n)(a)/n!`, by repeated synthetic division.
    pub fn taylor_coefficients(&self, a: &Rational) -> Vec<Rational> {
        let mut b = self.coeffs.clone();
        let n = b.len();
        if a.is_zero() {
            return b;
        }
        for k in 0..n.saturating_sub(1) {
            for j in (k..n - 1).rev() {
                let t = a * &b[j + 1];
                b[j] += t;
            }
        }
        b
    }

    /// `φ^m`, the `m`-fold composite; `φ^0 = X`.
    pub fn iterate(&self, m: u32) -> Result<Self, PolyError> {
        self.iterate_capped(m, DEFAULT_DEGREE_CAP)
    }

    pub fn iterate_capped(&self, m: u32, cap: u64) -> Result<Self, PolyError> {
        let d = self.degree().unwrap_or(0);
        let total = (d as u64).checked_pow(m);
        if total.map_or(true, |t| t > cap) {
            return Err(PolyError::DegreeCap {
                degree: d,
                steps: m,
                cap,
            });
        }
        let mut acc = Self::x();
        for _ in 0..m {
            acc = self.compose(&acc);
        }
        if d >= 2 {
            let lc = self.leading().expect("nonzero");
            let exp = (d.pow(m) - 1) / (d - 1);
            debug_assert_eq!(acc.leading(), Some(&num_traits::pow(lc.clone(), exp)));
        }
        Ok(acc)
    }

    /// Rational solutions of `φ(x) = x`, sorted ascending.
    pub fn rational_fixed_points(&self) -> Result<Vec<Rational>, PolyError> {
        let shifted = self - &Self::x();
        if shifted.is_zero() {
            return Err(PolyError::IdentityMap);
        }
        shifted.rational_roots()
    }

    /// All rational roots (without multiplicity), via the rational root
    /// theorem on the denominator-cleared integer polynomial.
    pub fn rational_roots(&self) -> Result<Vec<Rational>, PolyError> {
        let den = common_denominator(&self.coeffs);
        let ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| (c * Rational::from_integer(den.clone())).to_integer())
            .collect();
        let mut roots = Vec::new();
        let low = ints.iter().position(|c| !c.is_zero());
        let Some(low) = low else {
            return Ok(roots);
        };
        if low > 0 {
            roots.push(Rational::zero());
        }
        let ints = &ints[low..];
        if ints.len() > 1 {
            let a0: BigUint = ints[0].abs().to_biguint().expect("nonnegative");
            let an: BigUint = ints[ints.len() - 1].abs().to_biguint().expect("nonnegative");
            let nums = divisors(&a0)?;
            let dens = divisors(&an)?;
            for u in &nums {
                for w in &dens {
                    for sign in [1, -1] {
                        let cand = Rational::new(
                            BigInt::from(u.clone()) * sign,
                            BigInt::from(w.clone()),
                        );
                        if cand.denom() != &BigInt::from(w.clone()) {
                            // Not in lowest terms; found under a smaller w.
                            continue;
                        }
                        if self.eval(&cand).is_zero() {
                            roots.push(cand);
                        }
                    }
                }
            }
        }
        roots.sort();
        roots.dedup();
        Ok(roots)
    }
}

impl Add for &RationalPoly {
    type Output = RationalPoly;

    fn add(self, rhs: &RationalPoly) -> RationalPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        RationalPoly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &RationalPoly {
    type Output = RationalPoly;

    fn sub(self, rhs: &RationalPoly) -> RationalPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        RationalPoly::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &RationalPoly {
    type Output = RationalPoly;

    fn mul(self, rhs: &RationalPoly) -> RationalPoly {
        if self.is_zero() || rhs.is_zero() {
            return RationalPoly::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RationalPoly::new(out)
    }
}

impl Neg for &RationalPoly {
    type Output = RationalPoly;

    fn neg(self) -> RationalPoly {
        RationalPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

/// Canonical text form, highest degree first, e.g. `X^5 + X^2 + X + 1/2`
/// or `-2*X^2 - 3/4`. Reparses to the same polynomial.
impl fmt::Display for RationalPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            match (first, c.is_negative()) {
                (true, true) => f.write_str("-")?,
                (true, false) => {}
                (false, true) => f.write_str(" - ")?,
                (false, false) => f.write_str(" + ")?,
            }
            first = false;
            let var = match k {
                0 => String::new(),
                1 => "X".to_string(),
                _ => format!("X^{k}"),
            };
            if k == 0 {
                write!(f, "{}", fmt_rational(&mag))?;
            } else if mag.is_one() {
                f.write_str(&var)?;
            } else {
                write!(f, "{}*{}", fmt_rational(&mag), var)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat};

    fn ints(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn taylor_examples() {
        let sq = RationalPoly::from_ints(&[0, 0, 1]);
        assert_eq!(sq.taylor_coefficients(&int(1)), ints(&[1, 2, 1]));
        assert_eq!(RationalPoly::x().taylor_coefficients(&int(0)), ints(&[0, 1]));
        // (X-2)^3 + 6(X-2)^2 + 10(X-2) + 9 expands back to X^3 - 2X + 5.
        let cubic = RationalPoly::from_ints(&[5, -2, 0, 1]);
        assert_eq!(cubic.taylor_coefficients(&int(2)), ints(&[9, 10, 6, 1]));
    }

    #[test]
    fn taylor_matches_symbolic_expansion() {
        let p = RationalPoly::new(vec![rat(3, 7), int(-2), rat(5, 3), int(0), int(4)]);
        let a = rat(-2, 5);
        let c = p.taylor_coefficients(&a);
        let shift = RationalPoly::linear(&a);
        let mut rebuilt = RationalPoly::zero();
        let mut power = RationalPoly::constant(int(1));
        for cn in &c {
            rebuilt = &rebuilt + &power.scale(cn);
            power = &power * &shift;
        }
        assert_eq!(rebuilt, p);
    }

    #[test]
    fn iterate_examples() {
        let sq = RationalPoly::from_ints(&[0, 0, 1]);
        assert_eq!(sq.iterate(2).unwrap(), RationalPoly::from_ints(&[0, 0, 0, 0, 1]));
        let f = RationalPoly::from_ints(&[1, 0, 1]);
        assert_eq!(f.iterate(2).unwrap(), RationalPoly::from_ints(&[2, 0, 2, 0, 1]));
        assert_eq!(f.iterate(0).unwrap(), RationalPoly::x());
        let g = RationalPoly::new(vec![int(1), int(0), rat(3, 2)]);
        let g3 = g.iterate(3).unwrap();
        assert_eq!(g3.degree(), Some(8));
        assert_eq!(g3.leading(), Some(&num_traits::pow(rat(3, 2), 7)));
    }

    #[test]
    fn iterate_degree_cap() {
        let f = RationalPoly::from_ints(&[1, 0, 1]);
        assert!(matches!(f.iterate(20), Err(PolyError::DegreeCap { .. })));
        assert!(f.iterate_capped(3, 8).is_ok());
        assert!(f.iterate_capped(4, 8).is_err());
    }

    #[test]
    fn fixed_point_examples() {
        let sq = RationalPoly::from_ints(&[0, 0, 1]);
        assert_eq!(sq.rational_fixed_points().unwrap(), ints(&[0, 1]));
        let f = RationalPoly::from_ints(&[0, -1, 1]);
        assert_eq!(f.rational_fixed_points().unwrap(), ints(&[0, 2]));
        let g = RationalPoly::from_ints(&[1, 0, 1]);
        assert!(g.rational_fixed_points().unwrap().is_empty());
        // 6X^2 - 5X + 1 - X ... roots 1/3 and 1/2 of 6X^2 - 5X + 1 (φ = 6X^2 - 4X + 1).
        let h = RationalPoly::from_ints(&[1, -4, 6]);
        assert_eq!(h.rational_fixed_points().unwrap(), vec![rat(1, 3), rat(1, 2)]);
        assert_eq!(RationalPoly::x().rational_fixed_points(), Err(PolyError::IdentityMap));
    }

    #[test]
    fn display_forms() {
        let p = RationalPoly::new(vec![rat(1, 2), int(1), int(1), int(0), int(0), int(1)]);
        assert_eq!(p.to_string(), "X^5 + X^2 + X + 1/2");
        let q = RationalPoly::new(vec![rat(-3, 4), int(0), int(-2)]);
        assert_eq!(q.to_string(), "-2*X^2 - 3/4");
        assert_eq!(RationalPoly::zero().to_string(), "0");
    }
}
