//! Shapes of height lower bounds in terms of ramification indices.
//!
//! Two curves in the maximal ramification index `e` are compared: the
//! super-exponential `C·exp(2e)/e^(2e+1)` and `C/lcm{1..e}²`. Since
//! `lcm{1..e} ≤ 3^e`, the second is at least `C·9^(-e)`. Values are kept in
//! the log domain as well, because both curves underflow `f64` for large `e`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("ramification index list is empty")]
    EmptyList,
    #[error("ramification indices must be at least 1")]
    ZeroIndex,
    #[error("e_max must be at least 1")]
    BadMaxE,
    #[error("constant must be positive and finite, got {0}")]
    BadConstant(f64),
}

/// `(lcm, max)` of a list of ramification indices.
pub fn lcm_list(values: &[u64]) -> Result<(BigUint, u64), BoundsError> {
    if values.is_empty() {
        return Err(BoundsError::EmptyList);
    }
    if values.contains(&0) {
        return Err(BoundsError::ZeroIndex);
    }
    let lcm = values
        .iter()
        .fold(BigUint::one(), |acc, &v| acc.lcm(&BigUint::from(v)));
    Ok((lcm, *values.iter().max().expect("nonempty")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub e: u64,
    #[serde(with = "biguint_string")]
    pub lcm: BigUint,
    pub pottmeyer: f64,
    pub new_bound: f64,
    pub nine_exp: f64,
    pub ln_pottmeyer: f64,
    pub ln_new_bound: f64,
    /// `lcm ≤ 3^e`, exact.
    pub lcm_le_3e: bool,
    /// `C/lcm² ≥ C·9^(-e)`, i.e. `lcm² ≤ 9^e`, exact.
    pub new_ge_nine_exp: bool,
}

mod biguint_string {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTable {
    pub constant: f64,
    pub rows: Vec<BoundRow>,
    /// Smallest `e` from which the lcm bound beats the super-exponential one
    /// for every remaining row.
    pub crossover: Option<u64>,
}

impl BoundTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "e,lcm,pottmeyer,new_bound,nine_exp,ln_pottmeyer,ln_new_bound,lcm_le_3e,new_ge_nine_exp\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.6e},{:.6e},{:.6e},{:.6},{:.6},{},{}\n",
                r.e,
                r.lcm,
                r.pottmeyer,
                r.new_bound,
                r.nine_exp,
                r.ln_pottmeyer,
                r.ln_new_bound,
                r.lcm_le_3e,
                r.new_ge_nine_exp
            ));
        }
        out
    }
}

fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().expect("fits").ln();
    }
    let shift = bits - 64;
    (n >> shift).to_f64().expect("fits").ln() + shift as f64 * std::f64::consts::LN_2
}

/// Rows `e = 1..=e_max` with the worst case `l = lcm{1..e}`.
pub fn bound_table(e_max: u64, constant: f64) -> Result<BoundTable, BoundsError> {
    if e_max == 0 {
        return Err(BoundsError::BadMaxE);
    }
    if !(constant.is_finite() && constant > 0.0) {
        return Err(BoundsError::BadConstant(constant));
    }
    let ln_c = constant.ln();
    let mut lcm = BigUint::one();
    let mut three_pow = BigUint::one();
    let mut rows = Vec::with_capacity(e_max as usize);
    for e in 1..=e_max {
        lcm = lcm.lcm(&BigUint::from(e));
        three_pow *= 3u32;
        let ef = e as f64;
        let ln_pottmeyer = ln_c + 2.0 * ef - (2.0 * ef + 1.0) * ef.ln();
        let ln_new_bound = ln_c - 2.0 * ln_biguint(&lcm);
        let lcm_le_3e = lcm <= three_pow;
        rows.push(BoundRow {
            e,
            lcm: lcm.clone(),
            pottmeyer: ln_pottmeyer.exp(),
            new_bound: ln_new_bound.exp(),
            nine_exp: constant * 9f64.powf(-ef),
            ln_pottmeyer,
            ln_new_bound,
            lcm_le_3e,
            // lcm² ≤ 9^e ⟺ lcm ≤ 3^e for nonnegative integers.
            new_ge_nine_exp: &lcm * &lcm <= &three_pow * &three_pow,
        });
    }
    let crossover = rows
        .iter()
        .rposition(|r| r.ln_new_bound <= r.ln_pottmeyer)
        .map_or(Some(1), |k| rows.get(k + 1).map(|r| r.e));
    Ok(BoundTable {
        constant,
        rows,
        crossover,
    })
}

/// Checks `lcm{1..n} ≤ 3^n` for every `n ≤ n_max`; returns the first
/// failure, if any.
///
/// The lcm is updated only at prime powers. Each comparison is first
/// settled by bit length (`lcm < 2^bits ≤ 3^n` when `bits + 2 ≤ n·log₂3`,
/// the 2-bit margin absorbing float error) and otherwise by an exact
/// big-integer comparison.
pub fn verify_lcm_le_three_pow(n_max: u64) -> Option<u64> {
    let n_max_us = n_max as usize;
    let mut composite = vec![false; n_max_us + 1];
    // prime_of[n] = p if n = p^k, else 0.
    let mut prime_of = vec![0u64; n_max_us + 1];
    for p in 2..=n_max_us {
        if composite[p] {
            continue;
        }
        for m in (p * p..=n_max_us).step_by(p) {
            composite[m] = true;
        }
        let mut q = p;
        loop {
            prime_of[q] = p as u64;
            match q.checked_mul(p) {
                Some(next) if next <= n_max_us => q = next,
                _ => break,
            }
        }
    }
    let log2_3 = 3f64.log2();
    let mut lcm = BigUint::one();
    for n in 1..=n_max {
        let p = prime_of[n as usize];
        if p != 0 {
            lcm *= p;
        }
        let bits = lcm.bits() as f64;
        if bits + 2.0 <= n as f64 * log2_3 {
            continue;
        }
        if lcm > BigUint::from(3u32).pow(n as u32) {
            return Some(n);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lcm_examples() {
        assert_eq!(lcm_list(&[1, 2, 3]).unwrap(), (BigUint::from(6u32), 3));
        assert_eq!(lcm_list(&[4]).unwrap(), (BigUint::from(4u32), 4));
        assert_eq!(
            lcm_list(&[2, 3, 4, 5, 6, 7, 8, 9, 10]).unwrap(),
            (BigUint::from(2520u32), 10)
        );
        assert_eq!(lcm_list(&[]), Err(BoundsError::EmptyList));
        assert_eq!(lcm_list(&[2, 0]), Err(BoundsError::ZeroIndex));
    }

    #[test]
    fn table_examples() {
        let t = bound_table(10, 1.0).unwrap();
        assert_eq!(t.rows[0].lcm, BigUint::from(1u32));
        assert_eq!(t.rows[0].new_bound, 1.0);
        assert_eq!(t.rows[5].lcm, BigUint::from(60u32));
        assert_eq!(t.rows[9].lcm, BigUint::from(2520u32));
        assert!(t.rows.iter().all(|r| r.lcm_le_3e && r.new_ge_nine_exp));
        assert_eq!(t.crossover, Some(6));
        assert!(bound_table(0, 1.0).is_err());
        assert!(bound_table(5, 0.0).is_err());
    }

    #[test]
    fn crossover_is_independent_of_constant() {
        assert_eq!(bound_table(40, 7.5).unwrap().crossover, Some(6));
    }

    #[test]
    fn log_domain_survives_underflow() {
        let t = bound_table(400, 1.0).unwrap();
        let last = t.rows.last().unwrap();
        assert_eq!(last.pottmeyer, 0.0);
        assert!(last.ln_pottmeyer.is_finite() && last.ln_new_bound > last.ln_pottmeyer);
    }

    #[test]
    fn small_lcm_check() {
        assert_eq!(verify_lcm_le_three_pow(2000), None);
    }

    #[test]
    fn json_round_trip() {
        let t = bound_table(8, 1.0).unwrap();
        let js = serde_json::to_string(&t).unwrap();
        let back: BoundTable = serde_json::from_str(&js).unwrap();
        assert_eq!(back, t);
    }
}
