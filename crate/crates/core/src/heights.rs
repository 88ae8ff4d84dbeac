//! Canonical heights `ĥ_φ` of rational points.
//!
//! `ĥ_φ(x) = Σ_v g_v(x)` with local escape rates
//! `g_v(x) = lim d^(-m) log⁺|φ^m(x)|_v`. At a finite place the limit is
//! reached exactly once the orbit enters the dominance region
//! (`v(z) < v_C`): from then on `log|φ(z)| = d·log|z| + log|a_d|`, so
//! `g_p(x) = d^(-m) (log|φ^m(x)|_p + log|a_d|_p/(d-1))`, an exact rational
//! multiple of `log p`. Places not dividing a coefficient denominator or the
//! denominator of `x` contribute exactly zero. The archimedean part is
//! computed in double precision with an explicit error budget.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{
    bit_size, common_denominator, factorize, fmt_rational, ln_abs, ln_abs_int, to_f64,
    ArithError, Rational,
};
use crate::berkovich::{classify_point_orbit, escape_threshold, BerkovichError, PointOrbit};
use crate::polynomial::RationalPoly;
use crate::valuation::{Place, Valuation};

/// Below this the double-precision archimedean computation cannot honour
/// the requested accuracy.
pub const MIN_EPSILON: f64 = 1e-12;
pub const DEFAULT_EPSILON: f64 = 1e-8;
/// Largest number of points a survey will enumerate.
pub const SURVEY_CAP: usize = 200_000;

const EXACT_ARCH_BITS: u64 = 4096;
const MAX_LOCAL_ITER: u32 = 512;
const MAX_ARCH_ITER: u32 = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeightError {
    #[error("polynomial must have degree at least 2")]
    DegreeTooSmall,
    #[error("error budget must be a positive finite number, got {0}")]
    BadEpsilon(f64),
    #[error(
        "error budget {0:e} is below what double precision supports at the archimedean place \
         (minimum {MIN_EPSILON:e}); use an interval-arithmetic backend"
    )]
    PrecisionTooFine(f64),
    #[error("max_iter must be positive")]
    BadMaxIter,
    #[error("archimedean orbit overflowed double precision")]
    Overflow,
    #[error("survey would enumerate {count} points (cap {cap})")]
    SurveyTooLarge { count: usize, cap: usize },
    #[error(transparent)]
    Berkovich(#[from] BerkovichError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// `h(m/n) = log max(|m|, |n|)` for `m/n` in lowest terms.
pub fn weil_height(x: &Rational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    ln_abs_int(x.numer()).max(ln_abs_int(x.denom()))
}

/// Contribution of one place to `ĥ_φ(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalPart {
    pub value: f64,
    pub error_bound: f64,
    /// For a finite place: `value = log_p_multiple · log p`, exact.
    #[serde(
        skip_serializing_if = "Option::is_none",
        default,
        with = "crate::arith::serde_opt_rational"
    )]
    pub log_p_multiple: Option<Rational>,
}


/// `g_p(x)` at one finite place.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalHeight {
    /// `g_p(x) = log_p_multiple · log p` (or the estimate, when uncertified).
    pub log_p_multiple: Rational,
    pub error_bound: f64,
    pub orbit: PointOrbit,
}

impl LocalHeight {
    pub fn value(&self, place: &Place) -> f64 {
        to_f64(&self.log_p_multiple) * place.ln_p()
    }
}

/// Upper bound for `g_p` on the non-escaping region `v(z) ≥ v_C`, in units
/// of `log p`: `log⁺ B' + |v(a_d)|/(d-1)` where `B' = max_i |a_i| p^(-i·v_C)`
/// bounds the first iterate that leaves the region.
fn local_kappa(phi: &RationalPoly, place: &Place, vc: &Rational) -> f64 {
    let d = phi.degree().expect("degree checked");
    let coeffs = phi.coeffs();
    let min_term = coeffs
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match place.val(c) {
            Valuation::Finite(v) => Some(v + vc * Rational::from_integer(i.into())),
            Valuation::Infinite => None,
        })
        .min()
        .expect("nonzero polynomial");
    let vd = place.val(&coeffs[d]).finite().cloned().expect("nonzero");
    let log_b = (-to_f64(&min_term)).max(0.0);
    log_b + to_f64(&vd).abs() / (d - 1) as f64
}

/// `g_p(x) = lim d^(-m) log⁺|φ^m(x)|_p`.
///
/// Exact whenever the orbit is classified (escape gives the closed form,
/// boundedness gives zero). Otherwise returns zero with error
/// `d^(-max_iter)·κ_p`.
pub fn local_escape_rate(
    phi: &RationalPoly,
    x: &Rational,
    place: &Place,
    max_iter: u32,
) -> Result<LocalHeight, HeightError> {
    let d = phi.degree().filter(|&d| d >= 2).ok_or(HeightError::DegreeTooSmall)?;
    if max_iter == 0 {
        return Err(HeightError::BadMaxIter);
    }
    let vc = escape_threshold(phi, place)?;
    let orbit = classify_point_orbit(phi, x, place, max_iter)?;
    let (multiple, error_bound) = match &orbit {
        PointOrbit::Escaped { step, valuation } => {
            let vd = place.val(phi.leading().expect("nonzero")).finite().cloned().expect("nonzero");
            let dm1 = Rational::from_integer((d - 1).into());
            let scale = Rational::from_integer(BigInt::from(d).pow(*step));
            ((-valuation - vd / dm1) / scale, 0.0)
        }
        PointOrbit::Bounded { .. } | PointOrbit::Trapped { .. } => (Rational::zero(), 0.0),
        PointOrbit::Undecided { steps } => {
            let kappa = local_kappa(phi, place, &vc) * place.ln_p();
            (Rational::zero(), kappa * (d as f64).powi(-(*steps as i32)))
        }
    };
    Ok(LocalHeight {
        log_p_multiple: multiple,
        error_bound,
        orbit,
    })
}

// Archimedean constants for φ with |a_d| = a, Σ_{i<d} |a_i| = s:
//
// * for |z| ≥ r = max(1, 2s/a):  |φ(z)| ≥ (a/2)|z|^d
// * for all z:                   |φ(z)| ≤ (s + a) max(1, |z|)^d
//
// hence |log⁺|φ(z)| - d·log⁺|z|| ≤ c with
// c = max(0, log⁺(s + a), d·log r, -log(a/2)), and telescoping gives
// |g(z) - log⁺|z|| ≤ κ = c/(d-1). Once |z| ≥ r_esc (which also forces
// |z| to keep growing), |φ(z)/(a_d z^d) - 1| ≤ s/(a|z|) ≤ 1/2 and the
// closed form d^(-m)(log|z_m| + log a/(d-1)) is off by at most
// d^(-m)·2s/(a(d-1)|z_m|).
struct ArchConstants {
    coeffs: Vec<f64>,
    a: f64,
    s: f64,
    ln_r_esc: f64,
    kappa: f64,
}

impl ArchConstants {
    fn new(phi: &RationalPoly) -> Result<Self, HeightError> {
        let d = phi.degree().expect("degree checked");
        let coeffs: Vec<f64> = phi.coeffs().iter().map(to_f64).collect();
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(HeightError::Overflow);
        }
        let a = coeffs[d].abs();
        let s: f64 = coeffs[..d].iter().map(|c| c.abs()).sum();
        let r = (2.0 * s / a).max(1.0);
        let r_esc = r.max((2.0 / a).powf(1.0 / (d - 1) as f64));
        let df = d as f64;
        let c = [0.0, (s + a).ln(), df * r.ln(), -(a / 2.0).ln()]
            .into_iter()
            .fold(0.0f64, f64::max);
        Ok(ArchConstants {
            coeffs,
            a,
            s,
            ln_r_esc: r_esc.ln(),
            kappa: c / (df - 1.0),
        })
    }

    fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }
}

enum OrbitPoint {
    Exact(Rational),
    Float(f64),
}

impl OrbitPoint {
    fn ln_abs(&self) -> f64 {
        match self {
            OrbitPoint::Exact(z) => ln_abs(z),
            OrbitPoint::Float(z) => z.abs().ln(),
        }
    }
}

/// `g_∞(x)` to within `budget`.
fn archimedean_part(
    phi: &RationalPoly,
    x: &Rational,
    budget: f64,
) -> Result<LocalPart, HeightError> {
    let d = phi.degree().expect("degree checked");
    let df = d as f64;
    let k = ArchConstants::new(phi)?;
    let mut z = OrbitPoint::Exact(x.clone());
    let mut scale = 1.0f64;
    for _ in 0..=MAX_ARCH_ITER {
        let lz = z.ln_abs();
        if lz.is_nan() || lz == f64::INFINITY {
            return Err(HeightError::Overflow);
        }
        if lz >= k.ln_r_esc {
            let err = scale * 2.0 * k.s / (k.a * (df - 1.0)) * (-lz).exp();
            if err <= budget {
                let value = scale * (lz + k.a.ln() / (df - 1.0));
                return Ok(arch_result(value, err));
            }
        }
        let err = scale * k.kappa;
        if err <= budget {
            return Ok(arch_result(scale * lz.max(0.0), err));
        }
        z = match z {
            OrbitPoint::Exact(q) if bit_size(&q) <= EXACT_ARCH_BITS => {
                OrbitPoint::Exact(phi.eval(&q))
            }
            OrbitPoint::Exact(q) => OrbitPoint::Float(k.eval(to_f64(&q))),
            OrbitPoint::Float(f) => OrbitPoint::Float(k.eval(f)),
        };
        scale /= df;
    }
    Err(HeightError::Overflow)
}

fn arch_result(value: f64, err: f64) -> LocalPart {
    LocalPart {
        value,
        error_bound: err + 4.0 * f64::EPSILON * (value.abs() + 1.0),
        log_p_multiple: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightResult {
    pub value: f64,
    pub error_bound: f64,
    /// Keyed by `"inf"` or the decimal prime.
    pub local_parts: BTreeMap<String, LocalPart>,
    pub preperiodic: bool,
}

/// Primes at which `x` or a coefficient of `φ` is non-integral.
pub fn relevant_primes(phi: &RationalPoly, x: &Rational) -> Result<Vec<u64>, HeightError> {
    let den = common_denominator(phi.coeffs().iter().chain(std::iter::once(x)));
    let mag: BigUint = den.abs().to_biguint().expect("positive");
    factorize(&mag)?
        .into_iter()
        .map(|(q, _)| q.to_u64().ok_or(HeightError::Overflow))
        .collect()
}

/// `ĥ_φ(x)` with `|value - ĥ_φ(x)| ≤ error_bound ≤ epsilon`.
pub fn canonical_height(
    phi: &RationalPoly,
    x: &Rational,
    epsilon: f64,
) -> Result<HeightResult, HeightError> {
    let d = phi.degree().filter(|&d| d >= 2).ok_or(HeightError::DegreeTooSmall)?;
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(HeightError::BadEpsilon(epsilon));
    }
    if epsilon < MIN_EPSILON {
        return Err(HeightError::PrecisionTooFine(epsilon));
    }
    let primes = relevant_primes(phi, x)?;
    let mut local_parts = BTreeMap::new();

    if is_preperiodic(phi, x)?.is_preperiodic() {
        let zero = LocalPart {
            value: 0.0,
            error_bound: 0.0,
            log_p_multiple: None,
        };
        local_parts.insert("inf".to_string(), zero.clone());
        for p in primes {
            let part = LocalPart {
                log_p_multiple: Some(Rational::zero()),
                ..zero.clone()
            };
            local_parts.insert(p.to_string(), part);
        }
        return Ok(HeightResult {
            value: 0.0,
            error_bound: 0.0,
            local_parts,
            preperiodic: true,
        });
    }

    let finite_budget = epsilon / 2.0 / primes.len().max(1) as f64;
    for p in &primes {
        let place = Place::rational(*p).expect("factor is prime");
        let vc = escape_threshold(phi, &place)?;
        let kappa = local_kappa(phi, &place, &vc) * place.ln_p();
        let needed = if kappa > finite_budget {
            ((kappa / finite_budget).ln() / (d as f64).ln()).ceil() as u32 + 1
        } else {
            1
        };
        let lh = local_escape_rate(phi, x, &place, needed.clamp(64, MAX_LOCAL_ITER))?;
        local_parts.insert(
            p.to_string(),
            LocalPart {
                value: lh.value(&place),
                error_bound: lh.error_bound,
                log_p_multiple: Some(lh.log_p_multiple),
            },
        );
    }
    local_parts.insert("inf".to_string(), archimedean_part(phi, x, epsilon / 2.0)?);

    let value = local_parts.values().map(|l| l.value).sum();
    let error_bound = local_parts.values().map(|l| l.error_bound).sum();
    Ok(HeightResult {
        value,
        error_bound,
        local_parts,
        preperiodic: false,
    })
}

/// Naive-height threshold `B(φ)` past which the orbit height grows strictly.
///
/// Write `φ = F/D` with `F = Σ b_i X^i ∈ ℤ[X]` and `x = m/n`, `H = max(|m|,|n|)`.
/// Then `φ(x) = A/(D n^d)` with `A = Σ b_i m^i n^(d-i)`, and:
///
/// * `gcd(A, D n^d)` divides `Res(F(X,Y), D Y^d) = ±(D b_d)^d`;
/// * with `S = Σ_{i<d} |b_i|` and `T = max(1, 2S/|b_d|)`, either `|n| ≤ |m|/T`
///   and `|A| ≥ |b_d| H^d / 2`, or `|n| ≥ H/T` and `|D n^d| ≥ |D| H^d / T^d`.
///
/// So `h(φ(x)) ≥ d·h(x) - C` with `C = d·log|D b_d| - log min(|b_d|/2, |D|/T^d)`,
/// and `h(x) > B = C/(d-1)` forces `h(φ(x)) > h(x) > B`.
pub fn growth_bound(phi: &RationalPoly) -> f64 {
    let d = phi.degree().expect("degree checked");
    let den = common_denominator(phi.coeffs());
    let ints: Vec<BigInt> = phi
        .coeffs()
        .iter()
        .map(|c| (c * Rational::from_integer(den.clone())).to_integer())
        .collect();
    let ln_bd = ln_abs_int(&ints[d]);
    let ln_den = ln_abs_int(&den);
    let s: BigInt = ints[..d].iter().map(|b| b.abs()).sum();
    // log T = max(0, log 2 + log S - log|b_d|)
    let ln_t = if s.is_zero() {
        0.0
    } else {
        (std::f64::consts::LN_2 + ln_abs_int(&s) - ln_bd).max(0.0)
    };
    let df = d as f64;
    let ln_c = (ln_bd - std::f64::consts::LN_2).min(ln_den - df * ln_t);
    let big_c = df * (ln_den + ln_bd) - ln_c;
    (big_c / (df - 1.0)).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preperiodicity {
    /// `orbit[tail]` is the first point of the cycle; `orbit[tail + period]`
    /// would repeat it.
    Preperiodic {
        tail: usize,
        period: usize,
        #[serde(with = "rational_vec")]
        orbit: Vec<Rational>,
    },
    /// `h(φ^step(x)) > B(φ)`, so the orbit heights increase forever.
    Wandering { step: usize, height: f64, bound: f64 },
}

mod rational_vec {
    use super::Rational;
    use crate::arith::{fmt_rational, parse_rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(fmt_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

impl Preperiodicity {
    pub fn is_preperiodic(&self) -> bool {
        matches!(self, Preperiodicity::Preperiodic { .. })
    }
}

/// Exact orbit iteration until a repeat (preperiodic) or until the naive
/// height passes [`growth_bound`] (wandering). Always terminates: below the
/// bound there are finitely many rationals.
pub fn is_preperiodic(phi: &RationalPoly, x: &Rational) -> Result<Preperiodicity, HeightError> {
    phi.degree().filter(|&d| d >= 2).ok_or(HeightError::DegreeTooSmall)?;
    let bound = growth_bound(phi);
    // Float slack covers rounding in both the bound and the heights.
    let cutoff = bound * (1.0 + 1e-12) + 1e-9;
    let mut seen: HashMap<Rational, usize> = HashMap::new();
    let mut orbit = Vec::new();
    let mut z = x.clone();
    loop {
        if let Some(&k) = seen.get(&z) {
            let period = orbit.len() - k;
            return Ok(Preperiodicity::Preperiodic {
                tail: k,
                period,
                orbit,
            });
        }
        let h = weil_height(&z);
        if h > cutoff {
            return Ok(Preperiodicity::Wandering {
                step: orbit.len(),
                height: h,
                bound,
            });
        }
        seen.insert(z.clone(), orbit.len());
        orbit.push(z.clone());
        z = phi.eval(&z);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyRecord {
    #[serde(with = "crate::arith::serde_rational")]
    pub x: Rational,
    pub canonical_height: f64,
    pub error_bound: f64,
    pub preperiodic: bool,
    /// `g_p(x)` at the survey prime.
    pub local_at_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Survey {
    pub p: u64,
    pub max_naive: u64,
    pub records: Vec<SurveyRecord>,
}

impl Survey {
    pub fn preperiodic_points(&self) -> Vec<&Rational> {
        self.records
            .iter()
            .filter(|r| r.preperiodic)
            .map(|r| &r.x)
            .collect()
    }

    /// Non-preperiodic record with the smallest height.
    pub fn min_positive(&self) -> Option<&SurveyRecord> {
        self.records
            .iter()
            .filter(|r| !r.preperiodic)
            .min_by(|a, b| a.canonical_height.total_cmp(&b.canonical_height))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,num,den,canonical_height,error_bound,preperiodic\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{:.12e},{:.3e},{}\n",
                fmt_rational(&r.x),
                r.x.numer(),
                r.x.denom(),
                r.canonical_height,
                r.error_bound,
                r.preperiodic
            ));
        }
        out
    }
}

/// Largest `max(|m|, |n|)` allowed by a log-height cap `H`.
pub fn naive_bound_from_height(h: f64) -> u64 {
    if h < 0.0 {
        return 0;
    }
    (h.exp() * (1.0 + 1e-12)).floor() as u64
}

/// Every `m/n` in lowest terms with `max(|m|, n) ≤ max_naive`, ordered by
/// denominator, then numerator.
pub fn enumerate_rationals(max_naive: u64) -> Vec<Rational> {
    let mut out = Vec::new();
    if max_naive == 0 {
        out.push(Rational::zero());
        return out;
    }
    let n_max = max_naive as i64;
    for n in 1..=n_max {
        for m in -n_max..=n_max {
            if num_integer::gcd(m, n) == 1 || (m == 0 && n == 1) {
                out.push(Rational::new(m.into(), n.into()));
            }
        }
    }
    out
}

/// Canonical heights of all rationals of naive height at most `max_naive`,
/// in enumeration order. Points are processed in parallel.
pub fn survey(
    phi: &RationalPoly,
    place: &Place,
    max_naive: u64,
    epsilon: f64,
) -> Result<Survey, HeightError> {
    phi.degree().filter(|&d| d >= 2).ok_or(HeightError::DegreeTooSmall)?;
    // ~ (12/π²)·N² points; refuse before allocating.
    let estimate = (max_naive as f64).powi(2) * 1.3;
    if estimate > SURVEY_CAP as f64 * 1.5 {
        return Err(HeightError::SurveyTooLarge {
            count: estimate as usize,
            cap: SURVEY_CAP,
        });
    }
    let points = enumerate_rationals(max_naive);
    if points.len() > SURVEY_CAP {
        return Err(HeightError::SurveyTooLarge {
            count: points.len(),
            cap: SURVEY_CAP,
        });
    }
    let key = place.p().to_string();
    let records = points
        .into_par_iter()
        .map(|x| {
            let h = canonical_height(phi, &x, epsilon)?;
            let local_at_p = h.local_parts.get(&key).map_or(0.0, |l| l.value);
            Ok(SurveyRecord {
                x,
                canonical_height: h.value,
                error_bound: h.error_bound,
                preperiodic: h.preperiodic,
                local_at_p,
            })
        })
        .collect::<Result<Vec<_>, HeightError>>()?;
    Ok(Survey {
        p: place.p(),
        max_naive,
        records,
    })
}
