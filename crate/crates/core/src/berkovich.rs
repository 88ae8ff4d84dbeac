//! Type I and Type II points of the Berkovich affine line over `ℂ_p`.
//!
//! `ζ_{a,r}` is the sup-seminorm over the closed disc `D(a, r)`; it is stored
//! as a rational center `a` and a radius exponent `ρ` with `r = p^(-ρ)`.
//! `ρ = +∞` is the classical point `a` (Type I). Seminorms are reported in
//! valuation units: `v_ζ(P) = -log_p ζ(P)`.
//!
//! Boundedness of an orbit is certified by disc containment: if the disc
//! orbit `D_0, D_1, ...` ever satisfies `D_m ⊆ D_k` with `k < m` then
//! `φ^(m-k)` maps `D_k` into itself and the orbit stays inside the finite
//! union `D_k ∪ ... ∪ D_(m-1)`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{bit_size, mod_inverse, serde_rational, Rational};
use crate::polynomial::{PolyError, RationalPoly};
use crate::valuation::{Place, Valuation};

pub const DEFAULT_MAX_ITER: u32 = 256;

/// Exact orbit points larger than this (in bits) are tracked by discs instead.
const EXACT_ORBIT_BITS: u64 = 2048;
const DISC_PRECISIONS: [i64; 4] = [64, 256, 1024, 4096];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BerkovichError {
    #[error("disc points live over different places (p = {0} vs p = {1})")]
    PlaceMismatch(u64, u64),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("max_iter must be positive")]
    BadMaxIter,
    #[error("orbit of {0} escapes; it has no maximal point in the filled Julia set")]
    UnboundedBaseOrbit(String),
    #[error("could not certify that the orbit of {0} is bounded within the iteration cap")]
    UncertifiedBaseOrbit(String),
    #[error("no bounded disc found around {0} within the refinement cap")]
    SearchFailed(String),
}

#[derive(Debug, Clone)]
pub struct DiscPoint {
    center: Rational,
    rho: Valuation,
    place: Place,
}

/// Two disc points are equal iff they are the same seminorm: same radius
/// and each center lies in the other's disc.
impl PartialEq for DiscPoint {
    fn eq(&self, other: &Self) -> bool {
        self.place == other.place
            && self.rho == other.rho
            && self.place.val(&(&self.center - &other.center)) >= self.rho
    }
}

impl Eq for DiscPoint {}

#[derive(Serialize, Deserialize)]
struct DiscPointJson {
    #[serde(with = "serde_rational")]
    center: Rational,
    rho: Valuation,
    p: u64,
}

impl Serialize for DiscPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DiscPointJson {
            center: self.center.clone(),
            rho: self.rho.clone(),
            p: self.place.p(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiscPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = DiscPointJson::deserialize(d)?;
        let place = Place::rational(j.p).map_err(serde::de::Error::custom)?;
        Ok(DiscPoint::new(j.center, j.rho, place))
    }
}

impl DiscPoint {
    pub fn new(center: Rational, rho: Valuation, place: Place) -> Self {
        DiscPoint { center, rho, place }
    }

    pub fn type_i(center: Rational, place: Place) -> Self {
        Self::new(center, Valuation::Infinite, place)
    }

    pub fn type_ii(center: Rational, rho: Rational, place: Place) -> Self {
        Self::new(center, Valuation::Finite(rho), place)
    }

    /// The Gauss point `ζ_{0,1}`.
    pub fn gauss(place: Place) -> Self {
        Self::type_ii(Rational::zero(), Rational::zero(), place)
    }

    pub fn center(&self) -> &Rational {
        &self.center
    }

    pub fn rho(&self) -> &Valuation {
        &self.rho
    }

    pub fn place(&self) -> &Place {
        &self.place
    }

    pub fn is_classical(&self) -> bool {
        self.rho.is_infinite()
    }

    /// `v_ζ(X) = min(v(a), ρ)`.
    pub fn x_valuation(&self) -> Valuation {
        self.place.val(&self.center).min(self.rho.clone())
    }

    /// Same point with the smallest center representative this module can
    /// find cheaply (the center's `p`-adic expansion truncated at `ρ`).
    pub fn canonical(&self) -> DiscPoint {
        match &self.rho {
            Valuation::Infinite => self.clone(),
            Valuation::Finite(rho) => DiscPoint {
                center: reduce_center(&self.center, rho, self.place.p()),
                rho: self.rho.clone(),
                place: self.place,
            },
        }
    }

    /// `v_ζ(P) = min_n (n·ρ + v(P^(n)(a)/n!))`, i.e. the maximum modulus
    /// principle in valuation units. Type I points evaluate `v(P(a))`.
    pub fn seminorm(&self, poly: &RationalPoly) -> Valuation {
        seminorm(self, poly)
    }

    /// `self ⪯ other`: the disc of `self` is contained in the disc of `other`.
    pub fn leq(&self, other: &DiscPoint) -> Result<bool, BerkovichError> {
        leq(self, other)
    }
}

// Replaces `a` by a representative of the same disc `D(a, p^-rho)` whose
// p-adic digits stop at precision `rho`, when that is smaller.
fn reduce_center(a: &Rational, rho: &Rational, p: u64) -> Rational {
    let va = match crate::valuation::val(a, p) {
        Valuation::Infinite => return Rational::zero(),
        Valuation::Finite(v) => v.to_integer(),
    };
    let rho_ceil = rho.ceil().to_integer();
    if Rational::from_integer(va.clone()) >= *rho {
        return Rational::zero();
    }
    let j = if va.is_negative() { -va } else { BigInt::zero() };
    let (Some(n), Some(j)) = ((&rho_ceil + &j).to_usize(), j.to_usize()) else {
        return a.clone();
    };
    let pb = BigInt::from(p);
    let pj = num_traits::pow(pb.clone(), j);
    let modulus = num_traits::pow(pb, n);
    // u = a·p^j is a p-adic integer with denominator prime to p.
    let u = a * Rational::from_integer(pj.clone());
    let Some(inv) = mod_inverse(&u.denom().mod_floor(&modulus), &modulus) else {
        return a.clone();
    };
    let u_red = (u.numer() * inv).mod_floor(&modulus);
    let reduced = Rational::new(u_red, pj);
    if bit_size(&reduced) < bit_size(a) {
        reduced
    } else {
        a.clone()
    }
}

pub fn seminorm(zeta: &DiscPoint, poly: &RationalPoly) -> Valuation {
    let place = zeta.place;
    match &zeta.rho {
        Valuation::Infinite => place.val(&poly.eval(&zeta.center)),
        Valuation::Finite(_) => poly
            .taylor_coefficients(&zeta.center)
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(n, c)| &zeta.rho.scale(n) + &place.val(c))
            .min()
            .unwrap_or(Valuation::Infinite),
    }
}

pub fn leq(zeta: &DiscPoint, other: &DiscPoint) -> Result<bool, BerkovichError> {
    if zeta.place != other.place {
        return Err(BerkovichError::PlaceMismatch(zeta.place.p(), other.place.p()));
    }
    Ok(zeta.rho >= other.rho && zeta.place.val(&(&zeta.center - &other.center)) >= other.rho)
}

/// Image of a disc point under `φ`: `φ(D(a, r)) = D(φ(a), s)` with
/// `s = max_{n≥1} r^n |φ^(n)(a)/n!|`.
pub fn pushforward(phi: &RationalPoly, zeta: &DiscPoint) -> Result<DiscPoint, BerkovichError> {
    phi.degree_at_least(1)?;
    Ok(pushforward_unchecked(phi, zeta))
}

fn pushforward_unchecked(phi: &RationalPoly, zeta: &DiscPoint) -> DiscPoint {
    match &zeta.rho {
        Valuation::Infinite => DiscPoint::type_i(phi.eval(&zeta.center), zeta.place),
        Valuation::Finite(_) => {
            let c = phi.taylor_coefficients(&zeta.center);
            let rho = image_radius(&c, &zeta.rho, &zeta.place);
            DiscPoint::new(c[0].clone(), rho, zeta.place)
        }
    }
}

fn image_radius(taylor: &[Rational], rho: &Valuation, place: &Place) -> Valuation {
    taylor
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| !c.is_zero())
        .map(|(n, c)| &rho.scale(n) + &place.val(c))
        .min()
        .unwrap_or(Valuation::Infinite)
}

/// Valuation threshold `v_C` below which escape is certified:
/// `v_C = min( -v(a_d)/(d-1), min_{i<d} (v(a_i) - v(a_d))/(d-i) )`.
///
/// If `v(z) < v_C` then `a_d z^d` strictly dominates every other term, so
/// `v(φ(z)) = v(a_d) + d·v(z) < v(z)`, and the orbit valuation decreases
/// to `-∞` from there on.
pub fn escape_threshold(phi: &RationalPoly, place: &Place) -> Result<Rational, BerkovichError> {
    let d = phi.degree_at_least(2)?;
    let coeffs = phi.coeffs();
    let vd = place
        .val(&coeffs[d])
        .finite()
        .cloned()
        .expect("leading coefficient is nonzero");
    let dm1 = Rational::from_integer((d - 1).into());
    let mut t = -&vd / dm1;
    for (i, a) in coeffs.iter().enumerate().take(d) {
        if let Valuation::Finite(vi) = place.val(a) {
            let bound = (vi - &vd) / Rational::from_integer((d - i).into());
            if bound < t {
                t = bound;
            }
        }
    }
    Ok(t)
}

/// Lower bound `-v(a_d)/(d-1)` on the radius exponent of any disc point in
/// the filled Julia set (equivalently `r ≤ |a_d|^(-1/(d-1))`).
pub fn radius_lower_bound(phi: &RationalPoly, place: &Place) -> Result<Rational, BerkovichError> {
    let d = phi.degree_at_least(2)?;
    let vd = place
        .val(phi.leading().expect("nonzero"))
        .finite()
        .cloned()
        .expect("nonzero");
    Ok(-vd / Rational::from_integer((d - 1).into()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MembershipVerdict {
    /// `ζ(φ^m) → ∞`; the first step at which the escape threshold was crossed.
    Escaped { step: u32 },
    /// The disc orbit re-entered the disc visited at `cycle_start`.
    BoundedCertified { cycle_start: u32, cycle_length: u32 },
    /// Neither escape nor a cycle within `max_iter` steps.
    BoundedUpTo { max_iter: u32 },
}

impl MembershipVerdict {
    pub fn is_escaped(&self) -> bool {
        matches!(self, MembershipVerdict::Escaped { .. })
    }

    pub fn is_bounded_certified(&self) -> bool {
        matches!(self, MembershipVerdict::BoundedCertified { .. })
    }
}

/// Fate of the orbit of a rational point at one place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointOrbit {
    /// `v(φ^step(x)) = valuation < v_C`, exactly.
    Escaped { step: u32, valuation: Rational },
    Bounded { cycle_start: u32, cycle_length: u32 },
    /// `φ^step(x)` lies in the ball `{v ≥ radius}`, which `φ` maps into itself.
    Trapped { step: u32, radius: Rational },
    Undecided { steps: u32 },
}

/// Smallest `t` such that `φ` maps `{v(z) ≥ t}` into itself, if any.
///
/// The image of that ball is the disc around `a_0` of radius exponent
/// `min_{i≥1}(v(a_i) + i·t)`, so the condition is `v(a_0) ≥ t` and
/// `v(a_i) + (i-1)·t ≥ 0` for `i ≥ 1`.
pub fn invariant_ball(phi: &RationalPoly, place: &Place) -> Option<Rational> {
    let coeffs = phi.coeffs();
    let vals: Vec<Valuation> = coeffs.iter().map(|c| place.val(c)).collect();
    if vals.get(1).is_some_and(|v| *v < Valuation::Finite(Rational::zero())) {
        return None;
    }
    let t = vals
        .iter()
        .enumerate()
        .skip(2)
        .filter_map(|(i, v)| v.finite().map(|v| -v / Rational::from_integer((i - 1).into())))
        .max()?;
    (vals[0] >= Valuation::Finite(t.clone())).then_some(t)
}

fn trapped(z: &Rational, step: u32, ball: &Option<Rational>, place: &Place) -> Option<PointOrbit> {
    let t = ball.as_ref()?;
    (place.val(z) >= Valuation::Finite(t.clone())).then(|| PointOrbit::Trapped {
        step,
        radius: t.clone(),
    })
}

/// Classifies the `p`-adic orbit of a rational point.
///
/// Iterates exactly while the iterates stay small; after that the point is
/// tracked by a disc of fixed precision around it, which keeps the escape
/// step and valuation exact and certifies boundedness by disc containment.
/// An orbit that neither cycles nor escapes in time is still certified
/// bounded if it sits in the invariant ball of [`invariant_ball`].
pub fn classify_point_orbit(
    phi: &RationalPoly,
    x: &Rational,
    place: &Place,
    max_iter: u32,
) -> Result<PointOrbit, BerkovichError> {
    let vc = escape_threshold(phi, place)?;
    let mut seen: HashMap<Rational, u32> = HashMap::new();
    let mut z = x.clone();
    for m in 0..=max_iter {
        if let Valuation::Finite(w) = place.val(&z) {
            if w < vc {
                return Ok(PointOrbit::Escaped { step: m, valuation: w });
            }
        }
        if let Some(&k) = seen.get(&z) {
            return Ok(PointOrbit::Bounded {
                cycle_start: k,
                cycle_length: m - k,
            });
        }
        if m == max_iter {
            break;
        }
        if bit_size(&z) > EXACT_ORBIT_BITS {
            let ball = invariant_ball(phi, place);
            if let Some(t) = trapped(&z, m, &ball, place) {
                return Ok(t);
            }
            return Ok(classify_by_discs(phi, &z, m, place, &vc, max_iter));
        }
        seen.insert(z.clone(), m);
        z = phi.eval(&z);
    }
    Ok(trapped(&z, max_iter, &invariant_ball(phi, place), place)
        .unwrap_or(PointOrbit::Undecided { steps: max_iter }))
}

fn classify_by_discs(
    phi: &RationalPoly,
    start: &Rational,
    start_step: u32,
    place: &Place,
    vc: &Rational,
    max_iter: u32,
) -> PointOrbit {
    let ball = invariant_ball(phi, place).map(Valuation::Finite);
    let vc_ceil = vc.ceil().to_integer();
    'precision: for prec in DISC_PRECISIONS {
        let cap = Rational::from_integer(vc_ceil.clone().max(BigInt::zero()) + prec);
        let cap_v = Valuation::Finite(cap.clone());
        let mut cur = DiscPoint::type_ii(start.clone(), cap.clone(), *place).canonical();
        let mut history: Vec<DiscPoint> = Vec::new();
        for m in start_step..=max_iter {
            let rho = cur.rho.finite().expect("finite radius").clone();
            if rho <= *vc {
                continue 'precision;
            }
            if let Valuation::Finite(w) = place.val(&cur.center) {
                if w < *vc {
                    // rho > v_C > w, so every point of the disc has valuation w.
                    return PointOrbit::Escaped { step: m, valuation: w };
                }
            }
            if let Some(t) = &ball {
                if cur.rho >= *t && place.val(&cur.center) >= *t {
                    let radius = t.finite().cloned().expect("finite");
                    return PointOrbit::Trapped { step: m, radius };
                }
            }
            for (k, h) in history.iter().enumerate() {
                if leq(&cur, h).unwrap_or(false) {
                    return PointOrbit::Bounded {
                        cycle_start: start_step + k as u32,
                        cycle_length: m - start_step - k as u32,
                    };
                }
            }
            if m == max_iter {
                break;
            }
            let mut next = pushforward_unchecked(phi, &cur);
            // Enlarging a disc keeps it a superset of the true orbit point.
            if next.rho > cap_v {
                next.rho = cap_v.clone();
            }
            history.push(cur);
            cur = next.canonical();
        }
        return PointOrbit::Undecided { steps: max_iter };
    }
    PointOrbit::Undecided { steps: max_iter }
}

/// Decides whether `ζ` lies in the filled Julia set `K_φ`, i.e. whether
/// `ζ(φ^m)` stays bounded.
///
/// Escape is certified once `min(v(center_m), ρ_m) < v_C`; boundedness
/// once the disc orbit re-enters an earlier disc. Shrinking discs are
/// enlarged to a precision cap, which keeps centers small and preserves
/// boundedness certificates; an escape that might be an artefact of the
/// enlargement triggers a rerun at a higher cap.
pub fn filled_julia_membership(
    phi: &RationalPoly,
    zeta: &DiscPoint,
    max_iter: u32,
) -> Result<MembershipVerdict, BerkovichError> {
    if max_iter == 0 {
        return Err(BerkovichError::BadMaxIter);
    }
    let vc = escape_threshold(phi, &zeta.place)?;
    let rho0 = match &zeta.rho {
        Valuation::Infinite => {
            return Ok(
                match classify_point_orbit(phi, &zeta.center, &zeta.place, max_iter)? {
                    PointOrbit::Escaped { step, .. } => MembershipVerdict::Escaped { step },
                    PointOrbit::Bounded {
                        cycle_start,
                        cycle_length,
                    } => MembershipVerdict::BoundedCertified {
                        cycle_start,
                        cycle_length,
                    },
                    // The invariant ball is a disc whose orbit returns to
                    // itself after one step.
                    PointOrbit::Trapped { step, .. } => MembershipVerdict::BoundedCertified {
                        cycle_start: step,
                        cycle_length: 1,
                    },
                    PointOrbit::Undecided { .. } => MembershipVerdict::BoundedUpTo { max_iter },
                },
            );
        }
        Valuation::Finite(r) => r.clone(),
    };
    let base = rho0.ceil().max(vc.ceil());
    for prec in DISC_PRECISIONS {
        let cap = &base + Rational::from_integer(prec.into());
        if let Some(verdict) = membership_capped(phi, zeta, &vc, max_iter, &cap)? {
            return Ok(verdict);
        }
    }
    Ok(MembershipVerdict::BoundedUpTo { max_iter })
}

// `None` when an escape was seen that the enlargement could have caused.
fn membership_capped(
    phi: &RationalPoly,
    zeta: &DiscPoint,
    vc: &Rational,
    max_iter: u32,
    cap: &Rational,
) -> Result<Option<MembershipVerdict>, BerkovichError> {
    let vc_v = Valuation::Finite(vc.clone());
    let cap_v = Valuation::Finite(cap.clone());
    let mut enlarged = false;
    let mut history: Vec<DiscPoint> = Vec::new();
    let mut cur = zeta.canonical();
    for m in 0..=max_iter {
        if cur.x_valuation() < vc_v {
            // Escape read off the center's valuation is shared by every
            // point of the disc, hence by the original (smaller) disc.
            let by_center = cur.place.val(&cur.center) < cur.rho;
            if enlarged && !by_center {
                return Ok(None);
            }
            return Ok(Some(MembershipVerdict::Escaped { step: m }));
        }
        for (k, h) in history.iter().enumerate() {
            if leq(&cur, h)? {
                return Ok(Some(MembershipVerdict::BoundedCertified {
                    cycle_start: k as u32,
                    cycle_length: m - k as u32,
                }));
            }
        }
        if m == max_iter {
            break;
        }
        let mut next = pushforward_unchecked(phi, &cur);
        if next.rho > cap_v {
            next.rho = cap_v.clone();
            enlarged = true;
        }
        history.push(cur);
        cur = next.canonical();
    }
    Ok(Some(MembershipVerdict::BoundedUpTo { max_iter }))
}

/// Whether `ζ_{a, ρ - t}` escapes for all sufficiently small `t > 0`.
///
/// Radii are tracked as `α - β·t` with `t` infinitesimal, ordered
/// lexicographically; a positive answer plus the monotonicity of `K_φ`
/// along `[a, ∞]` shows every `ρ' < ρ` escapes.
pub fn escapes_just_below(
    phi: &RationalPoly,
    a: &Rational,
    rho: &Rational,
    place: &Place,
    max_iter: u32,
) -> Result<bool, BerkovichError> {
    let vc = escape_threshold(phi, place)?;
    let mut center = a.clone();
    let mut alpha = rho.clone();
    let mut beta = Rational::one();
    for _ in 0..=max_iter {
        if let Valuation::Finite(w) = place.val(&center) {
            if w < vc {
                return Ok(true);
            }
        }
        if alpha < vc || (alpha == vc && beta.is_positive()) {
            return Ok(true);
        }
        let c = phi.taylor_coefficients(&center);
        let mut best: Option<(Rational, Rational)> = None;
        for (n, cn) in c.iter().enumerate().skip(1) {
            let Valuation::Finite(vn) = place.val(cn) else {
                continue;
            };
            let nq = Rational::from_integer(n.into());
            let cand = (&nq * &alpha + vn, &nq * &beta);
            best = match best {
                None => Some(cand),
                Some(b) => {
                    if cand.0 < b.0 || (cand.0 == b.0 && cand.1 > b.1) {
                        Some(cand)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        let (na, nb) = best.expect("degree at least 2");
        alpha = na;
        beta = nb;
        center = reduce_center(&c[0], &alpha, place.p());
    }
    Ok(false)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxPointOptions {
    /// Stop bisecting once `ρ_hi - ρ_lo` is at most this.
    pub tolerance: Rational,
    pub max_iter: u32,
    pub max_refinements: u32,
}

impl Default for MaxPointOptions {
    fn default() -> Self {
        MaxPointOptions {
            tolerance: Rational::new(BigInt::one(), BigInt::one() << 20),
            max_iter: DEFAULT_MAX_ITER,
            max_refinements: 200,
        }
    }
}

/// Location of `m_φ(a) = ζ_{a, p^(-ρ*)}`, the largest point of `K_φ` on
/// the path from `a` to `∞`: `ρ* ∈ (lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxPoint {
    #[serde(with = "serde_rational")]
    pub lo: Rational,
    #[serde(with = "serde_rational")]
    pub hi: Rational,
    /// `ρ*` itself, when a simple rational in the bracket is verified on
    /// both sides.
    #[serde(with = "crate::arith::serde_opt_rational")]
    pub exact: Option<Rational>,
    /// Whether the bracket reached the requested tolerance.
    pub converged: bool,
}


/// Simplest rational (smallest denominator, then smallest magnitude) in
/// the closed interval `[lo, hi]`, by Stern–Brocot descent.
pub fn simplest_rational_between(lo: &Rational, hi: &Rational) -> Rational {
    debug_assert!(lo <= hi);
    if lo.is_positive() {
        return simplest_positive(lo, hi);
    }
    if hi.is_negative() {
        return -simplest_positive(&-hi, &-lo);
    }
    Rational::zero()
}

fn simplest_positive(lo: &Rational, hi: &Rational) -> Rational {
    let fl = lo.floor();
    if fl == *lo {
        return fl;
    }
    if fl + Rational::one() <= *hi {
        return lo.floor() + Rational::one();
    }
    let fl = lo.floor();
    let rest = simplest_positive(&(hi - &fl).recip(), &(lo - &fl).recip());
    fl + rest.recip()
}

/// Brackets `m_φ(a)` by bisection on `ρ`, starting from the a-priori bound
/// `ρ* ≥ -v(a_d)/(d-1)`, then tries to snap to an exact rational.
pub fn max_point(
    phi: &RationalPoly,
    a: &Rational,
    place: &Place,
    opts: &MaxPointOptions,
) -> Result<MaxPoint, BerkovichError> {
    match classify_point_orbit(phi, a, place, opts.max_iter)? {
        PointOrbit::Bounded { .. } | PointOrbit::Trapped { .. } => {}
        PointOrbit::Escaped { .. } => {
            return Err(BerkovichError::UnboundedBaseOrbit(a.to_string()))
        }
        PointOrbit::Undecided { .. } => {
            return Err(BerkovichError::UncertifiedBaseOrbit(a.to_string()))
        }
    }
    let verdict = |rho: &Rational| {
        filled_julia_membership(
            phi,
            &DiscPoint::type_ii(a.clone(), rho.clone(), *place),
            opts.max_iter,
        )
    };

    let floor = radius_lower_bound(phi, place)?;
    let mut lo = &floor - Rational::one();
    let mut hi = None;
    let mut probe = floor.clone();
    let mut step = Rational::one();
    for _ in 0..opts.max_refinements {
        match verdict(&probe)? {
            MembershipVerdict::BoundedCertified { .. } => {
                hi = Some(probe);
                break;
            }
            MembershipVerdict::Escaped { .. } => lo = probe.clone(),
            MembershipVerdict::BoundedUpTo { .. } => {}
        }
        probe = &probe + &step;
        step = &step * Rational::from_integer(2.into());
    }
    let mut hi = hi.ok_or_else(|| BerkovichError::SearchFailed(a.to_string()))?;

    let mut converged = true;
    let two = Rational::from_integer(2.into());
    let mut refinements = 0;
    while &hi - &lo > opts.tolerance {
        if refinements >= opts.max_refinements {
            converged = false;
            break;
        }
        refinements += 1;
        let mid = (&lo + &hi) / &two;
        match verdict(&mid)? {
            MembershipVerdict::Escaped { .. } => lo = mid,
            MembershipVerdict::BoundedCertified { .. } => hi = mid,
            MembershipVerdict::BoundedUpTo { .. } => {
                converged = false;
                break;
            }
        }
    }

    let candidate = simplest_rational_between(&lo, &hi);
    let exact = if candidate > lo
        && verdict(&candidate)?.is_bounded_certified()
        && escapes_just_below(phi, a, &candidate, place, opts.max_iter)?
    {
        Some(candidate)
    } else {
        None
    };
    Ok(MaxPoint {
        lo,
        hi,
        exact,
        converged,
    })
}

/// Good reduction of a polynomial map: its homogeneous pair, scaled to be
/// primitive, has unit resultant.
pub fn good_reduction(phi: &RationalPoly, place: &Place) -> Result<bool, BerkovichError> {
    let d = phi.degree_at_least(2)?;
    // The homogeneous pair is (Σ a_i X^i Y^(d-i), Y^d); its minimum
    // coefficient valuation includes the 0 of Y^d. After scaling to a
    // primitive pair the resultant is a unit iff every a_i is integral and
    // a_d is a unit.
    let integral = phi
        .coeffs()
        .iter()
        .all(|c| place.val(c) >= Valuation::Finite(Rational::zero()));
    Ok(integral && place.val(&phi.coeffs()[d]) == Valuation::Finite(Rational::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat};

    fn place(p: u64) -> Place {
        Place::rational(p).unwrap()
    }

    fn fin(v: Rational) -> Valuation {
        Valuation::Finite(v)
    }

    #[test]
    fn seminorm_examples() {
        let p = 3;
        let pl = place(p);
        // X^2 + pX + p^2 at the Gauss point.
        let poly = RationalPoly::from_ints(&[9, 3, 1]);
        assert_eq!(DiscPoint::gauss(pl).seminorm(&poly), fin(int(0)));
        let pt = DiscPoint::type_i(int(3), pl);
        assert_eq!(pt.seminorm(&RationalPoly::x()), fin(int(1)));
        let big = DiscPoint::type_ii(int(0), int(-1), pl);
        assert_eq!(big.seminorm(&RationalPoly::from_ints(&[0, 0, 1])), fin(int(-2)));
        assert_eq!(big.seminorm(&RationalPoly::zero()), Valuation::Infinite);
    }

    #[test]
    fn order_examples() {
        let p = 5;
        let pl = place(p);
        let inner = DiscPoint::type_ii(int(0), int(1), pl);
        let gauss = DiscPoint::gauss(pl);
        assert!(inner.leq(&gauss).unwrap());
        assert!(!gauss.leq(&inner).unwrap());
        let shifted = DiscPoint::type_ii(int(5), int(0), pl);
        assert!(gauss.leq(&shifted).unwrap());
        assert!(shifted.leq(&gauss).unwrap());
        assert_eq!(gauss, shifted);
        let far = DiscPoint::type_ii(rat(1, 5), int(0), pl);
        assert!(!gauss.leq(&far).unwrap());
        let other = DiscPoint::gauss(place(3));
        assert_eq!(gauss.leq(&other), Err(BerkovichError::PlaceMismatch(5, 3)));
    }

    #[test]
    fn pushforward_examples() {
        let pl = place(2);
        let sq = RationalPoly::from_ints(&[0, 0, 1]);
        let z = DiscPoint::type_ii(int(0), rat(3, 4), pl);
        let img = pushforward(&sq, &z).unwrap();
        assert_eq!(img, DiscPoint::type_ii(int(0), rat(3, 2), pl));
        let z = DiscPoint::type_ii(int(1), int(1), pl);
        let img = pushforward(&sq, &z).unwrap();
        assert_eq!(img.rho(), &fin(int(2)));
        assert_eq!(img.center(), &int(1));
        let t1 = DiscPoint::type_i(rat(3, 2), pl);
        let img = pushforward(&sq, &t1).unwrap();
        assert!(img.is_classical());
        assert_eq!(img.center(), &rat(9, 4));
        assert!(pushforward(&RationalPoly::constant(int(1)), &t1).is_err());
    }

    #[test]
    fn escape_threshold_examples() {
        let p = 3;
        let pl = place(p);
        let f = RationalPoly::new(vec![rat(1, 3), int(0), int(1)]);
        assert_eq!(escape_threshold(&f, &pl).unwrap(), rat(-1, 2));
        let monic = RationalPoly::from_ints(&[0, 0, 0, 1]);
        assert_eq!(escape_threshold(&monic, &pl).unwrap(), int(0));
        // pX^2: units map to p·unit, so escape needs v(z) < -1.
        let scaled = RationalPoly::from_ints(&[0, 0, 3]);
        assert_eq!(escape_threshold(&scaled, &pl).unwrap(), int(-1));
        assert!(escape_threshold(&RationalPoly::x(), &pl).is_err());
    }

    #[test]
    fn membership_examples() {
        let pl = place(2);
        let sq = RationalPoly::from_ints(&[0, 0, 1]);
        assert_eq!(
            filled_julia_membership(&sq, &DiscPoint::gauss(pl), 64).unwrap(),
            MembershipVerdict::BoundedCertified {
                cycle_start: 0,
                cycle_length: 1
            }
        );
        assert_eq!(
            filled_julia_membership(&sq, &DiscPoint::type_ii(int(0), int(-1), pl), 64).unwrap(),
            MembershipVerdict::Escaped { step: 0 }
        );
        let f = RationalPoly::new(vec![rat(1, 2), int(0), int(1)]);
        assert_eq!(
            filled_julia_membership(&f, &DiscPoint::type_i(int(0), pl), 64).unwrap(),
            MembershipVerdict::Escaped { step: 1 }
        );
        assert_eq!(
            filled_julia_membership(&f, &DiscPoint::type_i(int(0), pl), 0),
            Err(BerkovichError::BadMaxIter)
        );
        // Attracting: the disc shrinks into itself.
        assert!(filled_julia_membership(&sq, &DiscPoint::type_ii(int(0), int(1), pl), 64)
            .unwrap()
            .is_bounded_certified());
    }

    #[test]
    fn scaled_square_keeps_unit_disc_bounded() {
        let pl = place(3);
        let f = RationalPoly::from_ints(&[0, 0, 3]);
        let v = filled_julia_membership(&f, &DiscPoint::gauss(pl), 64).unwrap();
        assert!(v.is_bounded_certified());
        let v = filled_julia_membership(&f, &DiscPoint::type_ii(int(0), int(-1), pl), 64).unwrap();
        assert!(v.is_bounded_certified());
        let v = filled_julia_membership(&f, &DiscPoint::type_ii(int(0), rat(-3, 2), pl), 64).unwrap();
        assert!(v.is_escaped());
    }

    #[test]
    fn big_orbit_falls_back_to_discs() {
        // 1/3 is 2-adically a unit; under X^2 its orbit stays in the unit disc
        // while the exact iterates blow up. The unit disc is invariant.
        let pl = place(2);
        let sq = RationalPoly::from_ints(&[0, 0, 1]);
        let orbit = classify_point_orbit(&sq, &rat(1, 3), &pl, 256).unwrap();
        assert!(matches!(orbit, PointOrbit::Trapped { .. }), "{orbit:?}");
        // X^2 + X - 1/4 is X^2 conjugated by X -> X + 1/2 and has no invariant
        // ball around 0; -1/6 corresponds to 1/3.
        let psi = RationalPoly::new(vec![rat(-1, 4), int(1), int(1)]);
        assert_eq!(invariant_ball(&psi, &pl), None);
        let orbit = classify_point_orbit(&psi, &rat(-1, 6), &pl, 256).unwrap();
        assert!(matches!(orbit, PointOrbit::Bounded { .. }), "{orbit:?}");
        let f = RationalPoly::new(vec![int(0), int(0), int(1)]);
        let orbit = classify_point_orbit(&f, &rat(1, 2), &pl, 256).unwrap();
        assert_eq!(orbit, PointOrbit::Escaped { step: 0, valuation: int(-1) });
    }

    #[test]
    fn center_reduction_preserves_disc() {
        let p = 3;
        for (a, rho) in [(rat(1234567, 11), int(4)), (rat(-5, 81), rat(1, 2)), (rat(7, 9), int(-1))] {
            let r = reduce_center(&a, &rho, p);
            assert!(crate::valuation::val(&(&a - &r), p) >= fin(rho.clone()), "{a} {rho} {r}");
        }
    }

    #[test]
    fn simplest_rational() {
        assert_eq!(simplest_rational_between(&rat(-1, 1024), &int(0)), int(0));
        assert_eq!(simplest_rational_between(&rat(3, 10), &rat(4, 10)), rat(1, 3));
        assert_eq!(simplest_rational_between(&rat(-7, 10), &rat(-6, 10)), rat(-2, 3));
        assert_eq!(simplest_rational_between(&rat(5, 2), &rat(5, 2)), rat(5, 2));
        assert_eq!(simplest_rational_between(&rat(1, 2), &int(3)), int(1));
    }

    #[test]
    fn max_point_of_square_is_gauss_point() {
        let pl = place(3);
        let sq = RationalPoly::from_ints(&[0, 0, 1]);
        let mp = max_point(&sq, &int(0), &pl, &MaxPointOptions::default()).unwrap();
        assert_eq!(mp.exact, Some(int(0)));
        assert!(mp.converged);
        assert!(&mp.hi - &mp.lo <= MaxPointOptions::default().tolerance);
        let f = RationalPoly::new(vec![rat(1, 3), int(0), int(1)]);
        assert!(matches!(
            max_point(&f, &int(0), &pl, &MaxPointOptions::default()),
            Err(BerkovichError::UnboundedBaseOrbit(_))
        ));
    }

    #[test]
    fn good_reduction_examples() {
        let pl = place(3);
        assert!(good_reduction(&RationalPoly::from_ints(&[1, 0, 1]), &pl).unwrap());
        let f = RationalPoly::new(vec![rat(1, 3), int(0), int(1)]);
        assert!(!good_reduction(&f, &pl).unwrap());
        assert!(!good_reduction(&RationalPoly::from_ints(&[1, 1, 3]), &pl).unwrap());
        assert!(!good_reduction(&RationalPoly::from_ints(&[3, 0, 6]), &pl).unwrap());
        assert!(good_reduction(&RationalPoly::from_ints(&[3, 5, 1]), &pl).unwrap());
        assert!(good_reduction(&RationalPoly::x(), &pl).is_err());
    }

    #[test]
    fn invariant_ball_examples() {
        let p2 = place(2);
        assert_eq!(invariant_ball(&RationalPoly::from_ints(&[0, 1, 4]), &p2), Some(int(-2)));
        assert_eq!(invariant_ball(&RationalPoly::from_ints(&[0, 0, 1]), &p2), Some(int(0)));
        let f = RationalPoly::new(vec![rat(1, 2), int(0), int(1)]);
        assert_eq!(invariant_ball(&f, &p2), None);
        let g = RationalPoly::new(vec![int(0), rat(1, 2), int(1)]);
        assert_eq!(invariant_ball(&g, &p2), None);
        // 4X^2 + X at -1: integral, wandering, never periodic.
        let h = RationalPoly::from_ints(&[0, 1, 4]);
        let orbit = classify_point_orbit(&h, &int(-1), &p2, 64).unwrap();
        assert!(matches!(orbit, PointOrbit::Trapped { .. }), "{orbit:?}");
    }

    #[test]
    fn canonical_center_handles_p_in_denominator() {
        // -5125/3822 has 2-adic valuation -1; mod 2^8 it is 157/2.
        let z = DiscPoint::type_ii(rat(-5125, 3822), int(8), place(2)).canonical();
        assert_eq!(z.center(), &rat(157, 2));
        assert_eq!(z, DiscPoint::type_ii(rat(-5125, 3822), int(8), place(2)));
    }

    #[test]
    fn disc_json_round_trip() {
        let z = DiscPoint::type_ii(rat(1, 2), rat(-3, 2), place(2));
        let js = serde_json::to_string(&z).unwrap();
        assert_eq!(js, r#"{"center":"1/2","rho":"-3/2","p":2}"#);
        let back: DiscPoint = serde_json::from_str(&js).unwrap();
        assert_eq!(back, z);
        let t = DiscPoint::type_i(int(4), place(5));
        assert_eq!(serde_json::to_string(&t).unwrap(), r#"{"center":"4","rho":"inf","p":5}"#);
        let v = MembershipVerdict::BoundedCertified { cycle_start: 0, cycle_length: 2 };
        let js = serde_json::to_string(&v).unwrap();
        assert_eq!(js, r#"{"verdict":"bounded_certified","cycle_start":0,"cycle_length":2}"#);
        assert_eq!(serde_json::from_str::<MembershipVerdict>(&js).unwrap(), v);
    }
}
