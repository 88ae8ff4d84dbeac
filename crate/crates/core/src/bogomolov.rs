//! Newton-polygon test for the strong Bogomolov property of `P¹(K^{nr,v})`
//! relative to the canonical height of a polynomial.
//!
//! Let `ψ = φ(X) - X` and let `σ` run over the slopes of its Newton polygon
//! (valuation units). A slope with
//!
//! * `σ ∉ (1/e)ℤ`, and
//! * `σ ≥ v(a_d)/(d-1)`
//!
//! produces a fixed point `a` of `φ` with `|a| = p^σ` whose maximal disc
//! `m_φ(a)` is a Julia point with `ζ(X) = |a| ∉ p^(ℤ/e) ∪ {0}`. The test is
//! sufficient only: failing it says nothing about the property itself.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use num_traits::Zero;

use crate::arith::{serde_rational, Rational};
use crate::newton::{newton_polygon, valuation_points, NewtonError, NewtonPolygon, Vertex};
use crate::polynomial::RationalPoly;
use crate::valuation::{Place, Valuation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BogomolovError {
    #[error("constant term vanishes; Newton polygon hypothesis violated")]
    ZeroConstantTerm,
    #[error("polynomial must have degree at least 2")]
    DegreeTooSmall,
    #[error("coefficient data is missing a finite valuation at index {0}")]
    MissingIndex(usize),
    #[error(transparent)]
    Newton(#[from] NewtonError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    StrongBogomolov,
    /// The sufficient criterion does not apply. This is not a proof that
    /// the property fails.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientSource {
    /// Built from the exact rational coefficients of `φ`.
    Exact,
    /// Built from caller-supplied coefficient valuations.
    Abstract,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(with = "serde_rational")]
    pub slope: Rational,
    pub segment: [Vertex; 2],
    /// `v(ζ(X)) = -σ` for the atypical Julia point `ζ = m_φ(a)`.
    #[serde(rename = "zeta_of_X_valuation", with = "serde_rational")]
    pub zeta_of_x_valuation: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BogomolovCertificate {
    pub verdict: Verdict,
    pub p: u64,
    pub e: u64,
    pub witness: Option<Witness>,
    pub polygon: NewtonPolygon,
    /// `v(a_d)/(d-1)`, the smallest admissible witness slope.
    #[serde(with = "serde_rational")]
    pub slope_floor: Rational,
    pub degree: usize,
    pub coefficients: CoefficientSource,
}

impl BogomolovCertificate {
    pub fn is_strong(&self) -> bool {
        self.verdict == Verdict::StrongBogomolov
    }

    pub fn place(&self) -> Place {
        Place::new(self.p, self.e).expect("certificate built from a valid place")
    }
}

/// Checks the criterion for `φ ∈ ℚ[X]` at `place`.
pub fn check_criterion(
    phi: &RationalPoly,
    place: &Place,
) -> Result<BogomolovCertificate, BogomolovError> {
    let d = match phi.degree() {
        Some(d) if d >= 2 => d,
        _ => return Err(BogomolovError::DegreeTooSmall),
    };
    if phi.coeff(0).is_zero() {
        return Err(BogomolovError::ZeroConstantTerm);
    }
    // a_1 - 1 is computed before taking its valuation.
    let shifted = phi - &RationalPoly::x();
    let points = valuation_points(&shifted, place);
    scan(points, d, place, CoefficientSource::Exact)
}

/// Same test from coefficient valuations of `φ(X) - X` alone, for base
/// fields where only `v(a_i) ∈ (1/e)ℚ` is known. Missing indices count as
/// zero coefficients.
pub fn check_criterion_abstract(
    valuations: &[(usize, Valuation)],
    d: usize,
    place: &Place,
) -> Result<BogomolovCertificate, BogomolovError> {
    if d < 2 {
        return Err(BogomolovError::DegreeTooSmall);
    }
    for idx in [0, d] {
        let finite = valuations
            .iter()
            .any(|(i, v)| *i == idx && !v.is_infinite());
        if !finite {
            return Err(BogomolovError::MissingIndex(idx));
        }
    }
    if valuations.iter().any(|(i, v)| *i > d && !v.is_infinite()) {
        return Err(BogomolovError::MissingIndex(d));
    }
    scan(valuations.to_vec(), d, place, CoefficientSource::Abstract)
}

fn scan(
    points: Vec<(usize, Valuation)>,
    d: usize,
    place: &Place,
    source: CoefficientSource,
) -> Result<BogomolovCertificate, BogomolovError> {
    let vd = points
        .iter()
        .find(|(i, _)| *i == d)
        .and_then(|(_, v)| v.finite().cloned())
        .ok_or(BogomolovError::MissingIndex(d))?;
    let slope_floor = vd / Rational::from_integer((d - 1).into());
    let polygon = newton_polygon(&points)?;

    let witness = polygon
        .segments()
        .iter()
        .enumerate()
        .find(|(_, s)| !place.in_value_group(&s.slope) && s.slope >= slope_floor)
        .map(|(k, s)| {
            let (a, b) = polygon.segment_vertices(k).expect("segment has endpoints");
            Witness {
                slope: s.slope.clone(),
                segment: [a.clone(), b.clone()],
                zeta_of_x_valuation: -s.slope.clone(),
            }
        });
    let verdict = if witness.is_some() {
        Verdict::StrongBogomolov
    } else {
        Verdict::Inconclusive
    };
    Ok(BogomolovCertificate {
        verdict,
        p: place.p(),
        e: place.e(),
        witness,
        polygon,
        slope_floor,
        degree: d,
        coefficients: source,
    })
}

/// Re-derives a certificate's claims from `φ` without trusting any of its
/// stored data: rebuilds the polygon from scratch, checks the witness slope
/// is one of its segment slopes with the stated endpoints, and rechecks both
/// inequalities. Returns false for inconclusive certificates.
pub fn verify_certificate(phi: &RationalPoly, cert: &BogomolovCertificate) -> bool {
    let Some(w) = &cert.witness else {
        return false;
    };
    let Ok(place) = Place::new(cert.p, cert.e) else {
        return false;
    };
    let Some(d) = phi.degree() else {
        return false;
    };
    if d < 2 || phi.coeff(0).is_zero() {
        return false;
    }
    let shifted = phi - &RationalPoly::x();
    let mut pts: Vec<(i64, Rational)> = shifted
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| (i as i64, place.val(c).finite().cloned().expect("nonzero")))
        .collect();
    pts.sort_by_key(|p| p.0);

    // Brute force: the segment's supporting line must lie weakly below
    // every point and pass through both endpoints.
    let [a, b] = &w.segment;
    let (ia, ib) = (a.0 as i64, b.0 as i64);
    if ib <= ia {
        return false;
    }
    let slope = (&b.1 - &a.1) / Rational::from_integer((ib - ia).into());
    if slope != w.slope {
        return false;
    }
    let line = |i: i64| &a.1 + &slope * Rational::from_integer((i - ia).into());
    if !pts.iter().all(|(i, v)| *v >= line(*i)) {
        return false;
    }
    let touches = |idx: i64, val: &Rational| pts.iter().any(|(i, v)| *i == idx && v == val);
    if !touches(ia, &a.1) || !touches(ib, &b.1) {
        return false;
    }
    // The segment must be maximal: no on-line point beyond its endpoints.
    if pts
        .iter()
        .any(|(i, v)| (*i < ia || *i > ib) && *v == line(*i))
    {
        return false;
    }
    let vd = place.val(&phi.coeff(d)).finite().cloned().expect("nonzero");
    let floor = vd / Rational::from_integer(((d - 1) as i64).into());
    let scaled = &w.slope * Rational::from_integer((cert.e as i64).into());
    !scaled.is_integer() && w.slope >= floor && w.zeta_of_x_valuation == -w.slope.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat};

    fn example_poly() -> RationalPoly {
        RationalPoly::new(vec![rat(1, 2), int(1), int(1), int(0), int(0), int(1)])
    }

    #[test]
    fn quintic_example_is_strong_with_slope_one_fifth() {
        let cert = check_criterion(&example_poly(), &Place::new(2, 1).unwrap()).unwrap();
        assert_eq!(cert.verdict, Verdict::StrongBogomolov);
        let w = cert.witness.as_ref().unwrap();
        assert_eq!(w.slope, rat(1, 5));
        assert_eq!(w.zeta_of_x_valuation, rat(-1, 5));
        assert_eq!(w.segment, [Vertex(0, int(-1)), Vertex(5, int(0))]);
        assert!(verify_certificate(&example_poly(), &cert));
    }

    #[test]
    fn quintic_example_with_ramification_two() {
        // 1/5 is not in (1/2)Z either.
        let cert = check_criterion(&example_poly(), &Place::new(2, 2).unwrap()).unwrap();
        assert!(cert.is_strong());
        let cert = check_criterion(&example_poly(), &Place::new(2, 5).unwrap()).unwrap();
        assert_eq!(cert.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn quadratic_example_has_half_slope() {
        let phi = RationalPoly::new(vec![rat(1, 2), int(1), int(1)]);
        let cert = check_criterion(&phi, &Place::new(2, 1).unwrap()).unwrap();
        assert_eq!(cert.witness.unwrap().slope, rat(1, 2));
        let cert = check_criterion(&phi, &Place::new(2, 2).unwrap()).unwrap();
        assert_eq!(cert.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn flat_polygon_is_inconclusive() {
        let phi = RationalPoly::from_ints(&[3, 0, 1]);
        let cert = check_criterion(&phi, &Place::new(5, 1).unwrap()).unwrap();
        assert_eq!(cert.verdict, Verdict::Inconclusive);
        assert!(cert.witness.is_none());
        assert!(!verify_certificate(&phi, &cert));
    }

    #[test]
    fn slope_below_floor_is_rejected() {
        // φ = 8X^3 + X + 1/2 at p = 2: ψ = 8X^3 + 1/2 has the single slope
        // 4/3, outside Z but below the floor v(8)/2 = 3/2.
        let phi = RationalPoly::new(vec![rat(1, 2), int(1), int(0), int(8)]);
        let cert = check_criterion(&phi, &Place::new(2, 1).unwrap()).unwrap();
        assert_eq!(cert.polygon.segments()[0].slope, rat(4, 3));
        assert_eq!(cert.slope_floor, rat(3, 2));
        assert_eq!(cert.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn leftmost_qualifying_slope_wins() {
        // Slopes 1/2 then 2/3, both admissible.
        let pts = vec![
            (0, Valuation::Finite(int(-2))),
            (2, Valuation::Finite(int(-1))),
            (5, Valuation::Finite(int(1))),
        ];
        let cert = check_criterion_abstract(&pts, 5, &Place::new(3, 1).unwrap()).unwrap();
        assert_eq!(cert.polygon.segments().len(), 2);
        assert_eq!(cert.witness.unwrap().slope, rat(1, 2));
    }

    #[test]
    fn abstract_examples() {
        let pl = Place::new(2, 1).unwrap();
        let pts = vec![
            (0, Valuation::Finite(int(-1))),
            (2, Valuation::Finite(int(0))),
            (5, Valuation::Finite(int(0))),
        ];
        let cert = check_criterion_abstract(&pts, 5, &pl).unwrap();
        assert_eq!(cert.witness.unwrap().slope, rat(1, 5));
        assert_eq!(cert.coefficients, CoefficientSource::Abstract);

        let flat = vec![
            (0, Valuation::Finite(int(0))),
            (1, Valuation::Finite(int(0))),
            (3, Valuation::Finite(int(0))),
        ];
        let cert = check_criterion_abstract(&flat, 3, &pl).unwrap();
        assert_eq!(cert.verdict, Verdict::Inconclusive);

        let pts = vec![(0, Valuation::Finite(int(-2))), (3, Valuation::Finite(int(0)))];
        let cert = check_criterion_abstract(&pts, 3, &Place::new(2, 3).unwrap()).unwrap();
        assert_eq!(cert.polygon.segments()[0].slope, rat(2, 3));
        assert_eq!(cert.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn errors() {
        let pl = Place::new(2, 1).unwrap();
        assert_eq!(
            check_criterion(&RationalPoly::from_ints(&[0, 1, 1]), &pl),
            Err(BogomolovError::ZeroConstantTerm)
        );
        assert_eq!(
            check_criterion(&RationalPoly::from_ints(&[1, 2]), &pl),
            Err(BogomolovError::DegreeTooSmall)
        );
        let pts = vec![(2, Valuation::Finite(int(0))), (3, Valuation::Finite(int(0)))];
        assert_eq!(
            check_criterion_abstract(&pts, 3, &pl),
            Err(BogomolovError::MissingIndex(0))
        );
    }

    #[test]
    fn certificate_json_round_trip() {
        let cert = check_criterion(&example_poly(), &Place::new(2, 1).unwrap()).unwrap();
        let js = serde_json::to_value(&cert).unwrap();
        assert_eq!(js["verdict"], "strong_bogomolov");
        assert_eq!(js["witness"]["slope"], "1/5");
        assert_eq!(js["witness"]["zeta_of_X_valuation"], "-1/5");
        assert_eq!(js["witness"]["segment"][0][1], "-1");
        let back: BogomolovCertificate = serde_json::from_value(js).unwrap();
        assert_eq!(back, cert);
    }
}
