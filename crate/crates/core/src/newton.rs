//! Newton polygons in valuation coordinates.
//!
//! A point `(i, v(a_i))` is plotted for every nonzero coefficient and the
//! polygon is the lower boundary of their convex hull. A segment of slope
//! `σ` and horizontal length `ℓ` accounts for exactly `ℓ` roots of valuation
//! `-σ` (absolute value `p^σ`).

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{serde_rational, Rational};
use crate::polynomial::RationalPoly;
use crate::valuation::{Place, Valuation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NewtonError {
    #[error("degenerate polygon: fewer than two points with finite valuation")]
    Degenerate,
    #[error("duplicate index {0} in Newton polygon input")]
    DuplicateIndex(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex(pub usize, #[serde(with = "serde_rational")] pub Rational);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(with = "serde_rational")]
    pub slope: Rational,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewtonPolygon {
    vertices: Vec<Vertex>,
    segments: Vec<Segment>,
}

// Sign of the cross product (b - o) × (c - o); positive for a left turn.
fn turn(o: &Vertex, b: &Vertex, c: &Vertex) -> std::cmp::Ordering {
    let bx = Rational::from_integer((b.0 as i64 - o.0 as i64).into());
    let cx = Rational::from_integer((c.0 as i64 - o.0 as i64).into());
    let lhs = bx * (&c.1 - &o.1);
    let rhs = (&b.1 - &o.1) * cx;
    lhs.cmp(&rhs)
}

/// Lower convex hull of `(index, valuation)` pairs. Points at `+∞` are
/// dropped; collinear points are absorbed into a single segment.
pub fn newton_polygon(points: &[(usize, Valuation)]) -> Result<NewtonPolygon, NewtonError> {
    let mut finite: Vec<Vertex> = points
        .iter()
        .filter_map(|(i, v)| v.finite().map(|v| Vertex(*i, v.clone())))
        .collect();
    finite.sort_by_key(|v| v.0);
    let mut seen = std::collections::HashSet::new();
    for (i, _) in points {
        if !seen.insert(*i) {
            return Err(NewtonError::DuplicateIndex(*i));
        }
    }
    if finite.len() < 2 {
        return Err(NewtonError::Degenerate);
    }

    let mut hull: Vec<Vertex> = Vec::with_capacity(finite.len());
    for pt in finite {
        while hull.len() >= 2
            && turn(&hull[hull.len() - 2], &hull[hull.len() - 1], &pt) != std::cmp::Ordering::Greater
        {
            hull.pop();
        }
        hull.push(pt);
    }

    let segments = hull
        .windows(2)
        .map(|w| {
            let length = w[1].0 - w[0].0;
            let slope = (&w[1].1 - &w[0].1) / Rational::from_integer(length.into());
            Segment { slope, length }
        })
        .collect();
    Ok(NewtonPolygon {
        vertices: hull,
        segments,
    })
}

impl NewtonPolygon {
    /// Newton polygon of `poly` at `place`.
    pub fn of_poly(poly: &RationalPoly, place: &Place) -> Result<Self, NewtonError> {
        newton_polygon(&valuation_points(poly, place))
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Σ ℓ over all segments.
    pub fn width(&self) -> usize {
        self.segments.iter().map(|s| s.length).sum()
    }

    /// Endpoints of the `k`-th segment.
    pub fn segment_vertices(&self, k: usize) -> Option<(&Vertex, &Vertex)> {
        Some((self.vertices.get(k)?, self.vertices.get(k + 1)?))
    }

    /// Height of the polygon above index `x` (within its horizontal range).
    pub fn height_at(&self, x: usize) -> Option<Rational> {
        let first = self.vertices.first()?;
        let last = self.vertices.last()?;
        if x < first.0 || x > last.0 {
            return None;
        }
        for (k, seg) in self.segments.iter().enumerate() {
            let start = &self.vertices[k];
            if x <= start.0 + seg.length {
                let dx = Rational::from_integer(((x - start.0) as i64).into());
                return Some(&start.1 + &seg.slope * dx);
            }
        }
        Some(last.1.clone())
    }

    /// Whether `(i, v)` lies on or above the polygon.
    pub fn lies_above(&self, i: usize, v: &Valuation) -> bool {
        match (v, self.height_at(i)) {
            (Valuation::Infinite, _) => true,
            (Valuation::Finite(v), Some(h)) => *v >= h,
            (Valuation::Finite(_), None) => false,
        }
    }

    /// Multiset of root valuations: each segment `(σ, ℓ)` contributes `ℓ`
    /// roots of valuation `-σ`.
    pub fn root_valuations(&self) -> BTreeMap<Rational, usize> {
        root_valuations(&self.segments)
    }
}

pub fn root_valuations(segments: &[Segment]) -> BTreeMap<Rational, usize> {
    let mut out = BTreeMap::new();
    for s in segments {
        *out.entry(-s.slope.clone()).or_insert(0) += s.length;
    }
    out
}

/// `(i, v(a_i))` for every coefficient index, `+∞` for zero coefficients.
pub fn valuation_points(poly: &RationalPoly, place: &Place) -> Vec<(usize, Valuation)> {
    poly.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if c.is_zero() {
                (i, Valuation::Infinite)
            } else {
                (i, place.val(c))
            }
        })
        .collect()
}
