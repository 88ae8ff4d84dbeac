//! Exact arithmetic for non-archimedean polynomial dynamics over the rationals.
//!
//! The crate works throughout in *valuation units*: a nonzero rational `x`
//! has additive `p`-adic valuation `v(x)` and absolute value `p^(-v(x))`.
//! Log-scale quantities (`σ · log p`) only appear when results are printed.
//!
//! Module map:
//!
//! * [`valuation`]: additive valuations, places `(p, e)`, value-group tests
//! * [`polynomial`]: dense exact polynomials, Taylor shifts, iteration, fixed points
//! * [`newton`]: Newton polygons and root valuations
//! * [`berkovich`]: Type I/II disc points, seminorms, pushforward, filled Julia membership
//! * [`bogomolov`]: the Newton-polygon criterion for the strong Bogomolov property
//! * [`heights`]: canonical heights of rational points, preperiodicity, surveys
//! * [`bounds`]: lcm-based and super-exponential height lower-bound curves
//! * [`cli`]: polynomial parser and command dispatch

pub mod arith;
pub mod berkovich;
pub mod bogomolov;
pub mod bounds;
pub mod cli;
pub mod heights;
pub mod newton;
pub mod polynomial;
pub mod valuation;

pub use arith::Rational;
pub use berkovich::{DiscPoint, MembershipVerdict};
pub use bogomolov::{BogomolovCertificate, Verdict};

pub use newton::NewtonPolygon;
pub use polynomial::RationalPoly;
pub use valuation::{Place, Valuation};
