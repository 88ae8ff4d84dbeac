//! Command-line front end.
//!
//! Polynomials are written in `X` with exact rational coefficients, e.g.
//! `"X^5 + X^2 + X + 1/2"` or `"2*X^2 - 3/4"`. Data goes to stdout (JSON or
//! CSV), diagnostics to stderr. Exit codes: 0 success, 2 usage or parse
//! error, 3 precondition violation, 10 inconclusive Bogomolov criterion.

use std::ffi::OsString;
use std::fmt::Write as _;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{fmt_rational, parse_rational, serde_rational, Rational};
use crate::berkovich::{
    filled_julia_membership, max_point, seminorm, DiscPoint, MaxPoint, MaxPointOptions,
    MembershipVerdict, DEFAULT_MAX_ITER,
};
use crate::bogomolov::check_criterion;
use crate::bounds::{bound_table, BoundTable};
use crate::heights::{canonical_height, naive_bound_from_height, survey, HeightResult};
use crate::newton::NewtonPolygon;
use crate::polynomial::{RationalPoly, DEFAULT_DEGREE_CAP};
use crate::valuation::{Place, Valuation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at position {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

struct PolyParser<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    src: &'a str,
}

impl<'a> PolyParser<'a> {
    fn new(src: &'a str) -> Self {
        let chars = src
            .chars()
            .enumerate()
            .filter(|(_, c)| !c.is_whitespace())
            .collect();
        PolyParser { chars, pos: 0, src }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars
            .get(self.pos)
            .map_or(self.src.chars().count(), |&(i, _)| i)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            position: self.offset(),
            message: message.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> Option<BigInt> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        let s: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
        Some(s.parse().expect("ascii digits"))
    }

    fn coeff(&mut self) -> Result<Option<Rational>, ParseError> {
        let Some(num) = self.digits() else {
            return Ok(None);
        };
        if !self.eat('/') {
            return Ok(Some(Rational::from_integer(num)));
        }
        match self.digits() {
            Some(den) if den.is_zero() => {
                self.pos -= 1;
                self.err("zero denominator")
            }
            Some(den) => Ok(Some(Rational::new(num, den))),
            None => self.err("expected denominator after '/'"),
        }
    }

    fn var(&mut self) -> Result<Option<usize>, ParseError> {
        if !(self.eat('X') || self.eat('x')) {
            return Ok(None);
        }
        if !self.eat('^') {
            return Ok(Some(1));
        }
        if self.peek() == Some('-') {
            return self.err("negative exponents are not allowed");
        }
        let at = self.pos;
        let Some(e) = self.digits() else {
            return self.err("expected exponent after '^'");
        };
        match e.to_usize() {
            Some(e) if e as u64 <= DEFAULT_DEGREE_CAP => Ok(Some(e)),
            _ => {
                self.pos = at;
                self.err(format!("exponent exceeds the degree cap {DEFAULT_DEGREE_CAP}"))
            }
        }
    }

    fn term(&mut self) -> Result<(Rational, usize), ParseError> {
        match self.coeff()? {
            Some(c) => {
                let star = self.eat('*');
                match self.var()? {
                    Some(k) => Ok((c, k)),
                    None if star => self.err("expected 'X' after '*'"),
                    None => Ok((c, 0)),
                }
            }
            None => match self.var()? {
                Some(k) => Ok((Rational::from_integer(1.into()), k)),
                None => self.err("expected a coefficient or 'X'"),
            },
        }
    }

    fn expr(&mut self) -> Result<RationalPoly, ParseError> {
        let mut coeffs: Vec<Rational> = Vec::new();
        let mut negative = if self.eat('-') {
            true
        } else {
            self.eat('+');
            false
        };
        loop {
            let (c, k) = self.term()?;
            if coeffs.len() <= k {
                coeffs.resize(k + 1, Rational::zero());
            }
            coeffs[k] += if negative { -c } else { c };
            if self.eat('+') {
                negative = false;
            } else if self.eat('-') {
                negative = true;
            } else if self.peek().is_none() {
                break;
            } else {
                return self.err("expected '+', '-' or end of input");
            }
        }
        Ok(RationalPoly::new(coeffs))
    }
}

/// Parses `expr := ['+'|'-'] term (('+'|'-') term)*` with
/// `term := coeff | coeff '*'? var | var`, `var := 'X' ('^' nat)?` and
/// `coeff := int ('/' nat)?`. Whitespace is ignored and repeated powers are
/// summed. Positions in errors are character offsets into `text`.
pub fn parse_polynomial(text: &str) -> Result<RationalPoly, ParseError> {
    let mut p = PolyParser::new(text);
    if p.peek().is_none() {
        return p.err("empty polynomial");
    }
    p.expr()
}

fn poly_arg(s: &str) -> Result<RationalPoly, String> {
    parse_polynomial(s).map_err(|e| e.to_string())
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn radius_arg(s: &str) -> Result<Valuation, String> {
    s.parse::<Valuation>().map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "nadyn", version, about = "Exact non-archimedean polynomial dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Newton polygon of a polynomial at a prime.
    Np {
        #[arg(value_parser = poly_arg, allow_hyphen_values = true)]
        poly: RationalPoly,
        #[arg(long)]
        prime: u64,
    },
    /// Newton-polygon criterion for the strong Bogomolov property.
    Bogomolov {
        #[arg(value_parser = poly_arg, allow_hyphen_values = true)]
        poly: RationalPoly,
        #[arg(long)]
        prime: u64,
        /// Ramification index of the base place.
        #[arg(long, default_value_t = 1)]
        ram: u64,
    },
    /// Valuation of a polynomial at the disc point ζ(center, p^-rho).
    DiscEval {
        #[arg(value_parser = poly_arg, allow_hyphen_values = true)]
        poly: RationalPoly,
        #[arg(long, value_parser = rational_arg, allow_hyphen_values = true)]
        center: Rational,
        /// Radius exponent; "inf" for a classical point.
        #[arg(long, value_parser = radius_arg, allow_hyphen_values = true)]
        rho: Valuation,
        #[arg(long)]
        prime: u64,
    },
    /// Filled Julia set membership of a disc point.
    Member {
        #[arg(value_parser = poly_arg, allow_hyphen_values = true)]
        poly: RationalPoly,
        #[arg(long, value_parser = rational_arg, allow_hyphen_values = true)]
        center: Rational,
        #[arg(long, value_parser = radius_arg, allow_hyphen_values = true)]
        rho: Valuation,
        #[arg(long)]
        prime: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: u32,
    },
    /// Largest point of the filled Julia set above a classical point.
    Mphi {
        #[arg(value_parser = poly_arg, allow_hyphen_values = true)]
        poly: RationalPoly,
        #[arg(long, value_parser = rational_arg, allow_hyphen_values = true)]
        fixed: Rational,
        #[arg(long)]
        prime: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: u32,
    },
    /// Canonical height of a rational point with its local breakdown.
    Height {
        #[arg(value_parser = poly_arg, allow_hyphen_values = true)]
        poly: RationalPoly,
        #[arg(value_parser = rational_arg, allow_hyphen_values = true)]
        x: Rational,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
    },
    /// Canonical heights of all rationals up to a naive-height cap (CSV).
    Survey {
        #[arg(value_parser = poly_arg, allow_hyphen_values = true)]
        poly: RationalPoly,
        #[arg(long)]
        prime: u64,
        /// Log of the largest allowed max(|num|, den).
        #[arg(long, allow_hyphen_values = true)]
        max_height: f64,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
    },
    /// Table of height lower-bound curves against the ramification index.
    Bounds {
        #[arg(long)]
        max_e: u64,
        #[arg(long, default_value_t = 1.0)]
        constant: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscEvalReport {
    pub point: DiscPoint,
    pub poly: String,
    pub valuation: Valuation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberReport {
    pub point: DiscPoint,
    pub poly: String,
    #[serde(flatten)]
    pub verdict: MembershipVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MphiReport {
    pub poly: String,
    #[serde(with = "serde_rational")]
    pub center: Rational,
    pub p: u64,
    #[serde(flatten)]
    pub max_point: MaxPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightReport {
    pub poly: String,
    #[serde(with = "serde_rational")]
    pub x: Rational,
    #[serde(flatten)]
    pub height: HeightResult,
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn precondition(err: impl std::fmt::Display) -> Self {
        Outcome {
            code: EXIT_PRECONDITION,
            stdout: String::new(),
            stderr: format!("error: {err}\n"),
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return Outcome::precondition(err),
        }
    };
}

/// Runs the CLI on `argv` (including the program name) without touching the
/// process's own streams.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    Outcome::ok(text)
                }
                _ => Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                },
            };
        }
    };
    dispatch(cli.command)
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Np { poly, prime } => {
            let place = tri!(Place::rational(prime));
            Outcome::ok(json(&tri!(NewtonPolygon::of_poly(&poly, &place))))
        }
        Command::Bogomolov { poly, prime, ram } => {
            let place = tri!(Place::new(prime, ram));
            let cert = tri!(check_criterion(&poly, &place));
            Outcome {
                code: if cert.is_strong() { EXIT_OK } else { EXIT_INCONCLUSIVE },
                stdout: json(&cert),
                stderr: String::new(),
            }
        }
        Command::DiscEval {
            poly,
            center,
            rho,
            prime,
        } => {
            let place = tri!(Place::rational(prime));
            let point = DiscPoint::new(center, rho, place);
            let valuation = seminorm(&point, &poly);
            Outcome::ok(json(&DiscEvalReport {
                point,
                poly: poly.to_string(),
                valuation,
            }))
        }
        Command::Member {
            poly,
            center,
            rho,
            prime,
            max_iter,
        } => {
            let place = tri!(Place::rational(prime));
            let point = DiscPoint::new(center, rho, place);
            let verdict = tri!(filled_julia_membership(&poly, &point, max_iter));
            Outcome::ok(json(&MemberReport {
                point,
                poly: poly.to_string(),
                verdict,
            }))
        }
        Command::Mphi {
            poly,
            fixed,
            prime,
            max_iter,
        } => {
            let place = tri!(Place::rational(prime));
            let opts = MaxPointOptions {
                max_iter,
                ..MaxPointOptions::default()
            };
            let mp = tri!(max_point(&poly, &fixed, &place, &opts));
            Outcome::ok(json(&MphiReport {
                poly: poly.to_string(),
                center: fixed,
                p: prime,
                max_point: mp,
            }))
        }
        Command::Height { poly, x, eps } => {
            let height = tri!(canonical_height(&poly, &x, eps));
            Outcome::ok(json(&HeightReport {
                poly: poly.to_string(),
                x,
                height,
            }))
        }
        Command::Survey {
            poly,
            prime,
            max_height,
            eps,
        } => {
            let place = tri!(Place::rational(prime));
            if !(max_height.is_finite() && max_height >= 0.0) {
                return Outcome::precondition(format!(
                    "max height must be a nonnegative number, got {max_height}"
                ));
            }
            let n = naive_bound_from_height(max_height);
            let s = tri!(survey(&poly, &place, n, eps));
            Outcome {
                code: EXIT_OK,
                stdout: s.to_csv(),
                stderr: survey_summary(&poly, &s),
            }
        }
        Command::Bounds {
            max_e,
            constant,
            format,
        } => {
            let table: BoundTable = tri!(bound_table(max_e, constant));
            let stdout = match format {
                Format::Csv => table.to_csv(),
                Format::Json => json(&table),
            };
            let mut stderr = String::new();
            match table.crossover {
                Some(e) => writeln!(stderr, "crossover: lcm bound exceeds super-exponential bound from e = {e}"),
                None => writeln!(stderr, "crossover: not reached for e <= {max_e}"),
            }
            .expect("write to string");
            Outcome {
                code: EXIT_OK,
                stdout,
                stderr,
            }
        }
    }
}

/// Threshold below which a positive height counts as "small" in summaries.
pub const SMALL_HEIGHT: f64 = 1e-6;

fn survey_summary(poly: &RationalPoly, s: &crate::heights::Survey) -> String {
    let mut out = String::new();
    let pre: Vec<String> = s.preperiodic_points().into_iter().map(fmt_rational).collect();
    let small = s
        .records
        .iter()
        .filter(|r| !r.preperiodic && r.canonical_height < SMALL_HEIGHT)
        .count();
    let _ = writeln!(
        out,
        "survey of {} rationals with max(|num|, den) <= {} for {}",
        s.records.len(),
        s.max_naive,
        poly
    );
    let _ = writeln!(out, "preperiodic points: [{}]", pre.join(", "));
    if let Some(m) = s.min_positive() {
        let _ = writeln!(
            out,
            "smallest positive height: {} at x = {} (error <= {:.1e})",
            m.canonical_height,
            fmt_rational(&m.x),
            m.error_bound
        );
    }
    let min_local = s
        .records
        .iter()
        .filter(|r| !r.preperiodic)
        .map(|r| r.local_at_p)
        .fold(f64::INFINITY, f64::min);
    if min_local.is_finite() {
        let _ = writeln!(
            out,
            "smallest {}-adic local contribution at a non-preperiodic point: {}",
            s.p, min_local
        );
    }
    let _ = writeln!(out, "points with 0 < height < {SMALL_HEIGHT:e}: {small}");
    let _ = writeln!(
        out,
        "note: desk-scale evidence over a finite range, not a proof"
    );
    out
}
