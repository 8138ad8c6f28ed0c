//! Exact scalars: arbitrary-precision rationals, and rational linear
//! combinations of formal symbols that are assumed linearly independent over
//! the rationals together with `1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

pub type Rational = num_rational::BigRational;

/// Gaussian rationals, used only while realifying complex monomials.
pub type GaussianRational = Complex<Rational>;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn parse_rational(text: &str) -> Result<Rational, Error> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(Error::Literal {
            literal: text.to_string(),
            reason: "empty rational literal".into(),
        });
    }
    let compact: String = trimmed.chars().filter(|c| !c.is_whitespace()).collect();
    let compact = compact.strip_prefix('+').unwrap_or(&compact);
    Rational::from_str(compact).map_err(|e| Error::Literal {
        literal: text.to_string(),
        reason: format!("not a rational number ({e})"),
    })
}

pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Additive structure shared by every coefficient type a [`Multivector`] can
/// carry.
///
/// [`Multivector`]: crate::exterior::Multivector
pub trait Coeff: Clone + PartialEq + fmt::Debug {
    fn nil() -> Self;
    fn is_nil(&self) -> bool;
    fn add_assign_ref(&mut self, other: &Self);
    fn negated(&self) -> Self;
    fn scaled(&self, q: &Rational) -> Self;
}

/// Coefficients that can also be multiplied with each other.
pub trait RingCoeff: Coeff {
    fn unit() -> Self;
    fn times(&self, other: &Self) -> Self;
}

impl Coeff for Rational {
    fn nil() -> Self {
        Zero::zero()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn negated(&self) -> Self {
        -self.clone()
    }
    fn scaled(&self, q: &Rational) -> Self {
        self * q
    }
}

impl RingCoeff for Rational {
    fn unit() -> Self {
        One::one()
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
}

impl Coeff for GaussianRational {
    fn nil() -> Self {
        Complex::new(Zero::zero(), Zero::zero())
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(&self.re) && Zero::is_zero(&self.im)
    }
    fn add_assign_ref(&mut self, other: &Self) {
        self.re += &other.re;
        self.im += &other.im;
    }
    fn negated(&self) -> Self {
        Complex::new(-self.re.clone(), -self.im.clone())
    }
    fn scaled(&self, q: &Rational) -> Self {
        Complex::new(&self.re * q, &self.im * q)
    }
}

impl RingCoeff for GaussianRational {
    fn unit() -> Self {
        Complex::new(One::one(), Zero::zero())
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
}

/// `constant + Σ coeff·symbol` with rational coefficients.
///
/// Canonical form: no symbol maps to zero. Equality is structural, which is
/// exactly equality of real numbers under the independence assumption.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ScalarLC {
    constant: Rational,
    symbols: BTreeMap<String, Rational>,
}

impl ScalarLC {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(q: Rational) -> Self {
        ScalarLC {
            constant: q,
            symbols: BTreeMap::new(),
        }
    }

    pub fn symbol(name: &str) -> Self {
        Self::symbol_times(name, int(1))
    }

    pub fn symbol_times(name: &str, q: Rational) -> Self {
        let mut out = Self::zero();
        if !Zero::is_zero(&q) {
            out.symbols.insert(name.to_string(), q);
        }
        out
    }

    pub fn constant_part(&self) -> &Rational {
        &self.constant
    }

    pub fn symbol_terms(&self) -> &BTreeMap<String, Rational> {
        &self.symbols
    }

    pub fn is_rational(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        self.is_rational().then_some(&self.constant)
    }

    pub fn is_zero(&self) -> bool {
        Zero::is_zero(&self.constant) && self.symbols.is_empty()
    }

    pub fn add(&self, other: &ScalarLC) -> ScalarLC {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &ScalarLC) {
        self.constant += &other.constant;
        for (name, q) in &other.symbols {
            let entry = self.symbols.entry(name.clone()).or_insert_with(Zero::zero);
            *entry += q;
            if Zero::is_zero(entry) {
                self.symbols.remove(name);
            }
        }
    }

    pub fn scale(&self, q: &Rational) -> ScalarLC {
        if Zero::is_zero(q) {
            return ScalarLC::zero();
        }
        ScalarLC {
            constant: &self.constant * q,
            symbols: self
                .symbols
                .iter()
                .map(|(k, v)| (k.clone(), v * q))
                .collect(),
        }
    }

    pub fn neg(&self) -> ScalarLC {
        self.scale(&int(-1))
    }

    /// Product, defined only when at least one factor is rational.
    pub fn try_mul(&self, other: &ScalarLC) -> Option<ScalarLC> {
        if let Some(q) = other.as_rational() {
            Some(self.scale(q))
        } else {
            self.as_rational().map(|q| other.scale(q))
        }
    }

    pub fn symbol_names(&self) -> impl Iterator<Item = &str> {
        self.symbols.keys().map(String::as_str)
    }

    /// Parses literals such as `0`, `-3/2`, `b`, `1 - 2*b + c/3`.
    pub fn parse(text: &str) -> Result<ScalarLC, Error> {
        let bad = |reason: &str| Error::Literal {
            literal: text.to_string(),
            reason: reason.to_string(),
        };
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(bad("empty literal"));
        }
        // split into signed terms
        let mut terms: Vec<(bool, String)> = Vec::new();
        let mut current = String::new();
        let mut negative = false;
        for (i, ch) in compact.chars().enumerate() {
            if ch == '+' || ch == '-' {
                if i == 0 {
                    negative = ch == '-';
                    continue;
                }
                if current.is_empty() {
                    return Err(bad("dangling sign"));
                }
                terms.push((negative, std::mem::take(&mut current)));
                negative = ch == '-';
            } else {
                current.push(ch);
            }
        }
        if current.is_empty() {
            return Err(bad("dangling sign"));
        }
        terms.push((negative, current));

        let mut out = ScalarLC::zero();
        for (negative, term) in terms {
            let sign = if negative { int(-1) } else { int(1) };
            let (coeff, name) = split_term(&term).ok_or_else(|| bad("malformed term"))?;
            let coeff = match coeff {
                Some(c) => parse_rational(&c)?,
                None => int(1),
            } * sign;
            let piece = match name {
                Some(n) => {
                    let (n, div) = match n.split_once('/') {
                        Some((n, d)) => (n.to_string(), Some(parse_rational(d)?)),
                        None => (n, None),
                    };
                    if !is_identifier(&n) {
                        return Err(bad("symbol names must be identifiers"));
                    }
                    let coeff = match div {
                        Some(d) if Zero::is_zero(&d) => return Err(bad("division by zero")),
                        Some(d) => coeff / d,
                        None => coeff,
                    };
                    ScalarLC::symbol_times(&n, coeff)
                }
                None => ScalarLC::constant(coeff),
            };
            out.add_assign(&piece);
        }
        Ok(out)
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits `3/2*b`, `3/2b`, `b`, `b/3` or `7` into coefficient and symbol.
fn split_term(term: &str) -> Option<(Option<String>, Option<String>)> {
    if let Some((c, s)) = term.split_once('*') {
        return Some((Some(c.to_string()), Some(s.to_string())));
    }
    let first_alpha = term.find(|c: char| c.is_ascii_alphabetic() || c == '_');
    match first_alpha {
        None => Some((Some(term.to_string()), None)),
        Some(0) => Some((None, Some(term.to_string()))),
        Some(i) => Some((Some(term[..i].to_string()), Some(term[i..].to_string()))),
    }
}

impl Coeff for ScalarLC {
    fn nil() -> Self {
        ScalarLC::zero()
    }
    fn is_nil(&self) -> bool {
        ScalarLC::is_zero(self)
    }
    fn add_assign_ref(&mut self, other: &Self) {
        self.add_assign(other)
    }
    fn negated(&self) -> Self {
        ScalarLC::neg(self)
    }
    fn scaled(&self, q: &Rational) -> Self {
        ScalarLC::scale(self, q)
    }
}

impl From<Rational> for ScalarLC {
    fn from(q: Rational) -> Self {
        ScalarLC::constant(q)
    }
}

impl fmt::Display for ScalarLC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<(bool, String)> = Vec::new();
        if !Zero::is_zero(&self.constant) {
            parts.push((
                self.constant.is_negative(),
                format_rational(&self.constant.abs()),
            ));
        }
        for (name, q) in &self.symbols {
            let mag = q.abs();
            let body = if One::is_one(&mag) {
                name.clone()
            } else {
                format!("{}*{}", format_rational(&mag), name)
            };
            parts.push((q.is_negative(), body));
        }
        if parts.is_empty() {
            return write!(f, "0");
        }
        for (i, (neg, body)) in parts.iter().enumerate() {
            match (i, neg) {
                (0, true) => write!(f, "-{body}")?,
                (0, false) => write!(f, "{body}")?,
                (_, true) => write!(f, " - {body}")?,
                (_, false) => write!(f, " + {body}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ScalarLC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarLC({self})")
    }
}
