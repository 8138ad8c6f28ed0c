//! Sparse exterior algebra on the dual basis `α¹,…,αⁿ` of the fiber.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::SparseVec;
use crate::scalar::{format_rational, int, Coeff, Rational, RingCoeff, ScalarLC};

/// Largest supported number of exterior generators.
pub const MAX_GENERATORS: usize = 32;

/// A basis monomial `α^{i₁…i_k}`, `i₁ < … < i_k`, stored as a bit set
/// (bit `i-1` for `αⁱ`).
///
/// Ordered lexicographically on the increasing index lists, so for blades of
/// equal degree `α^{12} < α^{13} < α^{23}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Blade(u32);

impl Blade {
    pub const EMPTY: Blade = Blade(0);

    pub fn from_bits(bits: u32) -> Blade {
        Blade(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// `α^i` for a 1-based index.
    pub fn single(index: usize) -> Blade {
        assert!((1..=MAX_GENERATORS).contains(&index), "index {index} out of range");
        Blade(1 << (index - 1))
    }

    /// Sorts the 1-based `indices`, returning the sign of the sorting
    /// permutation, or `None` if an index repeats.
    pub fn from_indices(indices: &[usize]) -> Option<(i32, Blade)> {
        let mut sign = 1;
        let mut bits = 0u32;
        for &i in indices {
            let b = Blade::single(i).0;
            if bits & b != 0 {
                return None;
            }
            if (bits & !(b | (b - 1))).count_ones() % 2 == 1 {
                sign = -sign;
            }
            bits |= b;
        }
        Some((sign, Blade(bits)))
    }

    pub fn degree(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, index: usize) -> bool {
        self.0 & (1 << (index - 1)) != 0
    }

    /// 1-based indices in increasing order.
    pub fn indices(self) -> Vec<usize> {
        (0..32).filter(|i| self.0 & (1 << i) != 0).map(|i| i + 1).collect()
    }

    /// `α^self ∧ α^other = sign · α^{self ∪ other}`.
    pub fn wedge(self, other: Blade) -> Option<(i32, Blade)> {
        if self.0 & other.0 != 0 {
            return None;
        }
        let mut swaps = 0;
        let mut rest = other.0;
        while rest != 0 {
            let low = rest & rest.wrapping_neg();
            swaps += (self.0 & !(low | (low - 1))).count_ones();
            rest &= rest - 1;
        }
        let sign = if swaps % 2 == 0 { 1 } else { -1 };
        Some((sign, Blade(self.0 | other.0)))
    }

    /// All blades of the given degree over `n` generators, in increasing
    /// order.
    pub fn all_of_degree(n: usize, degree: usize) -> Vec<Blade> {
        let mut out = Vec::new();
        if degree > n {
            return out;
        }
        let mut idx: Vec<usize> = (1..=degree).collect();
        loop {
            out.push(Blade::from_indices(&idx).unwrap().1);
            // next combination
            let mut i = degree;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if idx[i] < n - (degree - 1 - i) {
                    idx[i] += 1;
                    for j in i + 1..degree {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
}

impl Ord for Blade {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.0 == other.0 {
            return Ordering::Equal;
        }
        let diff = self.0 ^ other.0;
        let low = diff & diff.wrapping_neg();
        if self.0 & low != 0 {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
}

impl PartialOrd for Blade {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Blade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            return write!(f, "1");
        }
        let idx: Vec<String> = self.indices().iter().map(|i| i.to_string()).collect();
        write!(f, "a{{{}}}", idx.join(","))
    }
}

impl fmt::Debug for Blade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Homogeneous element of the exterior algebra.
#[derive(Clone, PartialEq)]
pub struct Multivector<C: Coeff = Rational> {
    degree: usize,
    terms: BTreeMap<Blade, C>,
}

impl<C: Coeff> Multivector<C> {
    pub fn zero(degree: usize) -> Self {
        Multivector {
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_blade(blade: Blade, coeff: C) -> Self {
        let mut out = Self::zero(blade.degree());
        out.add_term(blade, coeff);
        out
    }

    /// Builds a homogeneous element from `(blade, coeff)` pairs; repeated
    /// blades are summed.
    pub fn from_terms<I: IntoIterator<Item = (Blade, C)>>(degree: usize, terms: I) -> Self {
        let mut out = Self::zero(degree);
        for (b, c) in terms {
            assert_eq!(b.degree(), degree, "blade {b} has the wrong degree");
            out.add_term(b, c);
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Blade, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, blade: Blade) -> C {
        self.terms.get(&blade).cloned().unwrap_or_else(C::nil)
    }

    pub fn support(&self) -> impl Iterator<Item = Blade> + '_ {
        self.terms.keys().copied()
    }

    /// Highest generator index occurring in any term.
    pub fn max_index(&self) -> usize {
        self.terms
            .keys()
            .map(|b| 32 - b.0.leading_zeros() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn add_term(&mut self, blade: Blade, coeff: C) {
        debug_assert_eq!(blade.degree(), self.degree);
        if coeff.is_nil() {
            return;
        }
        match self.terms.get_mut(&blade) {
            Some(c) => {
                c.add_assign_ref(&coeff);
                if c.is_nil() {
                    self.terms.remove(&blade);
                }
            }
            None => {
                self.terms.insert(blade, coeff);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        if other.is_zero() {
            return;
        }
        assert_eq!(self.degree, other.degree, "adding multivectors of different degree");
        for (b, c) in &other.terms {
            self.add_term(*b, c.clone());
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|c| c.negated())
    }

    pub fn scale(&self, q: &Rational) -> Self {
        let mut out = Self::zero(self.degree);
        for (b, c) in &self.terms {
            out.add_term(*b, c.scaled(q));
        }
        out
    }

    pub fn map<D: Coeff, F: Fn(&C) -> D>(&self, f: F) -> Multivector<D> {
        let mut out = Multivector::zero(self.degree);
        for (b, c) in &self.terms {
            out.add_term(*b, f(c));
        }
        out
    }
}

impl Multivector<Rational> {
    /// `α^{i₁} ∧ … ∧ α^{i_k}` for 1-based indices in any order.
    pub fn basis(indices: &[usize]) -> Self {
        match Blade::from_indices(indices) {
            Some((sign, b)) => Multivector::from_blade(b, int(sign as i64)),
            None => Multivector::zero(indices.len()),
        }
    }

    pub fn to_sparse(&self) -> SparseVec<Blade> {
        self.terms.iter().map(|(b, c)| (*b, c.clone())).collect()
    }

    pub fn from_sparse(degree: usize, v: &SparseVec<Blade>) -> Self {
        Multivector::from_terms(degree, v.iter().map(|(b, c)| (*b, c.clone())))
    }
}

impl<C: RingCoeff> Multivector<C> {
    pub fn one() -> Self {
        Multivector::from_blade(Blade::EMPTY, C::unit())
    }

    /// Graded-commutative product with Koszul signs.
    pub fn wedge(&self, other: &Self) -> Self {
        let mut out = Multivector::zero(self.degree + other.degree);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if let Some((sign, blade)) = a.wedge(*b) {
                    let c = ca.times(cb);
                    out.add_term(blade, if sign < 0 { c.negated() } else { c });
                }
            }
        }
        out
    }

    pub fn power(&self, exponent: usize) -> Self {
        let mut out = Multivector::one();
        for _ in 0..exponent {
            out = out.wedge(self);
        }
        out
    }
}

/// Coefficient of `α^{1…n}` in a top-degree element.
pub fn top_coefficient<C: Coeff>(x: &Multivector<C>, n: usize) -> Result<C> {
    if x.degree != n {
        return Err(Error::NotTopDegree {
            degree: x.degree,
            n,
        });
    }
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    Ok(x.coeff(Blade(full)))
}

impl fmt::Display for Multivector<ScalarLC> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(b, c)| format!("({c})*{b}"))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl fmt::Display for Multivector<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_form(self))
    }
}

impl<C: Coeff> fmt::Debug for Multivector<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

/// Renders a rational form as `a{2,3} - 1/2*a{4,5}`.
pub fn format_form(x: &Multivector<Rational>) -> String {
    use num_traits::{One, Signed};
    if x.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (b, c)) in x.terms().enumerate() {
        let mag = c.abs();
        let body = if mag.is_one() {
            b.to_string()
        } else {
            format!("{}*{}", format_rational(&mag), b)
        };
        match (i, c.is_negative()) {
            (0, true) => out.push_str(&format!("-{body}")),
            (0, false) => out.push_str(&body),
            (_, true) => out.push_str(&format!(" - {body}")),
            (_, false) => out.push_str(&format!(" + {body}")),
        }
    }
    out
}

/// A linear endomorphism of the degree-1 forms, given by the images of
/// `α¹,…,αⁿ`.
#[derive(Clone, PartialEq, Debug)]
pub struct LinearEndo<C: Coeff = Rational> {
    images: Vec<Multivector<C>>,
}

impl<C: Coeff> LinearEndo<C> {
    pub fn zero(n: usize) -> Self {
        LinearEndo {
            images: vec![Multivector::zero(1); n],
        }
    }

    pub fn from_images(images: Vec<Multivector<C>>) -> Self {
        assert!(images.iter().all(|m| m.degree() == 1), "images must have degree 1");
        LinearEndo { images }
    }

    pub fn dim(&self) -> usize {
        self.images.len()
    }

    /// Image of `α^index`, 1-based.
    pub fn image(&self, index: usize) -> &Multivector<C> {
        &self.images[index - 1]
    }

    pub fn set_image(&mut self, index: usize, image: Multivector<C>) {
        assert_eq!(image.degree(), 1);
        self.images[index - 1] = image;
    }

    /// Coefficient of `α^to` in the image of `α^from`.
    pub fn entry(&self, from: usize, to: usize) -> C {
        self.images[from - 1].coeff(Blade::single(to))
    }

    pub fn is_zero(&self) -> bool {
        self.images.iter().all(|m| m.is_zero())
    }
}

impl LinearEndo<Rational> {
    pub fn identity(n: usize) -> Self {
        LinearEndo {
            images: (1..=n).map(|i| Multivector::basis(&[i])).collect(),
        }
    }

    pub fn apply(&self, x: &Multivector<Rational>) -> Multivector<Rational> {
        assert_eq!(x.degree(), 1);
        let mut out = Multivector::zero(1);
        for (b, c) in x.terms() {
            out.add_assign(&self.images[b.indices()[0] - 1].scale(c));
        }
        out
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        LinearEndo {
            images: other.images.iter().map(|m| self.apply(m)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        LinearEndo {
            images: self
                .images
                .iter()
                .zip(&other.images)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        LinearEndo {
            images: self.images.iter().map(|m| m.scale(q)).collect(),
        }
    }

    /// Smallest `k ≥ 1` with `selfᵏ = 0`, if it exists.
    pub fn nilpotency_index(&self) -> Option<usize> {
        let mut power = self.clone();
        for k in 1..=self.dim().max(1) {
            if power.is_zero() {
                return Some(k);
            }
            power = power.compose(self);
        }
        power.is_zero().then_some(self.dim() + 1)
    }

    /// Functorial extension `x₁∧…∧x_k ↦ L(x₁)∧…∧L(x_k)`.
    pub fn exterior_power_apply(&self, x: &Multivector<Rational>) -> Multivector<Rational> {
        let mut out = Multivector::zero(x.degree());
        for (b, c) in x.terms() {
            let mut prod = Multivector::one();
            for i in b.indices() {
                prod = prod.wedge(&self.images[i - 1]);
            }
            out.add_assign(&prod.scale(c));
        }
        out
    }
}

/// Extension of `l` to the whole exterior algebra as a degree-0 derivation:
/// `L(x∧y) = L(x)∧y + x∧L(y)`.
pub fn derivation_apply<C: Coeff>(l: &LinearEndo<Rational>, x: &Multivector<C>) -> Multivector<C> {
    let mut out = Multivector::zero(x.degree());
    for (blade, c) in x.terms() {
        for i in blade.indices() {
            let rest = Blade(blade.0 & !(1 << (i - 1)));
            for (target, q) in l.images[i - 1].terms() {
                let j = target.indices()[0];
                if j != i && rest.contains(j) {
                    continue;
                }
                // moving α^j from the slot of α^i to its sorted position
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                let between = if hi - lo > 1 {
                    let mask = ((1u32 << (hi - 1)) - 1) & !((1u32 << lo) - 1);
                    (rest.0 & mask).count_ones()
                } else {
                    0
                };
                let coeff = c.scaled(q);
                let coeff = if between % 2 == 1 { coeff.negated() } else { coeff };
                out.add_term(Blade(rest.0 | target.0), coeff);
            }
        }
    }
    out
}
