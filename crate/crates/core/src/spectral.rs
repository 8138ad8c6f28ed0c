//! Problem instances: the adjoint action of the acting generator in real
//! block normal form, together with lattice resonance data.
//!
//! Conventions, fixed once here:
//!
//! * A `real` block of size `s` and eigenvalue `λ` is the Jordan block with
//!   `λ` on the diagonal and `ad(e_{j+1}) = λ e_{j+1} + e_j`.
//! * A `complex` block of size `s` with eigenvalue `a ± iβ` occupies `2s`
//!   coordinates: `s` cells `[[a, β], [-β, a]]` on the diagonal and `I₂` on
//!   the block superdiagonal.
//! * `β` is written as `im_resonant · 2π/t + im_symbolic`, so the rotation
//!   part of `exp(t·ad)` is trivial exactly when `im_symbolic = 0` and
//!   `im_resonant` is an integer.
//! * Forms transform by the transpose: the image of `αⁱ` is `Σ_j ad_{ij} α^j`.
//!   In particular the nilpotent part maps `α^j ↦ α^{j+1}` inside a block.

use serde::{Deserialize, Serialize};

use num_complex::Complex;
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exterior::{Blade, LinearEndo, Multivector, MAX_GENERATORS};
use crate::scalar::{
    format_rational, int, parse_rational, GaussianRational, Rational, ScalarLC,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Real,
    Complex,
}

/// On-disk form of a block; every scalar is a string literal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockDocument {
    pub kind: BlockKind,
    pub size: usize,
    #[serde(default = "zero_literal")]
    pub re: String,
    #[serde(default = "zero_literal")]
    pub im_resonant: String,
    #[serde(default = "zero_literal")]
    pub im_symbolic: String,
}

/// On-disk form of a problem instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    pub n: usize,
    #[serde(default)]
    pub symbols: Vec<String>,
    #[serde(default)]
    pub lattice_label: String,
    pub blocks: Vec<BlockDocument>,
}

fn zero_literal() -> String {
    "0".to_string()
}

/// Eigenvalue datum of a (complexified) dual generator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Weight {
    pub re: ScalarLC,
    /// Imaginary part in units of `2π/t`.
    pub im_resonant: Rational,
    /// Non-resonant imaginary part; its constant term is always zero.
    pub im_symbolic: ScalarLC,
}

impl Weight {
    pub fn zero() -> Self {
        Weight {
            re: ScalarLC::zero(),
            im_resonant: Rational::zero(),
            im_symbolic: ScalarLC::zero(),
        }
    }

    pub fn real(re: ScalarLC) -> Self {
        Weight {
            re,
            ..Weight::zero()
        }
    }

    pub fn add(&self, other: &Weight) -> Weight {
        Weight {
            re: self.re.add(&other.re),
            im_resonant: &self.im_resonant + &other.im_resonant,
            im_symbolic: self.im_symbolic.add(&other.im_symbolic),
        }
    }

    pub fn conjugate(&self) -> Weight {
        Weight {
            re: self.re.clone(),
            im_resonant: -self.im_resonant.clone(),
            im_symbolic: self.im_symbolic.neg(),
        }
    }

    /// `e^{λt} = 1`: the semisimple part of the monodromy fixes the generator.
    pub fn is_resonant(&self) -> bool {
        self.re.is_zero() && self.im_symbolic.is_zero() && self.im_resonant.is_integer()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub kind: BlockKind,
    pub size: usize,
    /// For complex blocks, the eigenvalue `a + iβ`; the conjugate is implied.
    pub eigen: Weight,
    /// 0-based index of the first real coordinate.
    pub offset: usize,
}

impl Block {
    pub fn real_dim(&self) -> usize {
        match self.kind {
            BlockKind::Real => self.size,
            BlockKind::Complex => 2 * self.size,
        }
    }

    /// 1-based coordinates covered by the block.
    pub fn coordinates(&self) -> std::ops::RangeInclusive<usize> {
        self.offset + 1..=self.offset + self.real_dim()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlmostAbelianSpec {
    pub n: usize,
    pub symbols: Vec<String>,
    pub lattice_label: String,
    pub blocks: Vec<Block>,
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        field: field.into(),
        message: message.into(),
    }
}

/// Parses and validates a JSON problem document.
pub fn parse_spec(text: &str) -> Result<AlmostAbelianSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: SpecDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(if path == "." { "<document>".to_string() } else { path }, e.into_inner().to_string())
    })?;
    AlmostAbelianSpec::from_document(&doc)
}

impl AlmostAbelianSpec {
    pub fn from_document(doc: &SpecDocument) -> Result<Self> {
        if doc.n == 0 || doc.n >= MAX_GENERATORS {
            return Err(schema(
                "n",
                format!("fiber dimension must lie in 1..={}", MAX_GENERATORS - 1),
            ));
        }
        let mut symbols = Vec::new();
        for (i, s) in doc.symbols.iter().enumerate() {
            let field = format!("symbols[{i}]");
            let parsed = ScalarLC::parse(s).map_err(|e| schema(&field, e.to_string()))?;
            if parsed != ScalarLC::symbol(s) {
                return Err(schema(field, format!("`{s}` is not a symbol name")));
            }
            if symbols.contains(s) {
                return Err(schema(field, format!("symbol `{s}` declared twice")));
            }
            symbols.push(s.clone());
        }

        let mut blocks = Vec::new();
        let mut offset = 0;
        for (i, b) in doc.blocks.iter().enumerate() {
            let field = |name: &str| format!("blocks[{i}].{name}");
            if b.size == 0 {
                return Err(schema(field("size"), "block size must be positive"));
            }
            let lc = |name: &str, text: &str| -> Result<ScalarLC> {
                let v = ScalarLC::parse(text).map_err(|e| schema(field(name), e.to_string()))?;
                for s in v.symbol_names() {
                    if !symbols.iter().any(|d| d == s) {
                        return Err(Error::UndeclaredSymbol {
                            symbol: s.to_string(),
                            field: field(name),
                        });
                    }
                }
                Ok(v)
            };
            let re = lc("re", &b.re)?;
            let im_symbolic = lc("im_symbolic", &b.im_symbolic)?;
            let im_resonant = parse_rational(&b.im_resonant)
                .map_err(|e| schema(field("im_resonant"), e.to_string()))?;
            if !im_symbolic.constant_part().is_zero() {
                return Err(schema(
                    field("im_symbolic"),
                    "rational imaginary parts belong in im_resonant",
                ));
            }
            match b.kind {
                BlockKind::Real => {
                    if !im_resonant.is_zero() || !im_symbolic.is_zero() {
                        return Err(schema(
                            field("kind"),
                            "real blocks cannot have imaginary parts",
                        ));
                    }
                }
                BlockKind::Complex => {
                    if im_resonant.is_zero() && im_symbolic.is_zero() {
                        return Err(schema(
                            field("kind"),
                            "complex blocks need a nonzero imaginary part",
                        ));
                    }
                }
            }
            let block = Block {
                kind: b.kind,
                size: b.size,
                eigen: Weight {
                    re,
                    im_resonant,
                    im_symbolic,
                },
                offset,
            };
            offset += block.real_dim();
            blocks.push(block);
        }
        if offset != doc.n {
            return Err(Error::DimensionMismatch {
                n: doc.n,
                blocks: offset,
            });
        }
        Ok(AlmostAbelianSpec {
            n: doc.n,
            symbols,
            lattice_label: doc.lattice_label.clone(),
            blocks,
        })
    }

    pub fn to_document(&self) -> SpecDocument {
        SpecDocument {
            n: self.n,
            symbols: self.symbols.clone(),
            lattice_label: self.lattice_label.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockDocument {
                    kind: b.kind,
                    size: b.size,
                    re: b.eigen.re.to_string(),
                    im_resonant: format_rational(&b.eigen.im_resonant),
                    im_symbolic: b.eigen.im_symbolic.to_string(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("documents always serialize")
    }

    /// Dimension of the solvmanifold, `n + 1`.
    pub fn total_dim(&self) -> usize {
        self.n + 1
    }

    /// Real part of the eigenvalue attached to each real coordinate.
    pub fn coordinate_real_parts(&self) -> Vec<ScalarLC> {
        let mut out = Vec::with_capacity(self.n);
        for b in &self.blocks {
            out.extend(std::iter::repeat_n(b.eigen.re.clone(), b.real_dim()));
        }
        out
    }

    /// Whether every complex block is a resonant rotation, the hypothesis
    /// under which the completely solvable modification applies.
    pub fn modification_hypothesis(&self) -> Result<()> {
        for (i, b) in self.blocks.iter().enumerate() {
            if b.kind == BlockKind::Complex {
                if !b.eigen.im_symbolic.is_zero() {
                    return Err(Error::ModificationHypothesis(format!(
                        "block {i} has a symbolic imaginary part {}",
                        b.eigen.im_symbolic
                    )));
                }
                if !b.eigen.im_resonant.is_integer() {
                    return Err(Error::ModificationHypothesis(format!(
                        "block {i} has non-integer resonance {}",
                        format_rational(&b.eigen.im_resonant)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A generator of the complexified dual space together with its weight.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexGenerator {
    pub label: String,
    pub weight: Weight,
    /// The generator written in the real coordinates `αⁱ`.
    pub form: Multivector<GaussianRational>,
}

fn gaussian(re: i64, im: i64) -> GaussianRational {
    Complex::new(int(re), int(im))
}

/// One weight per complexified generator: real coordinates keep their
/// eigenvalue; each complex cell on `(α^p, α^{p+1})` yields
/// `α^p - iα^{p+1}` with weight `a + iβ` and `α^p + iα^{p+1}` with `a - iβ`.
pub fn generator_weights(spec: &AlmostAbelianSpec) -> Vec<ComplexGenerator> {
    let mut out = Vec::with_capacity(spec.n);
    for b in &spec.blocks {
        match b.kind {
            BlockKind::Real => {
                for i in b.coordinates() {
                    out.push(ComplexGenerator {
                        label: format!("a{i}"),
                        weight: b.eigen.clone(),
                        form: Multivector::from_blade(Blade::single(i), gaussian(1, 0)),
                    });
                }
            }
            BlockKind::Complex => {
                for cell in 0..b.size {
                    let p = b.offset + 2 * cell + 1;
                    for (sign, weight, suffix) in
                        [(-1, b.eigen.clone(), "+"), (1, b.eigen.conjugate(), "-")]
                    {
                        let form = Multivector::from_terms(
                            1,
                            [
                                (Blade::single(p), gaussian(1, 0)),
                                (Blade::single(p + 1), gaussian(0, sign)),
                            ],
                        );
                        out.push(ComplexGenerator {
                            label: format!("z{p}{}", suffix),
                            weight,
                            form,
                        });
                    }
                }
            }
        }
    }
    out
}

/// The nilpotent part `N^t` of the action on forms.
pub fn nilpotent_log(spec: &AlmostAbelianSpec) -> LinearEndo {
    let mut out = LinearEndo::zero(spec.n);
    for b in &spec.blocks {
        let first = b.offset + 1;
        match b.kind {
            BlockKind::Real => {
                for j in 0..b.size.saturating_sub(1) {
                    out.set_image(first + j, Multivector::basis(&[first + j + 1]));
                }
            }
            BlockKind::Complex => {
                for cell in 0..b.size.saturating_sub(1) {
                    for r in 0..2 {
                        let from = first + 2 * cell + r;
                        out.set_image(from, Multivector::basis(&[from + 2]));
                    }
                }
            }
        }
    }
    out
}

/// The action of the completely solvable modification on forms: the real
/// parts on the diagonal plus the nilpotent part, rotations dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct ModifiedMatrix {
    pub diagonal: Vec<ScalarLC>,
    pub nilpotent: LinearEndo,
}

impl ModifiedMatrix {
    pub fn n(&self) -> usize {
        self.diagonal.len()
    }

    pub fn to_endo(&self) -> LinearEndo<ScalarLC> {
        let images = (1..=self.n())
            .map(|i| {
                let mut m: Multivector<ScalarLC> =
                    self.nilpotent.image(i).map(|c| ScalarLC::constant(c.clone()));
                m.add_term(Blade::single(i), self.diagonal[i - 1].clone());
                m
            })
            .collect();
        LinearEndo::from_images(images)
    }

    /// Sum of the real parts over the coordinates of `blade`.
    pub fn blade_weight(&self, blade: Blade) -> ScalarLC {
        let mut w = ScalarLC::zero();
        for i in blade.indices() {
            w.add_assign(&self.diagonal[i - 1]);
        }
        w
    }

    pub fn trace(&self) -> ScalarLC {
        let mut t = ScalarLC::zero();
        for d in &self.diagonal {
            t.add_assign(d);
        }
        t
    }

    pub fn is_unimodular(&self) -> bool {
        self.trace().is_zero()
    }

    /// Derivation extension to all degrees.
    pub fn derivation_apply(&self, x: &Multivector<ScalarLC>) -> Result<Multivector<ScalarLC>> {
        let mut out = crate::exterior::derivation_apply(&self.nilpotent, x);
        for (b, c) in x.terms() {
            let w = self.blade_weight(*b);
            let term = w.try_mul(c).ok_or_else(|| {
                Error::NonlinearSymbolic(format!("weight ({w}) times coefficient ({c})"))
            })?;
            out.add_term(*b, term);
        }
        Ok(out)
    }
}

pub fn modified_matrix(spec: &AlmostAbelianSpec) -> Result<ModifiedMatrix> {
    spec.modification_hypothesis()?;
    Ok(ModifiedMatrix {
        diagonal: spec.coordinate_real_parts(),
        nilpotent: nilpotent_log(spec),
    })
}

/// The monodromy on degree-1 forms with the factor `t` dropped from the
/// unipotent part: `R · exp(N^t)`, where `R` is the rotation by
/// `2π·im_resonant` on each complex cell.
///
/// Only available when the result is a rational matrix: every real part is
/// zero, no symbolic imaginary part occurs, and every resonance is a multiple
/// of `1/4`.
pub fn rational_monodromy(spec: &AlmostAbelianSpec) -> Result<LinearEndo> {
    let mut rotation = LinearEndo::identity(spec.n);
    for (i, b) in spec.blocks.iter().enumerate() {
        if !b.eigen.re.is_zero() {
            return Err(Error::OracleUnavailable(format!(
                "block {i} has nonzero real part {}",
                b.eigen.re
            )));
        }
        if !b.eigen.im_symbolic.is_zero() {
            return Err(Error::OracleUnavailable(format!(
                "block {i} has a symbolic imaginary part"
            )));
        }
        let quarter_turns = &b.eigen.im_resonant * int(4);
        if !quarter_turns.is_integer() {
            return Err(Error::OracleUnavailable(format!(
                "block {i} rotates by a non-rational angle"
            )));
        }
        if b.kind == BlockKind::Complex {
            let k = (quarter_turns.to_integer() % BigInt::from(4))
                .to_i64()
                .expect("small remainder");
            let (cos, sin) = match k.rem_euclid(4) {
                0 => (1, 0),
                1 => (0, 1),
                2 => (-1, 0),
                _ => (0, -1),
            };
            for cell in 0..b.size {
                let p = b.offset + 2 * cell + 1;
                let image = |c: i64, s: i64, i: usize, j: usize| {
                    Multivector::basis(&[i])
                        .scale(&int(c))
                        .add(&Multivector::basis(&[j]).scale(&int(s)))
                };
                rotation.set_image(p, image(cos, sin, p, p + 1));
                rotation.set_image(p + 1, image(cos, -sin, p + 1, p));
            }
        }
    }
    // exp of a nilpotent matrix is a finite sum
    let nil = nilpotent_log(spec);
    let mut exp = LinearEndo::identity(spec.n);
    let mut term = LinearEndo::identity(spec.n);
    for k in 1..=spec.n {
        term = nil.compose(&term).scale(&(Rational::one() / int(k as i64)));
        if term.is_zero() {
            break;
        }
        exp = exp.add(&term);
    }
    Ok(rotation.compose(&exp))
}

#[cfg(test)]
pub(crate) mod fixtures {
    pub const S6: &str = r#"{
        "n": 5,
        "lattice_label": "t = 2*pi",
        "blocks": [
            {"kind": "real", "size": 3, "re": "0"},
            {"kind": "complex", "size": 1, "re": "0", "im_resonant": "1"}
        ]
    }"#;

    pub const S8: &str = r#"{
        "n": 7,
        "symbols": ["b"],
        "lattice_label": "t = 2*pi, e^(2 pi b) + e^(-2 pi b) integral",
        "blocks": [
            {"kind": "real", "size": 3, "re": "0"},
            {"kind": "complex", "size": 1, "re": "b", "im_resonant": "1"},
            {"kind": "complex", "size": 1, "re": "-b", "im_resonant": "1"}
        ]
    }"#;
}
