//! Shared generators and small independent oracles for the integration tests.
//!
//! The oracles here deliberately avoid the library's exterior algebra and
//! echelon code: forms are plain bitmask maps and ranks come from a dense
//! elimination.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use solvform::exterior::{Blade, Multivector};
use solvform::scalar::Rational;
use solvform::spectral::{parse_spec, AlmostAbelianSpec};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn fixture(name: &str) -> AlmostAbelianSpec {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture readable");
    parse_spec(&text).expect("fixture parses")
}

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Which kind of random spectrum to draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// Zero real parts, integer resonances.
    IntegerResonant,
    /// Zero real parts, resonances in quarter steps.
    QuarterResonant,
    /// Real parts cancelling in pairs, so the action is traceless.
    Unimodular,
    /// Like `Unimodular`, but the paired real parts are `±b` for a symbol.
    SymbolicUnimodular,
    /// Arbitrary small rational real parts with integer resonances.
    General,
}

fn fraction(num: i64, den: i64) -> String {
    if den == 1 {
        num.to_string()
    } else {
        format!("{num}/{den}")
    }
}

fn small_rational(rng: &mut ChaCha8Rng) -> (i64, i64) {
    (rng.gen_range(-3..=3), rng.gen_range(1..=2))
}

fn block(rng: &mut ChaCha8Rng, room: usize, family: Family) -> (serde_json::Value, usize) {
    let complex = room >= 2 && rng.gen_bool(0.4);
    let re = match family {
        Family::General => {
            let (num, den) = small_rational(rng);
            fraction(num, den)
        }
        _ => "0".to_string(),
    };
    if complex {
        let size = if room >= 4 && rng.gen_bool(0.3) { 2 } else { 1 };
        let im = match family {
            Family::QuarterResonant => {
                let k: i64 = [-6, -5, -3, -2, -1, 1, 2, 3, 5, 6][rng.gen_range(0..10)];
                if k % 4 == 0 {
                    (k / 4).to_string()
                } else {
                    format!("{k}/4")
                }
            }
            _ => [-2i64, -1, 1, 2][rng.gen_range(0..4)].to_string(),
        };
        (
            json!({"kind": "complex", "size": size, "re": re, "im_resonant": im}),
            2 * size,
        )
    } else {
        let size = rng.gen_range(1..=room.min(3));
        (json!({"kind": "real", "size": size, "re": re}), size)
    }
}

/// A random spec with fiber dimension in `1..=max_n`.
pub fn random_spec(rng: &mut ChaCha8Rng, max_n: usize, family: Family) -> AlmostAbelianSpec {
    let target = rng.gen_range(1..=max_n);
    let mut blocks = Vec::new();
    let mut used = 0;
    let mut symbols: Vec<String> = Vec::new();
    match family {
        Family::Unimodular | Family::SymbolicUnimodular => {
            // Pairs of equal-shape blocks with opposite real parts, then zero-real-part filler.
            while target - used >= 2 && rng.gen_bool(0.6) {
                let half = (target - used) / 2;
                let (mut b, size) = block(rng, half, Family::IntegerResonant);
                let (pos, neg) = if family == Family::SymbolicUnimodular {
                    if symbols.is_empty() {
                        symbols.push("b".to_string());
                    }
                    ("b".to_string(), "-b".to_string())
                } else {
                    let (num, den) = small_rational(rng);
                    (fraction(num, den), fraction(-num, den))
                };
                b["re"] = json!(pos);
                let mut c = b.clone();
                c["re"] = json!(neg);
                blocks.push(b);
                blocks.push(c);
                used += 2 * size;
            }
            while used < target {
                let (b, size) = block(rng, target - used, Family::IntegerResonant);
                blocks.push(b);
                used += size;
            }
        }
        _ => {
            while used < target {
                let (b, size) = block(rng, target - used, family);
                blocks.push(b);
                used += size;
            }
        }
    }
    let doc = json!({"n": used, "symbols": symbols, "blocks": blocks});
    parse_spec(&doc.to_string()).unwrap_or_else(|e| panic!("generated spec {doc} rejected: {e}"))
}

// ---------------------------------------------------------------------------
// Independent exterior algebra: forms as maps from sorted index bitmasks.

pub type Form = BTreeMap<u32, Rational>;

/// Sign of concatenating the sorted index sets `a` then `b`, or `None` on overlap.
pub fn concat_sign(a: u32, b: u32) -> Option<i64> {
    if a & b != 0 {
        return None;
    }
    let mut inversions = 0u32;
    for i in 0..32 {
        if b & (1 << i) != 0 {
            inversions += (a >> (i + 1)).count_ones();
        }
    }
    Some(if inversions % 2 == 0 { 1 } else { -1 })
}

pub fn form_wedge(x: &Form, y: &Form) -> Form {
    let mut out = Form::new();
    for (a, ca) in x {
        for (b, cb) in y {
            if let Some(s) = concat_sign(*a, *b) {
                let entry = out.entry(a | b).or_insert_with(Rational::zero);
                *entry += ca * cb * Rational::from_integer(s.into());
            }
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

pub fn form_of(x: &Multivector) -> Form {
    x.terms().map(|(b, c)| (b.bits(), c.clone())).collect()
}

pub fn basis_form(indices: &[usize]) -> Form {
    let mut out = Form::new();
    out.insert(0, Rational::one());
    for &i in indices {
        let mut single = Form::new();
        single.insert(1 << (i - 1), Rational::one());
        out = form_wedge(&out, &single);
    }
    out
}

pub fn multivector_of(degree: usize, f: &Form) -> Multivector {
    Multivector::from_terms(degree, f.iter().map(|(b, c)| (Blade::from_bits(*b), c.clone())))
}

// ---------------------------------------------------------------------------
// Dense exact linear algebra.

/// Rank of the given rows over the listed coordinates.
pub fn rank(rows: &[Form]) -> usize {
    let keys: Vec<u32> = {
        let mut k: Vec<u32> = rows.iter().flat_map(|r| r.keys().copied()).collect();
        k.sort_unstable();
        k.dedup();
        k
    };
    let mut m: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| keys.iter().map(|k| r.get(k).cloned().unwrap_or_else(Rational::zero)).collect())
        .collect();
    let mut r = 0;
    for col in 0..keys.len() {
        let Some(p) = (r..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let pivot = m[r][col].clone();
        for i in 0..m.len() {
            if i != r && !m[i][col].is_zero() {
                let f = m[i][col].clone() / pivot.clone();
                for j in col..keys.len() {
                    let delta = f.clone() * m[r][j].clone();
                    m[i][j] -= delta;
                }
            }
        }
        r += 1;
    }
    r
}

/// Whether the two lists of forms span the same subspace.
pub fn same_span(a: &[Form], b: &[Form]) -> bool {
    let ra = rank(a);
    let rb = rank(b);
    let both: Vec<Form> = a.iter().chain(b).cloned().collect();
    ra == rb && rank(&both) == ra
}

/// Pfaffian of an antisymmetric matrix by expansion along the first row.
pub fn pfaffian(m: &[Vec<Rational>]) -> Rational {
    let size = m.len();
    if size == 0 {
        return Rational::one();
    }
    if size % 2 == 1 {
        return Rational::zero();
    }
    let mut total = Rational::zero();
    for j in 1..size {
        if m[0][j].is_zero() {
            continue;
        }
        let keep: Vec<usize> = (1..size).filter(|&k| k != j).collect();
        let minor: Vec<Vec<Rational>> = keep
            .iter()
            .map(|&r| keep.iter().map(|&c| m[r][c].clone()).collect())
            .collect();
        let sign = if j % 2 == 1 { Rational::one() } else { -Rational::one() };
        total += sign * m[0][j].clone() * pfaffian(&minor);
    }
    total
}

/// Antisymmetric coefficient matrix of a 2-form on `ℝ^dim`.
pub fn two_form_matrix(x: &Form, dim: usize) -> Vec<Vec<Rational>> {
    let mut m = vec![vec![Rational::zero(); dim]; dim];
    for (bits, c) in x {
        let idx: Vec<usize> = (0..32).filter(|i| bits & (1 << i) != 0).collect();
        assert_eq!(idx.len(), 2, "not a 2-form");
        m[idx[0]][idx[1]] = c.clone();
        m[idx[1]][idx[0]] = -c.clone();
    }
    m
}

pub fn factorial(m: usize) -> Rational {
    (1..=m as i64).fold(Rational::one(), |acc, k| acc * Rational::from_integer(k.into()))
}
