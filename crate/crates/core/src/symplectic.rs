//! Invariant symplectic forms `ω = F + η∧α^{n+1}` built from `U`.
//!
//! With fiber dimension `n = 2m - 1`, `F^m = 0` on the fiber, so
//! `ω^m = m·F^{m-1}∧η∧α^{n+1}` and nondegeneracy reduces to the polynomial
//! `P = top(F^{m-1}∧η)` in the coefficients of `F` and `η`. Closedness of `ω`
//! is `A(F) = 0`, which on `U` is `N^t F = 0`.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use num_traits::Zero;

use crate::cohomology::{CeComplex, CeElement};
use crate::error::{Error, Result};
use crate::exterior::{derivation_apply, top_coefficient, Blade, Multivector};
use crate::linalg::{Echelon, LinearMap, SparseVec};
use crate::scalar::{format_rational, int, parse_rational, Rational};
use crate::spectral::{nilpotent_log, AlmostAbelianSpec};
use crate::unipotent::compute_u;

/// Sparse form document: blade indices such as `"2,3"` mapped to rational
/// literals.
pub type FormDocument = BTreeMap<String, String>;

pub fn form_to_document(x: &Multivector) -> FormDocument {
    x.terms()
        .map(|(b, c)| {
            let key = b
                .indices()
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(",");
            (key, format_rational(c))
        })
        .collect()
}

pub fn form_from_document(doc: &FormDocument, degree: usize, n: usize) -> Result<Multivector> {
    let mut out = Multivector::zero(degree);
    for (key, value) in doc {
        let bad = |message: String| Error::Schema {
            field: format!("form[{key}]"),
            message,
        };
        let indices: Vec<usize> = if key.is_empty() {
            Vec::new()
        } else {
            key.split(',')
                .map(|s| s.trim().parse::<usize>().map_err(|e| bad(e.to_string())))
                .collect::<Result<_>>()?
        };
        if indices.len() != degree || indices.iter().any(|&i| i == 0 || i > n) {
            return Err(bad(format!("expected {degree} indices in 1..={n}")));
        }
        let (sign, blade) =
            Blade::from_indices(&indices).ok_or_else(|| bad("repeated index".to_string()))?;
        let c = parse_rational(value).map_err(|e| bad(e.to_string()))?;
        out.add_term(blade, if sign < 0 { -c } else { c });
    }
    Ok(out)
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateDocument {
    f: FormDocument,
    eta: FormDocument,
}

/// Parses `{"f": {"2,3": "1", ...}, "eta": {"1": "1"}}`.
pub fn parse_candidate(text: &str, n: usize) -> Result<CoSymplecticPair> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: CandidateDocument = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        field: format!("candidate.{}", e.path()),
        message: e.inner().to_string(),
    })?;
    Ok(CoSymplecticPair {
        f: form_from_document(&doc.f, 2, n)?,
        eta: form_from_document(&doc.eta, 1, n)?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoSymplecticPair {
    /// Closed 2-form on the fiber.
    pub f: Multivector,
    /// 1-form on the fiber.
    pub eta: Multivector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticCheck {
    pub closed: bool,
    /// `top(F^{m-1}∧η)` on the fiber.
    pub fiber_top: Rational,
    /// `top(ω^m)` on the total space.
    pub omega_top: Rational,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticWitness {
    pub pair: CoSymplecticPair,
    /// `ω` as a 2-form on `ℝ^{n+1}`.
    pub omega: Multivector,
    pub check: SymplecticCheck,
    /// Grid coordinates of the witness: coefficients on the closed 2-classes
    /// followed by those on `U¹`. Absent for user candidates.
    pub grid_point: Option<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SymplecticOutcome {
    Found(SymplecticWitness),
    /// `P` vanished on the whole grid, so it is identically zero: no form of
    /// the type `F + η∧α^{n+1}` built from `U` is symplectic.
    NoneOfThisType { evaluations: usize },
    /// The evaluation budget ran out before the grid was exhausted.
    NotFoundAtBound { evaluations: usize },
    CandidateRejected(String),
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub budget: usize,
    pub candidate: Option<CoSymplecticPair>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: 1_000_000,
            candidate: None,
        }
    }
}

fn half_dimension(spec: &AlmostAbelianSpec) -> Result<usize> {
    let total = spec.total_dim();
    if total % 2 == 1 {
        return Err(Error::SymplecticUndefined(total));
    }
    Ok(total / 2)
}

/// Echelon basis of the 2-forms in `U²` killed by `N^t`.
pub fn closed_two_classes(spec: &AlmostAbelianSpec) -> Vec<Multivector> {
    let nil = nilpotent_log(spec);
    let u2 = compute_u(spec, 2).basis();
    let images: Vec<SparseVec<Blade>> = u2
        .iter()
        .map(|x| derivation_apply(&nil, x).to_sparse())
        .collect();
    let mut span = Echelon::new();
    for v in LinearMap::new(&images).kernel() {
        let mut form = Multivector::zero(2);
        for (i, c) in v {
            form.add_assign(&u2[i].scale(&c));
        }
        span.insert(&form.to_sparse());
    }
    span.rows().map(|r| Multivector::from_sparse(2, r)).collect()
}

/// `top(F^{m-1}∧η)` on the fiber.
pub fn nondegeneracy_value(f: &Multivector, eta: &Multivector, m: usize, n: usize) -> Result<Rational> {
    top_coefficient(&f.power(m - 1).wedge(eta), n)
}

/// Recomputes closedness and `ω^m` from scratch.
pub fn verify_symplectic(spec: &AlmostAbelianSpec, pair: &CoSymplecticPair) -> Result<SymplecticCheck> {
    let m = half_dimension(spec)?;
    let n = spec.n;
    if pair.f.degree() != 2 || pair.eta.degree() != 1 {
        return Err(Error::Schema {
            field: "candidate".to_string(),
            message: "F must be a 2-form and eta a 1-form".to_string(),
        });
    }
    if pair.f.max_index() > n || pair.eta.max_index() > n {
        return Err(Error::Schema {
            field: "candidate".to_string(),
            message: format!("forms must live on the fiber coordinates 1..={n}"),
        });
    }
    let omega = CeElement {
        fiber: pair.f.clone(),
        along: pair.eta.clone(),
    };
    let closed = CeComplex::new(spec)?.differential(&omega.symbolic())?.is_zero();
    let fiber_top = nondegeneracy_value(&pair.f, &pair.eta, m, n)?;
    let omega_top = top_coefficient(&omega.to_total(n).power(m), n + 1)?;
    let passed = closed && !omega_top.is_zero() && omega_top == &fiber_top * int(m as i64);
    Ok(SymplecticCheck {
        closed,
        fiber_top,
        omega_top,
        passed,
    })
}

fn witness(spec: &AlmostAbelianSpec, pair: CoSymplecticPair, point: Option<Vec<u32>>) -> Result<SymplecticWitness> {
    let check = verify_symplectic(spec, &pair)?;
    let omega = CeElement {
        fiber: pair.f.clone(),
        along: pair.eta.clone(),
    }
    .to_total(spec.n);
    Ok(SymplecticWitness {
        pair,
        omega,
        check,
        grid_point: point,
    })
}

/// Visits the points of `∏ {0..=bound_i}` by increasing coordinate sum,
/// larger leading coordinates first.
fn visit_grid(bounds: &[u32], visit: &mut dyn FnMut(&[u32]) -> ControlFlow<()>) -> ControlFlow<()> {
    fn go(
        bounds: &[u32],
        tail_capacity: &[u32],
        idx: usize,
        remaining: u32,
        acc: &mut Vec<u32>,
        visit: &mut dyn FnMut(&[u32]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if idx == bounds.len() {
            return if remaining == 0 { visit(acc) } else { ControlFlow::Continue(()) };
        }
        let high = bounds[idx].min(remaining);
        let low = remaining.saturating_sub(tail_capacity[idx + 1]);
        for v in (low..=high).rev() {
            acc.push(v);
            let flow = go(bounds, tail_capacity, idx + 1, remaining - v, acc, visit);
            acc.pop();
            flow?;
        }
        ControlFlow::Continue(())
    }
    let mut tail_capacity = vec![0u32; bounds.len() + 1];
    for i in (0..bounds.len()).rev() {
        tail_capacity[i] = tail_capacity[i + 1] + bounds[i];
    }
    for total in 0..=tail_capacity[0] {
        go(bounds, &tail_capacity, 0, total, &mut Vec::new(), visit)?;
    }
    ControlFlow::Continue(())
}

/// Searches for a symplectic form of the type `F + η∧α^{n+1}`.
///
/// `P` has degree at most `m - 1` in each coefficient of `F` and at most 1 in
/// each coefficient of `η`, so it is identically zero exactly when it
/// vanishes on the grid with those per-variable bounds.
pub fn find_symplectic(spec: &AlmostAbelianSpec, options: &SearchOptions) -> Result<SymplecticOutcome> {
    let m = half_dimension(spec)?;
    let n = spec.n;
    let classes = closed_two_classes(spec);
    let u1 = compute_u(spec, 1);

    if let Some(candidate) = &options.candidate {
        let span = Echelon::from_vectors(&classes.iter().map(Multivector::to_sparse).collect::<Vec<_>>());
        if candidate.f.degree() != 2 || !span.contains(&candidate.f.to_sparse()) {
            return Ok(SymplecticOutcome::CandidateRejected(
                "F is not a closed class of U²".to_string(),
            ));
        }
        if !u1.contains(&candidate.eta) {
            return Ok(SymplecticOutcome::CandidateRejected("eta is not in U¹".to_string()));
        }
        let w = witness(spec, candidate.clone(), None)?;
        return Ok(if w.check.passed {
            SymplecticOutcome::Found(w)
        } else {
            SymplecticOutcome::CandidateRejected(format!(
                "candidate is degenerate: top(ω^{m}) = {}",
                format_rational(&w.check.omega_top)
            ))
        });
    }

    let etas = u1.basis();
    let mut bounds = vec![(m - 1) as u32; classes.len()];
    bounds.extend(std::iter::repeat_n(1, etas.len()));
    let mut evaluations = 0usize;
    let mut found: Option<Vec<u32>> = None;
    let mut exhausted_budget = false;
    let _ = visit_grid(&bounds, &mut |point| {
        if evaluations == options.budget {
            exhausted_budget = true;
            return ControlFlow::Break(());
        }
        evaluations += 1;
        let (a, b) = point.split_at(classes.len());
        let f = combine(&classes, a, 2);
        let eta = combine(&etas, b, 1);
        match nondegeneracy_value(&f, &eta, m, n) {
            Ok(p) if !p.is_zero() => {
                found = Some(point.to_vec());
                ControlFlow::Break(())
            }
            _ => ControlFlow::Continue(()),
        }
    });
    match found {
        Some(point) => {
            let (a, b) = point.split_at(classes.len());
            let pair = CoSymplecticPair {
                f: combine(&classes, a, 2),
                eta: combine(&etas, b, 1),
            };
            let w = witness(spec, pair, Some(point.clone()))?;
            if !w.check.passed {
                return Err(Error::Invariant(
                    "search produced a witness that fails verification".to_string(),
                ));
            }
            Ok(SymplecticOutcome::Found(w))
        }
        None if exhausted_budget => Ok(SymplecticOutcome::NotFoundAtBound { evaluations }),
        None => Ok(SymplecticOutcome::NoneOfThisType { evaluations }),
    }
}

fn combine(basis: &[Multivector], coeffs: &[u32], degree: usize) -> Multivector {
    let mut out = Multivector::zero(degree);
    for (x, &c) in basis.iter().zip(coeffs) {
        if c > 0 {
            out.add_assign(&x.scale(&int(c as i64)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::fixtures::{S6, S8};
    use crate::spectral::parse_spec;

    fn a(i: &[usize]) -> Multivector {
        Multivector::basis(i)
    }

    #[test]
    fn closed_classes_of_examples() {
        let s6 = closed_two_classes(&parse_spec(S6).unwrap());
        assert_eq!(s6, vec![a(&[2, 3]), a(&[3, 4]), a(&[3, 5]), a(&[4, 5])]);
        let s8 = closed_two_classes(&parse_spec(S8).unwrap());
        assert_eq!(
            s8,
            vec![a(&[2, 3]), a(&[4, 6]), a(&[4, 7]), a(&[5, 6]), a(&[5, 7])]
        );
        let torus = parse_spec(r#"{"n": 3, "blocks": [{"kind": "real", "size": 1}, {"kind": "real", "size": 1}, {"kind": "real", "size": 1}]}"#).unwrap();
        assert_eq!(closed_two_classes(&torus).len(), 3);
    }

    #[test]
    fn dim6_example_witness() {
        let spec = parse_spec(S6).unwrap();
        let SymplecticOutcome::Found(w) = find_symplectic(&spec, &SearchOptions::default()).unwrap() else {
            panic!("no witness");
        };
        assert_eq!(w.pair.f, a(&[2, 3]).add(&a(&[4, 5])));
        assert_eq!(w.pair.eta, a(&[1]));
        assert_eq!(w.omega, a(&[2, 3]).add(&a(&[4, 5])).add(&a(&[1, 6])));
        assert_eq!(w.check.fiber_top, int(2));
        assert_eq!(w.check.omega_top, int(6));
        assert!(w.check.passed);
    }

    #[test]
    fn degenerate_variant_fails() {
        let spec = parse_spec(S6).unwrap();
        let pair = CoSymplecticPair {
            f: a(&[3, 4]).add(&a(&[4, 5])),
            eta: a(&[1]),
        };
        let check = verify_symplectic(&spec, &pair).unwrap();
        assert!(check.closed);
        assert!(check.omega_top.is_zero());
        assert!(!check.passed);
    }

    #[test]
    fn dim8_example_witness() {
        let spec = parse_spec(S8).unwrap();
        let SymplecticOutcome::Found(w) = find_symplectic(&spec, &SearchOptions::default()).unwrap() else {
            panic!("no witness");
        };
        assert!(w.check.passed);
        assert_eq!(w.check.omega_top, &w.check.fiber_top * int(4));
        let suggested = CoSymplecticPair {
            f: a(&[2, 3]).add(&a(&[4, 6])).add(&a(&[5, 7])),
            eta: a(&[1]),
        };
        assert!(verify_symplectic(&spec, &suggested).unwrap().passed);
    }

    #[test]
    fn standard_torus_form() {
        let torus = parse_spec(r#"{"n": 3, "blocks": [{"kind": "real", "size": 1}, {"kind": "real", "size": 1}, {"kind": "real", "size": 1}]}"#).unwrap();
        let pair = CoSymplecticPair {
            f: a(&[1, 2]),
            eta: a(&[3]),
        };
        assert!(verify_symplectic(&torus, &pair).unwrap().passed);
        let outcome = find_symplectic(
            &torus,
            &SearchOptions {
                candidate: Some(pair),
                ..SearchOptions::default()
            },
        )
        .unwrap();
        assert!(matches!(outcome, SymplecticOutcome::Found(_)));
    }

    #[test]
    fn empty_search_space() {
        // every fiber weight is the symbol b, so U¹ and U² vanish
        let spec = parse_spec(r#"{"n": 3, "symbols": ["b"], "blocks": [{"kind": "real", "size": 1, "re": "b"}, {"kind": "real", "size": 1, "re": "b"}, {"kind": "real", "size": 1, "re": "b"}]}"#).unwrap();
        assert!(closed_two_classes(&spec).is_empty());
        assert!(matches!(
            find_symplectic(&spec, &SearchOptions::default()).unwrap(),
            SymplecticOutcome::NoneOfThisType { .. }
        ));
    }

    #[test]
    fn odd_total_dimension() {
        let spec = parse_spec(r#"{"n": 2, "blocks": [{"kind": "real", "size": 2}]}"#).unwrap();
        assert!(matches!(
            find_symplectic(&spec, &SearchOptions::default()),
            Err(Error::SymplecticUndefined(3))
        ));
    }

    #[test]
    fn budget_is_reported() {
        let spec = parse_spec(S6).unwrap();
        let outcome = find_symplectic(
            &spec,
            &SearchOptions {
                budget: 3,
                candidate: None,
            },
        )
        .unwrap();
        assert_eq!(outcome, SymplecticOutcome::NotFoundAtBound { evaluations: 3 });
    }

    #[test]
    fn grid_order() {
        let mut seen = Vec::new();
        let _ = visit_grid(&[2, 1], &mut |p| {
            seen.push(p.to_vec());
            ControlFlow::Continue(())
        });
        assert_eq!(
            seen,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![2, 1]]
        );
    }

    #[test]
    fn candidate_documents() {
        let pair = parse_candidate(r#"{"f": {"2,3": "1", "4,5": "1"}, "eta": {"1": "1"}}"#, 5).unwrap();
        assert_eq!(pair.f, a(&[2, 3]).add(&a(&[4, 5])));
        assert!(matches!(
            parse_candidate(r#"{"f": {}, "eta": {}, "x": 1}"#, 5),
            Err(Error::Schema { .. })
        ));
    }

    #[test]
    fn forms_round_trip_through_documents() {
        let x = a(&[2, 3]).scale(&crate::scalar::rat(-1, 2)).add(&a(&[4, 5]));
        let doc = form_to_document(&x);
        assert_eq!(doc["2,3"], "-1/2");
        assert_eq!(form_from_document(&doc, 2, 5).unwrap(), x);
        let mut swapped = FormDocument::new();
        swapped.insert("3,2".to_string(), "1".to_string());
        assert_eq!(form_from_document(&swapped, 2, 5).unwrap(), a(&[2, 3]).neg());
        swapped.insert("9,1".to_string(), "1".to_string());
        assert!(form_from_document(&swapped, 2, 5).is_err());
    }
}
