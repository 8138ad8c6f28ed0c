//! Chevalley–Eilenberg cohomology of the completely solvable modification
//! `ℝ ⋉ ℝⁿ`, whose extra dual generator is `α^{n+1}`.
//!
//! Every cochain splits uniquely as `x + y∧α^{n+1}` with `x, y ∈ Λ(ℝⁿ)`, and
//! the differential is `d(x + y∧α^{n+1}) = α^{n+1}∧A(x)`, where `A` is the
//! derivation extension of the modified action on forms. On 1-forms this is
//! `dα^i = -A(α^i)∧α^{n+1}`; in degree `p` the graded Leibniz rule turns it
//! into `(-1)^p A(x)∧α^{n+1}`. Cohomology is therefore
//! `ker A_k ⊕ coker A_{k-1}∧α^{n+1}`.

use crate::error::{Error, Result};
use crate::exterior::{derivation_apply, Blade, Multivector};
use crate::linalg::{Echelon, LinearMap, SparseVec};
use crate::scalar::{Coeff, Rational, ScalarLC};
use crate::spectral::{modified_matrix, AlmostAbelianSpec, ModifiedMatrix};

/// The cochain `x + y∧α^{n+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CeElement<C: Coeff = Rational> {
    pub fiber: Multivector<C>,
    pub along: Multivector<C>,
}

impl<C: Coeff> CeElement<C> {
    pub fn fiber_only(x: Multivector<C>) -> Self {
        let along = Multivector::zero(x.degree().saturating_sub(1));
        CeElement { fiber: x, along }
    }

    pub fn along_only(y: Multivector<C>) -> Self {
        let fiber = Multivector::zero(y.degree() + 1);
        CeElement { fiber, along: y }
    }

    pub fn degree(&self) -> usize {
        self.fiber.degree()
    }

    pub fn is_zero(&self) -> bool {
        self.fiber.is_zero() && self.along.is_zero()
    }

    /// The same cochain as a form on `ℝ^{n+1}`.
    pub fn to_total(&self, n: usize) -> Multivector<C> {
        let last = Blade::single(n + 1);
        let mut out = self.fiber.clone();
        let mut along = Multivector::zero(self.degree());
        for (b, c) in self.along.terms() {
            let (sign, blade) = b.wedge(last).expect("fiber blades avoid the last index");
            let c = if sign < 0 { c.negated() } else { c.clone() };
            along.add_term(blade, c);
        }
        out.add_assign(&along);
        out
    }

    /// Splits a form on `ℝ^{n+1}` back into fiber and along parts.
    pub fn from_total(x: &Multivector<C>, n: usize) -> Self {
        let last = Blade::single(n + 1);
        let deg = x.degree();
        let mut fiber = Multivector::zero(deg);
        let mut along = Multivector::zero(deg.saturating_sub(1));
        for (b, c) in x.terms() {
            if b.contains(n + 1) {
                // the last index is the largest, so it sits at the end
                along.add_term(Blade::from_bits(b.bits() & !last.bits()), c.clone());
            } else {
                fiber.add_term(*b, c.clone());
            }
        }
        CeElement { fiber, along }
    }
}

impl CeElement<Rational> {
    pub fn symbolic(&self) -> CeElement<ScalarLC> {
        CeElement {
            fiber: self.fiber.map(|c| ScalarLC::from(c.clone())),
            along: self.along.map(|c| ScalarLC::from(c.clone())),
        }
    }
}

/// The complex of the modified Lie algebra.
#[derive(Clone, Debug)]
pub struct CeComplex {
    pub n: usize,
    pub action: ModifiedMatrix,
}

/// Cohomology in one degree: representatives `x` with `A x = 0`, and
/// `y` standing for the class of `y∧α^{n+1}`.
#[derive(Clone, Debug)]
pub struct CohomologySlice {
    pub degree: usize,
    pub kernel_reps: Vec<Multivector>,
    pub cokernel_reps: Vec<Multivector>,
}

impl CohomologySlice {
    pub fn betti(&self) -> usize {
        self.kernel_reps.len() + self.cokernel_reps.len()
    }

    pub fn representatives(&self) -> Vec<CeElement> {
        self.kernel_reps
            .iter()
            .cloned()
            .map(CeElement::fiber_only)
            .chain(self.cokernel_reps.iter().cloned().map(CeElement::along_only))
            .collect()
    }
}

impl CeComplex {
    pub fn new(spec: &AlmostAbelianSpec) -> Result<Self> {
        Ok(CeComplex {
            n: spec.n,
            action: modified_matrix(spec)?,
        })
    }

    pub fn differential(&self, x: &CeElement<ScalarLC>) -> Result<CeElement<ScalarLC>> {
        let mut image = self.action.derivation_apply(&x.fiber)?;
        if x.degree() % 2 == 1 {
            image = image.neg();
        }
        Ok(CeElement {
            fiber: Multivector::zero(x.degree() + 1),
            along: image,
        })
    }

    /// Degree-`k` blades of weight zero. Only this weight space can carry
    /// cohomology, since `A` is invertible on every other one.
    fn zero_weight_blades(&self, k: usize) -> Vec<Blade> {
        Blade::all_of_degree(self.n, k)
            .into_iter()
            .filter(|b| self.action.blade_weight(*b).is_zero())
            .collect()
    }

    /// `N^t` on the zero-weight blades of degree `k`, where `A` is nilpotent.
    fn nilpotent_on_zero_weight(&self, k: usize) -> (Vec<Blade>, LinearMap<Blade>) {
        let blades = self.zero_weight_blades(k);
        let images: Vec<SparseVec<Blade>> = blades
            .iter()
            .map(|b| {
                derivation_apply(&self.action.nilpotent, &Multivector::basis(&b.indices()))
                    .to_sparse()
            })
            .collect();
        (blades, LinearMap::new(&images))
    }

    pub fn cohomology(&self, k: usize) -> Result<CohomologySlice> {
        if k > self.n + 1 {
            return Err(Error::DegreeBound {
                requested: k,
                bound: self.n + 1,
            });
        }
        let kernel_reps = if k <= self.n {
            let (blades, map) = self.nilpotent_on_zero_weight(k);
            map.kernel()
                .into_iter()
                .map(|v| {
                    let lifted: SparseVec<Blade> =
                        v.into_iter().map(|(i, c)| (blades[i], c)).collect();
                    Multivector::from_sparse(k, &lifted)
                })
                .collect()
        } else {
            Vec::new()
        };
        let cokernel_reps = if k >= 1 {
            let (blades, map) = self.nilpotent_on_zero_weight(k - 1);
            let image = map.image();
            blades
                .into_iter()
                .filter(|b| !image.is_pivot(b))
                .map(|b| Multivector::basis(&b.indices()))
                .collect()
        } else {
            Vec::new()
        };
        Ok(CohomologySlice {
            degree: k,
            kernel_reps,
            cokernel_reps,
        })
    }

    pub fn betti_numbers(&self) -> Result<Vec<usize>> {
        (0..=self.n + 1)
            .map(|k| self.cohomology(k).map(|s| s.betti()))
            .collect()
    }

    /// Checks that every representative is closed and that they stay
    /// independent modulo exact cochains.
    pub fn verify_slice(&self, slice: &CohomologySlice) -> Result<()> {
        let k = slice.degree;
        for rep in slice.representatives() {
            if !self.differential(&rep.symbolic())?.is_zero() {
                return Err(Error::Invariant(format!(
                    "degree-{k} representative is not closed"
                )));
            }
        }
        // Exact cochains are A(Λ^{k-1})∧α^{n+1}; the fiber parts of the
        // representatives are independent on their own since exact forms have
        // no fiber part.
        let fibers: Vec<_> = slice.kernel_reps.iter().map(Multivector::to_sparse).collect();
        let kernel = Echelon::from_vectors(&fibers);
        let mut along = Echelon::new();
        if k >= 1 {
            for b in Blade::all_of_degree(self.n, k - 1) {
                let x = Multivector::basis(&b.indices()).map(|c| ScalarLC::from(c.clone()));
                let image = self.action.derivation_apply(&x)?;
                if self.action.blade_weight(b).is_zero() {
                    let rational = image.map(|c| c.as_rational().cloned().unwrap_or_default());
                    along.insert(&rational.to_sparse());
                } else {
                    // A is a nonzero scalar plus a nilpotent on this weight space
                    along.insert(&Multivector::basis(&b.indices()).to_sparse());
                }
            }
        }
        let exact_rank = along.rank();
        for y in &slice.cokernel_reps {
            along.insert(&y.to_sparse());
        }
        if kernel.rank() != slice.kernel_reps.len()
            || along.rank() != exact_rank + slice.cokernel_reps.len()
        {
            return Err(Error::Invariant(format!(
                "degree-{k} representatives are dependent modulo exact forms"
            )));
        }
        Ok(())
    }
}

pub fn ce_differential(spec: &AlmostAbelianSpec, x: &CeElement<ScalarLC>) -> Result<CeElement<ScalarLC>> {
    CeComplex::new(spec)?.differential(x)
}

pub fn cohomology(spec: &AlmostAbelianSpec, k: usize) -> Result<CohomologySlice> {
    CeComplex::new(spec)?.cohomology(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;
    use crate::spectral::fixtures::{S6, S8};
    use crate::spectral::parse_spec;

    fn a(i: &[usize]) -> Multivector {
        Multivector::basis(i)
    }

    fn totals(c: &CeComplex, k: usize) -> Vec<Multivector> {
        let mut v: Vec<_> = c
            .cohomology(k)
            .unwrap()
            .representatives()
            .iter()
            .map(|r| r.to_total(c.n))
            .collect();
        v.sort_by_key(|x| x.support().collect::<Vec<_>>());
        v
    }

    fn sorted(mut v: Vec<Multivector>) -> Vec<Multivector> {
        v.sort_by_key(|x| x.support().collect::<Vec<_>>());
        v
    }

    #[test]
    fn differential_examples() {
        let c = CeComplex::new(&parse_spec(S6).unwrap()).unwrap();
        let d1 = c.differential(&CeElement::fiber_only(a(&[1])).symbolic()).unwrap();
        let expected = CeElement::from_total(&a(&[2, 6]).neg(), 5).symbolic();
        assert_eq!(d1, expected);
        assert!(c.differential(&CeElement::fiber_only(a(&[3])).symbolic()).unwrap().is_zero());
    }

    #[test]
    fn dd_vanishes() {
        let c = CeComplex::new(&parse_spec(S8).unwrap()).unwrap();
        for k in 0..=3 {
            for b in Blade::all_of_degree(7, k) {
                let x = CeElement::fiber_only(a(&b.indices())).symbolic();
                let dx = c.differential(&x).unwrap();
                assert!(c.differential(&dx).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn dim6_example_cohomology() {
        let c = CeComplex::new(&parse_spec(S6).unwrap()).unwrap();
        assert_eq!(c.betti_numbers().unwrap(), vec![1, 4, 7, 8, 7, 4, 1]);
        assert_eq!(totals(&c, 1), sorted(vec![a(&[3]), a(&[4]), a(&[5]), a(&[6])]));
        let h2 = sorted(
            [[1, 6], [2, 3], [3, 4], [3, 5], [4, 5], [4, 6], [5, 6]]
                .iter()
                .map(|i| a(i))
                .collect(),
        );
        assert_eq!(totals(&c, 2), h2);
        for k in 0..=6 {
            c.verify_slice(&c.cohomology(k).unwrap()).unwrap();
        }
    }

    #[test]
    fn dim8_example_cohomology() {
        let c = CeComplex::new(&parse_spec(S8).unwrap()).unwrap();
        assert_eq!(totals(&c, 1), vec![a(&[3]), a(&[8])]);
        let betti = c.betti_numbers().unwrap();
        for k in 0..=8 {
            assert_eq!(betti[k], betti[8 - k], "Poincaré duality in degree {k}");
            c.verify_slice(&c.cohomology(k).unwrap()).unwrap();
        }
        let euler: i64 = betti
            .iter()
            .enumerate()
            .map(|(k, b)| if k % 2 == 0 { *b as i64 } else { -(*b as i64) })
            .sum();
        assert_eq!(euler, 0);
    }

    #[test]
    fn torus_betti() {
        let torus = parse_spec(r#"{"n": 2, "blocks": [{"kind": "real", "size": 1}, {"kind": "real", "size": 1}]}"#).unwrap();
        assert_eq!(CeComplex::new(&torus).unwrap().betti_numbers().unwrap(), vec![1, 3, 3, 1]);
    }

    #[test]
    fn non_unimodular_has_no_top_class() {
        let spec = parse_spec(r#"{"n": 1, "blocks": [{"kind": "real", "size": 1, "re": "1"}]}"#).unwrap();
        let c = CeComplex::new(&spec).unwrap();
        assert_eq!(c.betti_numbers().unwrap(), vec![1, 1, 0]);
        let d = c.differential(&CeElement::fiber_only(a(&[1])).symbolic()).unwrap();
        assert_eq!(d.along, a(&[1]).scale(&int(-1)).map(|q| ScalarLC::from(q.clone())));
    }

    #[test]
    fn differential_is_a_graded_derivation() {
        let spec = parse_spec(r#"{"n": 2, "blocks": [{"kind": "real", "size": 1, "re": "1"}, {"kind": "real", "size": 1, "re": "1"}]}"#).unwrap();
        let c = CeComplex::new(&spec).unwrap();
        // d(α¹∧α²) = dα¹∧α² - α¹∧dα² = 2·α¹∧α²∧α³
        let d = c.differential(&CeElement::fiber_only(a(&[1, 2])).symbolic()).unwrap();
        assert_eq!(d.along, a(&[1, 2]).scale(&int(2)).map(|q| ScalarLC::from(q.clone())));
    }

    #[test]
    fn total_round_trip() {
        let x = a(&[2, 6]).add(&a(&[1, 3]));
        let e = CeElement::from_total(&x, 5);
        assert_eq!(e.along, a(&[2]));
        assert_eq!(e.to_total(5), x);
    }
}
