//! The unipotent part `U ⊂ H*(ℝⁿ)`: forms on which the monodromy acts
//! nilpotently, i.e. fixed by its semisimple part.

use crate::error::Result;
use crate::exterior::{Blade, LinearEndo, Multivector};
use crate::linalg::{Echelon, LinearMap, SparseVec};
use crate::scalar::{GaussianRational, Rational};
use crate::spectral::{generator_weights, rational_monodromy, AlmostAbelianSpec, Weight};

use num_complex::Complex;
use num_traits::{One, Zero};

pub fn resonance_test(w: &Weight) -> bool {
    w.is_resonant()
}

/// A degree-`k` slice of `U`, presented as a reduced echelon basis.
#[derive(Clone, Debug)]
pub struct USlice {
    pub degree: usize,
    span: Echelon<Blade>,
    /// Number of complexified monomials that passed the resonance test.
    /// Equal to the real dimension whenever realification is sound.
    pub complex_count: usize,
}

impl USlice {
    fn from_span(degree: usize, span: Echelon<Blade>, complex_count: usize) -> Self {
        USlice {
            degree,
            span,
            complex_count,
        }
    }

    pub fn dim(&self) -> usize {
        self.span.rank()
    }

    pub fn basis(&self) -> Vec<Multivector> {
        self.span
            .rows()
            .map(|r| Multivector::from_sparse(self.degree, r))
            .collect()
    }

    pub fn span(&self) -> &Echelon<Blade> {
        &self.span
    }

    pub fn contains(&self, x: &Multivector) -> bool {
        x.degree() == self.degree && self.span.contains(&x.to_sparse())
    }

    /// Equality as subspaces. Reduced echelon forms are canonical, so this
    /// is mutual containment.
    pub fn same_span(&self, other: &USlice) -> bool {
        self.degree == other.degree
            && self.dim() == other.dim()
            && self.span.rows().all(|r| other.span.contains(r))
    }
}

fn subsets(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    fn go(start: usize, n: usize, k: usize, acc: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if acc.len() == k {
            visit(acc);
            return;
        }
        for i in start..=n - (k - acc.len()) {
            acc.push(i);
            go(i + 1, n, k, acc, visit);
            acc.pop();
        }
    }
    if k <= n {
        go(0, n, k, &mut Vec::with_capacity(k), &mut visit);
    }
}

/// Keeps the complexified degree-`k` monomials whose total weight is
/// resonant and realifies them by taking real and imaginary parts.
pub fn compute_u(spec: &AlmostAbelianSpec, k: usize) -> USlice {
    let gens = generator_weights(spec);
    let mut span = Echelon::new();
    let mut count = 0;
    subsets(gens.len(), k, |idx| {
        let mut w = Weight::zero();
        for &i in idx {
            w = w.add(&gens[i].weight);
        }
        if !resonance_test(&w) {
            return;
        }
        count += 1;
        let one: GaussianRational = Complex::new(Rational::one(), Rational::zero());
        let mut m = Multivector::from_blade(Blade::EMPTY, one);
        for &i in idx {
            m = m.wedge(&gens[i].form);
        }
        let re: SparseVec<Blade> = m
            .terms()
            .filter(|(_, c)| !c.re.is_zero())
            .map(|(b, c)| (*b, c.re.clone()))
            .collect();
        let im: SparseVec<Blade> = m
            .terms()
            .filter(|(_, c)| !c.im.is_zero())
            .map(|(b, c)| (*b, c.im.clone()))
            .collect();
        span.insert(&re);
        span.insert(&im);
    });
    USlice::from_span(k, span, count)
}

/// Every degree of `U`, `0..=n`.
#[derive(Clone, Debug)]
pub struct UTable {
    pub n: usize,
    pub slices: Vec<USlice>,
}

impl UTable {
    pub fn compute(spec: &AlmostAbelianSpec) -> Self {
        UTable {
            n: spec.n,
            slices: (0..=spec.n).map(|k| compute_u(spec, k)).collect(),
        }
    }

    pub fn slice(&self, k: usize) -> Option<&USlice> {
        self.slices.get(k)
    }

    pub fn dims(&self) -> Vec<usize> {
        self.slices.iter().map(USlice::dim).collect()
    }

    /// The first pair of degrees whose basis wedges escape `U`, if any.
    pub fn wedge_closure_failure(&self) -> Option<(usize, usize)> {
        for i in 0..=self.n {
            for j in i..=self.n - i {
                let target = &self.slices[i + j];
                for x in self.slices[i].basis() {
                    for y in self.slices[j].basis() {
                        if !target.contains(&x.wedge(&y)) {
                            return Some((i, j));
                        }
                    }
                }
            }
        }
        None
    }
}

/// Brute-force `U^k`: the generalized 1-eigenspace of the monodromy on
/// `Λ^k`, found as the stable kernel of `(φ - Id)^j`.
///
/// Requires a rational monodromy; see [`rational_monodromy`].
pub fn oracle_u(spec: &AlmostAbelianSpec, k: usize) -> Result<USlice> {
    let phi = rational_monodromy(spec)?;
    Ok(generalized_fixed_space(&phi, k))
}

pub(crate) fn generalized_fixed_space(phi: &LinearEndo, k: usize) -> USlice {
    let blades = Blade::all_of_degree(phi.dim(), k);
    let step = |v: &SparseVec<Blade>| -> SparseVec<Blade> {
        let x = Multivector::from_sparse(k, v);
        phi.exterior_power_apply(&x).sub(&x).to_sparse()
    };
    let mut images: Vec<SparseVec<Blade>> = blades
        .iter()
        .map(|b| step(&Multivector::basis(&b.indices()).to_sparse()))
        .collect();
    let mut map = LinearMap::new(&images);
    loop {
        let next: Vec<_> = images.iter().map(&step).collect();
        let next_map = LinearMap::new(&next);
        if next_map.rank() == map.rank() {
            break;
        }
        images = next;
        map = next_map;
    }
    let mut span = Echelon::new();
    for v in map.kernel() {
        let lifted: SparseVec<Blade> = v.into_iter().map(|(i, c)| (blades[i], c)).collect();
        span.insert(&lifted);
    }
    let dim = span.rank();
    USlice::from_span(k, span, dim)
}
