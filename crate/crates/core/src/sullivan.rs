//! Degreewise minimal model `(ΛY, d)` of the cdga `(U, 0)` together with
//! its realization `ρ: ΛY → Λ(ℝⁿ)`.
//!
//! Generators are numbered by creation, and the differential of a generator
//! only involves generators created before it. Closed generators carry a
//! nonzero `ρ`-value in `U`; non-closed ones kill cohomology classes whose
//! realization vanishes and have `ρ = 0`.

use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exterior::{format_form, Blade, LinearEndo, Multivector};
use crate::linalg::{axpy, Echelon, LinearMap, SparseVec};
use crate::scalar::{format_rational, Rational};
use crate::spectral::{nilpotent_log, AlmostAbelianSpec};
use crate::unipotent::UTable;

pub type GenId = usize;

/// A monomial in the generators: sorted by id, positive exponents, odd
/// generators with exponent one.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(GenId, u32)>);

impl Monomial {
    pub fn unit() -> Self {
        Monomial(Vec::new())
    }

    pub fn generator(id: GenId) -> Self {
        Monomial(vec![(id, 1)])
    }

    /// Builds a monomial from factors with strictly increasing ids and
    /// positive exponents.
    pub fn from_factors(factors: Vec<(GenId, u32)>) -> Option<Self> {
        let increasing = factors.windows(2).all(|w| w[0].0 < w[1].0);
        (increasing && factors.iter().all(|(_, e)| *e > 0)).then_some(Monomial(factors))
    }

    pub fn factors(&self) -> &[(GenId, u32)] {
        &self.0
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of generator factors counted with multiplicity.
    pub fn length(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn uses(&self, id: GenId) -> bool {
        self.0.iter().any(|(g, _)| *g == id)
    }
}

pub type Polynomial = SparseVec<Monomial>;

pub fn monomial_poly(m: Monomial) -> Polynomial {
    let mut p = Polynomial::new();
    p.insert(m, Rational::one());
    p
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub id: GenId,
    pub name: String,
    pub degree: usize,
    pub closed: bool,
    pub differential: Polynomial,
    pub rho: Multivector,
}

#[derive(Clone, Debug)]
pub struct MinimalModel {
    /// Dimension of the exterior algebra that `ρ` lands in.
    pub n: usize,
    pub degree_bound: usize,
    pub generators: Vec<Generator>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum SplitKey {
    Diff(Monomial),
    Rho(Blade),
}

impl MinimalModel {
    pub fn empty(n: usize, degree_bound: usize) -> Self {
        MinimalModel {
            n,
            degree_bound,
            generators: Vec::new(),
        }
    }

    pub fn generator(&self, id: GenId) -> &Generator {
        &self.generators[id]
    }

    fn is_odd(&self, id: GenId) -> bool {
        self.generators[id].degree % 2 == 1
    }

    pub fn degree_of(&self, m: &Monomial) -> usize {
        m.0.iter()
            .map(|(g, e)| self.generators[*g].degree * *e as usize)
            .sum()
    }

    /// Generator counts by degree, index 0 unused.
    pub fn counts_by_degree(&self) -> Vec<(usize, usize)> {
        let mut out = vec![(0, 0); self.degree_bound + 1];
        for g in &self.generators {
            if g.closed {
                out[g.degree].0 += 1;
            } else {
                out[g.degree].1 += 1;
            }
        }
        out
    }

    pub fn mul_monomials(&self, a: &Monomial, b: &Monomial) -> Option<(i32, Monomial)> {
        let mut swaps = 0usize;
        for (j, _) in &b.0 {
            if self.is_odd(*j) {
                if a.uses(*j) {
                    return None;
                }
                swaps += a.0.iter().filter(|(i, _)| *i > *j && self.is_odd(*i)).count();
            }
        }
        let mut merged = a.0.clone();
        for (j, e) in &b.0 {
            match merged.binary_search_by_key(j, |(i, _)| *i) {
                Ok(pos) => merged[pos].1 += e,
                Err(pos) => merged.insert(pos, (*j, *e)),
            }
        }
        let sign = if swaps % 2 == 0 { 1 } else { -1 };
        Some((sign, Monomial(merged)))
    }

    pub fn mul(&self, a: &Polynomial, b: &Polynomial) -> Polynomial {
        let mut out = Polynomial::new();
        for (ma, ca) in a {
            for (mb, cb) in b {
                if let Some((sign, m)) = self.mul_monomials(ma, mb) {
                    let c = ca * cb * Rational::from_integer(sign.into());
                    axpy(&mut out, &c, &monomial_poly(m));
                }
            }
        }
        out
    }

    fn power_of(&self, id: GenId, e: u32) -> Polynomial {
        if e == 0 {
            monomial_poly(Monomial::unit())
        } else {
            monomial_poly(Monomial(vec![(id, e)]))
        }
    }

    /// Extends `on_generator` from generators to monomials as a derivation
    /// of degree `shift`.
    fn derivation_on_monomial(
        &self,
        m: &Monomial,
        shift: usize,
        on_generator: &dyn Fn(GenId) -> Polynomial,
    ) -> Polynomial {
        let mut out = Polynomial::new();
        let mut prefix_degree = 0;
        for (pos, (g, e)) in m.0.iter().enumerate() {
            let image = on_generator(*g);
            if !image.is_empty() {
                let prefix = monomial_poly(Monomial(m.0[..pos].to_vec()));
                let suffix = monomial_poly(Monomial(m.0[pos + 1..].to_vec()));
                let middle = self.mul(&image, &self.power_of(*g, e - 1));
                let term = self.mul(&self.mul(&prefix, &middle), &suffix);
                let mut c = Rational::from_integer((*e).into());
                if shift % 2 == 1 && prefix_degree % 2 == 1 {
                    c = -c;
                }
                axpy(&mut out, &c, &term);
            }
            prefix_degree += self.generators[*g].degree * *e as usize;
        }
        out
    }

    fn extend_derivation(
        &self,
        p: &Polynomial,
        shift: usize,
        on_generator: &dyn Fn(GenId) -> Polynomial,
    ) -> Polynomial {
        let mut out = Polynomial::new();
        for (m, c) in p {
            axpy(&mut out, c, &self.derivation_on_monomial(m, shift, on_generator));
        }
        out
    }

    pub fn d(&self, p: &Polynomial) -> Polynomial {
        self.extend_derivation(p, 1, &|g| self.generators[g].differential.clone())
    }

    pub fn d_monomial(&self, m: &Monomial) -> Polynomial {
        self.d(&monomial_poly(m.clone()))
    }

    /// A degree-0 derivation given on generators.
    pub fn derivation(&self, p: &Polynomial, on_generator: &dyn Fn(GenId) -> Polynomial) -> Polynomial {
        self.extend_derivation(p, 0, on_generator)
    }

    pub fn rho_monomial(&self, m: &Monomial) -> Multivector {
        let mut out = Multivector::basis(&[]);
        for (g, e) in &m.0 {
            let gen = &self.generators[*g];
            out = out.wedge(&gen.rho.power(*e as usize));
            if out.is_zero() {
                return Multivector::zero(self.degree_of(m));
            }
        }
        out
    }

    pub fn rho(&self, p: &Polynomial, degree: usize) -> Multivector {
        let mut out = Multivector::zero(degree);
        for (m, c) in p {
            out.add_assign(&self.rho_monomial(m).scale(c));
        }
        out
    }

    /// All monomials of the given degree in the generators accepted by
    /// `keep`, in increasing order.
    pub fn monomials_where(&self, degree: usize, keep: impl Fn(&Generator) -> bool) -> Vec<Monomial> {
        let gens: Vec<&Generator> = self
            .generators
            .iter()
            .filter(|g| g.degree <= degree && keep(g))
            .collect();
        let mut out = Vec::new();
        fn go(
            gens: &[&Generator],
            idx: usize,
            remaining: usize,
            acc: &mut Vec<(GenId, u32)>,
            out: &mut Vec<Monomial>,
        ) {
            if remaining == 0 {
                out.push(Monomial(acc.clone()));
                return;
            }
            if idx == gens.len() {
                return;
            }
            let g = gens[idx];
            let max_exp = if g.degree % 2 == 1 { 1 } else { remaining / g.degree };
            for e in (0..=max_exp.min(remaining / g.degree)).rev() {
                if e > 0 {
                    acc.push((g.id, e as u32));
                }
                go(gens, idx + 1, remaining - e * g.degree, acc, out);
                if e > 0 {
                    acc.pop();
                }
            }
        }
        go(&gens, 0, degree, &mut Vec::new(), &mut out);
        out.sort();
        out
    }

    pub fn monomials(&self, degree: usize) -> Vec<Monomial> {
        self.monomials_where(degree, |_| true)
    }

    /// Matrix of `d` from the given monomials, as images in monomial keys.
    fn d_images(&self, basis: &[Monomial]) -> Vec<Polynomial> {
        basis.iter().map(|m| self.d_monomial(m)).collect()
    }

    fn lift(basis: &[Monomial], v: SparseVec<usize>) -> Polynomial {
        v.into_iter().map(|(i, c)| (basis[i].clone(), c)).collect()
    }

    /// Basis of the cocycles of degree `k`.
    pub fn cocycles(&self, k: usize) -> Vec<Polynomial> {
        let basis = self.monomials(k);
        LinearMap::new(&self.d_images(&basis))
            .kernel()
            .into_iter()
            .map(|v| Self::lift(&basis, v))
            .collect()
    }

    /// Echelon basis of the coboundaries of degree `k`.
    pub fn coboundaries(&self, k: usize) -> Echelon<Monomial> {
        if k == 0 {
            return Echelon::new();
        }
        LinearMap::new(&self.d_images(&self.monomials(k - 1))).image()
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn format_poly(&self, p: &Polynomial) -> String {
        format_poly_with(p, |g| self.generators[g].name.clone())
    }

    /// The model with one generator removed; monomials that used it vanish
    /// and later ids shift down by one.
    pub fn without_generator(&self, id: GenId) -> MinimalModel {
        let remap = |p: &Polynomial| -> Polynomial {
            p.iter()
                .filter(|(m, _)| !m.uses(id))
                .map(|(m, c)| {
                    let shifted = m
                        .0
                        .iter()
                        .map(|&(g, e)| (if g > id { g - 1 } else { g }, e))
                        .collect();
                    (Monomial(shifted), c.clone())
                })
                .collect()
        };
        let generators = self
            .generators
            .iter()
            .filter(|g| g.id != id)
            .enumerate()
            .map(|(new_id, g)| Generator {
                id: new_id,
                differential: remap(&g.differential),
                ..g.clone()
            })
            .collect();
        MinimalModel {
            generators,
            ..self.clone()
        }
    }
}

pub(crate) fn format_poly_with(p: &Polynomial, name: impl Fn(GenId) -> String) -> String {
    if p.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (m, c)) in p.iter().enumerate() {
        let negative = c < &Rational::zero();
        let magnitude = if negative { -c.clone() } else { c.clone() };
        if i == 0 {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        let word = m
            .0
            .iter()
            .map(|&(g, e)| {
                if e == 1 {
                    name(g)
                } else {
                    format!("{}^{e}", name(g))
                }
            })
            .collect::<Vec<_>>()
            .join("*");
        if m.is_unit() {
            out.push_str(&format_rational(&magnitude));
        } else if magnitude.is_one() {
            out.push_str(&word);
        } else {
            out.push_str(&format!("{}*{}", format_rational(&magnitude), word));
        }
    }
    out
}

impl fmt::Display for MinimalModel {
    /// One line per generator:
    /// `name | degree k | closed|exact | d = <poly> | rho = <form>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "minimal model through degree {}", self.degree_bound)?;
        for g in &self.generators {
            writeln!(
                f,
                "{} | degree {} | {} | d = {} | rho = {}",
                g.name,
                g.degree,
                if g.closed { "closed" } else { "non-closed" },
                self.format_poly(&g.differential),
                format_form(&g.rho)
            )?;
        }
        Ok(())
    }
}

const MAX_KILLING_ROUNDS: usize = 16;

/// Builds the minimal model of `(U, 0)` through degree `d_max`.
pub fn model_of_u(spec: &AlmostAbelianSpec, d_max: usize) -> Result<MinimalModel> {
    build_model(&UTable::compute(spec), &nilpotent_log(spec), d_max)
}

/// Same as [`model_of_u`] with `U` and the nilpotent action supplied.
///
/// Closed generators of each degree are created in an order adapted to the
/// nilpotent action: a class is only added once its image under `N^t` is
/// already realized, so that the twist of a closed generator can always be
/// expressed through earlier ones.
pub fn build_model(u: &UTable, nil: &LinearEndo, d_max: usize) -> Result<MinimalModel> {
    if d_max == 0 {
        return Err(Error::InvalidDegreeBound(d_max));
    }
    let n = u.n;
    let mut model = MinimalModel::empty(n, d_max);
    let u_span = |q: usize| -> Echelon<Blade> {
        u.slice(q).map(|s| s.span().clone()).unwrap_or_default()
    };
    for q in 1..=d_max {
        // closed generators: complete ρ(Z^q) to U^q
        let mut realized = Echelon::new();
        for z in model.cocycles(q) {
            realized.insert(&model.rho(&z, q).to_sparse());
        }
        let target = u_span(q);
        let candidates: Vec<SparseVec<Blade>> = target.rows().cloned().collect();
        let mut closed_count = 0;
        while realized.rank() < target.rank() {
            let shifted: Vec<SparseVec<Blade>> = candidates
                .iter()
                .map(|c| {
                    let image = derivation_on_forms(nil, &Multivector::from_sparse(q, c));
                    realized.reduce(&image.to_sparse())
                })
                .collect();
            let mut added = false;
            for v in LinearMap::new(&shifted).kernel() {
                let mut form = SparseVec::new();
                for (i, c) in &v {
                    axpy(&mut form, c, &candidates[*i]);
                }
                if realized.insert(&form).is_some() {
                    closed_count += 1;
                    push_closed(&mut model, q, closed_count, Multivector::from_sparse(q, &form));
                    added = true;
                }
            }
            if !added {
                // N^t does not descend to U^q / realized; fall back to any
                // complement. The twist then needs later generators.
                for c in &candidates {
                    if realized.insert(c).is_some() {
                        closed_count += 1;
                        push_closed(&mut model, q, closed_count, Multivector::from_sparse(q, c));
                    }
                }
            }
        }

        // non-closed generators: kill ker(ρ*) in degree q+1
        let mut killed = 0;
        let mut rounds = 0;
        loop {
            let basis = model.monomials(q + 1);
            let images: Vec<SparseVec<SplitKey>> = basis
                .iter()
                .map(|m| split_image(&model, m))
                .collect();
            let mut exact = model.coboundaries(q + 1);
            let mut new_differentials = Vec::new();
            for v in LinearMap::new(&images).kernel() {
                let cocycle = MinimalModel::lift(&basis, v);
                let rest = exact.reduce(&cocycle);
                if !rest.is_empty() {
                    exact.insert(&rest);
                    new_differentials.push(rest);
                }
            }
            if new_differentials.is_empty() {
                break;
            }
            rounds += 1;
            if rounds > MAX_KILLING_ROUNDS {
                return Err(Error::Invariant(format!(
                    "degree-{q} generators did not stabilize after {MAX_KILLING_ROUNDS} rounds"
                )));
            }
            for dv in new_differentials {
                killed += 1;
                let id = model.generators.len();
                model.generators.push(Generator {
                    id,
                    name: format!("n{q}_{killed}"),
                    degree: q,
                    closed: false,
                    differential: dv,
                    rho: Multivector::zero(q),
                });
            }
        }
    }
    Ok(model)
}

fn push_closed(model: &mut MinimalModel, q: usize, index: usize, rho: Multivector) {
    let id = model.generators.len();
    model.generators.push(Generator {
        id,
        name: format!("c{q}_{index}"),
        degree: q,
        closed: true,
        differential: Polynomial::new(),
        rho,
    });
}

/// `m ↦ (d m, ρ m)`, whose kernel holds the cocycles that die under `ρ*`.
fn split_image(model: &MinimalModel, m: &Monomial) -> SparseVec<SplitKey> {
    let mut out: SparseVec<SplitKey> = model
        .d_monomial(m)
        .into_iter()
        .map(|(k, c)| (SplitKey::Diff(k), c))
        .collect();
    for (b, c) in model.rho_monomial(m).to_sparse() {
        out.insert(SplitKey::Rho(b), c);
    }
    out
}

/// `N^t` acting on forms of any degree as a derivation.
pub fn derivation_on_forms(nil: &LinearEndo, x: &Multivector) -> Multivector {
    crate::exterior::derivation_apply(nil, x)
}

/// A cohomology class of the model with its realization.
#[derive(Clone, Debug)]
pub struct ModelClass {
    pub representative: Polynomial,
    pub image: Multivector,
}

/// Basis of `H^k` of the model, each class paired with its `ρ`-image.
pub fn model_cohomology(model: &MinimalModel, k: usize) -> Result<Vec<ModelClass>> {
    if k > model.degree_bound {
        return Err(Error::DegreeBound {
            requested: k,
            bound: model.degree_bound,
        });
    }
    let mut exact = model.coboundaries(k);
    let mut out = Vec::new();
    for z in model.cocycles(k) {
        let rest = exact.reduce(&z);
        if !rest.is_empty() {
            exact.insert(&rest);
            let image = model.rho(&rest, k);
            out.push(ModelClass {
                representative: rest,
                image,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuasiIsoEntry {
    pub degree: usize,
    pub model_dim: usize,
    pub u_dim: usize,
    /// Rank of `ρ*` in this degree.
    pub rank: usize,
    /// Whether the images land inside `U`.
    pub lands_in_u: bool,
}

impl QuasiIsoEntry {
    pub fn passed(&self) -> bool {
        self.lands_in_u && self.rank == self.model_dim && self.rank == self.u_dim
    }
}

/// Checks that `ρ*: H^i(model) → U^i` is bijective for every `i` up to the
/// degree bound.
pub fn verify_quasi_iso(model: &MinimalModel, u: &UTable) -> Result<Vec<QuasiIsoEntry>> {
    let mut out = Vec::new();
    for k in 0..=model.degree_bound {
        let classes = model_cohomology(model, k)?;
        let images: Vec<_> = classes.iter().map(|c| c.image.to_sparse()).collect();
        let rank = Echelon::from_vectors(&images).rank();
        let (u_dim, lands_in_u) = match u.slice(k) {
            Some(slice) => (slice.dim(), classes.iter().all(|c| slice.contains(&c.image))),
            None => (0, classes.iter().all(|c| c.image.is_zero())),
        };
        out.push(QuasiIsoEntry {
            degree: k,
            model_dim: classes.len(),
            u_dim,
            rank,
            lands_in_u,
        });
    }
    Ok(out)
}

/// Structural invariants: creation order, minimality, `d² = 0`, and the
/// formality map (closed generators to `ρ`, the rest to zero) commuting
/// with the differentials.
pub fn check_model(model: &MinimalModel) -> Result<()> {
    for g in &model.generators {
        for m in g.differential.keys() {
            if m.factors().iter().any(|(h, _)| *h >= g.id) {
                return Err(Error::Invariant(format!(
                    "d{} uses a generator created after it",
                    g.name
                )));
            }
            if m.length() < 2 {
                return Err(Error::Invariant(format!("d{} has a linear term", g.name)));
            }
            if model.degree_of(m) != g.degree + 1 {
                return Err(Error::Invariant(format!("d{} is not homogeneous", g.name)));
            }
        }
        if !model.d(&g.differential).is_empty() {
            return Err(Error::Invariant(format!("d²{} ≠ 0", g.name)));
        }
        if g.closed != g.differential.is_empty() || g.closed == g.rho.is_zero() {
            return Err(Error::Invariant(format!(
                "{} mixes closed and non-closed data",
                g.name
            )));
        }
        if !model.rho(&g.differential, g.degree + 1).is_zero() {
            return Err(Error::Invariant(format!("ρ(d{}) ≠ 0", g.name)));
        }
    }
    Ok(())
}
