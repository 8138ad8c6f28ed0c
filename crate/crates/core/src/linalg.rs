//! Sparse exact linear algebra over the rationals.
//!
//! Vectors are sparse maps from an ordered key type (exterior monomials,
//! free-algebra monomials, ...) to rationals. Pivots are always the smallest
//! key of a row, so every echelon form here is reduced and canonical for the
//! key order.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::scalar::Rational;

pub type SparseVec<K> = BTreeMap<K, Rational>;

/// `y += a·x`, dropping entries that cancel.
pub fn axpy<K: Ord + Clone>(y: &mut SparseVec<K>, a: &Rational, x: &SparseVec<K>) {
    if a.is_zero() {
        return;
    }
    for (k, v) in x {
        let prod = a * v;
        match y.get_mut(k) {
            Some(entry) => {
                *entry += prod;
                if entry.is_zero() {
                    y.remove(k);
                }
            }
            None => {
                y.insert(k.clone(), prod);
            }
        }
    }
}

pub fn scaled<K: Ord + Clone>(x: &SparseVec<K>, a: &Rational) -> SparseVec<K> {
    if a.is_zero() {
        return SparseVec::new();
    }
    x.iter().map(|(k, v)| (k.clone(), v * a)).collect()
}

/// Reduced row echelon basis of a subspace.
#[derive(Clone, Debug)]
pub struct Echelon<K: Ord + Clone> {
    rows: BTreeMap<K, SparseVec<K>>,
}

impl<K: Ord + Clone> Default for Echelon<K> {
    fn default() -> Self {
        Echelon {
            rows: BTreeMap::new(),
        }
    }
}

impl<K: Ord + Clone> Echelon<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_vectors<'a, I>(vectors: I) -> Self
    where
        I: IntoIterator<Item = &'a SparseVec<K>>,
        K: 'a,
    {
        let mut out = Self::new();
        for v in vectors {
            out.insert(v);
        }
        out
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn pivots(&self) -> impl Iterator<Item = &K> {
        self.rows.keys()
    }

    pub fn is_pivot(&self, key: &K) -> bool {
        self.rows.contains_key(key)
    }

    /// Rows in pivot order.
    pub fn rows(&self) -> impl Iterator<Item = &SparseVec<K>> {
        self.rows.values()
    }

    pub fn into_rows(self) -> Vec<SparseVec<K>> {
        self.rows.into_values().collect()
    }

    /// Remainder of `v` after eliminating every pivot coordinate.
    pub fn reduce(&self, v: &SparseVec<K>) -> SparseVec<K> {
        let hits: Vec<(K, Rational)> = v
            .iter()
            .filter(|(k, _)| self.rows.contains_key(*k))
            .map(|(k, c)| (k.clone(), c.clone()))
            .collect();
        let mut out = v.clone();
        for (pivot, c) in hits {
            axpy(&mut out, &(-c), &self.rows[&pivot]);
        }
        out
    }

    pub fn contains(&self, v: &SparseVec<K>) -> bool {
        self.reduce(v).is_empty()
    }

    /// Inserts `v`; returns the new pivot, or `None` if `v` was already in
    /// the span.
    pub fn insert(&mut self, v: &SparseVec<K>) -> Option<K> {
        let mut r = self.reduce(v);
        let (pivot, lead) = match r.iter().next() {
            Some((k, c)) => (k.clone(), c.clone()),
            None => return None,
        };
        if !lead.is_one() {
            let inv = Rational::one() / lead;
            r = scaled(&r, &inv);
        }
        for row in self.rows.values_mut() {
            if let Some(c) = row.get(&pivot).cloned() {
                axpy(row, &(-c), &r);
            }
        }
        self.rows.insert(pivot.clone(), r);
        Some(pivot)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum AugKey<K> {
    Image(K),
    Source(usize),
}

/// A linear map given by the images of the source basis vectors `0..m`,
/// reduced once so that kernels, images and preimages can all be read off.
#[derive(Clone, Debug)]
pub struct LinearMap<K: Ord + Clone> {
    source_dim: usize,
    graph: Echelon<AugKey<K>>,
}

impl<K: Ord + Clone> LinearMap<K> {
    pub fn new(images: &[SparseVec<K>]) -> Self {
        let mut graph = Echelon::new();
        for (i, img) in images.iter().enumerate() {
            let mut v: SparseVec<AugKey<K>> = img
                .iter()
                .map(|(k, c)| (AugKey::Image(k.clone()), c.clone()))
                .collect();
            v.insert(AugKey::Source(i), Rational::one());
            graph.insert(&v);
        }
        LinearMap {
            source_dim: images.len(),
            graph,
        }
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn rank(&self) -> usize {
        self.graph
            .pivots()
            .filter(|p| matches!(p, AugKey::Image(_)))
            .count()
    }

    /// Kernel basis in reduced echelon form, as coordinate vectors over the
    /// source basis.
    pub fn kernel(&self) -> Vec<SparseVec<usize>> {
        self.graph
            .rows
            .iter()
            .filter(|(p, _)| matches!(p, AugKey::Source(_)))
            .map(|(_, row)| {
                row.iter()
                    .filter_map(|(k, c)| match k {
                        AugKey::Source(i) => Some((*i, c.clone())),
                        AugKey::Image(_) => None,
                    })
                    .collect()
            })
            .collect()
    }

    /// Reduced echelon basis of the image.
    pub fn image(&self) -> Echelon<K> {
        let mut out = Echelon::new();
        for (p, row) in &self.graph.rows {
            if matches!(p, AugKey::Image(_)) {
                let img: SparseVec<K> = row
                    .iter()
                    .filter_map(|(k, c)| match k {
                        AugKey::Image(k) => Some((k.clone(), c.clone())),
                        AugKey::Source(_) => None,
                    })
                    .collect();
                out.rows.insert(img.keys().next().unwrap().clone(), img);
            }
        }
        out
    }

    /// The preimage of `target` that is reduced against the echelon kernel
    /// basis, or `None` if `target` is not in the image.
    pub fn solve(&self, target: &SparseVec<K>) -> Option<SparseVec<usize>> {
        let v: SparseVec<AugKey<K>> = target
            .iter()
            .map(|(k, c)| (AugKey::Image(k.clone()), c.clone()))
            .collect();
        let r = self.graph.reduce(&v);
        let mut x = SparseVec::new();
        for (k, c) in r {
            match k {
                AugKey::Image(_) => return None,
                AugKey::Source(i) => {
                    x.insert(i, -c);
                }
            }
        }
        Some(x)
    }
}
