//! Versioned analysis reports: assembling them from a spec, rendering them as
//! text, and re-deriving every checkable claim from a saved report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cohomology::CeComplex;
use crate::error::{Error, Result};
use crate::formality::{k_formality, twist_derivation, TwistNote, TwistedModel};
use crate::scalar::{format_rational, parse_rational};
use crate::spectral::{modified_matrix, nilpotent_log, AlmostAbelianSpec, SpecDocument};
use crate::sullivan::{
    build_model, check_model, verify_quasi_iso, GenId, Generator, MinimalModel, Monomial,
    Polynomial,
};
use crate::symplectic::{
    closed_two_classes, find_symplectic, form_from_document, form_to_document, verify_symplectic,
    CoSymplecticPair, FormDocument, SearchOptions, SymplecticOutcome,
};
use crate::unipotent::UTable;

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Unipotent,
    Cohomology,
    Model,
    Formality,
    Symplectic,
    All,
}

impl Stage {
    fn includes(self, section: Stage) -> bool {
        self == Stage::All || self == section || (self == Stage::Formality && section == Stage::Model)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    pub version: u32,
    pub spec: SpecDocument,
    pub degree_bound: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unipotent: Option<UnipotentSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohomology: Option<CohomologySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formality: Option<FormalitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symplectic: Option<SymplecticSection>,
    pub assumptions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnipotentSection {
    /// Indexed by degree `0..=n`.
    pub dims: Vec<usize>,
    pub bases: Vec<Vec<FormDocument>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohomologySection {
    /// Indexed by degree `0..=n+1`.
    pub betti: Vec<usize>,
    /// Representatives as forms on `ℝ^{n+1}`.
    pub representatives: Vec<Vec<FormDocument>>,
    pub trace: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Factor {
    pub generator: String,
    pub power: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coeff: String,
    pub factors: Vec<Factor>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    pub name: String,
    pub degree: usize,
    pub closed: bool,
    pub differential: Vec<Term>,
    pub rho: FormDocument,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuasiIsoRow {
    pub degree: usize,
    pub model_dim: usize,
    pub u_dim: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub generators: Vec<GeneratorEntry>,
    /// `(closed, non-closed)` generator counts for degrees `1..=bound`.
    pub counts: Vec<(usize, usize)>,
    pub quasi_iso: Vec<QuasiIsoRow>,
    pub dump: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessEntry {
    pub cocycle: Vec<Term>,
    pub twist: Vec<Term>,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeEntry {
    pub degree: usize,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormalitySection {
    pub checked_through: usize,
    pub summary: String,
    pub degrees: Vec<DegreeEntry>,
    /// `θ̂` on each generator, by name.
    pub twist: BTreeMap<String, Vec<Term>>,
    pub total_model: Vec<(String, String)>,
    pub notes: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymplecticStatus {
    Found,
    NoneOfThisType,
    NotFoundAtBound,
    CandidateRejected,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymplecticWitnessEntry {
    pub f: FormDocument,
    pub eta: FormDocument,
    pub omega: FormDocument,
    pub fiber_top: String,
    pub omega_top: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_point: Option<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymplecticSection {
    pub status: SymplecticStatus,
    pub detail: String,
    pub closed_two_classes: Vec<FormDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<SymplecticWitnessEntry>,
    /// Whether `D = d` on all of degree 2 of the base model, the stronger
    /// hypothesis under which the construction is usually stated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist_vanishes_in_degree_two: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub degree_bound: usize,
    pub stage: Stage,
    pub search: SearchOptions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            degree_bound: 3,
            stage: Stage::All,
            search: SearchOptions::default(),
        }
    }
}

fn terms_of(p: &Polynomial, model: &MinimalModel) -> Vec<Term> {
    p.iter()
        .map(|(m, c)| Term {
            coeff: format_rational(c),
            factors: m
                .factors()
                .iter()
                .map(|&(g, e)| Factor {
                    generator: model.generators[g].name.clone(),
                    power: e,
                })
                .collect(),
        })
        .collect()
}

fn polynomial_of(terms: &[Term], ids: &BTreeMap<&str, GenId>, field: &str) -> Result<Polynomial> {
    let malformed = |m: String| Error::MalformedReport(format!("{field}: {m}"));
    let mut out = Polynomial::new();
    for t in terms {
        let c = parse_rational(&t.coeff).map_err(|e| malformed(e.to_string()))?;
        if c.numer().sign() == num_bigint::Sign::NoSign {
            return Err(malformed("zero coefficient".to_string()));
        }
        let factors = t
            .factors
            .iter()
            .map(|f| {
                ids.get(f.generator.as_str())
                    .map(|id| (*id, f.power))
                    .ok_or_else(|| malformed(format!("unknown generator {}", f.generator)))
            })
            .collect::<Result<Vec<_>>>()?;
        let m = Monomial::from_factors(factors)
            .ok_or_else(|| malformed("factors out of order".to_string()))?;
        if out.insert(m, c).is_some() {
            return Err(malformed("repeated monomial".to_string()));
        }
    }
    Ok(out)
}

fn modification_holds(spec: &AlmostAbelianSpec) -> bool {
    spec.modification_hypothesis().is_ok()
}

/// Runs the requested stages on `spec`.
pub fn analyze(spec: &AlmostAbelianSpec, options: &AnalysisOptions) -> Result<AnalysisReport> {
    let d_max = options.degree_bound;
    if d_max == 0 {
        return Err(Error::InvalidDegreeBound(0));
    }
    let stage = options.stage;
    let mut assumptions = Vec::new();
    let mut report = AnalysisReport {
        version: REPORT_VERSION,
        spec: spec.to_document(),
        degree_bound: d_max,
        unipotent: None,
        cohomology: None,
        model: None,
        formality: None,
        symplectic: None,
        assumptions: Vec::new(),
    };
    assumptions.push(if modification_holds(spec) {
        "modification hypothesis holds: every complex block is a resonant rotation".to_string()
    } else {
        "modification hypothesis fails: cohomology of the modified algebra is not computed".to_string()
    });
    let label = if spec.lattice_label.is_empty() { "unspecified" } else { &spec.lattice_label };
    assumptions.push(format!("lattice existence asserted by the input, not checked ({label})"));

    let u = UTable::compute(spec);
    if stage.includes(Stage::Unipotent) {
        report.unipotent = Some(UnipotentSection {
            dims: u.dims(),
            bases: u
                .slices
                .iter()
                .map(|s| s.basis().iter().map(form_to_document).collect())
                .collect(),
        });
    }

    if stage.includes(Stage::Cohomology) {
        let complex = CeComplex::new(spec)?;
        let mut betti = Vec::new();
        let mut representatives = Vec::new();
        for k in 0..=spec.n + 1 {
            let slice = complex.cohomology(k)?;
            complex.verify_slice(&slice)?;
            betti.push(slice.betti());
            representatives.push(
                slice
                    .representatives()
                    .iter()
                    .map(|r| form_to_document(&r.to_total(spec.n)))
                    .collect(),
            );
        }
        let trace = complex.action.trace();
        assumptions.push(if trace.is_zero() {
            "unimodular: the modified action is traceless".to_string()
        } else {
            format!("not unimodular: trace of the modified action is {trace}")
        });
        report.cohomology = Some(CohomologySection {
            betti,
            representatives,
            trace: trace.to_string(),
        });
    }

    let needs_model = stage.includes(Stage::Model)
        || stage.includes(Stage::Formality)
        || stage.includes(Stage::Symplectic);
    let nil = nilpotent_log(spec);
    let twisted = if needs_model {
        let model = build_model(&u, &nil, d_max)?;
        check_model(&model)?;
        let tm = twist_derivation(&model, &nil)?;
        tm.check()?;
        Some(tm)
    } else {
        None
    };

    if let (true, Some(tm)) = (stage.includes(Stage::Model), &twisted) {
        let model = &tm.base;
        let quasi_iso = verify_quasi_iso(model, &u)?;
        if let Some(bad) = quasi_iso.iter().find(|e| !e.passed()) {
            return Err(Error::Invariant(format!(
                "ρ* is not an isomorphism in degree {}",
                bad.degree
            )));
        }
        assumptions.push(format!(
            "model computed through degree {d_max}; finite type beyond the bound is not certified"
        ));
        report.model = Some(ModelSection {
            generators: model
                .generators
                .iter()
                .map(|g| GeneratorEntry {
                    name: g.name.clone(),
                    degree: g.degree,
                    closed: g.closed,
                    differential: terms_of(&g.differential, model),
                    rho: form_to_document(&g.rho),
                })
                .collect(),
            counts: model.counts_by_degree()[1..].to_vec(),
            quasi_iso: quasi_iso
                .iter()
                .map(|e| QuasiIsoRow {
                    degree: e.degree,
                    model_dim: e.model_dim,
                    u_dim: e.u_dim,
                    passed: e.passed(),
                })
                .collect(),
            dump: model.to_text(),
        });
    }

    if let (true, Some(tm)) = (stage.includes(Stage::Formality), &twisted) {
        report.formality = Some(formality_section(tm, d_max)?);
    }

    if stage.includes(Stage::Symplectic) {
        report.symplectic = Some(symplectic_section(spec, twisted.as_ref(), &options.search)?);
    }
    report.assumptions = assumptions;
    Ok(report)
}

fn formality_section(tm: &TwistedModel, k: usize) -> Result<FormalitySection> {
    let verdict = k_formality(tm, k)?;
    let model = &tm.base;
    Ok(FormalitySection {
        checked_through: k,
        summary: verdict.summary(),
        degrees: verdict
            .degrees
            .iter()
            .map(|d| DegreeEntry {
                degree: d.degree,
                passed: d.passed,
                witness: d.witness.as_ref().map(|w| WitnessEntry {
                    cocycle: terms_of(&w.cocycle, model),
                    twist: terms_of(&w.twist, model),
                    text: format!(
                        "d({}) = 0 but θ̂({}) = {}",
                        model.format_poly(&w.cocycle),
                        model.format_poly(&w.cocycle),
                        model.format_poly(&w.twist)
                    ),
                }),
            })
            .collect(),
        twist: model
            .generators
            .iter()
            .map(|g| (g.name.clone(), terms_of(&tm.theta[g.id], model)))
            .collect(),
        total_model: tm.differential_lines(),
        notes: tm
            .notes
            .iter()
            .map(|n| match n {
                TwistNote::Choice { generator, degree, kernel_dim } => format!(
                    "twist of {generator} (degree {degree}) chosen from a {kernel_dim}-dimensional family"
                ),
                TwistNote::OrderingFallback { generator, degree } => format!(
                    "twist of {generator} (degree {degree}) uses generators created after it"
                ),
            })
            .collect(),
    })
}

fn symplectic_section(
    spec: &AlmostAbelianSpec,
    tm: Option<&TwistedModel>,
    search: &SearchOptions,
) -> Result<SymplecticSection> {
    let classes: Vec<_> = closed_two_classes(spec).iter().map(form_to_document).collect();
    let twist_vanishes_in_degree_two = tm
        .filter(|tm| tm.base.degree_bound >= 2)
        .map(|tm| tm.theta_vanishes_on_degree(2));
    let mut section = SymplecticSection {
        status: SymplecticStatus::NotApplicable,
        detail: String::new(),
        closed_two_classes: classes,
        witness: None,
        twist_vanishes_in_degree_two,
    };
    if spec.total_dim() % 2 == 1 {
        section.detail = format!("total dimension {} is odd", spec.total_dim());
        return Ok(section);
    }
    if !modification_holds(spec) {
        section.detail = "closedness needs the modified algebra, which is unavailable".to_string();
        return Ok(section);
    }
    match find_symplectic(spec, search)? {
        SymplecticOutcome::Found(w) => {
            section.status = SymplecticStatus::Found;
            section.detail = format!(
                "ω = F + η∧α^{} is closed (N^t F = 0) with top(ω^{}) = {}",
                spec.n + 1,
                spec.total_dim() / 2,
                format_rational(&w.check.omega_top)
            );
            section.witness = Some(SymplecticWitnessEntry {
                f: form_to_document(&w.pair.f),
                eta: form_to_document(&w.pair.eta),
                omega: form_to_document(&w.omega),
                fiber_top: format_rational(&w.check.fiber_top),
                omega_top: format_rational(&w.check.omega_top),
                grid_point: w.grid_point,
            });
        }
        SymplecticOutcome::NoneOfThisType { evaluations } => {
            section.status = SymplecticStatus::NoneOfThisType;
            section.detail = format!(
                "no symplectic form of the type F + η∧α^{} built from U exists ({evaluations} grid points, all degenerate)",
                spec.n + 1
            );
        }
        SymplecticOutcome::NotFoundAtBound { evaluations } => {
            section.status = SymplecticStatus::NotFoundAtBound;
            section.detail = format!("none found at search bound ({evaluations} evaluations)");
        }
        SymplecticOutcome::CandidateRejected(reason) => {
            section.status = SymplecticStatus::CandidateRejected;
            section.detail = reason;
        }
    }
    Ok(section)
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let report: AnalysisReport = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::MalformedReport(format!("at `{}`: {}", e.path(), e.inner())))?;
        if report.version != REPORT_VERSION {
            return Err(Error::MalformedReport(format!(
                "unsupported report version {} (expected {REPORT_VERSION})",
                report.version
            )));
        }
        Ok(report)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let n = self.spec.n;
        let _ = writeln!(out, "fiber dimension {n}, model bound {}", self.degree_bound);
        if let Some(u) = &self.unipotent {
            let _ = writeln!(out, "\nU (unipotent part of H*(ℝ^{n}))");
            for (k, basis) in u.bases.iter().enumerate() {
                let _ = writeln!(out, "  U^{k}: dim {} {}", u.dims[k], render_forms(basis));
            }
        }
        if let Some(c) = &self.cohomology {
            let _ = writeln!(out, "\ncohomology of the modified Lie algebra");
            for (k, reps) in c.representatives.iter().enumerate() {
                let _ = writeln!(out, "  H^{k}: b = {} {}", c.betti[k], render_forms(reps));
            }
        }
        if let Some(m) = &self.model {
            let _ = writeln!(out);
            out.push_str(&m.dump);
            for row in &m.quasi_iso {
                let _ = writeln!(
                    out,
                    "  ρ* in degree {}: model {} / U {} {}",
                    row.degree,
                    row.model_dim,
                    row.u_dim,
                    if row.passed { "iso" } else { "NOT iso" }
                );
            }
        }
        if let Some(f) = &self.formality {
            let _ = writeln!(out, "\ntwisted model");
            for (name, value) in &f.total_model {
                let _ = writeln!(out, "  D{name} = {value}");
            }
            let _ = writeln!(out, "formality: {}", f.summary);
            for d in &f.degrees {
                match &d.witness {
                    None => {
                        let _ = writeln!(out, "  degree {}: ker D = ker d", d.degree);
                    }
                    Some(w) => {
                        let _ = writeln!(out, "  degree {}: fails, {}", d.degree, w.text);
                    }
                }
            }
            for note in &f.notes {
                let _ = writeln!(out, "  note: {note}");
            }
        }
        if let Some(s) = &self.symplectic {
            let _ = writeln!(out, "\nsymplectic: {}", s.detail);
            let _ = writeln!(out, "  closed 2-classes: {}", render_forms(&s.closed_two_classes));
            if let Some(w) = &s.witness {
                let _ = writeln!(out, "  F = {}", render_form(&w.f));
                let _ = writeln!(out, "  η = {}", render_form(&w.eta));
                let _ = writeln!(out, "  ω = {}", render_form(&w.omega));
                let _ = writeln!(out, "  top(F^(m-1)∧η) = {}, top(ω^m) = {}", w.fiber_top, w.omega_top);
            }
            if let Some(v) = s.twist_vanishes_in_degree_two {
                let _ = writeln!(out, "  D = d on degree 2 of the model: {v}");
            }
        }
        let _ = writeln!(out, "\nassumptions");
        for a in &self.assumptions {
            let _ = writeln!(out, "  - {a}");
        }
        out
    }
}

fn render_form(doc: &FormDocument) -> String {
    let degree = doc.keys().next().map_or(0, |k| if k.is_empty() { 0 } else { k.split(',').count() });
    match form_from_document(doc, degree, crate::exterior::MAX_GENERATORS) {
        Ok(x) => crate::exterior::format_form(&x),
        Err(_) => format!("{doc:?}"),
    }
}

fn render_forms(docs: &[FormDocument]) -> String {
    let parts: Vec<_> = docs.iter().map(render_form).collect();
    format!("[{}]", parts.join(", "))
}

/// One re-derived claim of a report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyCheck {
    pub claim: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOutcome {
    pub checks: Vec<VerifyCheck>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerifyCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn record(&mut self, claim: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(VerifyCheck {
            claim: claim.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn equal<T: PartialEq + std::fmt::Debug>(&mut self, claim: impl Into<String>, reported: &T, derived: &T) {
        let passed = reported == derived;
        let detail = if passed {
            String::new()
        } else {
            format!("reported {reported:?}, re-derived {derived:?}")
        };
        self.record(claim, passed, detail);
    }
}

/// Rebuilds the model stored in a report, checking only its own structure.
fn model_from_report(section: &ModelSection, n: usize, bound: usize) -> Result<MinimalModel> {
    let ids: BTreeMap<&str, GenId> = section
        .generators
        .iter()
        .enumerate()
        .map(|(i, g)| (g.name.as_str(), i))
        .collect();
    if ids.len() != section.generators.len() {
        return Err(Error::MalformedReport("duplicate generator names".to_string()));
    }
    let mut model = MinimalModel::empty(n, bound);
    for (id, g) in section.generators.iter().enumerate() {
        let field = format!("model.generators[{id}]");
        if g.degree == 0 || g.degree > bound {
            return Err(Error::MalformedReport(format!("{field}: degree out of range")));
        }
        let differential = polynomial_of(&g.differential, &ids, &field)?;
        let rho = form_from_document(&g.rho, g.degree, n)
            .map_err(|e| Error::MalformedReport(format!("{field}.rho: {e}")))?;
        model.generators.push(Generator {
            id,
            name: g.name.clone(),
            degree: g.degree,
            closed: g.closed,
            differential,
            rho,
        });
    }
    for g in &model.generators {
        for m in g.differential.keys() {
            for &(h, e) in m.factors() {
                if model.generators[h].degree % 2 == 1 && e > 1 {
                    return Err(Error::MalformedReport(format!(
                        "d{} squares an odd generator",
                        g.name
                    )));
                }
            }
        }
    }
    Ok(model)
}

/// Re-derives every checkable claim of `report` from `spec`.
pub fn verify_report(report: &AnalysisReport, spec: &AlmostAbelianSpec) -> Result<VerifyOutcome> {
    let mut out = VerifyOutcome::default();
    out.equal("spec echo", &report.spec, &spec.to_document());
    let bound = report.degree_bound;
    if bound == 0 {
        return Err(Error::MalformedReport("degree bound must be positive".to_string()));
    }
    let u = UTable::compute(spec);

    if let Some(section) = &report.unipotent {
        let dims = u.dims();
        out.equal("U dimensions", &section.dims, &dims);
        for (k, basis) in section.bases.iter().enumerate() {
            let derived: Vec<_> = u.slice(k).map(|s| s.basis().iter().map(form_to_document).collect()).unwrap_or_default();
            out.equal(format!("U^{k} basis"), basis, &derived);
        }
    }

    if let Some(section) = &report.cohomology {
        let complex = CeComplex::new(spec)?;
        let betti = complex.betti_numbers()?;
        for k in 0..betti.len().max(section.betti.len()) {
            out.equal(format!("betti[{k}]"), &section.betti.get(k), &betti.get(k));
        }
        for (k, reps) in section.representatives.iter().enumerate() {
            let mut closed = true;
            for r in reps {
                let x = form_from_document(r, k, spec.n + 1)?;
                let e = crate::cohomology::CeElement::from_total(&x, spec.n);
                closed &= complex.differential(&e.symbolic())?.is_zero();
            }
            out.record(format!("H^{k} representatives closed"), closed, "");
        }
        out.equal("trace", &section.trace, &modified_matrix(spec)?.trace().to_string());
    }

    let model = match &report.model {
        Some(section) => {
            let model = model_from_report(section, spec.n, bound)?;
            let structure = check_model(&model);
            out.record(
                "model structure (d² = 0, minimality, ρ∘d = 0)",
                structure.is_ok(),
                structure.err().map(|e| e.to_string()).unwrap_or_default(),
            );
            let rows = verify_quasi_iso(&model, &u)?;
            for row in &rows {
                out.record(
                    format!("ρ* bijective in degree {}", row.degree),
                    row.passed(),
                    format!("model {} / U {} / rank {}", row.model_dim, row.u_dim, row.rank),
                );
            }
            let counts = model.counts_by_degree()[1..].to_vec();
            out.equal("generator counts", &section.counts, &counts);
            Some(model)
        }
        None => None,
    };

    if let Some(section) = &report.formality {
        let Some(model) = &model else {
            return Err(Error::MalformedReport(
                "formality section needs the model section".to_string(),
            ));
        };
        let ids: BTreeMap<&str, GenId> = model
            .generators
            .iter()
            .map(|g| (g.name.as_str(), g.id))
            .collect();
        let mut theta = Vec::new();
        for g in &model.generators {
            let terms = section.twist.get(&g.name).ok_or_else(|| {
                Error::MalformedReport(format!("no twist recorded for {}", g.name))
            })?;
            theta.push(polynomial_of(terms, &ids, &format!("formality.twist.{}", g.name))?);
        }
        let tm = TwistedModel {
            base: model.clone(),
            nilpotent: nilpotent_log(spec),
            theta,
            notes: Vec::new(),
        };
        let check = tm.check();
        out.record(
            "D² = 0 and θ̂ realizes N^t",
            check.is_ok(),
            check.err().map(|e| e.to_string()).unwrap_or_default(),
        );
        let verdict = k_formality(&tm, section.checked_through.min(bound))?;
        for d in &verdict.degrees {
            let reported = section.degrees.iter().find(|e| e.degree == d.degree);
            out.equal(
                format!("formality in degree {}", d.degree),
                &reported.map(|e| e.passed),
                &Some(d.passed),
            );
            if let Some(w) = reported.and_then(|e| e.witness.as_ref()) {
                let z = polynomial_of(&w.cocycle, &ids, "witness")?;
                let twist = polynomial_of(&w.twist, &ids, "witness")?;
                let valid = model.d(&z).is_empty() && !twist.is_empty() && tm.theta_of(&z) == twist;
                out.record(format!("formality witness in degree {}", d.degree), valid, "");
            }
        }
    }

    if let Some(section) = &report.symplectic {
        let classes: Vec<_> = closed_two_classes(spec).iter().map(form_to_document).collect();
        out.equal("closed 2-classes", &section.closed_two_classes, &classes);
        match (&section.status, &section.witness) {
            (SymplecticStatus::Found, Some(w)) => {
                let pair = CoSymplecticPair {
                    f: form_from_document(&w.f, 2, spec.n)?,
                    eta: form_from_document(&w.eta, 1, spec.n)?,
                };
                let check = verify_symplectic(spec, &pair)?;
                out.record("symplectic witness", check.passed, format!("{check:?}"));
                out.equal("top(ω^m)", &w.omega_top, &format_rational(&check.omega_top));
                out.equal("top(F^(m-1)∧η)", &w.fiber_top, &format_rational(&check.fiber_top));
            }
            (SymplecticStatus::Found, None) => {
                out.record("symplectic witness", false, "status found without a witness");
            }
            (SymplecticStatus::NoneOfThisType, _) => {
                let again = find_symplectic(spec, &SearchOptions::default())?;
                out.record(
                    "no symplectic form of this type",
                    matches!(again, SymplecticOutcome::NoneOfThisType { .. }),
                    format!("{again:?}"),
                );
            }
            _ => {}
        }
    }
    Ok(out)
}
