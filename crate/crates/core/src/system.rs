//! Models, multi-model systems and their structural validation.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sentence of the system's language: a named model output or external input.
///
/// Atoms share one namespace per system, so equal names denote the same atom.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Atom(String);

impl Atom {
    pub fn new(name: impl Into<String>) -> Self {
        Atom(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Atom {
    fn from(s: &str) -> Self {
        Atom(s.to_string())
    }
}

impl From<String> for Atom {
    fn from(s: String) -> Self {
        Atom(s)
    }
}

impl Borrow<str> for Atom {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelId(String);

impl ModelId {
    pub fn new(id: impl Into<String>) -> Self {
        ModelId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ModelId {
    fn from(s: &str) -> Self {
        ModelId(s.to_string())
    }
}

/// One tabulated value `mu(output | given)` of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbEntry {
    pub output: Atom,
    pub given: Vec<Atom>,
    pub theta: f64,
}

impl ProbEntry {
    pub fn new<I, A>(output: impl Into<Atom>, given: I, theta: f64) -> Self
    where
        I: IntoIterator<Item = A>,
        A: Into<Atom>,
    {
        ProbEntry {
            output: output.into(),
            given: given.into_iter().map(Into::into).collect(),
            theta,
        }
    }
}

/// A prediction model reduced to its interface and probability table.
///
/// The table may be partial; combinations that are not listed impose no
/// constraint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub id: ModelId,
    pub external_inputs: Vec<Atom>,
    pub internal_inputs: Vec<Atom>,
    pub outputs: Vec<Atom>,
    pub table: Vec<ProbEntry>,
}

impl Model {
    pub fn new(id: impl Into<ModelId>) -> Self {
        Model {
            id: id.into(),
            external_inputs: Vec::new(),
            internal_inputs: Vec::new(),
            outputs: Vec::new(),
            table: Vec::new(),
        }
    }

    pub fn external<I: IntoIterator<Item = A>, A: Into<Atom>>(mut self, atoms: I) -> Self {
        self.external_inputs.extend(atoms.into_iter().map(Into::into));
        self
    }

    pub fn internal<I: IntoIterator<Item = A>, A: Into<Atom>>(mut self, atoms: I) -> Self {
        self.internal_inputs.extend(atoms.into_iter().map(Into::into));
        self
    }

    pub fn outputs<I: IntoIterator<Item = A>, A: Into<Atom>>(mut self, atoms: I) -> Self {
        self.outputs.extend(atoms.into_iter().map(Into::into));
        self
    }

    pub fn entry<I, A>(mut self, output: impl Into<Atom>, given: I, theta: f64) -> Self
    where
        I: IntoIterator<Item = A>,
        A: Into<Atom>,
    {
        self.table.push(ProbEntry::new(output, given, theta));
        self
    }

    pub fn is_external(&self, atom: &Atom) -> bool {
        self.external_inputs.contains(atom)
    }

    pub fn is_internal(&self, atom: &Atom) -> bool {
        self.internal_inputs.contains(atom)
    }
}

pub type Link = (ModelId, ModelId);

/// Models plus the directed links between them.
///
/// Models are kept sorted by id so that every derived artifact (language
/// order, rule order, reports) is reproducible.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiModelSystem {
    models: Vec<Model>,
    links: BTreeSet<Link>,
}

impl MultiModelSystem {
    /// Builds a system with an explicit link set. Nothing is checked here;
    /// see [`validate_system`].
    pub fn new<I>(models: Vec<Model>, links: I) -> Self
    where
        I: IntoIterator<Item = Link>,
    {
        let mut models = models;
        models.sort_by(|a, b| a.id.cmp(&b.id));
        MultiModelSystem {
            models,
            links: links.into_iter().collect(),
        }
    }

    /// Builds a system whose links are inferred from input/output matching,
    /// and validates it.
    pub fn from_models(models: Vec<Model>) -> Result<Self> {
        let links = infer_links(&models)?;
        let system = MultiModelSystem::new(models, links);
        let report = validate_system(&system);
        if report.is_valid() {
            Ok(system)
        } else {
            Err(Error::Validation(report))
        }
    }

    pub fn models(&self) -> &[Model] {
        &self.models
    }

    pub fn links(&self) -> &BTreeSet<Link> {
        &self.links
    }

    pub fn model(&self, id: &str) -> Option<&Model> {
        self.models.iter().find(|m| m.id.as_str() == id)
    }

    /// Returns `Ok(())` when the system passes [`validate_system`].
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate_system(self);
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::Validation(report))
        }
    }
}

/// A single violated structural invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoModels,
    EmptyModelId,
    DuplicateModelId(ModelId),
    EmptyAtomName { model: ModelId },
    DuplicateAtom { model: ModelId, atom: Atom },
    NoOutputs { model: ModelId },
    InputKindOverlap { model: ModelId, atom: Atom },
    OutputIsInput { model: ModelId, atom: Atom },
    ThetaOutOfRange { model: ModelId, output: Atom, theta: f64 },
    EntryOutputUnknown { model: ModelId, atom: Atom },
    EntryGivenUnknown { model: ModelId, atom: Atom },
    DuplicateEntry { model: ModelId, output: Atom, given: Vec<Atom> },
    MultipleProducers { atom: Atom, models: Vec<ModelId> },
    UnproducedInternalInput { model: ModelId, atom: Atom },
    ExternalInputProduced { model: ModelId, atom: Atom, producer: ModelId },
    LinkUnknownModel { link: Link, model: ModelId },
    SelfLink(ModelId),
    LinkWithoutSharedAtom(Link),
    MissingLink(Link),
    Cycle(Vec<ModelId>),
    NoFinalOutput,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoModels => write!(f, "system has no models"),
            EmptyModelId => write!(f, "model with empty id"),
            DuplicateModelId(id) => write!(f, "duplicate model id `{id}`"),
            EmptyAtomName { model } => write!(f, "model `{model}`: empty atom name"),
            DuplicateAtom { model, atom } => {
                write!(f, "model `{model}`: atom `{atom}` listed more than once")
            }
            NoOutputs { model } => write!(f, "model `{model}` has no outputs"),
            InputKindOverlap { model, atom } => write!(
                f,
                "model `{model}`: `{atom}` is both an external and an internal input"
            ),
            OutputIsInput { model, atom } => {
                write!(f, "model `{model}`: `{atom}` is both an input and an output")
            }
            ThetaOutOfRange { model, output, theta } => write!(
                f,
                "model `{model}`: probability {theta} for `{output}` is outside [0, 1]"
            ),
            EntryOutputUnknown { model, atom } => write!(
                f,
                "model `{model}`: table entry for `{atom}`, which is not an output of the model"
            ),
            EntryGivenUnknown { model, atom } => write!(
                f,
                "model `{model}`: table entry conditioned on `{atom}`, which is not an input of the model"
            ),
            DuplicateEntry { model, output, given } => write!(
                f,
                "model `{model}`: duplicate table entry for `{output}` given [{}]",
                join(given)
            ),
            MultipleProducers { atom, models } => write!(
                f,
                "atom `{atom}` is an output of several models: {}",
                join(models)
            ),
            UnproducedInternalInput { model, atom } => write!(
                f,
                "model `{model}`: internal input `{atom}` is not produced by any other model"
            ),
            ExternalInputProduced { model, atom, producer } => write!(
                f,
                "model `{model}`: external input `{atom}` is an output of model `{producer}`"
            ),
            LinkUnknownModel { link, model } => write!(
                f,
                "link ({}, {}) refers to unknown model `{model}`",
                link.0, link.1
            ),
            SelfLink(id) => write!(f, "link ({id}, {id}) connects a model to itself"),
            LinkWithoutSharedAtom(link) => write!(
                f,
                "link ({}, {}) is listed but no output of `{}` is an internal input of `{}`",
                link.0, link.1, link.0, link.1
            ),
            MissingLink(link) => write!(
                f,
                "link ({}, {}) is implied by the models' inputs and outputs but not listed",
                link.0, link.1
            ),
            Cycle(ids) => write!(f, "models form a cycle: {}", join_arrow(ids)),
            NoFinalOutput => write!(f, "every model has an outgoing link; no final output exists"),
        }
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn join_arrow<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" -> ")
}

/// Every violated invariant of a system; empty iff the system is valid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_cycle(&self) -> bool {
        self.violations.iter().any(|v| matches!(v, Violation::Cycle(_)))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Map each output atom to the models producing it, in model-id order.
fn producers(models: &[Model]) -> BTreeMap<&Atom, Vec<&ModelId>> {
    let mut map: BTreeMap<&Atom, Vec<&ModelId>> = BTreeMap::new();
    for m in models {
        for o in &m.outputs {
            let entry = map.entry(o).or_default();
            if !entry.contains(&&m.id) {
                entry.push(&m.id);
            }
        }
    }
    for ids in map.values_mut() {
        ids.sort();
    }
    map
}

fn sorted_models(models: &[Model]) -> Vec<&Model> {
    let mut sorted: Vec<&Model> = models.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    sorted
}

/// Infers the link set `{(i, k) | outputs(i) ∩ internal_inputs(k) ≠ ∅}`.
///
/// Fails if some internal input has zero or several producers.
pub fn infer_links(models: &[Model]) -> Result<BTreeSet<Link>> {
    let producers = producers(models);
    let mut links = BTreeSet::new();
    for m in sorted_models(models) {
        for atom in &m.internal_inputs {
            let found: Vec<&ModelId> = producers
                .get(atom)
                .map(|ids| ids.iter().copied().filter(|id| **id != m.id).collect())
                .unwrap_or_default();
            match found.as_slice() {
                [one] => {
                    links.insert(((*one).clone(), m.id.clone()));
                }
                _ => {
                    return Err(Error::AmbiguousProducer {
                        atom: atom.name().to_string(),
                        producers: found.iter().map(|id| id.to_string()).collect(),
                    })
                }
            }
        }
    }
    Ok(links)
}

/// Checks every structural invariant of a system and reports all violations.
pub fn validate_system(s: &MultiModelSystem) -> ValidationReport {
    let mut out = Vec::new();
    let models = s.models();

    if models.is_empty() {
        out.push(Violation::NoModels);
        return ValidationReport { violations: out };
    }

    let mut seen_ids = BTreeSet::new();
    for m in models {
        if m.id.as_str().is_empty() {
            out.push(Violation::EmptyModelId);
        }
        if !seen_ids.insert(&m.id) {
            out.push(Violation::DuplicateModelId(m.id.clone()));
        }
        check_model(m, &mut out);
    }

    let producers = producers(models);
    for (atom, ids) in &producers {
        if ids.len() > 1 {
            out.push(Violation::MultipleProducers {
                atom: (*atom).clone(),
                models: ids.iter().map(|id| (*id).clone()).collect(),
            });
        }
    }

    // Links implied by input/output matching, tolerant of ambiguity so that
    // every violation gets reported rather than the first one.
    let mut inferred = BTreeSet::new();
    for m in models {
        for atom in &m.internal_inputs {
            match producers.get(atom) {
                Some(ids) => {
                    for id in ids.iter().filter(|id| ***id != m.id) {
                        inferred.insert(((*id).clone(), m.id.clone()));
                    }
                }
                None => out.push(Violation::UnproducedInternalInput {
                    model: m.id.clone(),
                    atom: atom.clone(),
                }),
            }
        }
        for atom in &m.external_inputs {
            if let Some(ids) = producers.get(atom) {
                out.push(Violation::ExternalInputProduced {
                    model: m.id.clone(),
                    atom: atom.clone(),
                    producer: ids[0].clone(),
                });
            }
        }
    }

    for link in s.links() {
        let (from, to) = link;
        let src = s.model(from.as_str());
        let dst = s.model(to.as_str());
        if src.is_none() {
            out.push(Violation::LinkUnknownModel { link: link.clone(), model: from.clone() });
        }
        if dst.is_none() {
            out.push(Violation::LinkUnknownModel { link: link.clone(), model: to.clone() });
        }
        if from == to {
            out.push(Violation::SelfLink(from.clone()));
            continue;
        }
        if let (Some(src), Some(dst)) = (src, dst) {
            let shares = src.outputs.iter().any(|o| dst.internal_inputs.contains(o));
            if !shares {
                out.push(Violation::LinkWithoutSharedAtom(link.clone()));
            }
        }
    }
    for link in &inferred {
        if !s.links().contains(link) {
            out.push(Violation::MissingLink(link.clone()));
        }
    }

    if let Some(cycle) = find_cycle(s) {
        out.push(Violation::Cycle(cycle));
    }

    let has_sink = models
        .iter()
        .any(|m| !s.links().iter().any(|(from, _)| *from == m.id));
    if !has_sink {
        out.push(Violation::NoFinalOutput);
    }

    ValidationReport { violations: out }
}

fn check_model(m: &Model, out: &mut Vec<Violation>) {
    let id = &m.id;
    if m.outputs.is_empty() {
        out.push(Violation::NoOutputs { model: id.clone() });
    }
    for list in [&m.external_inputs, &m.internal_inputs, &m.outputs] {
        let mut seen = BTreeSet::new();
        for a in list {
            if a.name().is_empty() {
                out.push(Violation::EmptyAtomName { model: id.clone() });
            } else if !seen.insert(a) {
                out.push(Violation::DuplicateAtom { model: id.clone(), atom: a.clone() });
            }
        }
    }
    for a in &m.external_inputs {
        if m.internal_inputs.contains(a) {
            out.push(Violation::InputKindOverlap { model: id.clone(), atom: a.clone() });
        }
    }
    for a in &m.outputs {
        if m.external_inputs.contains(a) || m.internal_inputs.contains(a) {
            out.push(Violation::OutputIsInput { model: id.clone(), atom: a.clone() });
        }
    }

    let mut keys: BTreeSet<(&Atom, BTreeSet<&Atom>)> = BTreeSet::new();
    for e in &m.table {
        if !(0.0..=1.0).contains(&e.theta) {
            out.push(Violation::ThetaOutOfRange {
                model: id.clone(),
                output: e.output.clone(),
                theta: e.theta,
            });
        }
        if !m.outputs.contains(&e.output) {
            out.push(Violation::EntryOutputUnknown { model: id.clone(), atom: e.output.clone() });
        }
        let mut given = BTreeSet::new();
        for g in &e.given {
            if !m.is_external(g) && !m.is_internal(g) {
                out.push(Violation::EntryGivenUnknown { model: id.clone(), atom: g.clone() });
            }
            if !given.insert(g) {
                out.push(Violation::DuplicateAtom { model: id.clone(), atom: g.clone() });
            }
        }
        if !keys.insert((&e.output, given)) {
            out.push(Violation::DuplicateEntry {
                model: id.clone(),
                output: e.output.clone(),
                given: e.given.clone(),
            });
        }
    }
}

/// Depth-first search over links; returns the first cycle found in model-id
/// order, as a closed walk `a -> b -> ... -> a`.
fn find_cycle(s: &MultiModelSystem) -> Option<Vec<ModelId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }

    let ids: Vec<&ModelId> = s.links().iter().flat_map(|(a, b)| [a, b]).collect::<BTreeSet<_>>().into_iter().collect();
    let index: BTreeMap<&ModelId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
    for (a, b) in s.links() {
        succ[index[a]].push(index[b]);
    }

    let mut mark = vec![Mark::New; ids.len()];
    let mut path: Vec<usize> = Vec::new();

    fn visit(
        v: usize,
        succ: &[Vec<usize>],
        mark: &mut [Mark],
        path: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        mark[v] = Mark::Active;
        path.push(v);
        for &w in &succ[v] {
            match mark[w] {
                Mark::Active => {
                    let start = path.iter().position(|&p| p == w).unwrap();
                    let mut cycle = path[start..].to_vec();
                    cycle.push(w);
                    return Some(cycle);
                }
                Mark::New => {
                    if let Some(c) = visit(w, succ, mark, path) {
                        return Some(c);
                    }
                }
                Mark::Done => {}
            }
        }
        path.pop();
        mark[v] = Mark::Done;
        None
    }

    for v in 0..ids.len() {
        if mark[v] == Mark::New {
            if let Some(c) = visit(v, &succ, &mut mark, &mut path) {
                return Some(c.into_iter().map(|i| ids[i].clone()).collect());
            }
        }
    }
    None
}

/// Topological order of the models (Kahn's algorithm, ties broken by id).
/// `None` if the link graph has a cycle.
pub fn topological_order(s: &MultiModelSystem) -> Option<Vec<ModelId>> {
    let mut indegree: BTreeMap<&ModelId, usize> = s.models().iter().map(|m| (&m.id, 0)).collect();
    for (_, to) in s.links() {
        if let Some(d) = indegree.get_mut(to) {
            *d += 1;
        }
    }
    let mut ready: BTreeSet<&ModelId> =
        indegree.iter().filter(|(_, d)| **d == 0).map(|(id, _)| *id).collect();
    let mut order = Vec::with_capacity(indegree.len());
    while let Some(id) = ready.pop_first() {
        order.push(id.clone());
        for (_, to) in s.links().iter().filter(|(from, _)| from == id) {
            if let Some(d) = indegree.get_mut(to) {
                *d -= 1;
                if *d == 0 {
                    ready.insert(to);
                }
            }
        }
    }
    (order.len() == indegree.len()).then_some(order)
}

/// Union of the outputs of models with no outgoing link.
pub fn final_outputs(s: &MultiModelSystem) -> Result<BTreeSet<Atom>> {
    s.ensure_valid()?;
    Ok(s.models()
        .iter()
        .filter(|m| !s.links().iter().any(|(from, _)| *from == m.id))
        .flat_map(|m| m.outputs.iter().cloned())
        .collect())
}
