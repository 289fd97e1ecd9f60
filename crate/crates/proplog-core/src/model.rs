//! Program-element facts and the cohesion model derived from them.
//!
//! A [`ProgramElementFacts`] value holds the raw structural facts extracted
//! from source code: classes, interfaces, external types, methods, fields,
//! calls, and field accesses. [`derive_model`] filters and projects them into
//! a [`CohesionModel`] — the five-predicate fact base (`c`, `cm`, `cf`, `mf`,
//! `mm`) that the metric rules are written against. Filtering drops external
//! and interface types, compiler-generated anonymous classes, and
//! constructors; call and access facts survive only when both endpoints do.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::ast::{Constant, GroundAtom, Pred};
use crate::facts::FactBase;
use crate::parse::{parse_fact_file_lines, ParseError};

/// Class-name prefix marking compiler-generated anonymous classes.
const ANONYMOUS_PREFIX: &str = "ANONYMOUS$";
/// Method name marking constructors.
const CONSTRUCTOR_NAME: &str = "<init>";

/// A class id that no `classT` fact declares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownClass {
    pub class: Constant,
}

impl fmt::Display for UnknownClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown class {}", self.class)
    }
}

impl core::error::Error for UnknownClass {}

/// A fact whose reference to another element cannot be resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DanglingReference {
    /// The offending fact as written.
    pub fact: GroundAtom,
    /// Which argument failed to resolve and what it should have named.
    pub detail: String,
}

impl fmt::Display for DanglingReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dangling reference in {}: {}", self.fact, self.detail)
    }
}

impl core::error::Error for DanglingReference {}

/// Rejection while ingesting a program-element fact file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PefError {
    /// The text is not a well-formed fact file.
    Parse(ParseError),
    /// A fact uses a predicate outside the program-element vocabulary.
    UnknownPredicate { line: usize, pred: Pred },
    /// An element id is declared more than once (ids are unique across kinds).
    DuplicateId { id: Constant },
    /// A fact references an element that is never declared.
    Dangling(DanglingReference),
}

impl fmt::Display for PefError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PefError::Parse(e) => write!(f, "{e}"),
            PefError::UnknownPredicate { line, pred } => {
                write!(f, "line {line}: unknown program-element predicate {pred}")
            }
            PefError::DuplicateId { id } => write!(f, "duplicate element id {id}"),
            PefError::Dangling(d) => write!(f, "{d}"),
        }
    }
}

impl core::error::Error for PefError {}

impl From<ParseError> for PefError {
    fn from(e: ParseError) -> Self {
        PefError::Parse(e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ClassInfo {
    owner: Constant,
    name: Constant,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct MemberInfo {
    class: Constant,
    name: Constant,
}

/// Structural facts about one program: the seven-predicate vocabulary
/// `classT(id, owner, name)`, `interfaceT(id)`, `externT(id)`,
/// `methodT(id, class, name)`, `fieldT(id, class, name)`,
/// `callT(caller, callee)`, `accessT(method, field)`.
///
/// Construction validates the referential invariants: every member's class
/// exists, every call/access endpoint exists, `interfaceT`/`externT` mark
/// declared classes, and ids are unique across element kinds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProgramElementFacts {
    classes: BTreeMap<Constant, ClassInfo>,
    interfaces: BTreeSet<Constant>,
    externs: BTreeSet<Constant>,
    methods: BTreeMap<Constant, MemberInfo>,
    fields: BTreeMap<Constant, MemberInfo>,
    calls: BTreeSet<(Constant, Constant)>,
    accesses: BTreeSet<(Constant, Constant)>,
}

impl ProgramElementFacts {
    /// Ingests a fact file in the standard syntax.
    pub fn parse(text: &str) -> Result<Self, PefError> {
        Self::from_lines(parse_fact_file_lines(text)?)
    }

    /// Builds from already-parsed facts; line numbers feed error reports.
    pub fn from_lines(facts: Vec<(usize, GroundAtom)>) -> Result<Self, PefError> {
        let mut pef = ProgramElementFacts::default();
        let mut markers: Vec<GroundAtom> = Vec::new();
        let mut edges: Vec<GroundAtom> = Vec::new();
        // First pass declares elements so reference checks are order-free.
        for (line, fact) in facts {
            let pred = Pred::new(&fact.pred, fact.args.len());
            match (fact.pred.as_str(), fact.args.len()) {
                ("classT", 3) => {
                    let info = ClassInfo {
                        owner: fact.args[1].clone(),
                        name: fact.args[2].clone(),
                    };
                    pef.declare_class(fact.args[0].clone(), info)?;
                }
                ("methodT", 3) => {
                    let info = MemberInfo {
                        class: fact.args[1].clone(),
                        name: fact.args[2].clone(),
                    };
                    pef.declare_member(fact.args[0].clone(), info, true)?;
                }
                ("fieldT", 3) => {
                    let info = MemberInfo {
                        class: fact.args[1].clone(),
                        name: fact.args[2].clone(),
                    };
                    pef.declare_member(fact.args[0].clone(), info, false)?;
                }
                ("interfaceT", 1) | ("externT", 1) => markers.push(fact),
                ("callT", 2) | ("accessT", 2) => edges.push(fact),
                _ => return Err(PefError::UnknownPredicate { line, pred }),
            }
        }
        for fact in markers {
            pef.mark_class(fact)?;
        }
        for fact in edges {
            pef.connect(fact)?;
        }
        pef.check_references()?;
        Ok(pef)
    }

    fn declare_class(&mut self, id: Constant, info: ClassInfo) -> Result<(), PefError> {
        if self.classes.get(&id).is_some_and(|prev| *prev != info)
            || self.methods.contains_key(&id)
            || self.fields.contains_key(&id)
        {
            return Err(PefError::DuplicateId { id });
        }
        self.classes.insert(id, info);
        Ok(())
    }

    fn declare_member(
        &mut self,
        id: Constant,
        info: MemberInfo,
        method: bool,
    ) -> Result<(), PefError> {
        let (own, other) = if method {
            (&mut self.methods, &self.fields)
        } else {
            (&mut self.fields, &self.methods)
        };
        if own.get(&id).is_some_and(|prev| *prev != info)
            || other.contains_key(&id)
            || self.classes.contains_key(&id)
        {
            return Err(PefError::DuplicateId { id });
        }
        own.insert(id, info);
        Ok(())
    }

    fn mark_class(&mut self, fact: GroundAtom) -> Result<(), PefError> {
        let id = fact.args[0].clone();
        if !self.classes.contains_key(&id) {
            return Err(PefError::Dangling(DanglingReference {
                detail: format!("{id} is not a declared class"),
                fact,
            }));
        }
        if fact.pred == "interfaceT" {
            self.interfaces.insert(id);
        } else {
            self.externs.insert(id);
        }
        Ok(())
    }

    fn connect(&mut self, fact: GroundAtom) -> Result<(), PefError> {
        let pair = (fact.args[0].clone(), fact.args[1].clone());
        let ok = if fact.pred == "callT" {
            self.methods.contains_key(&pair.0) && self.methods.contains_key(&pair.1)
        } else {
            self.methods.contains_key(&pair.0) && self.fields.contains_key(&pair.1)
        };
        if !ok {
            let kind = if fact.pred == "callT" { "methods" } else { "a method and a field" };
            return Err(PefError::Dangling(DanglingReference {
                detail: format!("endpoints must be declared {kind}"),
                fact,
            }));
        }
        if fact.pred == "callT" {
            self.calls.insert(pair);
        } else {
            self.accesses.insert(pair);
        }
        Ok(())
    }

    fn check_references(&self) -> Result<(), PefError> {
        for (id, info, pred) in self
            .methods
            .iter()
            .map(|(id, i)| (id, i, "methodT"))
            .chain(self.fields.iter().map(|(id, i)| (id, i, "fieldT")))
        {
            if !self.classes.contains_key(&info.class) {
                return Err(PefError::Dangling(DanglingReference {
                    fact: GroundAtom::new(
                        pred,
                        vec![id.clone(), info.class.clone(), info.name.clone()],
                    ),
                    detail: format!("{} is not a declared class", info.class),
                }));
            }
        }
        Ok(())
    }

    /// All declared class ids, interfaces and external types included.
    pub fn class_ids(&self) -> impl Iterator<Item = &Constant> {
        self.classes.keys()
    }
}

/// Whether `class` survives filtering: declared, not external, not an
/// interface, and not a compiler-generated anonymous class.
pub fn source_class(pef: &ProgramElementFacts, class: &Constant) -> Result<bool, UnknownClass> {
    let info = pef.classes.get(class).ok_or(UnknownClass {
        class: class.clone(),
    })?;
    if pef.externs.contains(class) || pef.interfaces.contains(class) {
        return Ok(false);
    }
    let anonymous = info
        .name
        .as_name()
        .is_some_and(|n| n.starts_with(ANONYMOUS_PREFIX));
    Ok(!anonymous)
}

/// Ill-formed cohesion-model fact bases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    /// A fact uses a predicate outside `c`, `cm`, `cf`, `mf`, `mm`.
    UnknownPredicate { pred: Pred },
    /// A fact references a class, method, or field the model does not hold.
    Dangling(DanglingReference),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::UnknownPredicate { pred } => {
                write!(f, "unknown cohesion-model predicate {pred}")
            }
            ModelError::Dangling(d) => write!(f, "{d}"),
        }
    }
}

impl core::error::Error for ModelError {}

/// The extensional fact base the metric rules are evaluated over:
/// `c(class)`, `cm(class, method)`, `cf(class, field)`,
/// `mf(method, field)`, `mm(caller, callee)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CohesionModel {
    facts: FactBase,
}

impl CohesionModel {
    /// Wraps parsed facts, checking the vocabulary and that `cm`/`cf`
    /// reference declared classes and `mf`/`mm` reference model members.
    pub fn from_atoms(atoms: impl IntoIterator<Item = GroundAtom>) -> Result<Self, ModelError> {
        let atoms: Vec<GroundAtom> = atoms.into_iter().collect();
        let mut classes = BTreeSet::new();
        let mut methods = BTreeSet::new();
        let mut fields = BTreeSet::new();
        for fact in &atoms {
            match (fact.pred.as_str(), fact.args.len()) {
                ("c", 1) => {
                    classes.insert(fact.args[0].clone());
                }
                ("cm", 2) => {
                    methods.insert(fact.args[1].clone());
                }
                ("cf", 2) => {
                    fields.insert(fact.args[1].clone());
                }
                ("mf", 2) | ("mm", 2) => {}
                _ => {
                    return Err(ModelError::UnknownPredicate {
                        pred: Pred::new(&fact.pred, fact.args.len()),
                    })
                }
            }
        }
        for fact in &atoms {
            let ok = match fact.pred.as_str() {
                "cm" | "cf" => classes.contains(&fact.args[0]),
                "mf" => methods.contains(&fact.args[0]) && fields.contains(&fact.args[1]),
                "mm" => methods.contains(&fact.args[0]) && methods.contains(&fact.args[1]),
                _ => true,
            };
            if !ok {
                return Err(ModelError::Dangling(DanglingReference {
                    fact: fact.clone(),
                    detail: "references an element the model does not declare".to_string(),
                }));
            }
        }
        Ok(CohesionModel {
            facts: FactBase::from_atoms(atoms),
        })
    }

    /// Parses a cohesion-model fact file.
    pub fn parse(text: &str) -> Result<Self, ModelParseError> {
        let atoms = crate::parse::parse_fact_file(text).map_err(ModelParseError::Parse)?;
        Self::from_atoms(atoms).map_err(ModelParseError::Model)
    }

    pub fn facts(&self) -> &FactBase {
        &self.facts
    }

    /// The model as an immutable snapshot for evaluation and propagation.
    pub fn snapshot(&self) -> crate::facts::Snapshot {
        self.facts.snapshot()
    }
}

/// Rejection while loading a cohesion-model fact file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelParseError {
    Parse(ParseError),
    Model(ModelError),
}

impl fmt::Display for ModelParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelParseError::Parse(e) => write!(f, "{e}"),
            ModelParseError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ModelParseError {}

/// Projects program-element facts into the cohesion model.
///
/// Keeps `c(C)` for every source class, `cm(C, M)` for every non-constructor
/// method of a source class, and `cf(C, F)` for every field of one; `mf` and
/// `mm` facts survive exactly when both endpoints do. Everything else is
/// dropped silently — filtering never fails on well-formed input.
pub fn derive_model(pef: &ProgramElementFacts) -> CohesionModel {
    let mut facts = FactBase::new();
    let mut source = BTreeSet::new();
    for id in pef.classes.keys() {
        if source_class(pef, id).unwrap_or(false) {
            source.insert(id.clone());
            facts.insert(GroundAtom::new("c", vec![id.clone()]));
        }
    }
    let mut kept_methods = BTreeSet::new();
    for (id, info) in &pef.methods {
        let constructor = info.name.as_name() == Some(CONSTRUCTOR_NAME);
        if source.contains(&info.class) && !constructor {
            kept_methods.insert(id.clone());
            facts.insert(GroundAtom::new(
                "cm",
                vec![info.class.clone(), id.clone()],
            ));
        }
    }
    let mut kept_fields = BTreeSet::new();
    for (id, info) in &pef.fields {
        if source.contains(&info.class) {
            kept_fields.insert(id.clone());
            facts.insert(GroundAtom::new(
                "cf",
                vec![info.class.clone(), id.clone()],
            ));
        }
    }
    for (m, f) in &pef.accesses {
        if kept_methods.contains(m) && kept_fields.contains(f) {
            facts.insert(GroundAtom::new("mf", vec![m.clone(), f.clone()]));
        }
    }
    for (m, n) in &pef.calls {
        if kept_methods.contains(m) && kept_methods.contains(n) {
            facts.insert(GroundAtom::new("mm", vec![m.clone(), n.clone()]));
        }
    }
    CohesionModel { facts }
}
