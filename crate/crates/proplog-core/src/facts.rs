//! The extensional fact store: relations with set semantics, immutable
//! snapshots, and delta sets.
//!
//! Relations are ordered sets of ground tuples keyed by predicate
//! (name/arity), so every iteration order — and therefore every rendering —
//! is deterministic. A [`Snapshot`] freezes the store at a point in time
//! ("the old state"); it is cheap to clone and safe to share. A
//! [`DeltaSet`] carries per-predicate insertion and deletion sets: seed
//! deltas going into propagation, induced deltas coming out of it.
//!
//! [`normalize_seeds`] establishes the delta invariants against a concrete
//! base — deletions must hit stored facts, additions must be new — so that
//! [`apply_delta_set`] and its inverse round-trip exactly.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::ast::{Atom, Constant, GroundAtom, Pred, Term};

/// A stored ground tuple. Ordering is lexicographic with integers before
/// names, giving all outputs a stable order.
pub type Tuple = Vec<Constant>;

/// A variable binding produced by [`query`].
pub type Substitution = BTreeMap<String, Constant>;

/// Anything tuples can be read from: a live [`FactBase`] or a [`Snapshot`].
pub trait RelationSource {
    fn tuples(&self, pred: &Pred) -> Option<&BTreeSet<Tuple>>;

    /// All predicates that currently have at least one tuple.
    fn predicates(&self) -> Vec<Pred>;

    fn contains(&self, pred: &Pred, tuple: &[Constant]) -> bool {
        self.tuples(pred).is_some_and(|s| s.contains(tuple))
    }
}

/// The mutable extensional store.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FactBase {
    relations: BTreeMap<Pred, BTreeSet<Tuple>>,
}

impl FactBase {
    pub fn new() -> Self {
        FactBase::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = GroundAtom>) -> Self {
        let mut base = FactBase::new();
        for a in atoms {
            base.insert(a);
        }
        base
    }

    /// Inserts a fact; duplicates collapse silently (set semantics).
    pub fn insert(&mut self, fact: GroundAtom) {
        self.relations
            .entry(fact.key())
            .or_default()
            .insert(fact.args);
    }

    pub fn insert_tuple(&mut self, pred: Pred, tuple: Tuple) {
        debug_assert_eq!(pred.arity, tuple.len());
        self.relations.entry(pred).or_default().insert(tuple);
    }

    pub fn remove_tuple(&mut self, pred: &Pred, tuple: &[Constant]) -> bool {
        match self.relations.get_mut(pred) {
            Some(set) => set.remove(tuple),
            None => false,
        }
    }

    /// Total number of stored facts.
    pub fn len(&self) -> usize {
        self.relations.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// An immutable view of the current contents. O(size of the store),
    /// after which the snapshot is independent of further mutation.
    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            relations: Arc::new(self.relations.clone()),
        }
    }

    /// All facts in deterministic order (predicate, then tuple).
    pub fn to_atoms(&self) -> Vec<GroundAtom> {
        let mut out = Vec::with_capacity(self.len());
        for (pred, tuples) in &self.relations {
            for t in tuples {
                out.push(GroundAtom {
                    pred: pred.name.clone(),
                    args: t.clone(),
                });
            }
        }
        out
    }
}

impl RelationSource for FactBase {
    fn tuples(&self, pred: &Pred) -> Option<&BTreeSet<Tuple>> {
        self.relations.get(pred)
    }

    fn predicates(&self) -> Vec<Pred> {
        self.relations
            .iter()
            .filter(|(_, s)| !s.is_empty())
            .map(|(p, _)| p.clone())
            .collect()
    }
}

/// An immutable, shareable view of a [`FactBase`] at a point in time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    relations: Arc<BTreeMap<Pred, BTreeSet<Tuple>>>,
}

impl Snapshot {
    /// Copies the snapshot contents back into a mutable store.
    pub fn to_fact_base(&self) -> FactBase {
        FactBase {
            relations: (*self.relations).clone(),
        }
    }
}

impl RelationSource for Snapshot {
    fn tuples(&self, pred: &Pred) -> Option<&BTreeSet<Tuple>> {
        self.relations.get(pred)
    }

    fn predicates(&self) -> Vec<Pred> {
        self.relations
            .iter()
            .filter(|(_, s)| !s.is_empty())
            .map(|(p, _)| p.clone())
            .collect()
    }
}

/// Matches `pattern` against a stored fact base: all substitutions that turn
/// the pattern into a stored fact. Unknown predicates yield nothing.
pub fn query(source: &impl RelationSource, pattern: &Atom) -> Vec<Substitution> {
    let mut out = Vec::new();
    let Some(tuples) = source.tuples(&pattern.key()) else {
        return out;
    };
    'tuples: for tuple in tuples {
        let mut subst = Substitution::new();
        for (term, value) in pattern.terms.iter().zip(tuple) {
            match term {
                Term::Const(c) => {
                    if c != value {
                        continue 'tuples;
                    }
                }
                Term::Var(v) => match subst.get(v.as_str()) {
                    Some(bound) if bound != value => continue 'tuples,
                    Some(_) => {}
                    None => {
                        subst.insert(v.clone(), value.clone());
                    }
                },
                Term::List(_) => continue 'tuples,
            }
        }
        out.push(subst);
    }
    out.dedup();
    out
}

/// Per-predicate insertion and deletion sets.
///
/// Construction places no constraints on the contents; the documented
/// invariants (additions disjoint from deletions, deletions stored,
/// additions new) are established by [`normalize_seeds`] against a concrete
/// base. Induced deltas computed *without* effectiveness tests may
/// legitimately violate them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DeltaSet {
    additions: BTreeMap<Pred, BTreeSet<Tuple>>,
    deletions: BTreeMap<Pred, BTreeSet<Tuple>>,
}

impl DeltaSet {
    pub fn new() -> Self {
        DeltaSet::default()
    }

    pub fn add(&mut self, fact: GroundAtom) {
        self.additions
            .entry(fact.key())
            .or_default()
            .insert(fact.args);
    }

    pub fn delete(&mut self, fact: GroundAtom) {
        self.deletions
            .entry(fact.key())
            .or_default()
            .insert(fact.args);
    }

    pub fn add_tuple(&mut self, pred: Pred, tuple: Tuple) {
        self.additions.entry(pred).or_default().insert(tuple);
    }

    pub fn delete_tuple(&mut self, pred: Pred, tuple: Tuple) {
        self.deletions.entry(pred).or_default().insert(tuple);
    }

    pub fn additions(&self, pred: &Pred) -> Option<&BTreeSet<Tuple>> {
        self.additions.get(pred)
    }

    pub fn deletions(&self, pred: &Pred) -> Option<&BTreeSet<Tuple>> {
        self.deletions.get(pred)
    }

    pub fn additions_iter(&self) -> impl Iterator<Item = (&Pred, &BTreeSet<Tuple>)> {
        self.additions.iter()
    }

    pub fn deletions_iter(&self) -> impl Iterator<Item = (&Pred, &BTreeSet<Tuple>)> {
        self.deletions.iter()
    }

    /// Every predicate mentioned on either side.
    pub fn predicates(&self) -> BTreeSet<Pred> {
        self.additions
            .keys()
            .chain(self.deletions.keys())
            .cloned()
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.additions.values().all(BTreeSet::is_empty)
            && self.deletions.values().all(BTreeSet::is_empty)
    }

    /// Number of (addition, deletion) facts.
    pub fn counts(&self) -> (usize, usize) {
        (
            self.additions.values().map(BTreeSet::len).sum(),
            self.deletions.values().map(BTreeSet::len).sum(),
        )
    }

    /// Swaps additions and deletions; applying a delta and then its inverse
    /// restores a base the delta was normalized against.
    pub fn inverse(&self) -> DeltaSet {
        DeltaSet {
            additions: self.deletions.clone(),
            deletions: self.additions.clone(),
        }
    }
}

/// A normalization note: the seed was dropped as a no-op.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Warning {
    /// Deleting a fact that is not stored.
    DroppedAbsentDeletion { fact: GroundAtom },
    /// Adding a fact that is already stored.
    DroppedPresentAddition { fact: GroundAtom },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::DroppedAbsentDeletion { fact } => {
                write!(f, "deletion of absent fact {fact} dropped")
            }
            Warning::DroppedPresentAddition { fact } => {
                write!(f, "addition of already present fact {fact} dropped")
            }
        }
    }
}

/// The same tuple on both sides of a raw seed set: no consistent update
/// exists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictingSeed {
    pub fact: GroundAtom,
}

impl fmt::Display for ConflictingSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "fact {} appears in both additions and deletions",
            self.fact
        )
    }
}

impl core::error::Error for ConflictingSeed {}

/// Normalizes raw seeds against `base`: drops deletions of absent facts and
/// additions of present facts (each with a warning). The result satisfies
/// the delta invariants relative to `base`.
pub fn normalize_seeds(
    base: &impl RelationSource,
    raw: &DeltaSet,
) -> Result<(DeltaSet, Vec<Warning>), ConflictingSeed> {
    for (pred, added) in raw.additions_iter() {
        if let Some(deleted) = raw.deletions(pred) {
            if let Some(tuple) = added.intersection(deleted).next() {
                return Err(ConflictingSeed {
                    fact: GroundAtom {
                        pred: pred.name.clone(),
                        args: tuple.clone(),
                    },
                });
            }
        }
    }

    let mut normalized = DeltaSet::new();
    let mut warnings = Vec::new();
    for (pred, added) in raw.additions_iter() {
        for tuple in added {
            if base.contains(pred, tuple) {
                warnings.push(Warning::DroppedPresentAddition {
                    fact: GroundAtom {
                        pred: pred.name.clone(),
                        args: tuple.clone(),
                    },
                });
            } else {
                normalized.add_tuple(pred.clone(), tuple.clone());
            }
        }
    }
    for (pred, deleted) in raw.deletions_iter() {
        for tuple in deleted {
            if base.contains(pred, tuple) {
                normalized.delete_tuple(pred.clone(), tuple.clone());
            } else {
                warnings.push(Warning::DroppedAbsentDeletion {
                    fact: GroundAtom {
                        pred: pred.name.clone(),
                        args: tuple.clone(),
                    },
                });
            }
        }
    }
    Ok((normalized, warnings))
}

/// Applies a delta: for every predicate, result = (base \ deletions) ∪
/// additions. With normalized deltas this round-trips with
/// [`DeltaSet::inverse`].
pub fn apply_delta_set(base: &FactBase, deltas: &DeltaSet) -> FactBase {
    let mut result = base.clone();
    for (pred, deleted) in deltas.deletions_iter() {
        for tuple in deleted {
            result.remove_tuple(pred, tuple);
        }
    }
    for (pred, added) in deltas.additions_iter() {
        for tuple in added {
            result.insert_tuple(pred.clone(), tuple.clone());
        }
    }
    result
}
