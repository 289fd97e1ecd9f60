//! LCOM1 cohesion values over the model, batch and incremental.
//!
//! The metric is defined declaratively: `cp(C, M, N)` holds when `M` and `N`
//! both access a common field belonging to class `C`, and `lp(C, M, N)` when
//! two methods of `C` are not such a pair. LCOM1 of a class is the number of
//! unordered method pairs lacking a shared field, so the default mapping
//! counts `lp` tuples with distinct methods and halves the count. [`lcom1_all`] computes the mapping from scratch;
//! [`remap_incremental`] patches a previous result using only the deltas a
//! propagation run produced, touching no unaffected class.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use crate::ast::{Constant, Pred, RuleSet, RuleSetError};
use crate::eval::{stratify, Materialization, NotStratifiable};
use crate::facts::{RelationSource, Snapshot, Tuple};
use crate::model::UnknownClass;
use crate::parse::{parse_rule_file, ParseError};
use crate::propagate::PropagationResult;
use crate::validate::{validate_ruleset, ValidationReport};

/// The canonical LCOM1 rule text: two methods are a connected pair in `C`
/// when both access a common field belonging to `C`; a lacking pair is two
/// methods of `C` that are not connected.
const LCOM1_RULES: &str = "\
cp(C, M, N) :- mf(M, F), cf(C, F), mf(N, F).
lp(C, M, N) :- cm(C, M), cm(C, N), not(cp(C, M, N)).
";

/// The fact predicates a cohesion model provides.
fn model_predicates() -> [Pred; 5] {
    [
        Pred::new("c", 1),
        Pred::new("cm", 2),
        Pred::new("cf", 2),
        Pred::new("mf", 2),
        Pred::new("mm", 2),
    ]
}

/// Why a metric rule file was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricRulesError {
    Parse(ParseError),
    RuleSet(RuleSetError),
    /// The rules reference predicates outside the model vocabulary or are
    /// otherwise unsafe.
    Invalid(ValidationReport),
    NotStratifiable(NotStratifiable),
}

impl fmt::Display for MetricRulesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricRulesError::Parse(e) => write!(f, "{e}"),
            MetricRulesError::RuleSet(e) => write!(f, "{e}"),
            MetricRulesError::Invalid(r) => write!(f, "{r}"),
            MetricRulesError::NotStratifiable(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for MetricRulesError {}

/// A validated, stratifiable metric rule set over the cohesion model.
///
/// The declared extensional alphabet always contains the four structural
/// predicates `c`, `cm`, `cf`, `mf` — refactoring seeds update those, so the
/// transform must emit transition rules for them whether or not the metric
/// reads them all. `mm` joins the alphabet only when the rules read it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricRules {
    rules: RuleSet,
}

impl MetricRules {
    /// The built-in LCOM1 rules (`cp`/`lp` over `c`, `cm`, `cf`, `mf`).
    pub fn lcom1() -> Self {
        MetricRules::from_text(LCOM1_RULES).expect("built-in rules are valid")
    }

    /// Parses and validates a metric rule file.
    pub fn from_text(text: &str) -> Result<Self, MetricRulesError> {
        let rules = parse_rule_file(text).map_err(MetricRulesError::Parse)?;
        let model: BTreeSet<Pred> = model_predicates().into_iter().collect();
        let heads: BTreeSet<Pred> = rules
            .iter()
            .map(|r| Pred::new(&r.head.pred, r.head.terms.len()))
            .collect();
        let mut declared: BTreeSet<Pred> = [
            Pred::new("c", 1),
            Pred::new("cm", 2),
            Pred::new("cf", 2),
            Pred::new("mf", 2),
        ]
        .into_iter()
        .collect();
        declared.extend(
            rules
                .iter()
                .flat_map(|r| r.body.iter())
                .filter_map(|l| l.atom().map(|a| Pred::new(&a.pred, a.terms.len())))
                .filter(|p| model.contains(p)),
        );
        let extensional: Vec<Pred> = declared.difference(&heads).cloned().collect();
        let set = RuleSet::new(rules, extensional).map_err(MetricRulesError::RuleSet)?;
        let report = validate_ruleset(&set, &model);
        if !report.is_ok() {
            return Err(MetricRulesError::Invalid(report));
        }
        stratify(&set).map_err(MetricRulesError::NotStratifiable)?;
        Ok(MetricRules { rules: set })
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }
}

/// Which derived relation the mapping counts.
///
/// `Prose` counts loose pairs (`lp`) with distinct methods, halved — the
/// standard LCOM1 reading. `AsPrinted` counts connected pairs (`cp`) the same
/// way, reproducing the worked figures that tally `cp` instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mapping {
    #[default]
    Prose,
    AsPrinted,
}

impl Mapping {
    /// The arity-3 relation whose (class, method, method) tuples are counted.
    pub fn counted_pred(&self) -> Pred {
        match self {
            Mapping::Prose => Pred::new("lp", 3),
            Mapping::AsPrinted => Pred::new("cp", 3),
        }
    }
}

/// A metric value with exact halves: stored as twice the value, so both
/// integers and `n.5` values render without floating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct MetricValue {
    doubled: u64,
}

impl MetricValue {
    pub fn from_doubled(doubled: u64) -> Self {
        MetricValue { doubled }
    }

    /// Twice the value; always exact.
    pub fn doubled(&self) -> u64 {
        self.doubled
    }

    pub fn as_f64(&self) -> f64 {
        self.doubled as f64 / 2.0
    }
}

impl fmt::Display for MetricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.doubled.is_multiple_of(2) {
            write!(f, "{}", self.doubled / 2)
        } else {
            write!(f, "{}.5", self.doubled / 2)
        }
    }
}

/// Per-class metric values, ordered by class id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetricResult {
    values: BTreeMap<Constant, MetricValue>,
}

impl MetricResult {
    pub fn get(&self, class: &Constant) -> Option<MetricValue> {
        self.values.get(class).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Constant, MetricValue)> {
        self.values.iter().map(|(c, v)| (c, *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl FromIterator<(Constant, MetricValue)> for MetricResult {
    fn from_iter<I: IntoIterator<Item = (Constant, MetricValue)>>(iter: I) -> Self {
        MetricResult {
            values: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for MetricResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (class, value)) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{class} {value}")?;
        }
        Ok(())
    }
}

/// Doubled count of counted tuples for `class`: tuples of `set` whose first
/// argument is `class` and whose two method arguments differ. Each unordered
/// pair appears twice (the relations are symmetric), hence "doubled".
fn doubled_count(set: &BTreeSet<Tuple>, class: &Constant) -> u64 {
    set.iter()
        .filter(|t| &t[0] == class && t[1] != t[2])
        .count() as u64
}

/// LCOM1 of one class. `base` must hold `c(class)`; `mat` must be the
/// materialization of the metric rules over `base`.
pub fn lcom1(
    base: &Snapshot,
    mat: &Materialization,
    class: &Constant,
    mapping: Mapping,
) -> Result<MetricValue, UnknownClass> {
    if !base.contains(&Pred::new("c", 1), core::slice::from_ref(class)) {
        return Err(UnknownClass {
            class: class.clone(),
        });
    }
    let counted = mapping.counted_pred();
    let doubled = mat
        .tuples(&counted)
        .map_or(0, |set| doubled_count(set, class));
    Ok(MetricValue::from_doubled(doubled))
}

/// LCOM1 for every class with a `c` fact, in class-id order.
pub fn lcom1_all(base: &Snapshot, mat: &Materialization, mapping: Mapping) -> MetricResult {
    let counted = mapping.counted_pred();
    let empty = BTreeSet::new();
    let tuples = mat.tuples(&counted).unwrap_or(&empty);
    let mut values = BTreeMap::new();
    if let Some(classes) = base.tuples(&Pred::new("c", 1)) {
        for t in classes {
            values.insert(t[0].clone(), MetricValue::from_doubled(0));
        }
    }
    for t in tuples {
        if t[1] != t[2] {
            if let Some(v) = values.get_mut(&t[0]) {
                *v = MetricValue::from_doubled(v.doubled() + 1);
            }
        }
    }
    MetricResult { values }
}

/// The classes a propagation run touched, split into those to recompute and
/// those whose `c` fact was deleted. Classes occur in a counted-relation
/// delta, a `cm` seed, or a `c` seed.
pub fn affected_classes(
    pr: &PropagationResult,
    mapping: Mapping,
) -> (BTreeSet<Constant>, BTreeSet<Constant>) {
    let counted = mapping.counted_pred();
    let cm = Pred::new("cm", 2);
    let c = Pred::new("c", 1);
    let mut affected = BTreeSet::new();
    let mut removed = BTreeSet::new();
    let mut collect = |set: Option<&BTreeSet<Tuple>>| {
        if let Some(set) = set {
            for t in set {
                affected.insert(t[0].clone());
            }
        }
    };
    collect(pr.induced().additions(&counted));
    collect(pr.induced().deletions(&counted));
    collect(pr.seeds().additions(&cm));
    collect(pr.seeds().deletions(&cm));
    collect(pr.seeds().additions(&c));
    if let Some(set) = pr.seeds().deletions(&c) {
        for t in set {
            removed.insert(t[0].clone());
        }
    }
    affected.retain(|class| !removed.contains(class));
    (affected, removed)
}

/// Patches `before` using the deltas of `pr`: recomputes exactly the
/// affected classes from the propagated new state, drops classes whose `c`
/// fact was deleted, and copies every other entry unchanged.
///
/// `before` must be the [`lcom1_all`] result for the old state `pr` was run
/// against, under the same `mapping`.
pub fn remap_incremental(
    before: &MetricResult,
    pr: &PropagationResult,
    mapping: Mapping,
) -> MetricResult {
    let (affected, removed) = affected_classes(pr, mapping);
    let mut values = before.values.clone();
    for class in &removed {
        values.remove(class);
    }
    if affected.is_empty() {
        return MetricResult { values };
    }
    let new_classes: BTreeSet<Constant> = pr
        .new_state(&Pred::new("c", 1))
        .into_iter()
        .map(|t| t[0].clone())
        .collect();
    let counted = pr.new_state(&mapping.counted_pred());
    let mut counts: BTreeMap<&Constant, u64> =
        affected.iter().map(|class| (class, 0)).collect();
    for t in &counted {
        if t[1] != t[2] {
            if let Some(n) = counts.get_mut(&t[0]) {
                *n += 1;
            }
        }
    }
    for (class, doubled) in counts {
        if new_classes.contains(class) {
            values.insert(class.clone(), MetricValue::from_doubled(doubled));
        } else {
            values.remove(class);
        }
    }
    MetricResult { values }
}
