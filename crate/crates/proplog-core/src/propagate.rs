//! Delta-driven evaluation of a transformed rule set.
//!
//! [`propagate`] computes the induced additions and deletions of every
//! intensional predicate from an old-state snapshot plus seed deltas,
//! without re-materializing the program. Propagation rules are fired with
//! their leading delta literal pinned to the relevant delta relation, so
//! the bindings of the delta facts restrict all further evaluation. The
//! state relations the rule bodies mention — old state `P`, direct new
//! state `nwd_P`, indirect new state `nwi_P` — are never materialized;
//! they are probed with the bindings at hand and memoized per
//! bound-argument pattern. Old and indirect states of intensional
//! predicates are probed by expanding their (source or indirect) clauses
//! with those bindings.
//!
//! Predicates on a dependency cycle are the exception: bound clause
//! expansion need not terminate there, so their SCC falls back to exact
//! old/new materialization and takes differences.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::cell::{OnceCell, RefCell};
use core::fmt;

use crate::ast::{Constant, Pred, RuleSet};
use crate::eval::{
    compile, evaluate, for_each_derivation, instantiate, scan_matching, CLit, CompiledRule,
    DbView, LiteralSource, Materialization, Slot,
};
use crate::facts::{apply_delta_set, DeltaSet, RelationSource, Snapshot, Tuple};
use crate::meta::DependencyGraph;
use crate::transform::{transform, TransformOptions, TransformedRuleSet};

/// A seed names a predicate that is not extensional in the source rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedPredicateUnknown {
    pub pred: Pred,
}

impl fmt::Display for SeedPredicateUnknown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "seed predicate {} is not an extensional predicate of the rule set",
            self.pred
        )
    }
}

impl core::error::Error for SeedPredicateUnknown {}

/// What a propagation run computed.
pub struct PropagationResult {
    induced: DeltaSet,
    seeds: DeltaSet,
    source: RuleSet,
    old: Snapshot,
    old_mat: OnceCell<Materialization>,
    new_cache: RefCell<BTreeMap<Pred, BTreeSet<Tuple>>>,
}

impl PropagationResult {
    /// The induced deltas of the intensional predicates.
    pub fn induced(&self) -> &DeltaSet {
        &self.induced
    }

    /// The seed deltas the run was driven by.
    pub fn seeds(&self) -> &DeltaSet {
        &self.seeds
    }

    /// The complete new state of one predicate: `(old \ deletions) ∪
    /// additions`. Extensional predicates combine the snapshot with the
    /// seeds; intensional predicates combine the old materialization
    /// (derived on first use and cached) with the induced deltas.
    pub fn new_state(&self, pred: &Pred) -> BTreeSet<Tuple> {
        if let Some(cached) = self.new_cache.borrow().get(pred) {
            return cached.clone();
        }
        let intensional = self.source.is_intensional(pred);
        let old: BTreeSet<Tuple> = if intensional {
            let mat = self.old_mat.get_or_init(|| {
                evaluate(&self.source, &self.old).expect("transformed sources are stratifiable")
            });
            mat.tuples(pred).cloned().unwrap_or_default()
        } else {
            self.old.tuples(pred).cloned().unwrap_or_default()
        };
        let deltas = if intensional { &self.induced } else { &self.seeds };
        let mut state = old;
        if let Some(dels) = deltas.deletions(pred) {
            state.retain(|t| !dels.contains(t));
        }
        if let Some(adds) = deltas.additions(pred) {
            state.extend(adds.iter().cloned());
        }
        self.new_cache
            .borrow_mut()
            .insert(pred.clone(), state.clone());
        state
    }

    /// Donates an already-computed old materialization, saving
    /// [`Self::new_state`] the re-derivation. The stored initial answers of
    /// a metric pipeline are exactly this. No effect if one is already set.
    pub fn prime_old_state(&self, mat: Materialization) {
        let _ = self.old_mat.set(mat);
    }
}

// ---------------------------------------------------------------------------
// state probing

enum Probe {
    Delta { add: bool, base: Pred },
    Nwd(Pred),
    Nwi(Pred),
    Old(Pred),
}

fn classify(pred: &Pred) -> Probe {
    if let Some(rest) = pred.name.strip_prefix("add_") {
        return Probe::Delta {
            add: true,
            base: Pred::new(rest, pred.arity),
        };
    }
    if let Some(rest) = pred.name.strip_prefix("del_") {
        return Probe::Delta {
            add: false,
            base: Pred::new(rest, pred.arity),
        };
    }
    if let Some(rest) = pred.name.strip_prefix("nwd_") {
        return Probe::Nwd(Pred::new(rest, pred.arity));
    }
    if let Some(rest) = pred.name.strip_prefix("nwi_") {
        return Probe::Nwi(Pred::new(rest, pred.arity));
    }
    Probe::Old(pred.clone())
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum StateKind {
    Old,
    Nwi,
}

type MemoKey = (StateKind, Pred, Vec<Option<Constant>>);

/// Run-wide caches: compiled clauses, the probe memo, and the lazy
/// full-materialization fallback for recursive components.
struct Caches<'a> {
    t: &'a TransformedRuleSet,
    old: &'a Snapshot,
    seeds: &'a DeltaSet,
    recursive: BTreeSet<Pred>,
    source_clauses: BTreeMap<Pred, Vec<CompiledRule>>,
    indirect_clauses: BTreeMap<Pred, Vec<CompiledRule>>,
    old_view: DbView<'a>,
    memo: RefCell<BTreeMap<MemoKey, Vec<Tuple>>>,
    fallback: OnceCell<(Materialization, Materialization)>,
}

impl<'a> Caches<'a> {
    fn fallback(&self) -> &(Materialization, Materialization) {
        self.fallback.get_or_init(|| {
            let source = self.t.source();
            let old_mat =
                evaluate(source, self.old).expect("transformed sources are stratifiable");
            let updated = apply_delta_set(&self.old.to_fact_base(), self.seeds).snapshot();
            let new_mat =
                evaluate(source, &updated).expect("transformed sources are stratifiable");
            (old_mat, new_mat)
        })
    }
}

/// The literal source propagation rules evaluate against: deltas, old
/// state, and new states, resolved by head-name prefix.
struct Prober<'a, 'b> {
    caches: &'b Caches<'a>,
    /// Final induced deltas of the components processed so far.
    lower: &'b DeltaSet,
}

impl Prober<'_, '_> {
    fn delta_tuples(&self, base: &Pred, add: bool) -> Option<&BTreeSet<Tuple>> {
        let from = if self.caches.t.source().extensional().contains(base) {
            self.caches.seeds
        } else {
            self.lower
        };
        if add {
            from.additions(base)
        } else {
            from.deletions(base)
        }
    }

    /// Old-state tuples of `pred` matching `pattern`.
    fn old_solutions(&self, pred: &Pred, pattern: &[Option<Constant>], out: &mut Vec<Tuple>) {
        if !self.caches.t.source().is_intensional(pred) {
            self.caches.old_view.solutions(pred, pattern, out);
            return;
        }
        if self.caches.recursive.contains(pred) {
            if let Some(rel) = self.caches.fallback().0.tuples(pred) {
                scan_matching(rel, pattern, out);
            }
            return;
        }
        let tuples = self.memoized(StateKind::Old, pred, pattern, |prober| {
            prober.expand(prober.caches.source_clauses.get(pred), pattern)
        });
        out.extend(tuples);
    }

    fn nwi_solutions(&self, pred: &Pred, pattern: &[Option<Constant>], out: &mut Vec<Tuple>) {
        if self.caches.recursive.contains(pred) {
            if let Some(rel) = self.caches.fallback().1.tuples(pred) {
                scan_matching(rel, pattern, out);
            }
            return;
        }
        let tuples = self.memoized(StateKind::Nwi, pred, pattern, |prober| {
            prober.expand(prober.caches.indirect_clauses.get(pred), pattern)
        });
        out.extend(tuples);
    }

    fn memoized(
        &self,
        kind: StateKind,
        pred: &Pred,
        pattern: &[Option<Constant>],
        compute: impl FnOnce(&Self) -> Vec<Tuple>,
    ) -> Vec<Tuple> {
        let key: MemoKey = (kind, pred.clone(), pattern.to_vec());
        if let Some(hit) = self.caches.memo.borrow().get(&key) {
            return hit.clone();
        }
        // not held across compute: expansion probes this memo re-entrantly
        let tuples = compute(self);
        self.caches.memo.borrow_mut().insert(key, tuples.clone());
        tuples
    }

    /// Evaluates `clauses` with the pattern's constants pre-bound to the
    /// head variables, collecting the matching head instances.
    fn expand(&self, clauses: Option<&Vec<CompiledRule>>, pattern: &[Option<Constant>]) -> Vec<Tuple> {
        let mut set: BTreeSet<Tuple> = BTreeSet::new();
        'clause: for cc in clauses.into_iter().flatten() {
            let mut initial: Vec<(usize, Constant)> = Vec::new();
            for (slot, want) in cc.head.iter().zip(pattern) {
                match (slot, want) {
                    (_, None) => {}
                    (Slot::Const(c), Some(d)) => {
                        if c != d {
                            continue 'clause;
                        }
                    }
                    (Slot::Var(v), Some(d)) => {
                        if let Some((_, prev)) = initial.iter().find(|(u, _)| u == v) {
                            if prev != d {
                                continue 'clause;
                            }
                        } else {
                            initial.push((*v, d.clone()));
                        }
                    }
                }
            }
            for_each_derivation(cc, self, None, &initial, &mut |binding| {
                set.insert(instantiate(&cc.head, binding));
            });
        }
        set.into_iter().collect()
    }

    fn old_holds(&self, pred: &Pred, tuple: &[Constant]) -> bool {
        if !self.caches.t.source().is_intensional(pred) {
            return self.caches.old_view.holds(pred, tuple);
        }
        let pattern: Vec<Option<Constant>> = tuple.iter().map(|c| Some(c.clone())).collect();
        let mut out = Vec::new();
        self.old_solutions(pred, &pattern, &mut out);
        !out.is_empty()
    }
}

impl LiteralSource for Prober<'_, '_> {
    fn solutions(&self, pred: &Pred, pattern: &[Option<Constant>], out: &mut Vec<Tuple>) {
        match classify(pred) {
            Probe::Delta { add, base } => {
                if let Some(set) = self.delta_tuples(&base, add) {
                    scan_matching(set, pattern, out);
                }
            }
            Probe::Old(base) => self.old_solutions(&base, pattern, out),
            Probe::Nwd(base) => {
                let deltas = if self.caches.t.source().extensional().contains(&base) {
                    self.caches.seeds
                } else {
                    self.lower
                };
                let mut olds = Vec::new();
                self.old_solutions(&base, pattern, &mut olds);
                match deltas.deletions(&base) {
                    Some(dels) => out.extend(olds.into_iter().filter(|t| !dels.contains(t))),
                    None => out.extend(olds),
                }
                if let Some(adds) = deltas.additions(&base) {
                    scan_matching(adds, pattern, out);
                }
            }
            Probe::Nwi(base) => self.nwi_solutions(&base, pattern, out),
        }
    }

    fn holds(&self, pred: &Pred, tuple: &[Constant]) -> bool {
        match classify(pred) {
            Probe::Delta { add, base } => self
                .delta_tuples(&base, add)
                .is_some_and(|s| s.contains(tuple)),
            Probe::Old(base) => self.old_holds(&base, tuple),
            Probe::Nwd(base) => {
                let deltas = if self.caches.t.source().extensional().contains(&base) {
                    self.caches.seeds
                } else {
                    self.lower
                };
                if deltas
                    .additions(&base)
                    .is_some_and(|s| s.contains(tuple))
                {
                    return true;
                }
                if deltas
                    .deletions(&base)
                    .is_some_and(|s| s.contains(tuple))
                {
                    return false;
                }
                self.old_holds(&base, tuple)
            }
            Probe::Nwi(base) => {
                let pattern: Vec<Option<Constant>> =
                    tuple.iter().map(|c| Some(c.clone())).collect();
                let mut out = Vec::new();
                self.nwi_solutions(&base, &pattern, &mut out);
                !out.is_empty()
            }
        }
    }
}

// ---------------------------------------------------------------------------
// the propagation driver

/// Computes the induced deltas of every intensional predicate from the old
/// state and the seed deltas, delta-driven and without materializing.
pub fn propagate(
    t: &TransformedRuleSet,
    old: &Snapshot,
    seeds: &DeltaSet,
) -> Result<PropagationResult, SeedPredicateUnknown> {
    let source = t.source();
    for pred in seeds.predicates() {
        if !source.extensional().contains(&pred) {
            return Err(SeedPredicateUnknown { pred });
        }
    }
    let graph = DependencyGraph::build(source);
    let recursive: BTreeSet<Pred> = graph
        .nodes()
        .iter()
        .filter(|p| graph.mutually_dependent(p, p))
        .cloned()
        .collect();

    let mut source_clauses: BTreeMap<Pred, Vec<CompiledRule>> = BTreeMap::new();
    for rule in source.rules() {
        source_clauses
            .entry(rule.head.key())
            .or_default()
            .push(compile(rule));
    }
    let mut indirect_clauses: BTreeMap<Pred, Vec<CompiledRule>> = BTreeMap::new();
    for rule in t.indirect_transition_rules() {
        let Probe::Nwi(base) = classify(&rule.head.key()) else {
            unreachable!("indirect transition heads carry the nwi_ prefix")
        };
        indirect_clauses.entry(base).or_default().push(compile(rule));
    }
    let mut prop_by_pred: BTreeMap<Pred, Vec<CompiledRule>> = BTreeMap::new();
    for rule in t.propagation_rules() {
        let Probe::Delta { base, .. } = classify(&rule.head.key()) else {
            unreachable!("propagation heads carry the add_/del_ prefix")
        };
        prop_by_pred.entry(base).or_default().push(compile(rule));
    }

    let empty_derived = BTreeMap::new();
    let caches = Caches {
        t,
        old,
        seeds,
        recursive,
        source_clauses,
        indirect_clauses,
        old_view: DbView::new(old, &empty_derived),
        memo: RefCell::new(BTreeMap::new()),
        fallback: OnceCell::new(),
    };

    let mut accumulated = DeltaSet::new();
    for scc in graph.sccs() {
        let members: Vec<&Pred> = scc.iter().filter(|p| source.is_intensional(p)).collect();
        if members.is_empty() {
            continue;
        }
        if members.iter().any(|p| caches.recursive.contains(p)) {
            // exact fallback: a cycle defeats bound clause expansion
            let prober = Prober {
                caches: &caches,
                lower: &accumulated,
            };
            let mut diffs: Vec<(Pred, BTreeSet<Tuple>, BTreeSet<Tuple>)> = Vec::new();
            {
                let (old_mat, new_mat) = prober.caches.fallback();
                for p in &members {
                    let empty = BTreeSet::new();
                    let olds = old_mat.tuples(p).unwrap_or(&empty);
                    let news = new_mat.tuples(p).unwrap_or(&empty);
                    diffs.push((
                        (*p).clone(),
                        news.difference(olds).cloned().collect(),
                        olds.difference(news).cloned().collect(),
                    ));
                }
            }
            for (p, adds, dels) in diffs {
                for t in adds {
                    accumulated.add_tuple(p.clone(), t);
                }
                for t in dels {
                    accumulated.delete_tuple(p.clone(), t);
                }
            }
            continue;
        }

        let p = members[0];
        let mut adds: BTreeSet<Tuple> = BTreeSet::new();
        let mut dels: BTreeSet<Tuple> = BTreeSet::new();
        {
            let prober = Prober {
                caches: &caches,
                lower: &accumulated,
            };
            let rules = prop_by_pred.get(p).map(Vec::as_slice).unwrap_or(&[]);
            for cr in rules {
                let CLit::Atom {
                    pred: delta_pred, ..
                } = &cr.lits[0]
                else {
                    unreachable!("propagation bodies start with their delta literal")
                };
                let Probe::Delta { add, base } = classify(delta_pred) else {
                    unreachable!("leading literal is a delta literal")
                };
                let Some(pin) = prober.delta_tuples(&base, add).filter(|s| !s.is_empty())
                else {
                    continue;
                };
                let insertion = cr.head_pred.name.starts_with("add_");
                for_each_derivation(cr, &prober, Some((0, pin)), &[], &mut |binding| {
                    let tuple = instantiate(&cr.head, binding);
                    if insertion {
                        adds.insert(tuple);
                    } else {
                        dels.insert(tuple);
                    }
                });
            }
        }
        for t in adds {
            accumulated.add_tuple(p.clone(), t);
        }
        for t in dels {
            accumulated.delete_tuple(p.clone(), t);
        }
    }

    Ok(PropagationResult {
        induced: accumulated,
        seeds: seeds.clone(),
        source: source.clone(),
        old: old.clone(),
        old_mat: OnceCell::new(),
        new_cache: RefCell::new(BTreeMap::new()),
    })
}

/// Disagreements between incremental new state and a fresh evaluation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Diff {
    entries: BTreeMap<Pred, (BTreeSet<Tuple>, BTreeSet<Tuple>)>,
}

impl Diff {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Per predicate: (tuples only the incremental state has, tuples only
    /// the oracle has).
    pub fn entries(&self) -> &BTreeMap<Pred, (BTreeSet<Tuple>, BTreeSet<Tuple>)> {
        &self.entries
    }
}

impl fmt::Display for Diff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "incremental and oracle states agree");
        }
        for (p, (extra, missing)) in &self.entries {
            writeln!(
                f,
                "{p}: {} tuple(s) only incremental, {} only oracle",
                extra.len(),
                missing.len()
            )?;
        }
        Ok(())
    }
}

/// Propagates with default options and independently re-evaluates the
/// updated base, returning the per-predicate symmetric difference.
/// Preconditions are those of [`transform`] and [`propagate`].
pub fn check_against_oracle(rules: &RuleSet, old: &Snapshot, seeds: &DeltaSet) -> Diff {
    let t = transform(rules, TransformOptions::default()).expect("rules valid and stratifiable");
    let result = propagate(&t, old, seeds).expect("seeds normalized against the old state");
    let updated = apply_delta_set(&old.to_fact_base(), seeds).snapshot();
    let oracle = evaluate(rules, &updated).expect("rules stratifiable");
    let mut entries = BTreeMap::new();
    for p in rules.intensional() {
        let incremental = result.new_state(&p);
        let expected = oracle.tuples(&p).cloned().unwrap_or_default();
        let extra: BTreeSet<Tuple> = incremental.difference(&expected).cloned().collect();
        let missing: BTreeSet<Tuple> = expected.difference(&incremental).cloned().collect();
        if !extra.is_empty() || !missing.is_empty() {
            entries.insert(p, (extra, missing));
        }
    }
    Diff { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::GroundAtom;
    use crate::facts::{normalize_seeds, FactBase};
    use crate::parse::{parse_fact_file, parse_rule, parse_rule_file};
    use alloc::vec;

    fn model(text: &str) -> Snapshot {
        FactBase::from_atoms(parse_fact_file(text).unwrap()).snapshot()
    }

    fn lcom1() -> RuleSet {
        RuleSet::new(
            parse_rule_file(
                "cp(C,M,N) :- mf(M,F), cf(C,F), mf(N,F).\n\
                 lp(C,M,N) :- cm(C,M), cm(C,N), not(cp(C,M,N)).\n",
            )
            .unwrap(),
            [
                Pred::new("c", 1),
                Pred::new("cm", 2),
                Pred::new("cf", 2),
                Pred::new("mf", 2),
            ],
        )
        .unwrap()
    }

    const M0: &str = "c(c1).\n\
        cm(c1,m1). cm(c1,m2). cm(c1,m3).\n\
        cf(c1,f1). cf(c1,f2).\n\
        mf(m1,f1). mf(m2,f1). mf(m3,f2).\n";

    fn seeds(base: &Snapshot, adds: &str, dels: &str) -> DeltaSet {
        let mut raw = DeltaSet::new();
        for a in parse_fact_file(adds).unwrap() {
            raw.add(a);
        }
        for d in parse_fact_file(dels).unwrap() {
            raw.delete(d);
        }
        let (normalized, warnings) = normalize_seeds(base, &raw).unwrap();
        assert!(warnings.is_empty());
        normalized
    }

    fn t3(a: &str, b: &str, c: &str) -> Tuple {
        vec![Constant::name(a), Constant::name(b), Constant::name(c)]
    }

    #[test]
    fn worked_example_induces_exactly_one_insertion() {
        let rules = RuleSet::new(
            vec![parse_rule("p(X) :- q(X,Y), r(Y), not(s(Y)).").unwrap()],
            [Pred::new("q", 2), Pred::new("r", 1), Pred::new("s", 1)],
        )
        .unwrap();
        let old = model(
            "q(1,2). r(3). s(4).\n\
             q(2,3). r(4). s(5).\n\
             q(3,4). r(5). s(6).\n",
        );
        let t = transform(&rules, TransformOptions::default()).unwrap();
        let seeds = seeds(&old, "r(2).", "");
        let result = propagate(&t, &old, &seeds).unwrap();
        let p = Pred::new("p", 1);
        let expected: BTreeSet<Tuple> = [vec![Constant::Int(1)]].into();
        assert_eq!(result.induced().additions(&p), Some(&expected));
        assert!(result.induced().deletions(&p).is_none());
        assert!(check_against_oracle(&rules, &old, &seeds).is_empty());
    }

    #[test]
    fn empty_seeds_induce_nothing() {
        let t = transform(&lcom1(), TransformOptions::default()).unwrap();
        let result = propagate(&t, &model(M0), &DeltaSet::new()).unwrap();
        assert!(result.induced().is_empty());
    }

    #[test]
    fn moving_a_method_to_a_new_class_updates_only_lacking_pairs() {
        let rules = lcom1();
        let old = model(M0);
        let t = transform(&rules, TransformOptions::default()).unwrap();
        let seeds = seeds(&old, "c(c2). cm(c2,m3).", "cm(c1,m3).");
        let result = propagate(&t, &old, &seeds).unwrap();

        let lp = Pred::new("lp", 3);
        let cp = Pred::new("cp", 3);
        let want_dels: BTreeSet<Tuple> = [
            t3("c1", "m1", "m3"),
            t3("c1", "m2", "m3"),
            t3("c1", "m3", "m1"),
            t3("c1", "m3", "m2"),
        ]
        .into();
        let want_adds: BTreeSet<Tuple> = [t3("c2", "m3", "m3")].into();
        assert_eq!(result.induced().deletions(&lp), Some(&want_dels));
        assert_eq!(result.induced().additions(&lp), Some(&want_adds));
        assert!(result.induced().additions(&cp).is_none());
        assert!(result.induced().deletions(&cp).is_none());
        assert!(check_against_oracle(&rules, &old, &seeds).is_empty());
    }

    #[test]
    fn effectiveness_tests_keep_deltas_minimal() {
        let rules = lcom1();
        let old = model(M0);
        let t = transform(&rules, TransformOptions::default()).unwrap();
        let seeds = seeds(&old, "c(c2). cm(c2,m3).", "cm(c1,m3).");
        let result = propagate(&t, &old, &seeds).unwrap();
        let old_mat = evaluate(&rules, &old).unwrap();
        for p in rules.intensional() {
            let empty = BTreeSet::new();
            let olds = old_mat.tuples(&p).unwrap_or(&empty);
            let adds = result.induced().additions(&p).cloned().unwrap_or_default();
            let dels = result.induced().deletions(&p).cloned().unwrap_or_default();
            assert!(adds.is_disjoint(olds), "{p}: additions already present");
            assert!(dels.is_subset(olds), "{p}: deletions not present before");
            assert!(adds.is_disjoint(&dels), "{p}: overlapping deltas");
        }
    }

    #[test]
    fn alternative_derivations_diverge_without_effectiveness_tests() {
        // p has two derivations for 1; deleting one of them must not
        // delete p(1), which only the effectiveness test notices
        let rules = RuleSet::new(
            parse_rule_file("p(X) :- q(X).\np(X) :- r(X).\n").unwrap(),
            [Pred::new("q", 1), Pred::new("r", 1)],
        )
        .unwrap();
        let old = model("q(1). r(1).");
        let seeds = seeds(&old, "", "q(1).");
        let p = Pred::new("p", 1);

        let raw = transform(
            &rules,
            TransformOptions {
                effectiveness_tests: false,
            },
        )
        .unwrap();
        let result = propagate(&raw, &old, &seeds).unwrap();
        let one: BTreeSet<Tuple> = [vec![Constant::Int(1)]].into();
        assert_eq!(result.induced().deletions(&p), Some(&one));
        // (old \ del) ∪ add loses p(1) even though r(1) still derives it
        let oracle = evaluate(
            &rules,
            &apply_delta_set(&old.to_fact_base(), &seeds).snapshot(),
        )
        .unwrap();
        assert_ne!(result.new_state(&p), oracle.tuples(&p).cloned().unwrap());

        // the checked transformation suppresses the ineffective deletion
        let checked = transform(&rules, TransformOptions::default()).unwrap();
        let result = propagate(&checked, &old, &seeds).unwrap();
        assert!(result.induced().is_empty());
        assert!(check_against_oracle(&rules, &old, &seeds).is_empty());
    }

    #[test]
    fn raw_deltas_may_overlap_without_effectiveness_tests() {
        let rules = RuleSet::new(
            parse_rule_file("p(X) :- q(X).\np(X) :- r(X).\n").unwrap(),
            [Pred::new("q", 1), Pred::new("r", 1)],
        )
        .unwrap();
        let old = model("q(1).");
        let seeds = seeds(&old, "r(1).", "q(1).");
        let raw = transform(
            &rules,
            TransformOptions {
                effectiveness_tests: false,
            },
        )
        .unwrap();
        let result = propagate(&raw, &old, &seeds).unwrap();
        let p = Pred::new("p", 1);
        let one: BTreeSet<Tuple> = [vec![Constant::Int(1)]].into();
        assert_eq!(result.induced().additions(&p), Some(&one));
        assert_eq!(result.induced().deletions(&p), Some(&one));
    }

    #[test]
    fn seeds_must_name_extensional_predicates() {
        let t = transform(&lcom1(), TransformOptions::default()).unwrap();
        let old = model(M0);
        let mut unknown = DeltaSet::new();
        unknown.add(GroundAtom::new("zz", vec![Constant::Int(1)]));
        assert!(matches!(
            propagate(&t, &old, &unknown),
            Err(SeedPredicateUnknown { pred }) if pred == Pred::new("zz", 1)
        ));
        let mut intensional = DeltaSet::new();
        intensional.add(GroundAtom::new("lp", vec![
            Constant::name("c1"),
            Constant::name("m1"),
            Constant::name("m2"),
        ]));
        assert!(propagate(&t, &old, &intensional).is_err());
    }

    #[test]
    fn recursive_components_fall_back_to_exact_differences() {
        let rules = RuleSet::new(
            parse_rule_file("tc(X,Y) :- e(X,Y).\ntc(X,Y) :- e(X,Z), tc(Z,Y).\n").unwrap(),
            [Pred::new("e", 2)],
        )
        .unwrap();
        let old = model("e(1,2). e(2,3).");
        let seeds = seeds(&old, "e(3,1).", "");
        let t = transform(&rules, TransformOptions::default()).unwrap();
        let result = propagate(&t, &old, &seeds).unwrap();
        let tc = Pred::new("tc", 2);
        // closing the cycle adds the six missing pairs
        assert_eq!(result.induced().additions(&tc).unwrap().len(), 6);
        assert!(result.induced().deletions(&tc).is_none());
        assert!(check_against_oracle(&rules, &old, &seeds).is_empty());
    }

    #[test]
    fn new_state_merges_seeds_for_extensional_predicates() {
        let rules = lcom1();
        let old = model(M0);
        let t = transform(&rules, TransformOptions::default()).unwrap();
        let seeds = seeds(&old, "c(c2). cm(c2,m3).", "cm(c1,m3).");
        let result = propagate(&t, &old, &seeds).unwrap();
        let cm = Pred::new("cm", 2);
        let want: BTreeSet<Tuple> = [
            vec![Constant::name("c1"), Constant::name("m1")],
            vec![Constant::name("c1"), Constant::name("m2")],
            vec![Constant::name("c2"), Constant::name("m3")],
        ]
        .into();
        assert_eq!(result.new_state(&cm), want);
    }
}
