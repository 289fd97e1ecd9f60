//! Bottom-up evaluation of stratified rule sets.
//!
//! [`stratify`] orders the intensional predicates so that negation only
//! refers to already-computed relations; [`evaluate`] then materializes
//! every intensional predicate stratum by stratum with semi-naive
//! iteration. The body-join machinery is shared with the propagation
//! runtime: rule bodies are compiled to flat literal programs and executed
//! with a greedy ordering that picks, at each step, the leftmost remaining
//! literal whose groundness requirements are met. Results are therefore
//! independent of the textual body order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;

use crate::ast::{Atom, Constant, Literal, Pred, Rule, RuleSet, Term};
use crate::facts::{query, RelationSource, Snapshot, Substitution, Tuple};

/// The rule set needs negation through a dependency cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NotStratifiable {
    pub pred: Pred,
}

impl fmt::Display for NotStratifiable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "not stratifiable: negation cycle through {}", self.pred)
    }
}

impl core::error::Error for NotStratifiable {}

/// Intensional predicates grouped into evaluation layers; extensional
/// predicates sit conceptually below the first layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratification {
    strata: Vec<BTreeSet<Pred>>,
}

impl Stratification {
    pub fn strata(&self) -> &[BTreeSet<Pred>] {
        &self.strata
    }

    pub fn stratum_of(&self, p: &Pred) -> Option<usize> {
        self.strata.iter().position(|s| s.contains(p))
    }
}

/// Assigns each intensional predicate a stratum: positive dependencies may
/// stay level, negated dependencies must point strictly downward.
pub fn stratify(rules: &RuleSet) -> Result<Stratification, NotStratifiable> {
    let intensional = rules.intensional();
    let bound = intensional.len();
    let mut num: BTreeMap<&Pred, usize> = intensional.iter().map(|p| (p, 1)).collect();
    loop {
        let mut changed = false;
        for rule in rules.rules() {
            let head = rule.head.key();
            let head_key = intensional
                .get(&head)
                .expect("rule heads are intensional");
            for lit in &rule.body {
                let (pred, negated) = match lit {
                    Literal::Pos(a) => (a.key(), false),
                    Literal::Neg(a) => (a.key(), true),
                    _ => continue,
                };
                let Some(p) = intensional.get(&pred) else {
                    continue;
                };
                let req = num[p] + usize::from(negated);
                if num[head_key] < req {
                    if req > bound {
                        return Err(NotStratifiable { pred: head });
                    }
                    num.insert(head_key, req);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut by_level: BTreeMap<usize, BTreeSet<Pred>> = BTreeMap::new();
    for (p, level) in num {
        by_level.entry(level).or_default().insert(p.clone());
    }
    Ok(Stratification {
        strata: by_level.into_values().collect(),
    })
}

/// The derived relations of an evaluation run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Materialization {
    derived: BTreeMap<Pred, BTreeSet<Tuple>>,
}

impl Materialization {
    pub fn tuples(&self, pred: &Pred) -> Option<&BTreeSet<Tuple>> {
        self.derived.get(pred)
    }

    /// Total number of derived tuples.
    pub fn len(&self) -> usize {
        self.derived.values().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl RelationSource for Materialization {
    fn tuples(&self, pred: &Pred) -> Option<&BTreeSet<Tuple>> {
        self.derived.get(pred)
    }

    fn predicates(&self) -> Vec<Pred> {
        self.derived
            .iter()
            .filter(|(_, s)| !s.is_empty())
            .map(|(p, _)| p.clone())
            .collect()
    }
}

// ---------------------------------------------------------------------------
// compiled rule bodies and the shared join executor

/// A term slot: either a fixed constant or an index into the rule's
/// variable table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Slot {
    Const(Constant),
    Var(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum ListArg {
    Ground(Vec<Constant>),
    Var(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum CLit {
    Atom {
        pred: Pred,
        slots: Vec<Slot>,
        negated: bool,
    },
    Eq {
        lhs: Slot,
        rhs: Slot,
        negated: bool,
    },
    Member {
        elem: Slot,
        list: ListArg,
    },
}

#[derive(Clone, Debug)]
pub(crate) struct CompiledRule {
    pub(crate) head_pred: Pred,
    pub(crate) head: Vec<Slot>,
    pub(crate) lits: Vec<CLit>,
    pub(crate) var_names: Vec<String>,
}

pub(crate) fn compile(rule: &Rule) -> CompiledRule {
    let var_names: Vec<String> = rule.variables().iter().map(|v| v.to_string()).collect();
    let idx = |name: &str| -> usize {
        var_names
            .iter()
            .position(|v| v == name)
            .expect("variable registered")
    };
    let slot = |t: &Term| -> Slot {
        match t {
            Term::Var(v) => Slot::Var(idx(v)),
            Term::Const(c) => Slot::Const(c.clone()),
            Term::List(_) => unreachable!("lists appear only as member/2 second argument"),
        }
    };
    let head = rule.head.terms.iter().map(slot).collect();
    let lits = rule
        .body
        .iter()
        .map(|lit| match lit {
            Literal::Pos(a) => CLit::Atom {
                pred: a.key(),
                slots: a.terms.iter().map(slot).collect(),
                negated: false,
            },
            Literal::Neg(a) => CLit::Atom {
                pred: a.key(),
                slots: a.terms.iter().map(slot).collect(),
                negated: true,
            },
            Literal::Eq { lhs, rhs, negated } => CLit::Eq {
                lhs: slot(lhs),
                rhs: slot(rhs),
                negated: *negated,
            },
            Literal::Member { elem, list } => CLit::Member {
                elem: slot(elem),
                list: match list {
                    Term::List(items) => ListArg::Ground(items.clone()),
                    Term::Var(v) => ListArg::Var(idx(v)),
                    Term::Const(_) => unreachable!("member list is a list or a variable"),
                },
            },
        })
        .collect();
    CompiledRule {
        head_pred: rule.head.key(),
        head,
        lits,
        var_names,
    }
}

/// Where body atoms read their tuples from during a join.
pub(crate) trait LiteralSource {
    /// Appends tuples of `pred` matching the bound pattern to `out`.
    fn solutions(&self, pred: &Pred, pattern: &[Option<Constant>], out: &mut Vec<Tuple>);

    /// Ground membership test.
    fn holds(&self, pred: &Pred, tuple: &[Constant]) -> bool;
}

fn slot_known(s: &Slot, bound: &[bool]) -> bool {
    match s {
        Slot::Const(_) => true,
        Slot::Var(v) => bound[*v],
    }
}

fn executable(lit: &CLit, bound: &[bool]) -> bool {
    match lit {
        CLit::Atom { negated: false, .. } => true,
        CLit::Atom {
            negated: true,
            slots,
            ..
        } => slots.iter().all(|s| slot_known(s, bound)),
        CLit::Eq {
            lhs,
            rhs,
            negated: false,
        } => slot_known(lhs, bound) || slot_known(rhs, bound),
        CLit::Eq {
            lhs,
            rhs,
            negated: true,
        } => slot_known(lhs, bound) && slot_known(rhs, bound),
        CLit::Member { list, .. } => match list {
            ListArg::Ground(_) => true,
            ListArg::Var(v) => bound[*v],
        },
    }
}

fn mark_bound(lit: &CLit, bound: &mut [bool]) {
    let mut mark = |s: &Slot| {
        if let Slot::Var(v) = s {
            bound[*v] = true;
        }
    };
    match lit {
        CLit::Atom { slots, .. } => slots.iter().for_each(mark),
        CLit::Eq { lhs, rhs, .. } => {
            mark(lhs);
            mark(rhs);
        }
        CLit::Member { elem, .. } => mark(elem),
    }
}

/// Greedy executable ordering: the pinned literal (if any) first, then
/// repeatedly the leftmost remaining literal whose variables are
/// sufficiently bound. Panics when the body is not range-restricted, which
/// validation rules out.
fn plan(rule: &CompiledRule, pin: Option<usize>, binding: &[Option<Constant>]) -> Vec<usize> {
    let mut bound: Vec<bool> = binding.iter().map(|b| b.is_some()).collect();
    let mut order = Vec::with_capacity(rule.lits.len());
    let mut used = vec![false; rule.lits.len()];
    if let Some(i) = pin {
        debug_assert!(matches!(rule.lits[i], CLit::Atom { negated: false, .. }));
        order.push(i);
        used[i] = true;
        mark_bound(&rule.lits[i], &mut bound);
    }
    while order.len() < rule.lits.len() {
        let next = (0..rule.lits.len()).find(|&i| !used[i] && executable(&rule.lits[i], &bound));
        let Some(i) = next else {
            panic!("rule body is not executable; validate rule sets before evaluating them")
        };
        order.push(i);
        used[i] = true;
        mark_bound(&rule.lits[i], &mut bound);
    }
    order
}

fn resolve(s: &Slot, binding: &[Option<Constant>]) -> Option<Constant> {
    match s {
        Slot::Const(c) => Some(c.clone()),
        Slot::Var(v) => binding[*v].clone(),
    }
}

/// Binds `tuple` against `slots`, returning the newly bound variable ids,
/// or `None` (with bindings restored) on mismatch.
fn unify(
    slots: &[Slot],
    tuple: &[Constant],
    binding: &mut [Option<Constant>],
) -> Option<Vec<usize>> {
    let mut newly = Vec::new();
    for (s, c) in slots.iter().zip(tuple) {
        let ok = match s {
            Slot::Const(k) => k == c,
            Slot::Var(v) => match &binding[*v] {
                Some(b) => b == c,
                None => {
                    binding[*v] = Some(c.clone());
                    newly.push(*v);
                    true
                }
            },
        };
        if !ok {
            for u in newly {
                binding[u] = None;
            }
            return None;
        }
    }
    Some(newly)
}

/// Enumerates every satisfying binding of `rule`'s body. `pin` replaces one
/// positive body atom's source with an explicit tuple set (the semi-naive
/// delta); `initial` pre-binds variables by table index.
pub(crate) fn for_each_derivation<S: LiteralSource, F: FnMut(&[Option<Constant>])>(
    rule: &CompiledRule,
    src: &S,
    pin: Option<(usize, &BTreeSet<Tuple>)>,
    initial: &[(usize, Constant)],
    emit: &mut F,
) {
    let mut binding: Vec<Option<Constant>> = vec![None; rule.var_names.len()];
    for (v, c) in initial {
        binding[*v] = Some(c.clone());
    }
    let order = plan(rule, pin.map(|(i, _)| i), &binding);
    descend(rule, src, &order, 0, pin, &mut binding, emit);
}

fn descend<S: LiteralSource, F: FnMut(&[Option<Constant>])>(
    rule: &CompiledRule,
    src: &S,
    order: &[usize],
    depth: usize,
    pin: Option<(usize, &BTreeSet<Tuple>)>,
    binding: &mut Vec<Option<Constant>>,
    emit: &mut F,
) {
    if depth == order.len() {
        emit(binding);
        return;
    }
    let li = order[depth];
    match &rule.lits[li] {
        CLit::Atom {
            pred,
            slots,
            negated: false,
        } => {
            let pinned_here = pin.filter(|(pi, _)| *pi == li);
            if let Some((_, set)) = pinned_here {
                for t in set {
                    if let Some(newly) = unify(slots, t, binding) {
                        descend(rule, src, order, depth + 1, pin, binding, emit);
                        for u in newly {
                            binding[u] = None;
                        }
                    }
                }
            } else {
                let pattern: Vec<Option<Constant>> =
                    slots.iter().map(|s| resolve(s, binding)).collect();
                let mut buf = Vec::new();
                src.solutions(pred, &pattern, &mut buf);
                for t in &buf {
                    if let Some(newly) = unify(slots, t, binding) {
                        descend(rule, src, order, depth + 1, pin, binding, emit);
                        for u in newly {
                            binding[u] = None;
                        }
                    }
                }
            }
        }
        CLit::Atom {
            pred,
            slots,
            negated: true,
        } => {
            let tuple: Vec<Constant> = slots
                .iter()
                .map(|s| resolve(s, binding).expect("negated literal fully bound"))
                .collect();
            if !src.holds(pred, &tuple) {
                descend(rule, src, order, depth + 1, pin, binding, emit);
            }
        }
        CLit::Eq { lhs, rhs, negated } => {
            match (resolve(lhs, binding), resolve(rhs, binding)) {
                (Some(a), Some(b)) => {
                    if (a == b) != *negated {
                        descend(rule, src, order, depth + 1, pin, binding, emit);
                    }
                }
                (Some(a), None) => {
                    debug_assert!(!negated);
                    let Slot::Var(v) = rhs else { unreachable!() };
                    binding[*v] = Some(a);
                    descend(rule, src, order, depth + 1, pin, binding, emit);
                    binding[*v] = None;
                }
                (None, Some(b)) => {
                    debug_assert!(!negated);
                    let Slot::Var(v) = lhs else { unreachable!() };
                    binding[*v] = Some(b);
                    descend(rule, src, order, depth + 1, pin, binding, emit);
                    binding[*v] = None;
                }
                (None, None) => unreachable!("equality scheduled before either side was bound"),
            }
        }
        CLit::Member { elem, list } => {
            let items: &[Constant] = match list {
                ListArg::Ground(items) => items,
                // a variable can only hold a scalar, which has no members
                ListArg::Var(_) => &[],
            };
            match resolve(elem, binding) {
                Some(c) => {
                    if items.contains(&c) {
                        descend(rule, src, order, depth + 1, pin, binding, emit);
                    }
                }
                None => {
                    let Slot::Var(v) = elem else { unreachable!() };
                    let mut seen = BTreeSet::new();
                    for c in items {
                        if seen.insert(c) {
                            binding[*v] = Some(c.clone());
                            descend(rule, src, order, depth + 1, pin, binding, emit);
                            binding[*v] = None;
                        }
                    }
                }
            }
        }
    }
}

/// Builds the head tuple from a complete binding.
pub(crate) fn instantiate(slots: &[Slot], binding: &[Option<Constant>]) -> Tuple {
    slots
        .iter()
        .map(|s| resolve(s, binding).expect("head variable bound by range restriction"))
        .collect()
}

// ---------------------------------------------------------------------------
// the database view used during evaluation

type Index = BTreeMap<Tuple, Vec<Tuple>>;

/// Extensional snapshot plus the relations derived so far, with lazily
/// built lookup indexes keyed by (predicate, bound-position mask). Index
/// entries are invalidated by relation growth (the stored version is the
/// relation's length).
pub(crate) struct DbView<'a> {
    base: &'a Snapshot,
    derived: &'a BTreeMap<Pred, BTreeSet<Tuple>>,
    cache: RefCell<BTreeMap<(Pred, u32), (usize, Index)>>,
}

impl<'a> DbView<'a> {
    pub(crate) fn new(base: &'a Snapshot, derived: &'a BTreeMap<Pred, BTreeSet<Tuple>>) -> Self {
        DbView {
            base,
            derived,
            cache: RefCell::new(BTreeMap::new()),
        }
    }

    fn relation(&self, pred: &Pred) -> Option<&BTreeSet<Tuple>> {
        self.derived.get(pred).or_else(|| self.base.tuples(pred))
    }
}

pub(crate) fn scan_matching(
    rel: &BTreeSet<Tuple>,
    pattern: &[Option<Constant>],
    out: &mut Vec<Tuple>,
) {
    let bound: Vec<usize> = (0..pattern.len()).filter(|i| pattern[*i].is_some()).collect();
    if bound.is_empty() {
        out.extend(rel.iter().cloned());
        return;
    }
    // bound prefix: walk the ordered set starting at the smallest tuple
    // with that prefix
    let k = bound.len();
    if bound.iter().copied().eq(0..k) {
        let mut low: Tuple = pattern[..k].iter().map(|c| c.clone().unwrap()).collect();
        low.resize(pattern.len(), Constant::Int(i64::MIN));
        for t in rel.range(low..) {
            if t[..k]
                .iter()
                .zip(&pattern[..k])
                .any(|(a, b)| Some(a) != b.as_ref())
            {
                break;
            }
            out.push(t.clone());
        }
        return;
    }
    for t in rel {
        if bound
            .iter()
            .all(|i| pattern[*i].as_ref() == Some(&t[*i]))
        {
            out.push(t.clone());
        }
    }
}

impl LiteralSource for DbView<'_> {
    fn solutions(&self, pred: &Pred, pattern: &[Option<Constant>], out: &mut Vec<Tuple>) {
        let Some(rel) = self.relation(pred) else {
            return;
        };
        let bound: Vec<usize> = (0..pattern.len()).filter(|i| pattern[*i].is_some()).collect();
        let k = bound.len();
        if k == 0 || bound.iter().copied().eq(0..k) || pattern.len() > 32 {
            scan_matching(rel, pattern, out);
            return;
        }
        // general bound positions: use (and lazily build) a column index
        let mask = bound.iter().fold(0u32, |m, i| m | (1 << i));
        let mut cache = self.cache.borrow_mut();
        let entry = cache.entry((pred.clone(), mask)).or_insert((usize::MAX, Index::new()));
        if entry.0 != rel.len() {
            let mut index = Index::new();
            for t in rel {
                let key: Tuple = bound.iter().map(|i| t[*i].clone()).collect();
                index.entry(key).or_default().push(t.clone());
            }
            *entry = (rel.len(), index);
        }
        let key: Tuple = bound
            .iter()
            .map(|i| pattern[*i].clone().unwrap())
            .collect();
        if let Some(ts) = entry.1.get(&key) {
            out.extend(ts.iter().cloned());
        }
    }

    fn holds(&self, pred: &Pred, tuple: &[Constant]) -> bool {
        self.relation(pred).is_some_and(|rel| rel.contains(tuple))
    }
}

// ---------------------------------------------------------------------------
// stratified semi-naive evaluation

/// Materializes every intensional predicate of `rules` over `base`.
pub fn evaluate(rules: &RuleSet, base: &Snapshot) -> Result<Materialization, NotStratifiable> {
    let strat = stratify(rules)?;
    let mut derived: BTreeMap<Pred, BTreeSet<Tuple>> = rules
        .intensional()
        .into_iter()
        .map(|p| (p, BTreeSet::new()))
        .collect();
    for stratum in strat.strata() {
        let compiled: Vec<CompiledRule> = rules
            .rules()
            .iter()
            .filter(|r| stratum.contains(&r.head.key()))
            .map(compile)
            .collect();

        // full first round
        let mut delta: BTreeMap<Pred, BTreeSet<Tuple>> = BTreeMap::new();
        {
            let view = DbView::new(base, &derived);
            for cr in &compiled {
                for_each_derivation(cr, &view, None, &[], &mut |binding| {
                    let t = instantiate(&cr.head, binding);
                    if !derived[&cr.head_pred].contains(&t) {
                        delta.entry(cr.head_pred.clone()).or_default().insert(t);
                    }
                });
            }
        }
        merge(&mut derived, &delta);

        // delta rounds for recursion within the stratum
        while !delta.is_empty() {
            let mut next: BTreeMap<Pred, BTreeSet<Tuple>> = BTreeMap::new();
            {
                let view = DbView::new(base, &derived);
                for cr in &compiled {
                    for (j, lit) in cr.lits.iter().enumerate() {
                        let CLit::Atom {
                            pred,
                            negated: false,
                            ..
                        } = lit
                        else {
                            continue;
                        };
                        if !stratum.contains(pred) {
                            continue;
                        }
                        let Some(d) = delta.get(pred).filter(|d| !d.is_empty()) else {
                            continue;
                        };
                        for_each_derivation(cr, &view, Some((j, d)), &[], &mut |binding| {
                            let t = instantiate(&cr.head, binding);
                            if !derived[&cr.head_pred].contains(&t) {
                                next.entry(cr.head_pred.clone()).or_default().insert(t);
                            }
                        });
                    }
                }
            }
            merge(&mut derived, &next);
            delta = next;
        }
    }
    Ok(Materialization { derived })
}

fn merge(into: &mut BTreeMap<Pred, BTreeSet<Tuple>>, from: &BTreeMap<Pred, BTreeSet<Tuple>>) {
    for (p, ts) in from {
        into.entry(p.clone()).or_default().extend(ts.iter().cloned());
    }
}

struct Union<'a> {
    base: &'a Snapshot,
    mat: &'a Materialization,
}

impl RelationSource for Union<'_> {
    fn tuples(&self, pred: &Pred) -> Option<&BTreeSet<Tuple>> {
        self.mat
            .tuples(pred)
            .filter(|s| !s.is_empty())
            .or_else(|| self.base.tuples(pred))
    }

    fn predicates(&self) -> Vec<Pred> {
        let mut ps: BTreeSet<Pred> = self.base.predicates().into_iter().collect();
        ps.extend(RelationSource::predicates(self.mat));
        ps.into_iter().collect()
    }
}

/// Evaluates the rules, then matches `goal` against the union of the base
/// and the derived relations.
pub fn evaluate_query(
    rules: &RuleSet,
    base: &Snapshot,
    goal: &Atom,
) -> Result<Vec<Substitution>, NotStratifiable> {
    let mat = evaluate(rules, base)?;
    Ok(query(&Union { base, mat: &mat }, goal))
}
