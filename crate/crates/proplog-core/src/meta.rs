//! Rule analysis: the meta relations that drive rule transformation.
//!
//! [`analyse_rules`] decomposes a rule set into head entries, body entries
//! (1-based positions, polarity), and per-variable occurrence maps, and
//! builds the predicate [`DependencyGraph`] with its transitive closure.
//! The closure is a *path* closure: `q ∈ closure(p)` means a non-empty
//! dependency path from `p` to `q` exists, so `p ∈ closure(p)` holds
//! exactly when `p` lies on a cycle. Each closure entry carries a marker
//! telling whether some such path crosses a negated edge.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::ast::{Literal, Pred, Rule, RuleId, RuleSet};

/// Whether a body literal is positive or negated. Built-ins carry no
/// polarity (they reference no user predicate).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Polarity {
    Positive,
    Negated,
}

/// One `head_of_rule` entry: the rule, its head skeleton, and the key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeadEntry {
    pub rule: RuleId,
    pub skeleton: crate::ast::Atom,
    pub pred: Pred,
}

/// One `body_predicate_of_rule` entry. Positions are 1-based and
/// contiguous; built-in literals occupy positions but have no predicate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BodyEntry {
    pub rule: RuleId,
    pub position: usize,
    pub literal: Literal,
    pub pred: Option<Pred>,
    pub polarity: Option<Polarity>,
}

/// One `rule_variables` entry: where a variable occurs within its rule.
/// Argument indices are 1-based; body occurrences pair the literal position
/// with the argument index inside that literal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableEntry {
    pub rule: RuleId,
    pub var: String,
    pub head_positions: Vec<usize>,
    pub body_occurrences: Vec<(usize, usize)>,
}

/// The predicate dependency graph: an edge `from → to` exists iff `to`
/// appears in the body of some rule whose head is `from`; the flag records
/// whether any such occurrence is negated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyGraph {
    nodes: BTreeSet<Pred>,
    edges: BTreeSet<(Pred, Pred, bool)>,
    closure: BTreeMap<Pred, BTreeMap<Pred, bool>>,
    intensional: BTreeSet<Pred>,
}

impl DependencyGraph {
    pub fn build(rules: &RuleSet) -> Self {
        let nodes = rules.alphabet();
        let mut edges = BTreeSet::new();
        for rule in rules.rules() {
            let from = rule.head.key();
            for lit in &rule.body {
                let (to, negative) = match lit {
                    Literal::Pos(a) => (a.key(), false),
                    Literal::Neg(a) => (a.key(), true),
                    _ => continue,
                };
                edges.insert((from.clone(), to, negative));
            }
        }
        let closure = path_closure(&nodes, &edges);
        DependencyGraph {
            nodes,
            edges,
            closure,
            intensional: rules.intensional(),
        }
    }

    pub fn nodes(&self) -> &BTreeSet<Pred> {
        &self.nodes
    }

    pub fn is_intensional(&self, p: &Pred) -> bool {
        self.intensional.contains(p)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&Pred, &Pred, bool)> {
        self.edges.iter().map(|(f, t, n)| (f, t, *n))
    }

    /// Predicates `p` transitively depends on, each marked true when some
    /// dependency path crosses a negated edge.
    pub fn depends_transitively(&self, p: &Pred) -> &BTreeMap<Pred, bool> {
        static EMPTY: BTreeMap<Pred, bool> = BTreeMap::new();
        self.closure.get(p).unwrap_or(&EMPTY)
    }

    /// True iff `p` and `q` lie on a common dependency cycle (for `p == q`,
    /// iff `p` is recursive).
    pub fn mutually_dependent(&self, p: &Pred, q: &Pred) -> bool {
        let p_reaches_q = self.closure.get(p).is_some_and(|m| m.contains_key(q));
        let q_reaches_p = self.closure.get(q).is_some_and(|m| m.contains_key(p));
        p_reaches_q && q_reaches_p
    }

    /// Strongly connected components in dependency order: every edge leaving
    /// a component points into an earlier one. Single nodes without
    /// self-reachability form singleton components.
    pub fn sccs(&self) -> Vec<BTreeSet<Pred>> {
        // group nodes by mutual reachability, then topologically sort the
        // condensation with Kahn's algorithm over deterministic maps
        let mut assigned: BTreeMap<&Pred, usize> = BTreeMap::new();
        let mut comps: Vec<BTreeSet<Pred>> = Vec::new();
        for node in &self.nodes {
            if assigned.contains_key(node) {
                continue;
            }
            let mut comp = BTreeSet::new();
            comp.insert(node.clone());
            for other in &self.nodes {
                if other != node && self.mutually_dependent(node, other) {
                    comp.insert(other.clone());
                }
            }
            let idx = comps.len();
            for member in &comp {
                // tie members to this component (members are mutually
                // reachable, so none was assigned before)
                let key = self.nodes.get(member).expect("member is a node");
                assigned.insert(key, idx);
            }
            comps.push(comp);
        }

        let mut preds_of: Vec<BTreeSet<usize>> = alloc::vec![BTreeSet::new(); comps.len()];
        for (from, to, _) in &self.edges {
            let (fi, ti) = (assigned[from], assigned[to]);
            if fi != ti {
                preds_of[fi].insert(ti);
            }
        }
        let mut order = Vec::with_capacity(comps.len());
        let mut done = alloc::vec![false; comps.len()];
        while order.len() < comps.len() {
            let mut progressed = false;
            for i in 0..comps.len() {
                if !done[i] && preds_of[i].iter().all(|j| done[*j]) {
                    done[i] = true;
                    order.push(comps[i].clone());
                    progressed = true;
                }
            }
            debug_assert!(progressed, "condensation is acyclic");
            if !progressed {
                break;
            }
        }
        order
    }
}

/// BFS over (node, crossed-negation) states.
fn path_closure(
    nodes: &BTreeSet<Pred>,
    edges: &BTreeSet<(Pred, Pred, bool)>,
) -> BTreeMap<Pred, BTreeMap<Pred, bool>> {
    let mut adj: BTreeMap<&Pred, Vec<(&Pred, bool)>> = BTreeMap::new();
    for (from, to, neg) in edges {
        adj.entry(from).or_default().push((to, *neg));
    }
    let mut closure = BTreeMap::new();
    for start in nodes {
        // reached[q] = best-known marker (false preferred, but true recorded
        // if any negative path exists); track visited states to terminate
        let mut reached: BTreeMap<&Pred, bool> = BTreeMap::new();
        let mut visited: BTreeSet<(&Pred, bool)> = BTreeSet::new();
        let mut queue: Vec<(&Pred, bool)> = Vec::new();
        for (to, neg) in adj.get(start).into_iter().flatten() {
            if visited.insert((to, *neg)) {
                queue.push((to, *neg));
            }
        }
        while let Some((node, neg)) = queue.pop() {
            let entry = reached.entry(node).or_insert(neg);
            *entry |= neg;
            for (to, edge_neg) in adj.get(node).into_iter().flatten() {
                let state = (*to, neg || *edge_neg);
                if visited.insert(state) {
                    queue.push(state);
                }
            }
        }
        closure.insert(
            start.clone(),
            reached
                .into_iter()
                .map(|(p, n)| (p.clone(), n))
                .collect(),
        );
    }
    closure
}

/// The complete analysis of a rule set.
#[derive(Clone, Debug)]
pub struct RuleMeta {
    heads: Vec<HeadEntry>,
    bodies: Vec<BodyEntry>,
    variables: Vec<VariableEntry>,
    graph: DependencyGraph,
}

impl RuleMeta {
    pub fn heads(&self) -> &[HeadEntry] {
        &self.heads
    }

    pub fn bodies(&self) -> &[BodyEntry] {
        &self.bodies
    }

    /// Body entries of one rule, in position order.
    pub fn bodies_of(&self, rule: RuleId) -> impl Iterator<Item = &BodyEntry> {
        self.bodies.iter().filter(move |b| b.rule == rule)
    }

    pub fn variables(&self) -> &[VariableEntry] {
        &self.variables
    }

    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }
}

impl fmt::Display for RuleMeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for h in &self.heads {
            writeln!(f, "head_of_rule({}, {}, {})", h.rule, h.skeleton, h.pred)?;
        }
        for b in &self.bodies {
            writeln!(
                f,
                "body_predicate_of_rule({}, {}, {}, {})",
                b.rule,
                b.position,
                b.literal,
                match b.polarity {
                    Some(Polarity::Positive) => "positive",
                    Some(Polarity::Negated) => "negated",
                    None => "builtin",
                }
            )?;
        }
        Ok(())
    }
}

/// Collects head, body, and variable meta entries plus the dependency
/// graph for a validated rule set.
pub fn analyse_rules(rules: &RuleSet) -> RuleMeta {
    let mut heads = Vec::new();
    let mut bodies = Vec::new();
    let mut variables = Vec::new();
    for rule in rules.rules() {
        heads.push(HeadEntry {
            rule: rule.id(),
            skeleton: rule.head.clone(),
            pred: rule.head.key(),
        });
        for (i, lit) in rule.body.iter().enumerate() {
            let (pred, polarity) = match lit {
                Literal::Pos(a) => (Some(a.key()), Some(Polarity::Positive)),
                Literal::Neg(a) => (Some(a.key()), Some(Polarity::Negated)),
                _ => (None, None),
            };
            bodies.push(BodyEntry {
                rule: rule.id(),
                position: i + 1,
                literal: lit.clone(),
                pred,
                polarity,
            });
        }
        variables.extend(variable_entries(rule));
    }
    RuleMeta {
        heads,
        bodies,
        variables,
        graph: DependencyGraph::build(rules),
    }
}

fn variable_entries(rule: &Rule) -> Vec<VariableEntry> {
    let mut out: Vec<VariableEntry> = Vec::new();
    let entry_of = |var: &str, out: &mut Vec<VariableEntry>| -> usize {
        if let Some(i) = out.iter().position(|e| e.var == var) {
            i
        } else {
            out.push(VariableEntry {
                rule: rule.id(),
                var: var.to_string(),
                head_positions: Vec::new(),
                body_occurrences: Vec::new(),
            });
            out.len() - 1
        }
    };
    for (i, t) in rule.head.terms.iter().enumerate() {
        if let crate::ast::Term::Var(v) = t {
            let e = entry_of(v, &mut out);
            out[e].head_positions.push(i + 1);
        }
    }
    for (pos, lit) in rule.body.iter().enumerate() {
        let slots: Vec<(usize, &str)> = match lit {
            Literal::Pos(a) | Literal::Neg(a) => a
                .terms
                .iter()
                .enumerate()
                .filter_map(|(i, t)| match t {
                    crate::ast::Term::Var(v) => Some((i + 1, v.as_str())),
                    _ => None,
                })
                .collect(),
            Literal::Eq { lhs, rhs, .. } => [(1, lhs), (2, rhs)]
                .into_iter()
                .filter_map(|(i, t)| match t {
                    crate::ast::Term::Var(v) => Some((i, v.as_str())),
                    _ => None,
                })
                .collect(),
            Literal::Member { elem, list } => [(1, elem), (2, list)]
                .into_iter()
                .filter_map(|(i, t)| match t {
                    crate::ast::Term::Var(v) => Some((i, v.as_str())),
                    _ => None,
                })
                .collect(),
        };
        for (argidx, v) in slots {
            let e = entry_of(v, &mut out);
            out[e].body_occurrences.push((pos + 1, argidx));
        }
    }
    out
}
