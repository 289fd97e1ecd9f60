//! Generation of update-propagation and transition rules.
//!
//! Given a validated, stratifiable rule set, [`transform`] derives the
//! augmented program that computes induced changes from explicit delta
//! facts instead of re-evaluating from scratch:
//!
//! * **propagation rules** — for each user-predicate body literal of each
//!   source clause, one insertion rule (head `add_P`) and one deletion rule
//!   (head `del_P`), with the driving delta literal first;
//! * **direct transition rules** — for every predicate `P`, the pair
//!   `nwd_P :- P, not(del_P).` / `nwd_P :- add_P.` describing the new state
//!   incrementally;
//! * **indirect transition rules** — per source clause, a rule `nwi_P`
//!   deriving the new state from the new states of the body predicates.
//!
//! Insertion rules evaluate their side literals against the *new* state
//! (choosing `nwd_`/`nwi_` per [`select_state`]); deletion rules evaluate
//! them against the *old* state verbatim. Trailing effectiveness tests —
//! `not(P)` for insertions, `not(nwi_P)` for deletions — keep the deltas
//! minimal and can be switched off.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ast::{Atom, Literal, Pred, Rule, RuleSet, Term};
use crate::eval::{stratify, NotStratifiable};
use crate::meta::{analyse_rules, DependencyGraph, RuleMeta};
use crate::validate::{validate_ruleset, ValidationReport};

/// Head-name prefixes the transformation claims for itself.
pub const RESERVED_PREFIXES: [&str; 4] = ["add_", "del_", "nwd_", "nwi_"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransformOptions {
    /// Append `not(P)` / `not(nwi_P)` effectiveness tests (default on).
    pub effectiveness_tests: bool,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions {
            effectiveness_tests: true,
        }
    }
}

#[derive(Clone, Debug)]
pub enum TransformError {
    /// The source rules fail validation.
    Invalid(ValidationReport),
    /// The source rules are not stratifiable.
    NotStratifiable(NotStratifiable),
    /// A source predicate name collides with a generated-name prefix.
    ReservedPrefix { pred: Pred },
}

impl fmt::Display for TransformError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformError::Invalid(report) => write!(f, "invalid rule set: {report}"),
            TransformError::NotStratifiable(e) => write!(f, "{e}"),
            TransformError::ReservedPrefix { pred } => write!(
                f,
                "predicate {pred} uses a name prefix reserved for generated rules"
            ),
        }
    }
}

impl core::error::Error for TransformError {}

/// Which new-state relation a side literal should read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateRelation {
    /// `nwd_P`: old state adjusted by deltas.
    Direct,
    /// `nwi_P`: recomputed from the new states of the body predicates.
    Indirect,
}

/// Chooses the new-state relation for predicate `p` occurring in a clause
/// of `context`: indirect when `p` is intensional and either occurs under
/// negation or is mutually dependent with the context; direct otherwise
/// (extensional predicates always).
pub fn select_state(
    p: &Pred,
    context: &Pred,
    negated_occurrence: bool,
    graph: &DependencyGraph,
) -> StateRelation {
    if graph.is_intensional(p) && (negated_occurrence || graph.mutually_dependent(p, context)) {
        StateRelation::Indirect
    } else {
        StateRelation::Direct
    }
}

fn prefixed(prefix: &str, a: &Atom) -> Atom {
    Atom::new(&format!("{prefix}{}", a.pred), a.terms.clone())
}

fn new_state_literal(a: &Atom, negated: bool, context: &Pred, graph: &DependencyGraph) -> Literal {
    let prefix = match select_state(&a.key(), context, negated, graph) {
        StateRelation::Direct => "nwd_",
        StateRelation::Indirect => "nwi_",
    };
    let mapped = prefixed(prefix, a);
    if negated {
        Literal::Neg(mapped)
    } else {
        Literal::Pos(mapped)
    }
}

/// The insertion and deletion propagation rules of one source clause: one
/// pair per user-predicate body literal, delta literal first, side literals
/// in source order (new state for insertions, old state for deletions),
/// built-ins copied unchanged, effectiveness test last.
pub fn generate_propagation_rules(
    rule: &Rule,
    meta: &RuleMeta,
    options: &TransformOptions,
) -> Vec<Rule> {
    let graph = meta.graph();
    let head_pred = rule.head.key();
    let driving: Vec<usize> = rule
        .body
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.is_builtin())
        .map(|(i, _)| i)
        .collect();
    let mut out = Vec::with_capacity(driving.len() * 2);
    for insertion in [true, false] {
        for &i in &driving {
            let (atom, negated) = match &rule.body[i] {
                Literal::Pos(a) => (a, false),
                Literal::Neg(a) => (a, true),
                _ => unreachable!("driving literals are user-predicate atoms"),
            };
            // a deletion from a negated literal inserts, and vice versa
            let delta_prefix = if insertion != negated { "add_" } else { "del_" };
            let mut body = Vec::with_capacity(rule.body.len() + 1);
            body.push(Literal::Pos(prefixed(delta_prefix, atom)));
            for (j, lit) in rule.body.iter().enumerate() {
                if j == i {
                    continue;
                }
                let side = match lit {
                    Literal::Pos(a) if insertion => {
                        new_state_literal(a, false, &head_pred, graph)
                    }
                    Literal::Neg(a) if insertion => new_state_literal(a, true, &head_pred, graph),
                    other => other.clone(),
                };
                body.push(side);
            }
            if options.effectiveness_tests {
                let test = if insertion {
                    rule.head.clone()
                } else {
                    prefixed("nwi_", &rule.head)
                };
                body.push(Literal::Neg(test));
            }
            let head_prefix = if insertion { "add_" } else { "del_" };
            out.push(Rule::new(prefixed(head_prefix, &rule.head), body));
        }
    }
    out
}

/// The transition rules of the whole rule set: the direct `nwd_P` pair for
/// every alphabet predicate, and one indirect `nwi_P` rule per source
/// clause of each intensional predicate.
pub fn generate_transition_rules(rules: &RuleSet, meta: &RuleMeta) -> (Vec<Rule>, Vec<Rule>) {
    let graph = meta.graph();
    let mut direct = Vec::new();
    for pred in rules.alphabet() {
        let terms: Vec<Term> = (1..=pred.arity)
            .map(|i| Term::var(&format!("X{i}")))
            .collect();
        let old = Atom::new(&pred.name, terms.clone());
        direct.push(Rule::new(
            prefixed("nwd_", &old),
            alloc::vec![
                Literal::Pos(old.clone()),
                Literal::Neg(prefixed("del_", &old)),
            ],
        ));
        direct.push(Rule::new(
            prefixed("nwd_", &old),
            alloc::vec![Literal::Pos(prefixed("add_", &old))],
        ));
    }
    let mut indirect = Vec::new();
    for rule in rules.rules() {
        let head_pred = rule.head.key();
        let body = rule
            .body
            .iter()
            .map(|lit| match lit {
                Literal::Pos(a) => new_state_literal(a, false, &head_pred, graph),
                Literal::Neg(a) => new_state_literal(a, true, &head_pred, graph),
                other => other.clone(),
            })
            .collect();
        indirect.push(Rule::new(prefixed("nwi_", &rule.head), body));
    }
    (direct, indirect)
}

/// A generated update-propagation program.
#[derive(Clone, Debug)]
pub struct TransformedRuleSet {
    propagation_rules: Vec<Rule>,
    direct_transition_rules: Vec<Rule>,
    indirect_transition_rules: Vec<Rule>,
    source: RuleSet,
    options: TransformOptions,
}

impl TransformedRuleSet {
    pub fn propagation_rules(&self) -> &[Rule] {
        &self.propagation_rules
    }

    pub fn direct_transition_rules(&self) -> &[Rule] {
        &self.direct_transition_rules
    }

    pub fn indirect_transition_rules(&self) -> &[Rule] {
        &self.indirect_transition_rules
    }

    pub fn source(&self) -> &RuleSet {
        &self.source
    }

    pub fn options(&self) -> &TransformOptions {
        &self.options
    }

    /// The generated rules as one rule set. Old-state predicates and the
    /// seed deltas of predicates without propagation rules are its
    /// extensional inputs.
    pub fn augmented(&self) -> RuleSet {
        let mut all = self.propagation_rules.clone();
        all.extend(self.indirect_transition_rules.iter().cloned());
        all.extend(self.direct_transition_rules.iter().cloned());
        let heads: BTreeSet<Pred> = all.iter().map(|r| r.head.key()).collect();
        let mut extensional: BTreeSet<Pred> = self.source.alphabet();
        for pred in self.source.alphabet() {
            for prefix in ["add_", "del_"] {
                let delta = Pred::new(&format!("{prefix}{}", pred.name), pred.arity);
                if !heads.contains(&delta) {
                    extensional.insert(delta);
                }
            }
        }
        RuleSet::new(all, extensional).expect("generated heads never clash with inputs")
    }

    /// Renders the program in rule-file syntax, one rule per line, grouped
    /// with comments.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("% update propagation rules\n");
        for r in &self.propagation_rules {
            out.push_str(&format!("{r}\n"));
        }
        out.push_str("\n% indirect transition rules\n");
        for r in &self.indirect_transition_rules {
            out.push_str(&format!("{r}\n"));
        }
        out.push_str("\n% direct transition rules\n");
        for r in &self.direct_transition_rules {
            out.push_str(&format!("{r}\n"));
        }
        out
    }
}

/// Derives the full update-propagation program for a validated,
/// stratifiable rule set.
pub fn transform(
    rules: &RuleSet,
    options: TransformOptions,
) -> Result<TransformedRuleSet, TransformError> {
    let report = validate_ruleset(rules, &rules.alphabet());
    if !report.is_ok() {
        return Err(TransformError::Invalid(report));
    }
    stratify(rules).map_err(TransformError::NotStratifiable)?;
    for pred in rules.alphabet() {
        if RESERVED_PREFIXES.iter().any(|p| pred.name.starts_with(p)) {
            return Err(TransformError::ReservedPrefix { pred });
        }
    }
    let meta = analyse_rules(rules);
    let mut propagation_rules = Vec::new();
    for rule in rules.rules() {
        propagation_rules.extend(generate_propagation_rules(rule, &meta, &options));
    }
    let (direct, indirect) = generate_transition_rules(rules, &meta);
    Ok(TransformedRuleSet {
        propagation_rules,
        direct_transition_rules: direct,
        indirect_transition_rules: indirect,
        source: rules.clone(),
        options,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_rule, parse_rule_file};
    use alloc::vec;

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

    fn assert_same_rules(actual: &[Rule], expected: &[&str]) {
        let mut want: Vec<_> = expected
            .iter()
            .map(|s| parse_rule(s).unwrap().canonical_form().id())
            .collect();
        let mut got: Vec<_> = actual.iter().map(|r| r.canonical_form().id()).collect();
        want.sort();
        got.sort();
        assert_eq!(
            got,
            want,
            "rules differ:\n{}",
            actual
                .iter()
                .map(|r| alloc::format!("{r}\n"))
                .collect::<String>()
        );
    }

    #[test]
    fn connected_pairs_rule_yields_its_six_propagation_rules() {
        let rules = lcom1();
        let meta = analyse_rules(&rules);
        let cp = &rules.rules()[0];
        let generated = generate_propagation_rules(cp, &meta, &TransformOptions::default());
        assert_same_rules(
            &generated,
            &[
                "add_cp(C,M,N) :- add_mf(M,F), nwd_cf(C,F), nwd_mf(N,F), not(cp(C,M,N)).",
                "add_cp(C,M,N) :- add_cf(C,F), nwd_mf(M,F), nwd_mf(N,F), not(cp(C,M,N)).",
                "add_cp(C,M,N) :- add_mf(N,F), nwd_mf(M,F), nwd_cf(C,F), not(cp(C,M,N)).",
                "del_cp(C,M,N) :- del_mf(M,F), cf(C,F), mf(N,F), not(nwi_cp(C,M,N)).",
                "del_cp(C,M,N) :- del_cf(C,F), mf(M,F), mf(N,F), not(nwi_cp(C,M,N)).",
                "del_cp(C,M,N) :- del_mf(N,F), mf(M,F), cf(C,F), not(nwi_cp(C,M,N)).",
            ],
        );
    }

    #[test]
    fn negated_body_literal_flips_its_delta() {
        let rules = lcom1();
        let meta = analyse_rules(&rules);
        let lp = &rules.rules()[1];
        let generated = generate_propagation_rules(lp, &meta, &TransformOptions::default());
        assert_same_rules(
            &generated,
            &[
                "add_lp(C,M,N) :- add_cm(C,M), nwd_cm(C,N), not(nwi_cp(C,M,N)), not(lp(C,M,N)).",
                "add_lp(C,M,N) :- add_cm(C,N), nwd_cm(C,M), not(nwi_cp(C,M,N)), not(lp(C,M,N)).",
                "add_lp(C,M,N) :- del_cp(C,M,N), nwd_cm(C,M), nwd_cm(C,N), not(lp(C,M,N)).",
                "del_lp(C,M,N) :- del_cm(C,M), cm(C,N), not(cp(C,M,N)), not(nwi_lp(C,M,N)).",
                "del_lp(C,M,N) :- del_cm(C,N), cm(C,M), not(cp(C,M,N)), not(nwi_lp(C,M,N)).",
                "del_lp(C,M,N) :- add_cp(C,M,N), cm(C,M), cm(C,N), not(nwi_lp(C,M,N)).",
            ],
        );
    }

    #[test]
    fn disabling_effectiveness_tests_drops_only_the_trailing_negation() {
        let rules = lcom1();
        let meta = analyse_rules(&rules);
        let opts = TransformOptions {
            effectiveness_tests: false,
        };
        for rule in rules.rules() {
            let with = generate_propagation_rules(rule, &meta, &TransformOptions::default());
            let without = generate_propagation_rules(rule, &meta, &opts);
            assert_eq!(with.len(), without.len());
            for (w, wo) in with.iter().zip(&without) {
                assert_eq!(w.head, wo.head);
                assert_eq!(&w.body[..w.body.len() - 1], &wo.body[..]);
            }
        }
    }

    #[test]
    fn transition_rules_cover_every_predicate() {
        let rules = lcom1();
        let meta = analyse_rules(&rules);
        let (direct, indirect) = generate_transition_rules(&rules, &meta);
        // six alphabet predicates, two clauses each
        assert_eq!(direct.len(), 12);
        let nwd_mf: Vec<Rule> = direct
            .iter()
            .filter(|r| r.head.pred == "nwd_mf")
            .cloned()
            .collect();
        assert_same_rules(
            &nwd_mf,
            &[
                "nwd_mf(M,F) :- mf(M,F), not(del_mf(M,F)).",
                "nwd_mf(M,F) :- add_mf(M,F).",
            ],
        );
        assert_same_rules(
            &indirect,
            &[
                "nwi_cp(C,M,N) :- nwd_mf(M,F), nwd_cf(C,F), nwd_mf(N,F).",
                "nwi_lp(C,M,N) :- nwd_cm(C,M), nwd_cm(C,N), not(nwi_cp(C,M,N)).",
            ],
        );
    }

    #[test]
    fn state_selection_follows_negation_and_recursion() {
        let rules = lcom1();
        let g = DependencyGraph::build(&rules);
        let (cp, lp, cm) = (Pred::new("cp", 3), Pred::new("lp", 3), Pred::new("cm", 2));
        assert_eq!(select_state(&cp, &lp, true, &g), StateRelation::Indirect);
        assert_eq!(select_state(&cp, &lp, false, &g), StateRelation::Direct);
        assert_eq!(select_state(&cm, &lp, false, &g), StateRelation::Direct);
        assert_eq!(select_state(&cm, &lp, true, &g), StateRelation::Direct);

        let recursive = RuleSet::new(
            parse_rule_file("p(X) :- q(X).\nq(X) :- p(X).\n").unwrap(),
            [],
        )
        .unwrap();
        let rg = DependencyGraph::build(&recursive);
        assert_eq!(
            select_state(&Pred::new("q", 1), &Pred::new("p", 1), false, &rg),
            StateRelation::Indirect
        );
    }

    #[test]
    fn counting_law_and_determinism_hold() {
        let rules = lcom1();
        let t1 = transform(&rules, TransformOptions::default()).unwrap();
        let t2 = transform(&rules, TransformOptions::default()).unwrap();
        // two source clauses with three user-predicate literals each
        assert_eq!(t1.propagation_rules().len(), 2 * (3 + 3));
        assert_eq!(t1.render(), t2.render());
    }

    #[test]
    fn augmented_program_is_valid_and_stratifiable() {
        let t = transform(&lcom1(), TransformOptions::default()).unwrap();
        let augmented = t.augmented();
        assert!(validate_ruleset(&augmented, &augmented.alphabet()).is_ok());
        assert!(stratify(&augmented).is_ok());
    }

    #[test]
    fn recursive_source_still_transforms_to_a_stratifiable_program() {
        let rules = RuleSet::new(
            parse_rule_file("tc(X,Y) :- e(X,Y).\ntc(X,Y) :- e(X,Z), tc(Z,Y).\n").unwrap(),
            [Pred::new("e", 2)],
        )
        .unwrap();
        let t = transform(&rules, TransformOptions::default()).unwrap();
        assert!(stratify(&t.augmented()).is_ok());
        // the recursive literal reads its own indirect new state
        let rendered = t.render();
        assert!(rendered.contains("nwi_tc(Z,Y)"), "{rendered}");
    }

    #[test]
    fn empty_rule_set_generates_only_direct_transitions() {
        let rules = RuleSet::new(vec![], [Pred::new("cm", 2)]).unwrap();
        let t = transform(&rules, TransformOptions::default()).unwrap();
        assert!(t.propagation_rules().is_empty());
        assert!(t.indirect_transition_rules().is_empty());
        assert_same_rules(
            t.direct_transition_rules(),
            &[
                "nwd_cm(C,M) :- cm(C,M), not(del_cm(C,M)).",
                "nwd_cm(C,M) :- add_cm(C,M).",
            ],
        );
    }

    #[test]
    fn input_errors_pass_through() {
        let unsafe_rules = RuleSet::new(
            vec![parse_rule("p(X) :- not(q(X)).").unwrap()],
            [Pred::new("q", 1)],
        )
        .unwrap();
        assert!(matches!(
            transform(&unsafe_rules, TransformOptions::default()),
            Err(TransformError::Invalid(_))
        ));

        let unstratifiable = RuleSet::new(
            vec![parse_rule("p(X) :- q(X), not(p(X)).").unwrap()],
            [Pred::new("q", 1)],
        )
        .unwrap();
        assert!(matches!(
            transform(&unstratifiable, TransformOptions::default()),
            Err(TransformError::NotStratifiable(_))
        ));

        let clashing = RuleSet::new(
            vec![parse_rule("add_p(X) :- q(X).").unwrap()],
            [Pred::new("q", 1)],
        )
        .unwrap();
        assert!(matches!(
            transform(&clashing, TransformOptions::default()),
            Err(TransformError::ReservedPrefix { .. })
        ));
    }

    #[test]
    fn rendered_output_parses_back_to_the_same_rules() {
        let t = transform(&lcom1(), TransformOptions::default()).unwrap();
        let reparsed = parse_rule_file(&t.render()).unwrap();
        let total = t.propagation_rules().len()
            + t.indirect_transition_rules().len()
            + t.direct_transition_rules().len();
        assert_eq!(reparsed.len(), total);
        let mut want: Vec<_> = t
            .propagation_rules()
            .iter()
            .chain(t.indirect_transition_rules())
            .chain(t.direct_transition_rules())
            .map(|r| r.id())
            .collect();
        let mut got: Vec<_> = reparsed.iter().map(|r| r.id()).collect();
        want.sort();
        got.sort();
        assert_eq!(got, want);
    }
}
