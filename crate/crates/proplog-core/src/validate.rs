//! Rule-set validation: the checks that make evaluation total.
//!
//! A validated rule set satisfies three families of constraints:
//!
//! * **Alphabet** — every body predicate is extensional, defined by a rule,
//!   or explicitly allowed by the caller; only `=/2`, `member/2`, and
//!   `not/1` exist as built-ins.
//! * **Flat heads** — head arguments are variables or plain constants.
//! * **Range restriction** — every head variable, and every variable inside
//!   a negated or built-in literal, is *limited*: bound by a positive
//!   user-predicate literal, generated by `member/2` with a ground list, or
//!   equated (through positive `=/2` chains) to a constant or a limited
//!   variable.
//!
//! Evaluation of a validated rule set never meets an unbound variable
//! inside a negation or built-in, which is what keeps the engine free of
//! runtime errors.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::ast::{Literal, Pred, Rule, RuleId, RuleSet, Term};

/// One violated constraint, anchored to the offending rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// A predicate outside the allowed alphabet (or a reserved name used as
    /// a predicate).
    DisallowedPredicate { rule: RuleId, pred: Pred },
    /// A complex term where only variables and constants may appear.
    ComplexHeadTerm { rule: RuleId, detail: String },
    /// A variable that range restriction requires to be limited but is not.
    UnsafeVariable { rule: RuleId, var: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DisallowedPredicate { rule, pred } => {
                write!(f, "{rule}: predicate {pred} is not allowed here")
            }
            Violation::ComplexHeadTerm { rule, detail } => {
                write!(f, "{rule}: {detail}")
            }
            Violation::UnsafeVariable { rule, var } => {
                write!(
                    f,
                    "{rule}: variable {var} is not bound by any positive body literal"
                )
            }
        }
    }
}

/// All violations found, in rule order. Validation never fails hard.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            f.write_str("ok")
        } else {
            for (i, v) in self.violations.iter().enumerate() {
                if i > 0 {
                    f.write_str("\n")?;
                }
                write!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

/// Checks `rules` against its own alphabet extended by `allowed` (typically
/// the fact-base predicates the rules are meant to query).
pub fn validate_ruleset(rules: &RuleSet, allowed: &BTreeSet<Pred>) -> ValidationReport {
    let mut alphabet = rules.alphabet();
    alphabet.extend(allowed.iter().cloned());

    let mut violations = Vec::new();
    for rule in rules.rules() {
        check_rule(rule, &alphabet, &mut violations);
    }
    ValidationReport { violations }
}

fn reserved(name: &str) -> bool {
    name == "not" || name == "member"
}

fn check_rule(rule: &Rule, alphabet: &BTreeSet<Pred>, out: &mut Vec<Violation>) {
    let id = rule.id();

    // flat head over variables and plain constants
    if reserved(&rule.head.pred) {
        out.push(Violation::DisallowedPredicate {
            rule: id,
            pred: rule.head.key(),
        });
    }
    for t in &rule.head.terms {
        if let Term::List(_) = t {
            out.push(Violation::ComplexHeadTerm {
                rule: id,
                detail: "list constant in clause head".to_string(),
            });
        }
    }

    // body alphabet, and lists confined to member/2's second argument
    for lit in &rule.body {
        match lit {
            Literal::Pos(a) | Literal::Neg(a) => {
                let key = a.key();
                for t in &a.terms {
                    if let Term::List(_) = t {
                        out.push(Violation::ComplexHeadTerm {
                            rule: id,
                            detail: format!("list constant in an argument of {key}"),
                        });
                    }
                }
                if reserved(&a.pred) || !alphabet.contains(&key) {
                    out.push(Violation::DisallowedPredicate { rule: id, pred: key });
                }
            }
            Literal::Eq { lhs, rhs, .. } => {
                for t in [lhs, rhs] {
                    if let Term::List(_) = t {
                        out.push(Violation::ComplexHeadTerm {
                            rule: id,
                            detail: "list constant in an equality".to_string(),
                        });
                    }
                }
            }
            Literal::Member { elem, .. } => {
                if let Term::List(_) = elem {
                    out.push(Violation::ComplexHeadTerm {
                        rule: id,
                        detail: "list constant as the element argument of member/2".to_string(),
                    });
                }
            }
        }
    }

    // range restriction via the limited-variable fixpoint
    let limited = limited_vars(rule);
    let mut must_be_limited: Vec<&str> = rule.head.vars();
    for lit in &rule.body {
        match lit {
            Literal::Pos(_) => {}
            Literal::Neg(a) => must_be_limited.extend(a.vars()),
            Literal::Eq { .. } | Literal::Member { .. } => must_be_limited.extend(lit.vars()),
        }
    }
    let mut reported: BTreeSet<&str> = BTreeSet::new();
    for var in must_be_limited {
        if !limited.contains(var) && reported.insert(var) {
            out.push(Violation::UnsafeVariable {
                rule: id,
                var: var.to_string(),
            });
        }
    }
}

/// The set of limited variables of a rule body: a fixpoint over positive
/// bindings, `member/2` generators, and positive equality chains.
pub(crate) fn limited_vars(rule: &Rule) -> BTreeSet<String> {
    let mut limited: BTreeSet<String> = BTreeSet::new();
    for lit in &rule.body {
        if let Literal::Pos(a) = lit {
            for v in a.vars() {
                limited.insert(v.to_string());
            }
        }
        if let Literal::Member {
            elem: Term::Var(v),
            list: Term::List(_),
        } = lit
        {
            limited.insert(v.clone());
        }
    }
    loop {
        let mut changed = false;
        for lit in &rule.body {
            if let Literal::Eq {
                lhs,
                rhs,
                negated: false,
            } = lit
            {
                let lhs_ok = match lhs {
                    Term::Var(v) => limited.contains(v),
                    _ => true,
                };
                let rhs_ok = match rhs {
                    Term::Var(v) => limited.contains(v),
                    _ => true,
                };
                if lhs_ok && !rhs_ok {
                    if let Term::Var(v) = rhs {
                        changed |= limited.insert(v.clone());
                    }
                }
                if rhs_ok && !lhs_ok {
                    if let Term::Var(v) = lhs {
                        changed |= limited.insert(v.clone());
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    limited
}
