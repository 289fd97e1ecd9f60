//! Terms, atoms, literals, and rules of the restricted deductive language.
//!
//! The language is deliberately small: variables and constants (no function
//! symbols), flat heads, and bodies of positive literals, negated literals,
//! and the two built-ins `=/2` and `member/2`. Complex terms exist only as
//! ground list constants, so `member/2` has something to enumerate; they
//! never appear in heads.
//!
//! Every value renders to a canonical textual form (see the `Display`
//! impls), and [`Rule`] identity is derived from that form: two rules are
//! the same rule exactly when they print the same. Canonical text is also
//! what [`crate::parse`] reads back, so `parse_rule(r.to_string()) == r`
//! for every rule.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use alloc::collections::{BTreeMap, BTreeSet};

/// A ground value: a machine integer or a symbolic name.
///
/// Integers order before names, giving all stored tuples a total order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constant {
    Int(i64),
    Name(String),
}

impl Constant {
    pub fn name(s: &str) -> Self {
        Constant::Name(s.to_string())
    }

    /// The name as a string slice, if this is a symbolic constant.
    pub fn as_name(&self) -> Option<&str> {
        match self {
            Constant::Name(s) => Some(s),
            Constant::Int(_) => None,
        }
    }
}

/// True iff `s` renders as a bare (unquoted) name: lowercase letter first,
/// then letters, digits, and underscores.
pub(crate) fn is_bare_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("'")?;
    for c in s.chars() {
        match c {
            '\'' => f.write_str("\\'")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            _ => write!(f, "{c}")?,
        }
    }
    f.write_str("'")
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Int(n) => write!(f, "{n}"),
            Constant::Name(s) if is_bare_name(s) => f.write_str(s),
            Constant::Name(s) => write_quoted(f, s),
        }
    }
}

/// A term: a variable, a constant, or a ground list constant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(Constant),
    /// Ground list, usable only as the second argument of `member/2`
    /// (and never in a head).
    List(Vec<Constant>),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.to_string())
    }

    pub fn name(s: &str) -> Self {
        Term::Const(Constant::name(s))
    }

    pub fn int(n: i64) -> Self {
        Term::Const(Constant::Int(n))
    }

    pub fn is_ground(&self) -> bool {
        !matches!(self, Term::Var(_))
    }

    fn push_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        if let Term::Var(v) = self {
            out.push(v);
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => write!(f, "{c}"),
            Term::List(items) => {
                f.write_str("[")?;
                for (i, c) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// A predicate key: name plus arity. `cm/2` and `cm/3` are distinct.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pred {
    pub name: String,
    pub arity: usize,
}

impl Pred {
    pub fn new(name: &str, arity: usize) -> Self {
        Pred {
            name: name.to_string(),
            arity,
        }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

/// A predicate applied to terms, e.g. `cm(C, m1)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: String,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, terms: Vec<Term>) -> Self {
        Atom {
            pred: pred.to_string(),
            terms,
        }
    }

    pub fn key(&self) -> Pred {
        Pred::new(&self.pred, self.terms.len())
    }

    pub fn is_ground(&self) -> bool {
        self.terms.iter().all(Term::is_ground)
    }

    /// Variables in argument order, with repetitions.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for t in &self.terms {
            t.push_vars(&mut out);
        }
        out
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pred)?;
        f.write_str("(")?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

/// A fully ground atom: what fact files contain and relations store.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub pred: String,
    pub args: Vec<Constant>,
}

impl GroundAtom {
    pub fn new(pred: &str, args: Vec<Constant>) -> Self {
        GroundAtom {
            pred: pred.to_string(),
            args,
        }
    }

    pub fn key(&self) -> Pred {
        Pred::new(&self.pred, self.args.len())
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pred)?;
        f.write_str("(")?;
        for (i, c) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// One body element: a positive or negated user-predicate atom, an
/// (in)equality, or a `member/2` test.
///
/// `not(X = Y)` is represented as `Eq { negated: true }` rather than a
/// negated atom, so [`Literal::Neg`] always wraps a user predicate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Eq { lhs: Term, rhs: Term, negated: bool },
    Member { elem: Term, list: Term },
}

impl Literal {
    /// The user-predicate atom this literal references, if any.
    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => Some(a),
            _ => None,
        }
    }

    pub fn is_builtin(&self) -> bool {
        matches!(self, Literal::Eq { .. } | Literal::Member { .. })
    }

    /// Variables in occurrence order, with repetitions.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        match self {
            Literal::Pos(a) | Literal::Neg(a) => {
                for t in &a.terms {
                    t.push_vars(&mut out);
                }
            }
            Literal::Eq { lhs, rhs, .. } => {
                lhs.push_vars(&mut out);
                rhs.push_vars(&mut out);
            }
            Literal::Member { elem, list } => {
                elem.push_vars(&mut out);
                list.push_vars(&mut out);
            }
        }
        out
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => write!(f, "{a}"),
            Literal::Neg(a) => write!(f, "not({a})"),
            Literal::Eq {
                lhs,
                rhs,
                negated: false,
            } => write!(f, "{lhs} = {rhs}"),
            Literal::Eq {
                lhs,
                rhs,
                negated: true,
            } => write!(f, "not({lhs} = {rhs})"),
            Literal::Member { elem, list } => write!(f, "member({elem}, {list})"),
        }
    }
}

/// Stable rule identity, derived from the canonical rendering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId(pub u64);

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{:016x}", self.0)
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// A clause `head :- body.` (or a fact clause when the body is empty).
///
/// Construction via [`Rule::new`] computes the content-derived id; equal
/// content means equal id.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    id: RuleId,
    pub head: Atom,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn new(head: Atom, body: Vec<Literal>) -> Self {
        let mut r = Rule {
            id: RuleId(0),
            head,
            body,
        };
        r.id = RuleId(fnv1a64(r.to_string().as_bytes()));
        r
    }

    pub fn id(&self) -> RuleId {
        self.id
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    /// All variables of the rule in first-occurrence order (head first, then
    /// body left to right), without repetitions.
    pub fn variables(&self) -> Vec<&str> {
        let mut all = self.head.vars();
        for lit in &self.body {
            all.extend(lit.vars());
        }
        // vectors stay tiny; a linear scan beats a set here
        let mut seen: Vec<&str> = Vec::new();
        for n in all {
            if !seen.contains(&n) {
                seen.push(n);
            }
        }
        seen
    }

    /// The same rule with variables renamed to `V0, V1, …` in
    /// first-occurrence order. Two rules are alpha-equivalent exactly when
    /// their canonical forms are equal.
    pub fn canonical_form(&self) -> Rule {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (i, v) in self.variables().into_iter().enumerate() {
            map.insert(v.to_string(), format!("V{i}"));
        }
        let sub_term = |t: &Term| -> Term {
            match t {
                Term::Var(v) => Term::Var(map[v.as_str()].clone()),
                other => other.clone(),
            }
        };
        let sub_atom = |a: &Atom| -> Atom {
            Atom {
                pred: a.pred.clone(),
                terms: a.terms.iter().map(sub_term).collect(),
            }
        };
        let body = self
            .body
            .iter()
            .map(|l| match l {
                Literal::Pos(a) => Literal::Pos(sub_atom(a)),
                Literal::Neg(a) => Literal::Neg(sub_atom(a)),
                Literal::Eq { lhs, rhs, negated } => Literal::Eq {
                    lhs: sub_term(lhs),
                    rhs: sub_term(rhs),
                    negated: *negated,
                },
                Literal::Member { elem, list } => Literal::Member {
                    elem: sub_term(elem),
                    list: sub_term(list),
                },
            })
            .collect();
        Rule::new(sub_atom(&self.head), body)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            for (i, lit) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{lit}")?;
            }
        }
        f.write_str(".")
    }
}

/// Why a [`RuleSet`] could not be built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleSetError {
    /// A predicate is declared extensional but also appears as a rule head.
    ExtensionalHead { pred: Pred },
}

impl fmt::Display for RuleSetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleSetError::ExtensionalHead { pred } => {
                write!(f, "predicate {pred} is extensional but has a defining rule")
            }
        }
    }
}

impl core::error::Error for RuleSetError {}

/// An ordered collection of rules plus the declared extensional alphabet.
///
/// Identical rules (same content id) collapse to the first occurrence;
/// rule order is otherwise preserved as given.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<Rule>,
    extensional: BTreeSet<Pred>,
}

impl RuleSet {
    pub fn new(
        rules: Vec<Rule>,
        extensional: impl IntoIterator<Item = Pred>,
    ) -> Result<Self, RuleSetError> {
        let extensional: BTreeSet<Pred> = extensional.into_iter().collect();
        let mut seen = BTreeSet::new();
        let mut kept = Vec::new();
        for r in rules {
            let key = r.head.key();
            if extensional.contains(&key) {
                return Err(RuleSetError::ExtensionalHead { pred: key });
            }
            if seen.insert(r.id()) {
                kept.push(r);
            }
        }
        Ok(RuleSet {
            rules: kept,
            extensional,
        })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn extensional(&self) -> &BTreeSet<Pred> {
        &self.extensional
    }

    /// Predicates defined by rules, in other words the intensional alphabet.
    pub fn intensional(&self) -> BTreeSet<Pred> {
        self.rules.iter().map(|r| r.head.key()).collect()
    }

    /// Extensional plus intensional predicates.
    pub fn alphabet(&self) -> BTreeSet<Pred> {
        let mut all = self.extensional.clone();
        all.extend(self.intensional());
        all
    }

    pub fn is_intensional(&self, p: &Pred) -> bool {
        self.rules.iter().any(|r| r.head.key() == *p)
    }

    /// The defining clauses of `p`, in rule order.
    pub fn clauses_of(&self, p: &Pred) -> Vec<&Rule> {
        self.rules.iter().filter(|r| r.head.key() == *p).collect()
    }
}
