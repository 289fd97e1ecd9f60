//! A deductive rule engine with update propagation.
//!
//! The crate represents object-oriented program structure as a logic fact
//! base, evaluates declarative cohesion metrics (LCOM1) over it with
//! stratified bottom-up evaluation, and predicts the impact of refactorings
//! (move method, move field, extract class) by *update propagation*:
//! automatically generated delta, propagation, and transition rules compute
//! the induced changes of derived relations from the base-fact changes,
//! instead of re-evaluating everything from scratch.
//!
//! The pipeline, bottom to top:
//!
//! * [`ast`] / [`parse`] / [`validate`] — the restricted rule language
//!   (flat heads, stratified negation, `=/2` and `member/2` built-ins),
//!   its textual format, and the safety checks that make evaluation total.
//! * [`facts`] — extensional relations with set semantics, delta sets,
//!   and immutable snapshots.
//! * [`eval`] — stratified semi-naive materialization; doubles as the
//!   full-recomputation oracle.
//! * [`meta`] / [`transform`] — rule analysis (head/body/variable/dependency
//!   meta relations) and generation of the update-propagation program:
//!   `add_p`/`del_p` propagation rules plus direct (`nwd_p`) and indirect
//!   (`nwi_p`) transition rules.
//! * [`propagate`] — evaluates the propagation program against an old-state
//!   snapshot and seed deltas, probing state relations on demand with
//!   bindings from the delta facts.
//! * [`model`] / [`metrics`] / [`refactor`] — the cohesion fact model
//!   derived from program-element facts, the LCOM1 metric (query rules plus
//!   mapping), and what-if refactoring analysis on top of propagation.
//!
//! The crate is `no_std` (with `alloc`); everything is deterministic:
//! relations are ordered sets, and equal inputs produce byte-identical
//! renderings.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod ast;
pub mod eval;
pub mod facts;
pub mod meta;
pub mod metrics;
pub mod model;
pub mod parse;
pub mod propagate;
pub mod refactor;
pub mod transform;
pub mod validate;

pub use ast::{Atom, Constant, GroundAtom, Literal, Pred, Rule, RuleId, RuleSet, Term};
pub use eval::{evaluate, evaluate_query, stratify, Materialization, NotStratifiable, Stratification};
pub use facts::{
    apply_delta_set, normalize_seeds, query, DeltaSet, FactBase, RelationSource, Snapshot, Tuple,
};
pub use meta::{analyse_rules, DependencyGraph, Polarity, RuleMeta};
pub use metrics::{
    affected_classes, lcom1, lcom1_all, remap_incremental, Mapping, MetricResult, MetricRules,
    MetricRulesError, MetricValue,
};
pub use model::{
    derive_model, source_class, CohesionModel, DanglingReference, ModelError, ModelParseError,
    PefError, ProgramElementFacts, UnknownClass,
};
pub use parse::{parse_fact_file, parse_rule, parse_rule_file, ParseError};
pub use propagate::{
    check_against_oracle, propagate, Diff, PropagationResult, SeedPredicateUnknown,
};
pub use refactor::{
    seeds_for, whatif, ImpactReport, ImpactRow, RefactoringError, RefactoringSpec, Target,
    WhatifError,
};
pub use transform::{
    generate_propagation_rules, generate_transition_rules, select_state, transform,
    StateRelation, TransformError, TransformOptions, TransformedRuleSet,
};
pub use validate::{validate_ruleset, ValidationReport, Violation};
