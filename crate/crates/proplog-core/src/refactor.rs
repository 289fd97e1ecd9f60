//! Refactoring specifications and metric impact prediction.
//!
//! A structural refactoring — moving a method or field between classes —
//! translates into a handful of base-fact updates ([`seeds_for`]). [`whatif`]
//! runs those seeds through propagation and patches the metric mapping
//! incrementally, reporting per-class before/after values without ever
//! touching the model or re-evaluating untouched classes.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::ast::{Constant, GroundAtom, Pred};
use crate::eval::evaluate;
use crate::facts::{normalize_seeds, DeltaSet, RelationSource};
use crate::metrics::{
    affected_classes, lcom1_all, remap_incremental, Mapping, MetricRules, MetricValue,
};
use crate::model::CohesionModel;
use crate::propagate::{propagate, SeedPredicateUnknown};
use crate::transform::TransformedRuleSet;

/// Where a moved element lands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    ExistingClass(Constant),
    /// An extract-class move: the target is created as part of the update.
    /// Without an explicit id a fresh `c<n>` outside the model's id space is
    /// generated.
    NewClass(Option<Constant>),
}

/// A structural refactoring to predict the impact of.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefactoringSpec {
    MoveMethod {
        method: Constant,
        from: Constant,
        target: Target,
    },
    MoveField {
        field: Constant,
        from: Constant,
        target: Target,
    },
}

/// Why a refactoring cannot be translated into seeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefactoringError {
    /// The moved element is not a member of the named source class.
    ElementNotInClass { element: Constant, class: Constant },
    /// Source and target class are the same.
    TargetEqualsSource { class: Constant },
    /// An explicit new-class id already occurs in the model.
    TargetIdInUse { id: Constant },
}

impl fmt::Display for RefactoringError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefactoringError::ElementNotInClass { element, class } => {
                write!(f, "{element} is not a member of class {class}")
            }
            RefactoringError::TargetEqualsSource { class } => {
                write!(f, "target class {class} equals the source class")
            }
            RefactoringError::TargetIdInUse { id } => {
                write!(f, "new-class id {id} is already used in the model")
            }
        }
    }
}

impl core::error::Error for RefactoringError {}

/// Every constant occurring anywhere in the model's facts.
fn used_constants(model: &CohesionModel) -> BTreeSet<Constant> {
    model
        .facts()
        .to_atoms()
        .into_iter()
        .flat_map(|a| a.args)
        .collect()
}

/// The smallest `c<n>` not used by any model fact.
fn fresh_class_id(model: &CohesionModel) -> Constant {
    let used = used_constants(model);
    (1u64..)
        .map(|n| Constant::Name(format!("c{n}")))
        .find(|id| !used.contains(id))
        .expect("some c<n> is unused")
}

/// Resolves the target and translates the move into seeds.
fn resolve(
    spec: &RefactoringSpec,
    model: &CohesionModel,
) -> Result<(DeltaSet, Constant), RefactoringError> {
    let (membership, element, from, target) = match spec {
        RefactoringSpec::MoveMethod {
            method,
            from,
            target,
        } => ("cm", method, from, target),
        RefactoringSpec::MoveField {
            field,
            from,
            target,
        } => ("cf", field, from, target),
    };
    let old = GroundAtom::new(membership, vec![from.clone(), element.clone()]);
    if !model
        .facts()
        .tuples(&Pred::new(membership, 2))
        .is_some_and(|set| set.contains(old.args.as_slice()))
    {
        return Err(RefactoringError::ElementNotInClass {
            element: element.clone(),
            class: from.clone(),
        });
    }
    let mut seeds = DeltaSet::new();
    let to = match target {
        Target::ExistingClass(id) => id.clone(),
        Target::NewClass(explicit) => {
            let id = match explicit {
                Some(id) => {
                    if used_constants(model).contains(id) {
                        return Err(RefactoringError::TargetIdInUse { id: id.clone() });
                    }
                    id.clone()
                }
                None => fresh_class_id(model),
            };
            seeds.add(GroundAtom::new("c", vec![id.clone()]));
            id
        }
    };
    if to == *from {
        return Err(RefactoringError::TargetEqualsSource { class: to });
    }
    seeds.delete(old);
    seeds.add(GroundAtom::new(
        membership,
        vec![to.clone(), element.clone()],
    ));
    Ok((seeds, to))
}

/// Classes named by structural seed facts (`c`, `cm`, `cf` first argument).
fn seed_classes(seeds: &DeltaSet) -> BTreeSet<Constant> {
    let mut out = BTreeSet::new();
    let structural = [Pred::new("c", 1), Pred::new("cm", 2), Pred::new("cf", 2)];
    for pred in &structural {
        for set in [seeds.additions(pred), seeds.deletions(pred)] {
            for t in set.into_iter().flatten() {
                out.insert(t[0].clone());
            }
        }
    }
    out
}

/// The base-fact updates realizing `spec` against `model`.
pub fn seeds_for(
    spec: &RefactoringSpec,
    model: &CohesionModel,
) -> Result<DeltaSet, RefactoringError> {
    resolve(spec, model).map(|(seeds, _)| seeds)
}

/// One class's before/after metric values. `before` is absent for a class
/// created by the move, `after` for one deleted by it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpactRow {
    pub class: Constant,
    pub before: Option<MetricValue>,
    pub after: Option<MetricValue>,
}

impl ImpactRow {
    /// Change in doubled units; absent values count as zero.
    pub fn delta_doubled(&self) -> i64 {
        let b = self.before.map_or(0, |v| v.doubled()) as i64;
        let a = self.after.map_or(0, |v| v.doubled()) as i64;
        a - b
    }
}

impl fmt::Display for ImpactRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn opt(v: Option<MetricValue>) -> String {
            v.map_or_else(|| String::from("-"), |v| format!("{v}"))
        }
        let delta = self.delta_doubled();
        let sign = if delta >= 0 { "+" } else { "-" };
        let mag = MetricValue::from_doubled(delta.unsigned_abs());
        write!(
            f,
            "{} {} -> {} (delta {}{})",
            self.class,
            opt(self.before),
            opt(self.after),
            sign,
            mag
        )
    }
}

/// Predicted impact of a refactoring that was *not* applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpactReport {
    /// Affected classes in id order; untouched classes are omitted.
    pub rows: Vec<ImpactRow>,
    /// The base-fact updates the move translates to (normalized).
    pub seeds: DeltaSet,
    /// The derived-fact updates propagation induced.
    pub induced: DeltaSet,
    /// The class the element lands in.
    pub target_class: Constant,
    /// Always true: the report predicts; committing is a separate step.
    pub hypothetical: bool,
}

impl fmt::Display for ImpactReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{row}")?;
        }
        Ok(())
    }
}

/// Why impact prediction failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WhatifError {
    Refactoring(RefactoringError),
    Propagation(SeedPredicateUnknown),
}

impl fmt::Display for WhatifError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WhatifError::Refactoring(e) => write!(f, "{e}"),
            WhatifError::Propagation(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for WhatifError {}

impl From<RefactoringError> for WhatifError {
    fn from(e: RefactoringError) -> Self {
        WhatifError::Refactoring(e)
    }
}

impl From<SeedPredicateUnknown> for WhatifError {
    fn from(e: SeedPredicateUnknown) -> Self {
        WhatifError::Propagation(e)
    }
}

/// Predicts the metric impact of `spec` without mutating `model`.
///
/// `t` must be the transform of `rules` with default options; the model is
/// materialized once for the before-values, propagation handles the rest.
pub fn whatif(
    model: &CohesionModel,
    rules: &MetricRules,
    t: &TransformedRuleSet,
    spec: &RefactoringSpec,
    mapping: Mapping,
) -> Result<ImpactReport, WhatifError> {
    debug_assert_eq!(t.source(), rules.rules(), "t must transform rules");
    let (raw, target) = resolve(spec, model)?;
    let snapshot = model.snapshot();
    let mat = evaluate(rules.rules(), &snapshot).expect("metric rules are stratifiable");
    let before = lcom1_all(&snapshot, &mat, mapping);
    let (seeds, _warnings) =
        normalize_seeds(&snapshot, &raw).expect("seed additions and deletions never overlap");
    let pr = propagate(t, &snapshot, &seeds)?;
    pr.prime_old_state(mat);
    let after = remap_incremental(&before, &pr, mapping);
    let (recomputed, removed) = affected_classes(&pr, mapping);
    // A move can leave every derived tuple in place (a field moves, but no
    // pair changes); its endpoint classes still belong in the report.
    let mut shown: BTreeSet<Constant> = recomputed;
    shown.extend(removed);
    shown.extend(seed_classes(pr.seeds()));
    let rows = shown
        .iter()
        .map(|class| ImpactRow {
            class: class.clone(),
            before: before.get(class),
            after: after.get(class),
        })
        .collect();
    Ok(ImpactReport {
        rows,
        seeds: pr.seeds().clone(),
        induced: pr.induced().clone(),
        target_class: target,
        hypothetical: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use crate::facts::apply_delta_set;
    use crate::transform::{transform, TransformOptions};

    const M0: &str = "\
        c(c1).\n\
        cm(c1, m1). cm(c1, m2). cm(c1, m3).\n\
        cf(c1, f1). cf(c1, f2).\n\
        mf(m1, f1). mf(m2, f1). mf(m3, f2).\n";

    fn model(text: &str) -> CohesionModel {
        CohesionModel::parse(text).unwrap()
    }

    fn name(s: &str) -> Constant {
        Constant::name(s)
    }

    fn move_method(m: &str, from: &str, target: Target) -> RefactoringSpec {
        RefactoringSpec::MoveMethod {
            method: name(m),
            from: name(from),
            target,
        }
    }

    fn move_field(f: &str, from: &str, target: Target) -> RefactoringSpec {
        RefactoringSpec::MoveField {
            field: name(f),
            from: name(from),
            target,
        }
    }

    fn deltaset(adds: &[&str], dels: &[&str]) -> DeltaSet {
        let mut d = DeltaSet::new();
        for a in adds {
            let mut v = crate::parse::parse_fact_file(a).unwrap();
            d.add(v.pop().unwrap());
        }
        for x in dels {
            let mut v = crate::parse::parse_fact_file(x).unwrap();
            d.delete(v.pop().unwrap());
        }
        d
    }

    fn lcom1_whatif(m: &CohesionModel, spec: &RefactoringSpec) -> ImpactReport {
        let rules = MetricRules::lcom1();
        let t = transform(rules.rules(), TransformOptions::default()).unwrap();
        whatif(m, &rules, &t, spec, Mapping::Prose).unwrap()
    }

    #[test]
    fn moving_a_method_to_a_fresh_class_seeds_three_updates() {
        let m = model(M0);
        let seeds = seeds_for(&move_method("m3", "c1", Target::NewClass(None)), &m).unwrap();
        assert_eq!(
            seeds,
            deltaset(&["c(c2).", "cm(c2, m3)."], &["cm(c1, m3)."])
        );
    }

    #[test]
    fn moving_a_field_between_classes_seeds_two_updates() {
        let m = model(&format!("{M0}c(c2).\n"));
        let seeds = seeds_for(
            &move_field("f2", "c1", Target::ExistingClass(name("c2"))),
            &m,
        )
        .unwrap();
        assert_eq!(seeds, deltaset(&["cf(c2, f2)."], &["cf(c1, f2)."]));
    }

    #[test]
    fn fresh_ids_skip_every_used_constant() {
        // c2 is taken by a fact, so extraction lands on c3.
        let m = model(&format!("{M0}c(c2).\n"));
        let seeds = seeds_for(&move_method("m3", "c1", Target::NewClass(None)), &m).unwrap();
        let c = Pred::new("c", 1);
        assert!(seeds.additions(&c).unwrap().contains(vec![name("c3")].as_slice()));
    }

    #[test]
    fn bad_moves_are_rejected() {
        let m = model(M0);
        assert_eq!(
            seeds_for(&move_method("m9", "c1", Target::NewClass(None)), &m).unwrap_err(),
            RefactoringError::ElementNotInClass {
                element: name("m9"),
                class: name("c1")
            }
        );
        assert_eq!(
            seeds_for(&move_field("f1", "c2", Target::NewClass(None)), &m).unwrap_err(),
            RefactoringError::ElementNotInClass {
                element: name("f1"),
                class: name("c2")
            }
        );
        assert_eq!(
            seeds_for(&move_method("m1", "c1", Target::ExistingClass(name("c1"))), &m)
                .unwrap_err(),
            RefactoringError::TargetEqualsSource { class: name("c1") }
        );
        assert_eq!(
            seeds_for(&move_method("m1", "c1", Target::NewClass(Some(name("f1")))), &m)
                .unwrap_err(),
            RefactoringError::TargetIdInUse { id: name("f1") }
        );
        // An unused explicit id is honored.
        let seeds =
            seeds_for(&move_method("m1", "c1", Target::NewClass(Some(name("helper")))), &m)
                .unwrap();
        let c = Pred::new("c", 1);
        assert!(seeds.additions(&c).unwrap().contains(vec![name("helper")].as_slice()));
    }

    #[test]
    fn extracting_the_lone_field_user_resolves_all_loose_pairs() {
        let m = model(M0);
        let report = lcom1_whatif(&m, &move_method("m3", "c1", Target::NewClass(None)));
        assert!(report.hypothetical);
        assert_eq!(report.target_class, name("c2"));
        assert_eq!(
            report.rows,
            vec![
                ImpactRow {
                    class: name("c1"),
                    before: Some(MetricValue::from_doubled(4)),
                    after: Some(MetricValue::from_doubled(0)),
                },
                ImpactRow {
                    class: name("c2"),
                    before: None,
                    after: Some(MetricValue::from_doubled(0)),
                },
            ]
        );
        assert_eq!(report.rows[0].delta_doubled(), -4);
        assert_eq!(report.rows[0].to_string(), "c1 2 -> 0 (delta -2)");
        assert_eq!(report.rows[1].to_string(), "c2 - -> 0 (delta +0)");
    }

    #[test]
    fn extracting_a_field_leaves_the_source_value_unchanged() {
        let m = model(M0);
        let report = lcom1_whatif(&m, &move_field("f2", "c1", Target::NewClass(None)));
        assert_eq!(
            report.rows,
            vec![
                ImpactRow {
                    class: name("c1"),
                    before: Some(MetricValue::from_doubled(4)),
                    after: Some(MetricValue::from_doubled(4)),
                },
                ImpactRow {
                    class: name("c2"),
                    before: None,
                    after: Some(MetricValue::from_doubled(0)),
                },
            ]
        );
        // The value is unchanged, yet pairs did move: m3's self-pair left
        // cp(c1) for cp(c2), so the report carries real induced deltas.
        assert!(!report.induced.is_empty());
        let cp = Pred::new("cp", 3);
        let dels = report.induced.deletions(&cp).unwrap();
        assert!(dels.contains(vec![name("c1"), name("m3"), name("m3")].as_slice()));
    }

    #[test]
    fn whatif_reports_without_mutating_the_model() {
        let m = model(M0);
        let before = m.clone();
        let _ = lcom1_whatif(&m, &move_method("m3", "c1", Target::NewClass(None)));
        assert_eq!(m, before);
    }

    #[test]
    fn committing_a_move_and_its_inverse_restores_the_values() {
        let m = model(M0);
        let rules = MetricRules::lcom1();
        let t = transform(rules.rules(), TransformOptions::default()).unwrap();
        let spec = move_method("m3", "c1", Target::NewClass(None));
        let seeds = seeds_for(&spec, &m).unwrap();
        let committed =
            CohesionModel::from_atoms(apply_delta_set(m.facts(), &seeds).to_atoms()).unwrap();

        let inverse = move_method("m3", "c2", Target::ExistingClass(name("c1")));
        let report = whatif(&committed, &rules, &t, &inverse, Mapping::Prose).unwrap();
        let c1 = report.rows.iter().find(|r| r.class == name("c1")).unwrap();
        assert_eq!(c1.after, Some(MetricValue::from_doubled(4)));
        let c2 = report.rows.iter().find(|r| r.class == name("c2")).unwrap();
        assert_eq!(c2.after, Some(MetricValue::from_doubled(0)));
    }

    #[test]
    fn whatif_agrees_with_full_reevaluation() {
        let text = "\
            c(c1). c(c2).\n\
            cm(c1, m1). cm(c1, m2). cm(c1, m3). cm(c2, m4).\n\
            cf(c1, f1). cf(c1, f2). cf(c2, f3).\n\
            mf(m1, f1). mf(m2, f1). mf(m2, f2). mf(m3, f2). mf(m4, f3).\n";
        let m = model(text);
        let rules = MetricRules::lcom1();
        let t = transform(rules.rules(), TransformOptions::default()).unwrap();
        for spec in [
            move_method("m3", "c1", Target::ExistingClass(name("c2"))),
            move_method("m1", "c1", Target::NewClass(None)),
            move_field("f2", "c1", Target::ExistingClass(name("c2"))),
            move_field("f3", "c2", Target::NewClass(Some(name("extracted")))),
        ] {
            for mapping in [Mapping::Prose, Mapping::AsPrinted] {
                let report = whatif(&m, &rules, &t, &spec, mapping).unwrap();
                let seeds = seeds_for(&spec, &m).unwrap();
                let updated = apply_delta_set(m.facts(), &seeds).snapshot();
                let mat = evaluate(rules.rules(), &updated).unwrap();
                let oracle = lcom1_all(&updated, &mat, mapping);
                for row in &report.rows {
                    assert_eq!(
                        row.after,
                        oracle.get(&row.class),
                        "{spec:?} {mapping:?} class {}",
                        row.class
                    );
                }
            }
        }
    }
}
