//! Synthetic-model benchmark: incremental propagation vs full recomputation.
//!
//! A seeded RNG generates a model of `classes` classes with fixed member
//! counts; each method accesses each field of its own class with probability
//! `density`, and each field of one uniformly chosen foreign class with
//! probability `density / 4` (scoping cross-class access to a single class
//! keeps the connected-pair relation near-linear in model size, so the
//! benchmark measures propagation rather than allocator throughput). Each
//! trial draws one move-method or move-field refactoring, times the
//! incremental path (`propagate` + `remap_incremental`) against the full
//! path (`apply_delta_set` + `evaluate` + `lcom1_all`), verifies the results
//! are equal, and commits the update so the model evolves across trials.
//! Equality is a hard gate; speed is reported, not asserted.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use proplog_core::{
    apply_delta_set, evaluate, lcom1_all, normalize_seeds, propagate, remap_incremental,
    seeds_for, transform, CohesionModel, Constant, FactBase, GroundAtom, Mapping, MetricRules,
    RefactoringSpec, Target, TransformOptions,
};

use crate::store::render_deltas;

/// Size and shape of the synthetic model and run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchParams {
    pub classes: usize,
    pub methods_per_class: usize,
    pub fields_per_class: usize,
    pub density: f64,
    pub updates: usize,
    pub seed: u64,
}

/// Why the benchmark could not run or did not survive its equality gate.
#[derive(Debug)]
pub enum BenchError {
    /// A size parameter is zero or the density is outside [0, 1].
    BadParams(String),
    /// An incremental result differed from the full recomputation.
    MismatchDetected {
        trial: usize,
        seed: u64,
        update: String,
        /// The model the trial ran against, as a fact file for reproduction.
        model_facts: String,
    },
}

impl std::fmt::Display for BenchError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BenchError::BadParams(msg) => write!(f, "bad benchmark parameters: {msg}"),
            BenchError::MismatchDetected {
                trial,
                seed,
                update,
                ..
            } => write!(
                f,
                "trial {trial} (seed {seed}): incremental result diverged from \
                 full recomputation on `{update}`"
            ),
        }
    }
}

impl std::error::Error for BenchError {}

/// One timed update.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    /// The drawn refactoring, e.g. `move-method m3_2 c3 -> c7`.
    pub update: String,
    pub t_incremental_ns: u64,
    pub t_full_ns: u64,
    pub equal: bool,
}

/// The full benchmark outcome. Serializes with stable field names.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub classes: usize,
    pub methods_per_class: usize,
    pub fields_per_class: usize,
    pub density: f64,
    pub updates: usize,
    pub seed: u64,
    pub trials: Vec<TrialReport>,
    pub median_incremental_ns: u64,
    pub median_full_ns: u64,
    /// Median full time over median incremental time; 0 when no trials ran.
    pub speedup: f64,
}

impl BenchReport {
    pub fn all_equal(&self) -> bool {
        self.trials.iter().all(|t| t.equal)
    }
}

fn median(mut xs: Vec<u64>) -> u64 {
    if xs.is_empty() {
        return 0;
    }
    xs.sort_unstable();
    xs[xs.len() / 2]
}

fn name(s: String) -> Constant {
    Constant::Name(s)
}

/// Deterministically generates the synthetic model for `params`.
pub fn generate_model(params: &BenchParams, rng: &mut ChaCha8Rng) -> CohesionModel {
    let mut facts = FactBase::new();
    let class_ids: Vec<String> = (1..=params.classes).map(|i| format!("c{i}")).collect();
    let field_ids: Vec<Vec<String>> = (1..=params.classes)
        .map(|i| {
            (1..=params.fields_per_class)
                .map(|k| format!("f{i}_{k}"))
                .collect()
        })
        .collect();
    for (i, class) in class_ids.iter().enumerate() {
        facts.insert(GroundAtom::new("c", vec![name(class.clone())]));
        for field in &field_ids[i] {
            facts.insert(GroundAtom::new(
                "cf",
                vec![name(class.clone()), name(field.clone())],
            ));
        }
        for j in 1..=params.methods_per_class {
            let method = format!("m{}_{j}", i + 1);
            facts.insert(GroundAtom::new(
                "cm",
                vec![name(class.clone()), name(method.clone())],
            ));
            for field in &field_ids[i] {
                if rng.gen_bool(params.density) {
                    facts.insert(GroundAtom::new(
                        "mf",
                        vec![name(method.clone()), name(field.clone())],
                    ));
                }
            }
            if params.classes > 1 {
                let mut foreign = rng.gen_range(0..params.classes - 1);
                if foreign >= i {
                    foreign += 1;
                }
                for field in &field_ids[foreign] {
                    if rng.gen_bool(params.density / 4.0) {
                        facts.insert(GroundAtom::new(
                            "mf",
                            vec![name(method.clone()), name(field.clone())],
                        ));
                    }
                }
            }
        }
    }
    CohesionModel::from_atoms(facts.to_atoms()).expect("generated model is well-formed")
}

/// Draws one applicable refactoring against the current model.
fn draw_update(model: &CohesionModel, rng: &mut ChaCha8Rng) -> (RefactoringSpec, String) {
    let mut memberships: Vec<(bool, Constant, Constant)> = Vec::new();
    for atom in model.facts().to_atoms() {
        match atom.pred.as_str() {
            "cm" => memberships.push((true, atom.args[0].clone(), atom.args[1].clone())),
            "cf" => memberships.push((false, atom.args[0].clone(), atom.args[1].clone())),
            _ => {}
        }
    }
    let classes: Vec<Constant> = model
        .facts()
        .to_atoms()
        .into_iter()
        .filter(|a| a.pred == "c")
        .map(|a| a.args[0].clone())
        .collect();
    let (is_method, from, element) = memberships
        .choose(rng)
        .expect("synthetic models always have members")
        .clone();
    let others: Vec<&Constant> = classes.iter().filter(|c| **c != from).collect();
    // Mostly move between existing classes; occasionally extract a new one.
    let target = if others.is_empty() || rng.gen_bool(0.2) {
        Target::NewClass(None)
    } else {
        Target::ExistingClass((*others.choose(rng).expect("nonempty")).clone())
    };
    let target_text = match &target {
        Target::ExistingClass(c) => format!("{c}"),
        Target::NewClass(_) => "new".to_string(),
    };
    let (spec, verb) = if is_method {
        (
            RefactoringSpec::MoveMethod {
                method: element.clone(),
                from: from.clone(),
                target,
            },
            "move-method",
        )
    } else {
        (
            RefactoringSpec::MoveField {
                field: element.clone(),
                from: from.clone(),
                target,
            },
            "move-field",
        )
    };
    let text = format!("{verb} {element} {from} -> {target_text}");
    (spec, text)
}

/// Runs the benchmark. Deterministic in everything but the timings.
pub fn bench(params: &BenchParams) -> Result<BenchReport, BenchError> {
    if params.classes == 0 || params.methods_per_class == 0 || params.fields_per_class == 0 {
        return Err(BenchError::BadParams(
            "classes, methods, and fields must be positive".to_string(),
        ));
    }
    if !(0.0..=1.0).contains(&params.density) {
        return Err(BenchError::BadParams(format!(
            "density {} is outside [0, 1]",
            params.density
        )));
    }

    let rules = MetricRules::lcom1();
    let t = transform(rules.rules(), TransformOptions::default())
        .expect("LCOM1 rules transform cleanly");
    let mapping = Mapping::Prose;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut model = generate_model(params, &mut rng);
    let mut snapshot = model.snapshot();
    let mut mat = evaluate(rules.rules(), &snapshot).expect("stratifiable");
    let mut values = lcom1_all(&snapshot, &mat, mapping);

    let mut trials = Vec::with_capacity(params.updates);
    for trial in 0..params.updates {
        let (spec, update) = draw_update(&model, &mut rng);
        let raw = seeds_for(&spec, &model).expect("drawn updates are applicable");
        let (seeds, _) = normalize_seeds(&snapshot, &raw).expect("no conflicting seeds");

        // Full recomputation path.
        let full_start = Instant::now();
        let new_base = apply_delta_set(model.facts(), &seeds);
        let new_snapshot = new_base.snapshot();
        let new_mat = evaluate(rules.rules(), &new_snapshot).expect("stratifiable");
        let full_values = lcom1_all(&new_snapshot, &new_mat, mapping);
        let t_full = full_start.elapsed();

        // Incremental path: the stored old answers are donated, not recomputed.
        let inc_start = Instant::now();
        let pr = propagate(&t, &snapshot, &seeds).expect("seeds are extensional");
        pr.prime_old_state(mat);
        let inc_values = remap_incremental(&values, &pr, mapping);
        let t_incremental = inc_start.elapsed();

        let equal = inc_values == full_values;
        if !equal {
            return Err(BenchError::MismatchDetected {
                trial,
                seed: params.seed,
                update: format!("{update} [seeds: {}]", render_deltas(&seeds).replace('\n', " ")),
                model_facts: {
                    let mut out = String::new();
                    for atom in model.facts().to_atoms() {
                        out.push_str(&format!("{atom}.\n"));
                    }
                    out
                },
            });
        }
        trials.push(TrialReport {
            update,
            t_incremental_ns: t_incremental.as_nanos() as u64,
            t_full_ns: t_full.as_nanos() as u64,
            equal,
        });

        model = CohesionModel::from_atoms(new_base.to_atoms()).expect("still well-formed");
        snapshot = new_snapshot;
        mat = new_mat;
        values = full_values;
    }

    let median_incremental_ns = median(trials.iter().map(|t| t.t_incremental_ns).collect());
    let median_full_ns = median(trials.iter().map(|t| t.t_full_ns).collect());
    let speedup = if median_incremental_ns == 0 {
        0.0
    } else {
        median_full_ns as f64 / median_incremental_ns as f64
    };
    Ok(BenchReport {
        classes: params.classes,
        methods_per_class: params.methods_per_class,
        fields_per_class: params.fields_per_class,
        density: params.density,
        updates: params.updates,
        seed: params.seed,
        trials,
        median_incremental_ns,
        median_full_ns,
        speedup,
    })
}
