//! `proplog` — command-line front end for the propagation engine.
//!
//! Subcommands: `ingest` builds the model store from program-element facts,
//! `rules` prints metric rules (optionally transformed for update
//! propagation), `metric` computes LCOM1 over the store, `whatif` predicts a
//! refactoring's impact and leaves its updates pending, `commit` applies
//! them, and `bench` races incremental propagation against full
//! recomputation on synthetic models.
//!
//! Exit codes: 0 success, 1 validation or domain error, 2 file or parse
//! error. Errors go to stderr; results to stdout.

pub mod bench;
pub mod store;

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use proplog_core::{
    evaluate, lcom1, lcom1_all, transform, whatif, Constant, Mapping, MetricRules,
    MetricRulesError, PefError, ProgramElementFacts, RefactoringSpec, RelationSource, Target,
    TransformOptions, WhatifError,
};

use bench::{bench, BenchError, BenchParams, BenchReport};
use store::{Store, StoreError};

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code for validation and domain errors.
pub const EXIT_DOMAIN: i32 = 1;
/// Exit code for file and parse errors.
pub const EXIT_PARSE: i32 = 2;

#[derive(Parser)]
#[command(
    name = "proplog",
    version,
    about = "Deductive cohesion metrics with incremental update propagation"
)]
struct Cli {
    /// Model store file (a cohesion-model fact file).
    #[arg(long, global = true, default_value = "proplog.facts")]
    store: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a program-element fact file and build the model store.
    Ingest {
        /// Fact file with classT/methodT/fieldT/callT/accessT facts.
        pef_file: PathBuf,
    },
    /// Print metric rules, plain or transformed for update propagation.
    Rules {
        /// Built-in metric name, or a path to a rule file.
        #[arg(long, default_value = "lcom1")]
        metric: String,
        /// Print the generated propagation and transition rules instead.
        #[arg(long)]
        emit_up: bool,
        /// Generate without trailing effectiveness tests.
        #[arg(long, requires = "emit_up")]
        no_effectiveness: bool,
    },
    /// Compute the metric over the stored model.
    Metric {
        /// Restrict output to one class id.
        #[arg(long)]
        class: Option<String>,
        #[arg(long, value_enum, default_value_t = MappingArg::Prose)]
        mapping: MappingArg,
        /// Built-in metric name, or a path to a rule file.
        #[arg(long, default_value = "lcom1")]
        metric: String,
    },
    /// Predict a refactoring's impact; leaves the updates pending.
    Whatif {
        #[command(subcommand)]
        movement: MoveCommand,
    },
    /// Apply the pending what-if updates to the stored model.
    Commit,
    /// Race incremental propagation against full recomputation.
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum MoveCommand {
    /// Move a method to another class.
    MoveMethod(MoveArgs),
    /// Move a field to another class.
    MoveField(MoveArgs),
}

#[derive(Args)]
#[command(group = ArgGroup::new("target").required(true).multiple(false))]
struct MoveArgs {
    /// The method or field id to move.
    element: String,
    /// The class it currently belongs to.
    from: String,
    /// Move into this existing class.
    #[arg(long, group = "target")]
    to: Option<String>,
    /// Extract into a freshly created class.
    #[arg(long, group = "target")]
    new: bool,
    /// Also print the seed and induced delta sets.
    #[arg(long)]
    show_deltas: bool,
    #[arg(long, value_enum, default_value_t = MappingArg::Prose)]
    mapping: MappingArg,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    classes: usize,
    #[arg(long)]
    methods: usize,
    #[arg(long)]
    fields: usize,
    #[arg(long)]
    density: f64,
    #[arg(long)]
    updates: usize,
    #[arg(long)]
    seed: u64,
    /// Emit the report as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MappingArg {
    /// Count lacking pairs (the metric's definition).
    Prose,
    /// Count connected pairs (the worked figures' tally).
    AsPrinted,
}

impl From<MappingArg> for Mapping {
    fn from(m: MappingArg) -> Mapping {
        match m {
            MappingArg::Prose => Mapping::Prose,
            MappingArg::AsPrinted => Mapping::AsPrinted,
        }
    }
}

/// A CLI failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn domain(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_DOMAIN,
            message: message.into(),
        }
    }

    fn parse(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_PARSE,
            message: message.into(),
        }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        if e.is_parse_level() {
            Failure::parse(e.to_string())
        } else {
            Failure::domain(e.to_string())
        }
    }
}

impl From<PefError> for Failure {
    fn from(e: PefError) -> Self {
        match e {
            PefError::Parse(_) => Failure::parse(e.to_string()),
            _ => Failure::domain(e.to_string()),
        }
    }
}

impl From<MetricRulesError> for Failure {
    fn from(e: MetricRulesError) -> Self {
        match e {
            MetricRulesError::Parse(_) => Failure::parse(e.to_string()),
            _ => Failure::domain(e.to_string()),
        }
    }
}

impl From<WhatifError> for Failure {
    fn from(e: WhatifError) -> Self {
        Failure::domain(e.to_string())
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        Failure::domain(e.to_string())
    }
}

/// Runs the CLI against `argv` (including the program name), writing to the
/// given sinks. Returns the process exit code.
pub fn run_cli_with<O: std::io::Write, E: std::io::Write>(
    argv: impl IntoIterator<Item = String>,
    out: &mut O,
    err: &mut E,
) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and --version are successful output, not usage errors.
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = write!(
                if e.use_stderr() {
                    &mut *err as &mut dyn std::io::Write
                } else {
                    &mut *out as &mut dyn std::io::Write
                },
                "{e}"
            );
            return code;
        }
    };
    match dispatch(cli) {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(failure) => {
            let _ = writeln!(err, "error: {}", failure.message);
            failure.code
        }
    }
}

/// Runs the CLI against `argv`, writing to the real stdout/stderr.
pub fn run_cli(argv: impl IntoIterator<Item = String>) -> i32 {
    let mut out = std::io::stdout();
    let mut err = std::io::stderr();
    run_cli_with(argv, &mut out, &mut err)
}

fn read_file(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

fn metric_rules(name: &str) -> Result<MetricRules, Failure> {
    if name == "lcom1" {
        return Ok(MetricRules::lcom1());
    }
    let path = PathBuf::from(name);
    let text = read_file(&path)?;
    Ok(MetricRules::from_text(&text)?)
}

fn constant(text: &str) -> Constant {
    match text.parse::<i64>() {
        Ok(n) => Constant::Int(n),
        Err(_) => Constant::name(text),
    }
}

fn dispatch(cli: Cli) -> Result<String, Failure> {
    let store = Store::new(&cli.store);
    match cli.command {
        Command::Ingest { pef_file } => {
            let text = read_file(&pef_file)?;
            let pef = ProgramElementFacts::parse(&text)?;
            let model = proplog_core::derive_model(&pef);
            store.save_model(&model)?;
            let mut out = String::new();
            for pred in model.facts().predicates() {
                let count = model.facts().tuples(&pred).map_or(0, |s| s.len());
                let _ = writeln!(out, "{} {}", pred.name, count);
            }
            Ok(out)
        }
        Command::Rules {
            metric,
            emit_up,
            no_effectiveness,
        } => {
            let rules = metric_rules(&metric)?;
            if !emit_up {
                let mut out = String::new();
                for rule in rules.rules().rules() {
                    let _ = writeln!(out, "{rule}");
                }
                return Ok(out);
            }
            let options = TransformOptions {
                effectiveness_tests: !no_effectiveness,
            };
            let t = transform(rules.rules(), options)
                .map_err(|e| Failure::domain(e.to_string()))?;
            Ok(t.render())
        }
        Command::Metric {
            class,
            mapping,
            metric,
        } => {
            let rules = metric_rules(&metric)?;
            let model = store.load_model()?;
            let snapshot = model.snapshot();
            let mat = evaluate(rules.rules(), &snapshot)
                .map_err(|e| Failure::domain(e.to_string()))?;
            match class {
                Some(id) => {
                    let class = constant(&id);
                    let v = lcom1(&snapshot, &mat, &class, mapping.into())
                        .map_err(|e| Failure::domain(e.to_string()))?;
                    Ok(format!("{class} {v}\n"))
                }
                None => {
                    let all = lcom1_all(&snapshot, &mat, mapping.into());
                    let mut out = String::new();
                    for (class, v) in all.iter() {
                        let _ = writeln!(out, "{class} {v}");
                    }
                    Ok(out)
                }
            }
        }
        Command::Whatif { movement } => {
            let (spec, args) = match movement {
                MoveCommand::MoveMethod(args) => (
                    RefactoringSpec::MoveMethod {
                        method: constant(&args.element),
                        from: constant(&args.from),
                        target: target_of(&args),
                    },
                    args,
                ),
                MoveCommand::MoveField(args) => (
                    RefactoringSpec::MoveField {
                        field: constant(&args.element),
                        from: constant(&args.from),
                        target: target_of(&args),
                    },
                    args,
                ),
            };
            let model = store.load_model()?;
            let rules = MetricRules::lcom1();
            let t = transform(rules.rules(), TransformOptions::default())
                .map_err(|e| Failure::domain(e.to_string()))?;
            let report = whatif(&model, &rules, &t, &spec, args.mapping.into())?;
            store.save_pending(&report.seeds)?;
            let mut out = String::new();
            let _ = writeln!(out, "{report}");
            if args.show_deltas {
                let _ = writeln!(out, "seeds:");
                out.push_str(&indent(&store::render_deltas(&report.seeds)));
                let _ = writeln!(out, "induced:");
                out.push_str(&indent(&store::render_deltas(&report.induced)));
            }
            let _ = writeln!(
                out,
                "hypothetical; run `proplog commit` to apply ({} pending)",
                store.pending_path().display()
            );
            Ok(out)
        }
        Command::Commit => match store.commit_pending()? {
            Some((adds, dels)) => Ok(format!(
                "applied {adds} addition(s), {dels} deletion(s) to {}\n",
                store.path().display()
            )),
            None => Err(Failure::domain(format!(
                "nothing pending at {}",
                store.pending_path().display()
            ))),
        },
        Command::Bench(args) => {
            let params = BenchParams {
                classes: args.classes,
                methods_per_class: args.methods,
                fields_per_class: args.fields,
                density: args.density,
                updates: args.updates,
                seed: args.seed,
            };
            match bench(&params) {
                Ok(report) => {
                    if args.json {
                        let json = serde_json::to_string_pretty(&report)
                            .expect("report serializes");
                        Ok(format!("{json}\n"))
                    } else {
                        Ok(render_bench(&report))
                    }
                }
                Err(BenchError::MismatchDetected {
                    trial,
                    seed,
                    update,
                    model_facts,
                }) => {
                    let dump = store.path().with_extension("mismatch.facts");
                    let io_note = match fs::write(&dump, &model_facts) {
                        Ok(()) => format!("offending model dumped to {}", dump.display()),
                        Err(e) => format!("could not dump model: {e}"),
                    };
                    Err(Failure::domain(format!(
                        "trial {trial} (seed {seed}) diverged on `{update}`; {io_note}"
                    )))
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn target_of(args: &MoveArgs) -> Target {
    match &args.to {
        Some(id) => Target::ExistingClass(constant(id)),
        None => Target::NewClass(None),
    }
}

fn indent(text: &str) -> String {
    let mut out = String::new();
    for line in text.lines() {
        let _ = writeln!(out, "  {line}");
    }
    out
}

fn render_bench(report: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "model: {} classes x {} methods x {} fields, density {}, seed {}",
        report.classes,
        report.methods_per_class,
        report.fields_per_class,
        report.density,
        report.seed
    );
    for (i, trial) in report.trials.iter().enumerate() {
        let _ = writeln!(
            out,
            "trial {:>2}: incremental {:>12} ns, full {:>12} ns, {}  ({})",
            i,
            trial.t_incremental_ns,
            trial.t_full_ns,
            if trial.equal { "equal" } else { "MISMATCH" },
            trial.update
        );
    }
    let _ = writeln!(
        out,
        "median: incremental {} ns, full {} ns, speedup {:.2}x",
        report.median_incremental_ns, report.median_full_ns, report.speedup
    );
    let _ = writeln!(
        out,
        "verdict: {}",
        if report.all_equal() {
            "all trials equal"
        } else {
            "MISMATCH DETECTED"
        }
    );
    out
}
