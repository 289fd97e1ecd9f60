//! On-disk model store and the pending-update file.
//!
//! The store is a plain cohesion-model fact file; a what-if analysis leaves
//! its seed updates in a sibling `<store>.pending` file, written as
//! `add_`/`del_`-prefixed facts in the same syntax. `commit` applies the
//! pending updates to the store and removes the file, so a prediction and
//! its application are separate, inspectable steps.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use proplog_core::{
    apply_delta_set, CohesionModel, DeltaSet, GroundAtom, ModelParseError, ParseError,
};

/// Why a store or pending file could not be used.
#[derive(Debug)]
pub enum StoreError {
    /// The file could not be read or written.
    Io(PathBuf, io::Error),
    /// The store file does not exist yet (run `ingest` first).
    Missing(PathBuf),
    /// The store file is not a valid cohesion-model fact file.
    Model(ModelParseError),
    /// The pending file is not a valid delta file.
    Pending(String),
    /// The pending file has a syntax error.
    PendingSyntax(ParseError),
}

impl std::fmt::Display for StoreError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StoreError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            StoreError::Missing(path) => {
                write!(f, "no model store at {} (run ingest first)", path.display())
            }
            StoreError::Model(e) => write!(f, "invalid model store: {e}"),
            StoreError::Pending(msg) => write!(f, "invalid pending file: {msg}"),
            StoreError::PendingSyntax(e) => write!(f, "invalid pending file: {e}"),
        }
    }
}

impl std::error::Error for StoreError {}

impl StoreError {
    /// True when the failure is syntactic rather than a domain violation.
    pub fn is_parse_level(&self) -> bool {
        matches!(
            self,
            StoreError::Io(..)
                | StoreError::Missing(_)
                | StoreError::Model(ModelParseError::Parse(_))
                | StoreError::PendingSyntax(_)
        )
    }
}

/// A model store rooted at one fact-file path.
pub struct Store {
    path: PathBuf,
}

impl Store {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Store { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// The sibling file holding not-yet-applied seed updates.
    pub fn pending_path(&self) -> PathBuf {
        let mut name = self.path.as_os_str().to_owned();
        name.push(".pending");
        PathBuf::from(name)
    }

    pub fn load_model(&self) -> Result<CohesionModel, StoreError> {
        if !self.path.exists() {
            return Err(StoreError::Missing(self.path.clone()));
        }
        let text = fs::read_to_string(&self.path)
            .map_err(|e| StoreError::Io(self.path.clone(), e))?;
        CohesionModel::parse(&text).map_err(StoreError::Model)
    }

    pub fn save_model(&self, model: &CohesionModel) -> Result<(), StoreError> {
        let mut out = String::new();
        for atom in model.facts().to_atoms() {
            out.push_str(&format!("{atom}.\n"));
        }
        fs::write(&self.path, out).map_err(|e| StoreError::Io(self.path.clone(), e))
    }

    /// Writes the seeds as `add_p(...)` / `del_p(...)` facts.
    pub fn save_pending(&self, seeds: &DeltaSet) -> Result<(), StoreError> {
        let path = self.pending_path();
        fs::write(&path, render_deltas(seeds)).map_err(|e| StoreError::Io(path, e))
    }

    /// Reads the pending seeds, or `None` when nothing is pending.
    pub fn load_pending(&self) -> Result<Option<DeltaSet>, StoreError> {
        let path = self.pending_path();
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|e| StoreError::Io(path, e))?;
        parse_deltas(&text).map(Some)
    }

    pub fn clear_pending(&self) -> Result<(), StoreError> {
        let path = self.pending_path();
        if path.exists() {
            fs::remove_file(&path).map_err(|e| StoreError::Io(path, e))?;
        }
        Ok(())
    }

    /// Applies the pending seeds to the stored model, revalidates, writes
    /// the result back, and clears the pending file. Returns the applied
    /// (additions, deletions) counts.
    pub fn commit_pending(&self) -> Result<Option<(usize, usize)>, StoreError> {
        let Some(seeds) = self.load_pending()? else {
            return Ok(None);
        };
        let model = self.load_model()?;
        let updated = apply_delta_set(model.facts(), &seeds);
        let updated = CohesionModel::from_atoms(updated.to_atoms())
            .map_err(|e| StoreError::Pending(e.to_string()))?;
        self.save_model(&updated)?;
        self.clear_pending()?;
        Ok(Some(seeds.counts()))
    }
}

/// Renders a delta set as a fact file: additions first, then deletions,
/// each group in (predicate, tuple) order.
pub fn render_deltas(seeds: &DeltaSet) -> String {
    fn push_group<'a>(
        out: &mut String,
        prefix: &str,
        groups: impl Iterator<Item = (&'a proplog_core::Pred, &'a std::collections::BTreeSet<proplog_core::Tuple>)>,
    ) {
        for (pred, tuples) in groups {
            for t in tuples {
                let atom = GroundAtom {
                    pred: format!("{prefix}{}", pred.name),
                    args: t.clone(),
                };
                out.push_str(&format!("{atom}.\n"));
            }
        }
    }
    let mut out = String::new();
    push_group(&mut out, "add_", seeds.additions_iter());
    push_group(&mut out, "del_", seeds.deletions_iter());
    out
}

/// Parses a delta fact file written by [`render_deltas`].
pub fn parse_deltas(text: &str) -> Result<DeltaSet, StoreError> {
    let atoms =
        proplog_core::parse_fact_file(text).map_err(StoreError::PendingSyntax)?;
    let mut seeds = DeltaSet::new();
    for atom in atoms {
        if let Some(base) = atom.pred.strip_prefix("add_") {
            seeds.add(GroundAtom {
                pred: base.to_string(),
                args: atom.args,
            });
        } else if let Some(base) = atom.pred.strip_prefix("del_") {
            seeds.delete(GroundAtom {
                pred: base.to_string(),
                args: atom.args,
            });
        } else {
            return Err(StoreError::Pending(format!(
                "fact {atom} is neither add_- nor del_-prefixed"
            )));
        }
    }
    Ok(seeds)
}
