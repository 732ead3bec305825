//! Loading KSYNTH into a knowledge base plus the non-slot definitions.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use super::ast::{Document, Item};
use super::{lower, parse_document, resolve};
use crate::elaboration::ElaborationPlan;
use crate::error::{Error, Result};
use crate::inference::{AnomalySpec, GppbTemplate, RuleBase};
use crate::model::KnowledgeBase;

/// Everything one or more KSYNTH files define.
#[derive(Debug, Clone, Default)]
pub struct Pack {
    pub kb: KnowledgeBase,
    pub rules: RuleBase,
    pub templates: BTreeMap<String, GppbTemplate>,
    pub assemblies: BTreeMap<String, Vec<String>>,
    pub anomalies: Vec<AnomalySpec>,
    pub plans: BTreeMap<String, ElaborationPlan>,
}

fn finish(doc: &Document, file: Option<&str>) -> Result<Pack> {
    let tag = |mut d: Vec<super::Diagnostic>| {
        if let Some(f) = file {
            for x in &mut d {
                x.file.get_or_insert_with(|| f.to_string());
            }
        }
        Error::Parse(d)
    };
    let diags = resolve::check(doc);
    if !diags.is_empty() {
        return Err(tag(diags));
    }
    lower::pack(doc).map_err(tag)
}

/// Loads a self-contained document. `use` directives are resolved
/// against the working directory.
pub fn load_str(text: &str) -> Result<Pack> {
    let doc = parse_document(text)?;
    if doc.items.iter().any(|i| matches!(i, Item::Use(_))) {
        let mut loader = Loader::default();
        let mut merged = Document::default();
        loader.items(doc, Path::new("."), &mut merged)?;
        return finish(&merged, None);
    }
    finish(&doc, None)
}

/// Loads files in order, expanding `use` directives relative to the file
/// that contains them. A file reached twice is read once.
pub fn load_files<P: AsRef<Path>>(paths: &[P]) -> Result<Pack> {
    let mut loader = Loader::default();
    let mut merged = Document::default();
    for p in paths {
        loader.file(p.as_ref(), &mut merged)?;
    }
    let single = match paths {
        [one] => Some(one.as_ref().display().to_string()),
        _ => None,
    };
    finish(&merged, single.as_deref())
}

#[derive(Default)]
struct Loader {
    stack: Vec<PathBuf>,
    done: BTreeSet<PathBuf>,
}

impl Loader {
    fn file(&mut self, path: &Path, out: &mut Document) -> Result<()> {
        let io = |e: std::io::Error| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let canon = fs::canonicalize(path).map_err(io)?;
        if self.stack.contains(&canon) {
            let mut cycle: Vec<String> = self.stack.iter().map(|p| p.display().to_string()).collect();
            cycle.push(canon.display().to_string());
            return Err(Error::IncludeCycle(cycle));
        }
        if !self.done.insert(canon.clone()) {
            return Ok(());
        }
        let text = fs::read_to_string(&canon).map_err(io)?;
        let doc = parse_document(&text).map_err(|e| match e {
            Error::Parse(mut d) => {
                for x in &mut d {
                    x.file = Some(path.display().to_string());
                }
                Error::Parse(d)
            }
            other => other,
        })?;
        self.stack.push(canon.clone());
        let base = canon.parent().unwrap_or(Path::new(".")).to_path_buf();
        let r = self.items(doc, &base, out);
        self.stack.pop();
        r
    }

    fn items(&mut self, doc: Document, base: &Path, out: &mut Document) -> Result<()> {
        for item in doc.items {
            match item {
                Item::Use(u) => self.file(&base.join(&u.path), out)?,
                other => out.items.push(other),
            }
        }
        Ok(())
    }
}
