//! Store file format.
//!
//! ```text
//! geobook-store v1
//! {"record":"meta","nextId":18}
//! {"record":"object","id":"def-foot","kind":"Concept",...}     sorted by id
//! {"record":"category","id":"ch-1","title":{...},"members":[...]}  sorted by id
//! {"record":"relation","source":...,"target":...,"kind":...,"provenance":...}  sorted
//! {"record":"retired","id":"obj-000003"}                     sorted
//! ```
//!
//! Every line after the header is one JSON value with fields in a fixed
//! order, so saving the same store twice gives identical bytes.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CategoryObject, KnowledgeObject, ObjectId, Relation, Store, StoreError};

pub const FORMAT_HEADER: &str = "geobook-store v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("unsupported store format `{found}`, expected `{FORMAT_HEADER}`")]
    SchemaVersionMismatch { found: String },
    #[error("corrupt record on line {line}: {reason}")]
    CorruptRecord { line: usize, reason: String },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "camelCase")]
enum Record {
    #[serde(rename_all = "camelCase")]
    Meta {
        next_id: u64,
    },
    Object(KnowledgeObject),
    Category(CategoryObject),
    Relation(Relation),
    Retired {
        id: ObjectId,
    },
}

fn line(r: &Record) -> String {
    serde_json::to_string(r).expect("record serializes")
}

impl Store {
    pub fn to_text(&self) -> String {
        let mut out = String::from(FORMAT_HEADER);
        out.push('\n');
        let mut push = |r: Record| {
            out.push_str(&line(&r));
            out.push('\n');
        };
        push(Record::Meta { next_id: self.next_id });
        for o in self.objects.values() {
            push(Record::Object(o.clone()));
        }
        for c in self.categories.values() {
            push(Record::Category(c.clone()));
        }
        for r in self.relations() {
            push(Record::Relation(r));
        }
        for id in &self.retired {
            push(Record::Retired { id: id.clone() });
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Store, LoadError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, h)) if h == FORMAT_HEADER => {}
            Some((_, h)) if h.starts_with("geobook-store ") => return Err(LoadError::SchemaVersionMismatch { found: h.to_string() }),
            _ => return Err(LoadError::CorruptRecord { line: 1, reason: "missing store header".into() }),
        }
        let corrupt = |line: usize, e: &dyn std::fmt::Display| LoadError::CorruptRecord { line, reason: e.to_string() };
        let mut store = Store::new();
        let mut categories = Vec::new();
        let mut relations = Vec::new();
        for (n, l) in lines {
            if l.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(l).map_err(|e| corrupt(n, &e))?;
            match record {
                Record::Meta { next_id } => store.next_id = next_id,
                Record::Object(o) => {
                    let id = o.id.clone().ok_or_else(|| corrupt(n, &"object without id"))?;
                    if store.contains(&id) {
                        return Err(corrupt(n, &format!("duplicate id `{id}`")));
                    }
                    let symbol = o.defined_symbol().map_err(|e| corrupt(n, &e))?;
                    store.insert_knowledge(o, symbol);
                }
                Record::Category(c) => {
                    let id = c.id.clone().ok_or_else(|| corrupt(n, &"category without id"))?;
                    if store.contains(&id) {
                        return Err(corrupt(n, &format!("duplicate id `{id}`")));
                    }
                    store.categories.insert(id.clone(), c);
                    categories.push((n, id));
                }
                Record::Relation(r) => relations.push((n, r)),
                Record::Retired { id } => {
                    store.retired.insert(id);
                }
            }
        }
        for (n, id) in &categories {
            let c = &store.categories[id];
            if let Some(m) = c.members.iter().find(|m| !store.contains(m)) {
                return Err(corrupt(*n, &StoreError::UnknownObject(m.to_string())));
            }
            if store.category_reaches(id, id) {
                return Err(corrupt(*n, &StoreError::CategoryCycle(id.clone())));
            }
        }
        for (n, r) in relations {
            store.add_relation(&r.source, &r.target, r.kind, r.provenance).map_err(|e| corrupt(n, &e))?;
        }
        if let Some(id) = store.retired.iter().find(|id| store.contains(id)) {
            return Err(LoadError::CorruptRecord { line: 0, reason: format!("`{id}` is both live and retired") });
        }
        Ok(store)
    }

    /// Writes the store atomically: a temporary file in the same directory
    /// is synced and then renamed over `path`.
    pub fn save(&self, path: &Path) -> Result<(), LoadError> {
        write_atomic(path, self.to_text().as_bytes()).map_err(|e| LoadError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Store, LoadError> {
        let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(format!("{}: {e}", path.display())))?;
        Store::from_text(&text)
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    if let Ok(d) = std::fs::File::open(dir) {
        let _ = d.sync_all();
    }
    Ok(())
}
