//! Book file format, one JSON record per line in depth-first order:
//!
//! ```text
//! geobook-book v1
//! {"record":"book","id":"simson-ch","serial":0,"title":{"en":"Simson lines"}}
//! {"record":"section","id":"s1","parent":"simson-ch","title":{"en":"Definitions"}}
//! {"record":"leaf","id":"def-point","parent":"s1"}
//! ```
//!
//! A record's parent must appear before it; siblings keep file order.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BookError, Node, Section, Textbook, Title};
use crate::store::{write_atomic, ObjectId};

pub const BOOK_HEADER: &str = "geobook-book v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BookLoadError {
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("unsupported book format `{found}`, expected `{BOOK_HEADER}`")]
    SchemaVersionMismatch { found: String },
    #[error("corrupt record on line {line}: {reason}")]
    CorruptRecord { line: usize, reason: String },
    #[error(transparent)]
    Invalid(#[from] BookError),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "camelCase")]
enum Record {
    Book { id: String, serial: u64, title: Title },
    Section { id: String, parent: String, title: Title },
    Leaf { id: ObjectId, parent: String },
}

fn emit(out: &mut String, s: &Section) {
    for c in &s.children {
        let r = match c {
            Node::Leaf(id) => Record::Leaf { id: id.clone(), parent: s.id.clone() },
            Node::Section(sub) => Record::Section { id: sub.id.clone(), parent: s.id.clone(), title: sub.title.clone() },
        };
        out.push_str(&serde_json::to_string(&r).expect("record serializes"));
        out.push('\n');
        if let Node::Section(sub) = c {
            emit(out, sub);
        }
    }
}

enum Pending {
    Leaf(ObjectId),
    Section(String),
}

fn build(id: &str, titles: &mut HashMap<String, Title>, children: &mut HashMap<String, Vec<Pending>>) -> Section {
    let kids = children.remove(id).unwrap_or_default();
    Section {
        id: id.to_string(),
        title: titles.remove(id).unwrap_or_default(),
        children: kids
            .into_iter()
            .map(|p| match p {
                Pending::Leaf(l) => Node::Leaf(l),
                Pending::Section(s) => Node::Section(build(&s, titles, children)),
            })
            .collect(),
    }
}

impl Textbook {
    pub fn to_text(&self) -> String {
        let mut out = format!("{BOOK_HEADER}\n");
        let head = Record::Book { id: self.root.id.clone(), serial: self.serial, title: self.root.title.clone() };
        out.push_str(&serde_json::to_string(&head).expect("record serializes"));
        out.push('\n');
        emit(&mut out, &self.root);
        out
    }

    pub fn from_text(text: &str) -> Result<Textbook, BookLoadError> {
        let corrupt = |line: usize, reason: String| BookLoadError::CorruptRecord { line, reason };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, BOOK_HEADER)) => {}
            Some((_, h)) if h.starts_with("geobook-book ") => return Err(BookLoadError::SchemaVersionMismatch { found: h.to_string() }),
            _ => return Err(corrupt(1, "missing book header".into())),
        }
        let (n, first) = lines.next().ok_or_else(|| corrupt(2, "missing book record".into()))?;
        let Ok(Record::Book { id: root, serial, title }) = serde_json::from_str(first) else {
            return Err(corrupt(n, "expected the book record".into()));
        };
        let mut titles = HashMap::from([(root.clone(), title)]);
        let mut children: HashMap<String, Vec<Pending>> = HashMap::new();
        for (n, l) in lines {
            let record: Record = serde_json::from_str(l).map_err(|e| corrupt(n, e.to_string()))?;
            let (parent, pending) = match record {
                Record::Book { .. } => return Err(corrupt(n, "second book record".into())),
                Record::Section { id, parent, title } => {
                    if titles.insert(id.clone(), title).is_some() {
                        return Err(corrupt(n, format!("duplicate section `{id}`")));
                    }
                    (parent, Pending::Section(id))
                }
                Record::Leaf { id, parent } => (parent, Pending::Leaf(id)),
            };
            if !titles.contains_key(&parent) || matches!(&pending, Pending::Section(s) if *s == parent) {
                return Err(corrupt(n, format!("parent `{parent}` is not an earlier section")));
            }
            children.entry(parent).or_default().push(pending);
        }
        let book = Textbook { serial, root: build(&root, &mut titles, &mut children) };
        book.validate()?;
        Ok(book)
    }

    pub fn save(&self, path: &Path) -> Result<(), BookLoadError> {
        write_atomic(path, self.to_text().as_bytes()).map_err(|e| BookLoadError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Textbook, BookLoadError> {
        let text = std::fs::read_to_string(path).map_err(|e| BookLoadError::Io(format!("{}: {e}", path.display())))?;
        Textbook::from_text(&text)
    }
}
