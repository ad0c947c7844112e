//! Textbooks: a tree of titled sections whose leaves reference knowledge
//! objects, with structural edits and a linear reading order.

mod check;
mod file;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{ObjectId, Store};

pub use check::{check, Order, Policy, PolicyError, Report, Rule, Severity, Violation, ViolationKind, POLICY_HEADER};
pub use file::{BookLoadError, BOOK_HEADER};

pub type Title = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Section {
    pub id: String,
    #[serde(default)]
    pub title: Title,
    #[serde(default)]
    pub children: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Node {
    Leaf(ObjectId),
    Section(Section),
}

/// The root section carries the book id and title.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Textbook {
    pub serial: u64,
    pub root: Section,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BookError {
    #[error("invalid position: {0}")]
    InvalidPosition(String),
    #[error("`{0}` already appears in the book")]
    DuplicateLeaf(ObjectId),
    #[error("section id `{0}` already appears in the book")]
    DuplicateSection(String),
    #[error("no section `{0}`")]
    UnknownSection(String),
    #[error("leaf `{0}` references no stored object")]
    DanglingReference(ObjectId),
    #[error("invalid section id `{0}`")]
    InvalidId(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum EditOp {
    #[serde(rename_all = "camelCase")]
    Insert { section: String, index: usize, node: Node },
    #[serde(rename_all = "camelCase")]
    Remove { section: String, index: usize },
    /// The target index is interpreted after the node has been removed.
    #[serde(rename_all = "camelCase")]
    Move { section: String, index: usize, to_section: String, to_index: usize },
    #[serde(rename_all = "camelCase")]
    Rename { section: String, title: Title },
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(char::is_whitespace)
}

impl Section {
    pub fn new(id: &str, title: &[(&str, &str)]) -> Self {
        Section { id: id.into(), title: title.iter().map(|(l, t)| (l.to_string(), t.to_string())).collect(), children: vec![] }
    }

    pub fn with(mut self, node: Node) -> Self {
        self.children.push(node);
        self
    }

    pub fn leaf(mut self, id: &str) -> Self {
        self.children.push(Node::Leaf(ObjectId::new(id).expect("valid id")));
        self
    }

    fn find(&self, id: &str) -> Option<&Section> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter().find_map(|c| match c {
            Node::Section(s) => s.find(id),
            Node::Leaf(_) => None,
        })
    }

    fn find_mut(&mut self, id: &str) -> Option<&mut Section> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter_mut().find_map(|c| match c {
            Node::Section(s) => s.find_mut(id),
            Node::Leaf(_) => None,
        })
    }
}

impl Node {
    fn collect(&self, leaves: &mut Vec<ObjectId>, sections: &mut Vec<String>) {
        match self {
            Node::Leaf(id) => leaves.push(id.clone()),
            Node::Section(s) => s.collect(leaves, sections),
        }
    }
}

impl Section {
    fn collect(&self, leaves: &mut Vec<ObjectId>, sections: &mut Vec<String>) {
        sections.push(self.id.clone());
        for c in &self.children {
            c.collect(leaves, sections);
        }
    }
}

impl Textbook {
    pub fn new(id: &str, title: &[(&str, &str)]) -> Self {
        Textbook { serial: 0, root: Section::new(id, title) }
    }

    pub fn id(&self) -> &str {
        &self.root.id
    }

    pub fn section(&self, id: &str) -> Option<&Section> {
        self.root.find(id)
    }

    /// Depth-first, left to right. The index of a leaf is its position.
    pub fn linearize(&self) -> Vec<ObjectId> {
        let mut leaves = Vec::new();
        self.root.collect(&mut leaves, &mut Vec::new());
        leaves
    }

    /// [`Textbook::linearize`], failing on a leaf the store lacks.
    pub fn linearize_checked(&self, store: &Store) -> Result<Vec<ObjectId>, BookError> {
        let order = self.linearize();
        match order.iter().find(|id| store.object(id).is_none()) {
            Some(id) => Err(BookError::DanglingReference(id.clone())),
            None => Ok(order),
        }
    }

    /// Checks ids and uniqueness of leaves and sections.
    pub fn validate(&self) -> Result<(), BookError> {
        let (mut leaves, mut sections) = (Vec::new(), Vec::new());
        self.root.collect(&mut leaves, &mut sections);
        let mut seen = BTreeSet::new();
        for s in sections {
            if !valid_id(&s) {
                return Err(BookError::InvalidId(s));
            }
            if !seen.insert(s.clone()) {
                return Err(BookError::DuplicateSection(s));
            }
        }
        let mut seen = BTreeSet::new();
        for l in leaves {
            if !seen.insert(l.clone()) {
                return Err(BookError::DuplicateLeaf(l));
            }
        }
        Ok(())
    }

    /// Applies `op` to a copy of the book and returns it with the inverse
    /// operation. The serial is not touched.
    pub fn apply(&self, op: &EditOp) -> Result<(Textbook, EditOp), BookError> {
        let mut book = self.clone();
        let inverse = match op {
            EditOp::Insert { section, index, node } => {
                let (mut leaves, mut sections) = (Vec::new(), Vec::new());
                node.collect(&mut leaves, &mut sections);
                let present = self.linearize();
                if let Some(l) = leaves.iter().find(|l| present.contains(l)) {
                    return Err(BookError::DuplicateLeaf(l.clone()));
                }
                if let Some(s) = sections.iter().find(|s| self.section(s).is_some()) {
                    return Err(BookError::DuplicateSection(s.clone()));
                }
                insert(&mut book, section, *index, node.clone())?;
                book.validate()?;
                EditOp::Remove { section: section.clone(), index: *index }
            }
            EditOp::Remove { section, index } => {
                let node = remove(&mut book, section, *index)?;
                EditOp::Insert { section: section.clone(), index: *index, node }
            }
            EditOp::Move { section, index, to_section, to_index } => {
                let node = remove(&mut book, section, *index)?;
                if book.section(to_section).is_none() {
                    return Err(BookError::InvalidPosition(format!("`{to_section}` is not a section outside the moved node")));
                }
                insert(&mut book, to_section, *to_index, node)?;
                EditOp::Move { section: to_section.clone(), index: *to_index, to_section: section.clone(), to_index: *index }
            }
            EditOp::Rename { section, title } => {
                let s = book.root.find_mut(section).ok_or_else(|| BookError::UnknownSection(section.clone()))?;
                let old = std::mem::replace(&mut s.title, title.clone());
                EditOp::Rename { section: section.clone(), title: old }
            }
        };
        Ok((book, inverse))
    }

    /// Applies an edit, bumps the serial and, when asked, returns a fresh
    /// consistency report for the new book.
    pub fn edit(&self, op: &EditOp, recheck: Option<(&Store, &Policy)>) -> Result<(Textbook, Option<Report>), BookError> {
        let (mut book, _) = self.apply(op)?;
        book.serial += 1;
        let report = recheck.map(|(store, policy)| check(&book, store, policy));
        Ok((book, report))
    }
}

fn insert(book: &mut Textbook, section: &str, index: usize, node: Node) -> Result<(), BookError> {
    let s = book.root.find_mut(section).ok_or_else(|| BookError::UnknownSection(section.into()))?;
    if index > s.children.len() {
        return Err(BookError::InvalidPosition(format!("index {index} in `{section}` with {} children", s.children.len())));
    }
    s.children.insert(index, node);
    Ok(())
}

fn remove(book: &mut Textbook, section: &str, index: usize) -> Result<Node, BookError> {
    let s = book.root.find_mut(section).ok_or_else(|| BookError::UnknownSection(section.into()))?;
    if index >= s.children.len() {
        return Err(BookError::InvalidPosition(format!("index {index} in `{section}` with {} children", s.children.len())));
    }
    Ok(s.children.remove(index))
}
