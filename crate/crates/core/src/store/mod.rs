//! The knowledge base: knowledge objects, category objects and typed
//! relations between them.

mod file;
pub mod query;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub(crate) use file::write_atomic;
pub use file::{LoadError, FORMAT_HEADER};
pub use query::{parse_query, Query, QueryError};

use crate::geolang::{parse, Item};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ObjectId(String);

impl ObjectId {
    pub fn new(s: impl Into<String>) -> Result<Self, StoreError> {
        let s = s.into();
        if s.is_empty() || s.chars().any(char::is_whitespace) {
            return Err(StoreError::InvalidId(s));
        }
        Ok(ObjectId(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ObjectId {
    type Error = StoreError;
    fn try_from(s: String) -> Result<Self, StoreError> {
        ObjectId::new(s)
    }
}

impl From<ObjectId> for String {
    fn from(id: ObjectId) -> String {
        id.0
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ObjectId {
    type Err = StoreError;
    fn from_str(s: &str) -> Result<Self, StoreError> {
        ObjectId::new(s)
    }
}

macro_rules! closed_enum {
    ($(#[$m:meta])* $name:ident { $($v:ident $(= $alias:literal)?),* $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "&'static str")]
        pub enum $name { $($v),* }

        impl From<$name> for &'static str {
            fn from(k: $name) -> &'static str {
                k.as_str()
            }
        }

        impl TryFrom<String> for $name {
            type Error = StoreError;
            fn try_from(s: String) -> Result<Self, StoreError> {
                s.parse()
            }
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$v),*];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$v => stringify!($v)),* }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = StoreError;
            fn from_str(s: &str) -> Result<Self, StoreError> {
                $(
                    if s == stringify!($v) $(|| s == $alias)? {
                        return Ok($name::$v);
                    }
                )*
                Err(StoreError::InvalidKind(s.to_string()))
            }
        }
    };
}

closed_enum!(
    /// The 14 kinds of knowledge object.
    ObjectKind {
        Concept, Axiom, Lemma, Theorem, Corollary, Conjecture, Proof, Problem,
        Example, Exercise, Solution, Algorithm, Introduction, Remark,
    }
);

closed_enum!(
    /// The 17 relation kinds. Each also parses from its arrow name
    /// (`contextOf`, `inherit`, ...).
    RelationKind {
        Inclusion = "include",
        Context = "contextOf",
        Inheritance = "inherit",
        Derivation = "deriveFrom",
        Implication = "imply",
        Property = "hasProperty",
        Decision = "decide",
        Justification = "justify",
        Introduction = "introduce",
        Remark = "remarkOn",
        Complication = "complicate",
        Solution = "solve",
        Application = "applyOn",
        Equality = "equal",
        Exercise = "exerciseOf",
        Example = "exampleOf",
        Association = "associate",
    }
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Manual,
    Discovered,
}

impl FromStr for Provenance {
    type Err = StoreError;
    fn from_str(s: &str) -> Result<Self, StoreError> {
        match s {
            "manual" => Ok(Provenance::Manual),
            "discovered" => Ok(Provenance::Discovered),
            other => Err(StoreError::InvalidKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KnowledgeObject {
    pub id: Option<ObjectId>,
    pub kind: ObjectKind,
    pub name: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    /// Locale tag to text.
    #[serde(default)]
    pub natural: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formal: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebraic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagram: Option<String>,
}

impl KnowledgeObject {
    pub fn new(kind: ObjectKind, name: impl Into<String>) -> Self {
        KnowledgeObject { id: None, kind, name: name.into(), keywords: vec![], natural: BTreeMap::new(), formal: None, algebraic: None, diagram: None }
    }

    pub fn with_id(mut self, id: &str) -> Self {
        self.id = Some(ObjectId::new(id).expect("valid id"));
        self
    }

    pub fn with_keywords(mut self, words: &[&str]) -> Self {
        self.keywords = words.iter().map(|w| w.to_string()).collect();
        self
    }

    pub fn with_natural(mut self, locale: &str, text: &str) -> Self {
        self.natural.insert(locale.into(), text.into());
        self
    }

    pub fn with_formal(mut self, src: &str) -> Self {
        self.formal = Some(src.into());
        self
    }

    /// The symbol a Concept's formal representation defines.
    pub fn defined_symbol(&self) -> Result<Option<String>, StoreError> {
        if self.kind != ObjectKind::Concept {
            return Ok(None);
        }
        let Some(src) = &self.formal else { return Ok(None) };
        let program = parse(src).map_err(|e| StoreError::InvalidObject(format!("formal representation: {e}")))?;
        let defs: Vec<_> = program.items.iter().filter(|i| matches!(i, Item::Definition(_))).collect();
        match defs.as_slice() {
            [Item::Definition(d)] => Ok(Some(d.symbol.clone())),
            _ => Err(StoreError::InvalidObject(format!("a Concept's formal representation must contain exactly one definition, found {}", defs.len()))),
        }
    }

    /// SHA-256 of the canonical serialization.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("object serializes");
        hex(&Sha256::digest(bytes))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryObject {
    pub id: Option<ObjectId>,
    #[serde(default)]
    pub title: BTreeMap<String, String>,
    #[serde(default)]
    pub members: Vec<ObjectId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum StoredObject {
    Knowledge(KnowledgeObject),
    Category(CategoryObject),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub source: ObjectId,
    pub target: ObjectId,
    pub kind: RelationKind,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("invalid object id `{0}`")]
    InvalidId(String),
    #[error("invalid kind `{0}`")]
    InvalidKind(String),
    #[error("invalid object: {0}")]
    InvalidObject(String),
    #[error("`{symbol}` is already defined by {existing}")]
    DuplicateDefinition { symbol: String, existing: ObjectId },
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("id `{0}` was used by a deleted object and cannot be reused")]
    RetiredId(ObjectId),
    #[error("a relation cannot connect `{0}` to itself")]
    SelfRelation(ObjectId),
    #[error("relation {from} -{kind}-> {to} already exists")]
    DuplicateRelation { from: ObjectId, to: ObjectId, kind: RelationKind },
    #[error("category `{0}` would contain itself")]
    CategoryCycle(ObjectId),
    #[error("keyword query needs at least one word")]
    EmptyQuery,
    #[error("exactly one of source and target must be `*`, both are")]
    BothWildcards,
    #[error("exactly one of source and target must be `*`, neither is")]
    NoWildcard,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Store {
    objects: BTreeMap<ObjectId, KnowledgeObject>,
    categories: BTreeMap<ObjectId, CategoryObject>,
    relations: BTreeMap<(ObjectId, ObjectId, RelationKind), Provenance>,
    by_target: BTreeMap<(ObjectId, RelationKind), BTreeSet<ObjectId>>,
    by_source: BTreeMap<(ObjectId, RelationKind), BTreeSet<ObjectId>>,
    keywords: BTreeMap<String, BTreeSet<ObjectId>>,
    definers: BTreeMap<String, BTreeSet<ObjectId>>,
    next_id: u64,
    retired: BTreeSet<ObjectId>,
}

impl Store {
    pub fn new() -> Self {
        Store { next_id: 1, ..Store::default() }
    }

    pub fn contains(&self, id: &ObjectId) -> bool {
        self.objects.contains_key(id) || self.categories.contains_key(id)
    }

    pub fn object(&self, id: &ObjectId) -> Option<&KnowledgeObject> {
        self.objects.get(id)
    }

    pub fn category(&self, id: &ObjectId) -> Option<&CategoryObject> {
        self.categories.get(id)
    }

    pub fn get(&self, id: &ObjectId) -> Option<StoredObject> {
        self.objects.get(id).cloned().map(StoredObject::Knowledge).or_else(|| self.categories.get(id).cloned().map(StoredObject::Category))
    }

    pub fn objects(&self) -> impl Iterator<Item = &KnowledgeObject> {
        self.objects.values()
    }

    pub fn categories(&self) -> impl Iterator<Item = &CategoryObject> {
        self.categories.values()
    }

    pub fn relations(&self) -> impl Iterator<Item = Relation> + '_ {
        self.relations.iter().map(|((s, t, k), p)| Relation { source: s.clone(), target: t.clone(), kind: *k, provenance: *p })
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn has_relation(&self, source: &ObjectId, target: &ObjectId, kind: RelationKind) -> bool {
        self.relations.contains_key(&(source.clone(), target.clone(), kind))
    }

    /// Concept objects defining `symbol`.
    pub fn definers(&self, symbol: &str) -> BTreeSet<ObjectId> {
        self.definers.get(symbol).cloned().unwrap_or_default()
    }

    pub fn defined_symbols(&self) -> impl Iterator<Item = (&str, &BTreeSet<ObjectId>)> {
        self.definers.iter().map(|(s, ids)| (s.as_str(), ids))
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn retired(&self) -> impl Iterator<Item = &ObjectId> {
        self.retired.iter()
    }

    fn fresh_id(&mut self) -> ObjectId {
        loop {
            let id = ObjectId(format!("obj-{:06}", self.next_id));
            self.next_id += 1;
            if !self.contains(&id) && !self.retired.contains(&id) {
                return id;
            }
        }
    }

    fn claim_id(&mut self, id: Option<&ObjectId>) -> Result<ObjectId, StoreError> {
        match id {
            None => Ok(self.fresh_id()),
            Some(id) if self.retired.contains(id) => Err(StoreError::RetiredId(id.clone())),
            Some(id) => Ok(id.clone()),
        }
    }

    /// Inserts or replaces an object. Replacing keeps incident relations.
    pub fn put_object(&mut self, obj: StoredObject) -> Result<ObjectId, StoreError> {
        match obj {
            StoredObject::Knowledge(o) => self.put_knowledge(o),
            StoredObject::Category(c) => self.put_category(c),
        }
    }

    pub fn put_knowledge(&mut self, mut obj: KnowledgeObject) -> Result<ObjectId, StoreError> {
        if let Some(id) = &obj.id {
            if self.categories.contains_key(id) {
                return Err(StoreError::InvalidObject(format!("`{id}` is a category")));
            }
        }
        let symbol = obj.defined_symbol()?;
        if let Some(sym) = &symbol {
            if let Some(other) = self.definers(sym).into_iter().find(|d| Some(d) != obj.id.as_ref()) {
                return Err(StoreError::DuplicateDefinition { symbol: sym.clone(), existing: other });
            }
        }
        let id = self.claim_id(obj.id.as_ref())?;
        obj.id = Some(id.clone());
        self.insert_knowledge(obj, symbol);
        Ok(id)
    }

    fn insert_knowledge(&mut self, obj: KnowledgeObject, symbol: Option<String>) {
        let id = obj.id.clone().expect("id assigned");
        self.unindex_knowledge(&id);
        for w in &obj.keywords {
            self.keywords.entry(w.to_lowercase()).or_default().insert(id.clone());
        }
        if let Some(sym) = symbol {
            self.definers.entry(sym).or_default().insert(id.clone());
        }
        self.objects.insert(id, obj);
    }

    fn unindex_knowledge(&mut self, id: &ObjectId) {
        if self.objects.remove(id).is_none() {
            return;
        }
        for index in [&mut self.keywords, &mut self.definers] {
            index.retain(|_, ids| {
                ids.remove(id);
                !ids.is_empty()
            });
        }
    }

    pub fn put_category(&mut self, mut cat: CategoryObject) -> Result<ObjectId, StoreError> {
        if let Some(id) = &cat.id {
            if self.objects.contains_key(id) {
                return Err(StoreError::InvalidObject(format!("`{id}` is a knowledge object")));
            }
        }
        for m in &cat.members {
            if !self.contains(m) && cat.id.as_ref() != Some(m) {
                return Err(StoreError::UnknownObject(m.to_string()));
            }
        }
        let id = self.claim_id(cat.id.as_ref())?;
        cat.id = Some(id.clone());
        let previous = self.categories.insert(id.clone(), cat);
        if self.category_reaches(&id, &id) {
            match previous {
                Some(p) => self.categories.insert(id.clone(), p),
                None => self.categories.remove(&id),
            };
            return Err(StoreError::CategoryCycle(id));
        }
        Ok(id)
    }

    /// Whether `target` is reachable from `from` through one or more
    /// membership edges.
    fn category_reaches(&self, from: &ObjectId, target: &ObjectId) -> bool {
        let mut stack: Vec<&ObjectId> = self.categories.get(from).map(|c| c.members.iter().collect()).unwrap_or_default();
        let mut seen = BTreeSet::new();
        while let Some(id) = stack.pop() {
            if id == target {
                return true;
            }
            if seen.insert(id) {
                if let Some(c) = self.categories.get(id) {
                    stack.extend(c.members.iter());
                }
            }
        }
        false
    }

    /// Removes an object with its relations and memberships. Its id is
    /// never handed out again.
    pub fn delete_object(&mut self, id: &ObjectId) -> Result<(), StoreError> {
        if !self.contains(id) {
            return Err(StoreError::UnknownObject(id.to_string()));
        }
        self.unindex_knowledge(id);
        self.categories.remove(id);
        for c in self.categories.values_mut() {
            c.members.retain(|m| m != id);
        }
        let incident: Vec<_> = self.relations.keys().filter(|(s, t, _)| s == id || t == id).cloned().collect();
        for (s, t, k) in incident {
            self.remove_relation(&s, &t, k);
        }
        self.retired.insert(id.clone());
        Ok(())
    }

    pub fn add_relation(&mut self, source: &ObjectId, target: &ObjectId, kind: RelationKind, provenance: Provenance) -> Result<(), StoreError> {
        for id in [source, target] {
            if !self.contains(id) {
                return Err(StoreError::UnknownObject(id.to_string()));
            }
        }
        if source == target {
            return Err(StoreError::SelfRelation(source.clone()));
        }
        let key = (source.clone(), target.clone(), kind);
        if self.relations.contains_key(&key) {
            return Err(StoreError::DuplicateRelation { from: source.clone(), to: target.clone(), kind });
        }
        self.relations.insert(key, provenance);
        self.by_target.entry((target.clone(), kind)).or_default().insert(source.clone());
        self.by_source.entry((source.clone(), kind)).or_default().insert(target.clone());
        Ok(())
    }

    /// Returns whether the relation existed.
    pub fn remove_relation(&mut self, source: &ObjectId, target: &ObjectId, kind: RelationKind) -> bool {
        if self.relations.remove(&(source.clone(), target.clone(), kind)).is_none() {
            return false;
        }
        for (index, key, member) in [(&mut self.by_target, (target.clone(), kind), source), (&mut self.by_source, (source.clone(), kind), target)] {
            if let Some(set) = index.get_mut(&key) {
                set.remove(member);
                if set.is_empty() {
                    index.remove(&key);
                }
            }
        }
        true
    }

    /// Objects whose keywords include every word, ignoring case.
    pub fn query_keywords<S: AsRef<str>>(&self, words: &[S]) -> Result<BTreeSet<ObjectId>, StoreError> {
        let mut sets = words.iter().map(|w| self.keywords.get(&w.as_ref().to_lowercase()));
        let first = sets.next().ok_or(StoreError::EmptyQuery)?;
        let mut acc = first.cloned().unwrap_or_default();
        for s in sets {
            match s {
                Some(s) => acc.retain(|id| s.contains(id)),
                None => acc.clear(),
            }
        }
        Ok(acc)
    }

    /// `relation[*, target, kind]` or `relation[source, *, kind]`; `None`
    /// is the wildcard.
    pub fn query_relation(&self, source: Option<&ObjectId>, target: Option<&ObjectId>, kind: RelationKind) -> Result<BTreeSet<ObjectId>, StoreError> {
        let (index, key) = match (source, target) {
            (None, None) => return Err(StoreError::BothWildcards),
            (Some(_), Some(_)) => return Err(StoreError::NoWildcard),
            (None, Some(t)) => (&self.by_target, t),
            (Some(s), None) => (&self.by_source, s),
        };
        if !self.contains(key) {
            return Err(StoreError::UnknownObject(key.to_string()));
        }
        Ok(index.get(&(key.clone(), kind)).cloned().unwrap_or_default())
    }

    /// SHA-256 of the canonical file serialization.
    pub fn state_hash(&self) -> String {
        hex(&Sha256::digest(self.to_text().as_bytes()))
    }
}
