//! Concept symbol registry: signatures for every symbol the language knows.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::ast::{Definition, Sort, SortSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConceptSignature {
    pub symbol: String,
    pub params: Vec<SortSet>,
    pub result: Sort,
    pub primitive: bool,
}

impl ConceptSignature {
    pub fn is_predicate(&self) -> bool {
        self.result == Sort::Bool
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConceptKind {
    /// Built into every backend: `point`, `line`, `circle` and the predicates.
    Primitive,
    /// Tuple-like constructor whose projections give back its arguments.
    Tuple { projections: Vec<String> },
    /// `index`-th component of a tuple concept.
    Projection { tuple: String, index: usize },
    /// Unfolded by its stored definition.
    Derived(Definition<Sort>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Concept {
    pub signature: ConceptSignature,
    pub kind: ConceptKind,
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    concepts: BTreeMap<String, Concept>,
    deps: BTreeMap<String, BTreeSet<String>>,
}

impl Registry {
    /// A registry with no symbols at all.
    pub fn empty() -> Self {
        Registry::default()
    }

    /// Primitive constructors, predicates and tuple concepts, without any
    /// derived definitions.
    pub fn primitives() -> Self {
        use Sort::*;
        let mut r = Registry::empty();
        let p = |s: Sort| SortSet::from(s);
        r.add_primitive("point", vec![], Point);
        r.add_primitive("line", vec![p(Point), p(Point)], Line);
        r.add_primitive("circle", vec![p(Point), p(Point)], Circle);
        r.add_primitive("incident", vec![p(Point), SortSet::of(&[Line, Circle])], Bool);
        r.add_primitive("collinear", vec![p(Point); 3], Bool);
        r.add_primitive("parallel", vec![p(Line); 2], Bool);
        r.add_primitive("perpendicular", vec![p(Line); 2], Bool);
        r.add_primitive("eqdist", vec![p(Point); 4], Bool);
        r.add_primitive("equalp", vec![p(Point); 2], Bool);
        r.add_tuple("triangle", Triangle, &["vertex1", "vertex2", "vertex3"]);
        r.add_tuple("segment", Segment, &["endpoint1", "endpoint2"]);
        r
    }

    fn add_primitive(&mut self, symbol: &str, params: Vec<SortSet>, result: Sort) {
        let signature = ConceptSignature { symbol: symbol.into(), params, result, primitive: true };
        self.concepts.insert(symbol.into(), Concept { signature, kind: ConceptKind::Primitive });
    }

    fn add_tuple(&mut self, symbol: &str, sort: Sort, projections: &[&str]) {
        let signature = ConceptSignature { symbol: symbol.into(), params: vec![SortSet::from(Sort::Point); projections.len()], result: sort, primitive: true };
        let kind = ConceptKind::Tuple { projections: projections.iter().map(|s| s.to_string()).collect() };
        self.concepts.insert(symbol.into(), Concept { signature, kind });
        for (index, proj) in projections.iter().enumerate() {
            let signature = ConceptSignature { symbol: proj.to_string(), params: vec![SortSet::from(sort)], result: Sort::Point, primitive: true };
            let kind = ConceptKind::Projection { tuple: symbol.into(), index };
            self.concepts.insert(proj.to_string(), Concept { signature, kind });
        }
    }

    pub(crate) fn insert_derived(&mut self, def: Definition<Sort>, deps: BTreeSet<String>) -> ConceptSignature {
        let signature = ConceptSignature {
            symbol: def.symbol.clone(),
            params: def.params.iter().map(|p| SortSet::from(p.sort)).collect(),
            result: def.result.sort,
            primitive: false,
        };
        self.deps.insert(def.symbol.clone(), deps);
        self.concepts.insert(def.symbol.clone(), Concept { signature: signature.clone(), kind: ConceptKind::Derived(def) });
        signature
    }

    pub fn get(&self, symbol: &str) -> Option<&Concept> {
        self.concepts.get(symbol)
    }

    pub fn signature(&self, symbol: &str) -> Option<&ConceptSignature> {
        self.concepts.get(symbol).map(|c| &c.signature)
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.concepts.contains_key(symbol)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.concepts.keys().map(String::as_str)
    }

    /// Symbols a derived definition's body refers to.
    pub fn dependencies(&self, symbol: &str) -> Option<&BTreeSet<String>> {
        self.deps.get(symbol)
    }
}
