//! Proposes Context and Inheritance relations by matching the concept
//! symbols used in an object's formal representation against the
//! symbols defined by Concept objects in the store.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geolang::parse;
use crate::store::{ObjectId, ObjectKind, Provenance, RelationKind, Store, StoreError};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RelationCandidate {
    pub source: ObjectId,
    pub target: ObjectId,
    pub kind: RelationKind,
    /// Symbols used by the target and defined by the source.
    pub evidence: BTreeSet<String>,
    /// Some evidence symbol has more than one defining object.
    #[serde(default)]
    pub ambiguous: bool,
    /// Fingerprint of the target when the candidate was produced.
    pub target_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "warning", rename_all = "camelCase")]
pub enum DiscoverWarning {
    UnknownSymbol { symbol: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Discovery {
    pub candidates: Vec<RelationCandidate>,
    pub warnings: Vec<DiscoverWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiscoverError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("`{0}` has no formal representation")]
    NoFormal(ObjectId),
    #[error("formal representation of `{id}` does not parse: {reason}")]
    ParseFailure { id: ObjectId, reason: String },
    #[error("candidate {source_id} -> {target} is stale: an object changed since discovery")]
    StaleCandidate { source_id: ObjectId, target: ObjectId },
}

pub fn discover(id: &ObjectId, store: &Store) -> Result<Discovery, DiscoverError> {
    let obj = store.object(id).ok_or_else(|| StoreError::UnknownObject(id.to_string()))?;
    let src = obj.formal.as_ref().ok_or_else(|| DiscoverError::NoFormal(id.clone()))?;
    let program = parse(src).map_err(|e| DiscoverError::ParseFailure { id: id.clone(), reason: e.to_string() })?;
    let own: BTreeSet<&str> = program.definitions().map(|d| d.symbol.as_str()).collect();
    let kind = if obj.kind == ObjectKind::Concept { RelationKind::Inheritance } else { RelationKind::Context };
    let fingerprint = obj.fingerprint();

    let mut by_source: BTreeMap<ObjectId, (BTreeSet<String>, bool)> = BTreeMap::new();
    let mut warnings = Vec::new();
    for symbol in program.symbols_used() {
        if own.contains(symbol.as_str()) {
            continue;
        }
        let definers: BTreeSet<ObjectId> = store.definers(&symbol).into_iter().filter(|d| d != id).collect();
        if definers.is_empty() {
            warnings.push(DiscoverWarning::UnknownSymbol { symbol });
            continue;
        }
        let ambiguous = definers.len() > 1;
        for d in definers {
            let entry = by_source.entry(d).or_default();
            entry.0.insert(symbol.clone());
            entry.1 |= ambiguous;
        }
    }
    let candidates = by_source
        .into_iter()
        .map(|(source, (evidence, ambiguous))| RelationCandidate {
            source,
            target: id.clone(),
            kind,
            evidence,
            ambiguous,
            target_fingerprint: fingerprint.clone(),
        })
        .collect();
    Ok(Discovery { candidates, warnings })
}

/// Stores the candidates with provenance `discovered`, skipping any that
/// already exist. Either every candidate is applied or none is. Returns
/// the number of relations added.
pub fn accept_candidates(cands: &[RelationCandidate], store: &mut Store) -> Result<usize, DiscoverError> {
    for c in cands {
        let fresh = store.object(&c.target).is_some_and(|t| t.fingerprint() == c.target_fingerprint)
            && c.evidence.iter().all(|sym| store.definers(sym).contains(&c.source));
        if !fresh {
            return Err(DiscoverError::StaleCandidate { source_id: c.source.clone(), target: c.target.clone() });
        }
    }
    let mut added = 0;
    for c in cands {
        if !store.has_relation(&c.source, &c.target, c.kind) {
            store.add_relation(&c.source, &c.target, c.kind, Provenance::Discovered)?;
            added += 1;
        }
    }
    Ok(added)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geolang::SIMSON_SOURCE;
    use crate::store::KnowledgeObject;
    use proptest::prelude::*;

    fn id(s: &str) -> ObjectId {
        ObjectId::new(s).unwrap()
    }

    fn concept(i: &str, src: &str) -> KnowledgeObject {
        KnowledgeObject::new(ObjectKind::Concept, i).with_id(i).with_formal(src)
    }

    fn corpus() -> Store {
        let mut s = Store::new();
        for (i, src) in [
            ("def-point", "point() ::= [P::Point where true];"),
            ("def-line", "line(A::Point, B::Point) ::= [l::Line where incident(A, l) /\\ incident(B, l)];"),
            ("def-foot", "foot(P::Point, l::Line) ::= [F::Point where incident(F, l)];"),
            ("def-triangle", "triangle(A::Point, B::Point, C::Point) ::= [t::Triangle where true];"),
            ("def-circumcircle", "circumcircle(t::Triangle) ::= [c::Circle where true];"),
            ("def-midpoint", "midpoint(A::Point, B::Point) ::= [M::Point where collinear(A, M, B)];"),
            ("def-median", "median(t::Triangle) ::= [s::Segment where incident(midpoint(vertex2(t), vertex3(t)), line(vertex1(t), vertex2(t)))];"),
        ] {
            s.put_knowledge(concept(i, src)).unwrap();
        }
        s.put_knowledge(KnowledgeObject::new(ObjectKind::Theorem, "Simson").with_id("simson").with_formal(SIMSON_SOURCE)).unwrap();
        s
    }

    #[test]
    fn simson_context_candidates() {
        let s = corpus();
        let before = s.state_hash();
        let d = discover(&id("simson"), &s).unwrap();
        assert_eq!(s.state_hash(), before);
        let sources: Vec<&str> = d.candidates.iter().map(|c| c.source.as_str()).collect();
        assert_eq!(sources, ["def-circumcircle", "def-foot", "def-line", "def-point", "def-triangle"]);
        assert!(d.candidates.iter().all(|c| c.kind == RelationKind::Context && !c.ambiguous));
        assert_eq!(
            d.warnings,
            vec![DiscoverWarning::UnknownSymbol { symbol: "collinear".into() }, DiscoverWarning::UnknownSymbol { symbol: "incident".into() },]
        );
    }

    #[test]
    fn concepts_inherit() {
        let s = corpus();
        let d = discover(&id("def-median"), &s).unwrap();
        let mid = d.candidates.iter().find(|c| c.source == id("def-midpoint")).unwrap();
        assert_eq!(mid.kind, RelationKind::Inheritance);
        assert!(discover(&id("def-point"), &s).unwrap().candidates.is_empty());
    }

    #[test]
    fn parse_failures_surface() {
        let mut s = corpus();
        s.put_knowledge(KnowledgeObject::new(ObjectKind::Theorem, "bad").with_id("bad").with_formal("A := ;")).unwrap();
        assert!(matches!(discover(&id("bad"), &s), Err(DiscoverError::ParseFailure { .. })));
        s.put_knowledge(KnowledgeObject::new(ObjectKind::Remark, "r").with_id("r")).unwrap();
        assert_eq!(discover(&id("r"), &s), Err(DiscoverError::NoFormal(id("r"))));
    }

    #[test]
    fn accept_writes_and_skips_duplicates() {
        let mut s = corpus();
        s.add_relation(&id("def-foot"), &id("simson"), RelationKind::Context, Provenance::Manual).unwrap();
        let d = discover(&id("simson"), &s).unwrap();
        assert_eq!(accept_candidates(&[], &mut s).unwrap(), 0);
        assert_eq!(accept_candidates(&d.candidates[2..3], &mut s).unwrap(), 1);
        let count = s.relation_count();
        assert_eq!(accept_candidates(&d.candidates[1..2], &mut s).unwrap(), 0);
        assert_eq!(s.relation_count(), count);
        assert_eq!(accept_candidates(&d.candidates, &mut s).unwrap(), 3);
        let ctx = s.query_relation(None, Some(&id("simson")), RelationKind::Context).unwrap();
        assert_eq!(ctx.len(), 5);
        assert!(s.relations().filter(|r| r.source == id("def-foot")).all(|r| r.provenance == Provenance::Manual));
    }

    #[test]
    fn stale_candidates_rejected() {
        let mut s = corpus();
        let d = discover(&id("simson"), &s).unwrap();
        let mut edited = s.object(&id("simson")).unwrap().clone();
        edited.keywords.push("pedal".into());
        s.put_knowledge(edited).unwrap();
        assert!(matches!(accept_candidates(&d.candidates, &mut s), Err(DiscoverError::StaleCandidate { .. })));
        assert_eq!(s.relation_count(), 0);
    }

    #[test]
    fn ambiguity_is_flagged() {
        let mut s = Store::new();
        s.put_knowledge(concept("a", "p() ::= [P::Point where true];")).unwrap();
        // A second definer can only come from a loaded file; build one via text.
        let text = s.to_text().replace(
            "{\"record\":\"object\"",
            "{\"record\":\"object\",\"id\":\"b\",\"kind\":\"Concept\",\"name\":\"b\",\"keywords\":[],\"natural\":{},\"formal\":\"p() ::= [P::Point where true];\"}\n{\"record\":\"object\"",
        );
        let mut s = Store::from_text(&text).unwrap();
        s.put_knowledge(KnowledgeObject::new(ObjectKind::Example, "e").with_id("e").with_formal("X := p();")).unwrap();
        let d = discover(&id("e"), &s).unwrap();
        assert_eq!(d.candidates.len(), 2);
        assert!(d.candidates.iter().all(|c| c.ambiguous));
    }

    proptest! {
        #[test]
        fn sound_and_complete(defs in prop::collection::vec(0..8usize, 0..8), used in prop::collection::btree_set(0..8usize, 1..6)) {
            let mut s = Store::new();
            for (i, d) in defs.iter().enumerate() {
                let _ = s.put_knowledge(concept(&format!("c{i}"), &format!("s{d}() ::= [P::Point where true];")));
            }
            let src: String = used.iter().map(|u| format!("X{u} := s{u}();\n")).collect();
            s.put_knowledge(KnowledgeObject::new(ObjectKind::Theorem, "t").with_id("t").with_formal(&src)).unwrap();
            let d = discover(&id("t"), &s).unwrap();
            let used_syms: BTreeSet<String> = crate::geolang::parse(&src).unwrap().symbols_used();
            for c in &d.candidates {
                prop_assert!(!c.evidence.is_empty());
                for sym in &c.evidence {
                    prop_assert!(used_syms.contains(sym));
                    prop_assert!(s.definers(sym).contains(&c.source));
                }
            }
            for sym in &used_syms {
                let definers = s.definers(sym);
                if definers.len() == 1 {
                    let def = definers.iter().next().unwrap();
                    prop_assert!(d.candidates.iter().any(|c| &c.source == def && c.evidence.contains(sym)));
                } else if definers.is_empty() {
                    let w = DiscoverWarning::UnknownSymbol { symbol: sym.clone() };
                    prop_assert!(d.warnings.contains(&w));
                }
            }
        }
    }
}
