//! A small seeded chapter around Simson's theorem, used by tests, benches
//! and the command line `init --seed`.

use crate::book::{Node, Section, Textbook};
use crate::discover::{accept_candidates, discover};
use crate::geolang::SIMSON_SOURCE;
use crate::store::{KnowledgeObject, ObjectId, ObjectKind, Provenance, RelationKind, Store};

pub const MIDLINE_SOURCE: &str = "\
A := point();
B := point();
C := point();
parallel(line(midpoint(A, B), midpoint(A, C)), line(B, C));";

pub const MIDPOINT_UNIQUE_SOURCE: &str = "\
A := point();
B := point();
P := point();
collinear(A, P, B) /\\ eqdist(P, A, P, B) => equalp(P, midpoint(A, B));";

pub const CIRCUMCENTER_BISECTOR_SOURCE: &str = "\
A := point();
B := point();
C := point();
O := point();
eqdist(O, A, O, B) /\\ eqdist(O, A, O, C) => perpendicular(line(O, midpoint(B, C)), line(B, C));";

/// Not a theorem: the feet from a point inside the triangle are not
/// collinear.
pub const FALSE_PEDAL_SOURCE: &str = "\
A := point();
B := point();
C := point();
D := midpoint(A, midpoint(B, C));
collinear(foot(D, line(A, B)), foot(D, line(B, C)), foot(D, line(A, C)));";

const CONCEPTS: [(&str, &str, &str, &str); 8] = [
    ("def-point", "Point", "point() ::= [P::Point where true];", "点"),
    ("def-line", "Line", "line(A::Point, B::Point) ::= [l::Line where incident(A, l) /\\ incident(B, l)];", "直线"),
    ("def-triangle", "Triangle", "triangle(A::Point, B::Point, C::Point) ::= [t::Triangle where true];", "三角形"),
    (
        "def-circumcircle",
        "Circumcircle",
        "circumcircle(t::Triangle) ::= [c::Circle where incident(vertex1(t), c) /\\ incident(vertex2(t), c) /\\ incident(vertex3(t), c)];",
        "外接圆",
    ),
    ("def-intersection", "Intersection of lines", "intersection(l::Line, m::Line) ::= [A::Point where incident(A, l) /\\ incident(A, m)];", "交点"),
    ("def-foot", "Foot of a perpendicular", "foot(P::Point, l::Line) ::= [F::Point where incident(F, l) /\\ perpendicular(line(P, F), l)];", "垂足"),
    ("def-midpoint", "Midpoint", "midpoint(A::Point, B::Point) ::= [M::Point where collinear(A, M, B) /\\ eqdist(M, A, M, B)];", "中点"),
    (
        "def-median",
        "Median",
        "median(A::Point, B::Point, C::Point) ::= [s::Segment where equalp(endpoint1(s), A) /\\ equalp(endpoint2(s), midpoint(B, C))];",
        "中线",
    ),
];

fn id(s: &str) -> ObjectId {
    ObjectId::new(s).expect("valid id")
}

/// The chapter's store: eight definitions, four theorems, a proof and a
/// false claim, with discovered Context and Inheritance relations.
pub fn simson_store() -> Store {
    let mut s = Store::new();
    for (i, name, formal, zh) in CONCEPTS {
        let o = KnowledgeObject::new(ObjectKind::Concept, name)
            .with_id(i)
            .with_keywords(&[&name.to_lowercase()])
            .with_natural("en", &format!("The {}.", name.to_lowercase()))
            .with_natural("zh", zh)
            .with_formal(formal);
        s.put_knowledge(o).expect("fixture object");
    }
    let theorems = [
        (
            "simson",
            ObjectKind::Theorem,
            "Simson's theorem",
            SIMSON_SOURCE,
            "The feet of the perpendiculars from D to the sides of ABC are collinear exactly when D lies on the circumcircle.",
        ),
        ("midline", ObjectKind::Theorem, "Midline theorem", MIDLINE_SOURCE, "The segment joining two side midpoints is parallel to the third side."),
        ("midpoint-unique", ObjectKind::Lemma, "Uniqueness of the midpoint", MIDPOINT_UNIQUE_SOURCE, "A point on AB equidistant from A and B is the midpoint."),
        (
            "circumcenter-bisector",
            ObjectKind::Theorem,
            "Circumcenter on the bisector",
            CIRCUMCENTER_BISECTOR_SOURCE,
            "The circumcenter lies on the perpendicular bisector of each side.",
        ),
        ("false-pedal", ObjectKind::Conjecture, "Pedal line of the median point", FALSE_PEDAL_SOURCE, "The feet from the midpoint of a median are collinear."),
    ];
    for (i, kind, name, formal, en) in theorems {
        let o = KnowledgeObject::new(kind, name).with_id(i).with_natural("en", en).with_formal(formal);
        s.put_knowledge(o).expect("fixture object");
    }
    let zh = "点 D 到三角形 ABC 三边的垂足共线，当且仅当 D 在其外接圆上。";
    let simson = s.object(&id("simson")).expect("simson").clone().with_keywords(&["simson", "pedal", "collinear"]).with_natural("zh", zh);
    s.put_knowledge(simson).expect("fixture object");
    let proof = KnowledgeObject::new(ObjectKind::Proof, "Proof of Simson's theorem")
        .with_id("simson-proof")
        .with_natural("en", "By Wu's method: both directions reduce to zero under nondegeneracy conditions.");
    s.put_knowledge(proof).expect("fixture object");
    s.add_relation(&id("simson-proof"), &id("simson"), RelationKind::Justification, Provenance::Manual).expect("fixture relation");
    let ids: Vec<ObjectId> = s.objects().filter_map(|o| o.id.clone()).collect();
    for i in ids {
        if let Ok(d) = discover(&i, &s) {
            accept_candidates(&d.candidates, &mut s).expect("fresh candidates");
        }
    }
    s
}

/// A book over [`simson_store`] that satisfies the default policy.
pub fn simson_book() -> Textbook {
    let mut defs = Section::new("defs", &[("en", "Definitions"), ("zh", "定义")]);
    for (i, ..) in CONCEPTS {
        defs = defs.leaf(i);
    }
    let mut book = Textbook::new("simson-ch", &[("en", "Simson lines"), ("zh", "西姆松线")]);
    book.root = book
        .root
        .with(Node::Section(defs))
        .with(Node::Section(Section::new("lines", &[("en", "Simson lines"), ("zh", "西姆松线")]).leaf("simson").leaf("simson-proof")))
        .with(Node::Section(
            Section::new("more", &[("en", "Midpoints and circumcenters")])
                .leaf("midpoint-unique")
                .leaf("midline")
                .leaf("circumcenter-bisector")
                .leaf("false-pedal"),
        ));
    book
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::book::{check, Policy};

    #[test]
    fn chapter_is_consistent() {
        let store = simson_store();
        let report = check(&simson_book(), &store, &Policy::default_policy());
        assert!(report.is_consistent(), "{report:?}");
        let ctx = store.query_relation(None, Some(&id("simson")), RelationKind::Context).unwrap();
        assert_eq!(ctx.len(), 5);
    }

    /// The files under `fixtures/` are these values saved; set
    /// `GEOBOOK_BLESS=1` to rewrite them.
    #[test]
    fn saved_fixtures_match() {
        let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
        let store = root.join("simson-chapter.store");
        let book = root.join("simson-ch.book");
        if std::env::var_os("GEOBOOK_BLESS").is_some() {
            std::fs::create_dir_all(&root).unwrap();
            simson_store().save(&store).unwrap();
            simson_book().save(&book).unwrap();
        }
        assert_eq!(std::fs::read_to_string(store).unwrap(), simson_store().to_text());
        assert_eq!(std::fs::read_to_string(book).unwrap(), simson_book().to_text());
    }
}
