//! Seeded random instances for property tests, acceptance runs and
//! benchmarks.

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backends::Poly;
use crate::book::{EditOp, Node, Section, Textbook};
use crate::geolang::{Definition, Formula, Item, Param, Program, Sort, Span, Term};
use crate::store::{KnowledgeObject, ObjectId, ObjectKind, Provenance, RelationKind, Store};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn oid(i: usize) -> ObjectId {
    ObjectId::new(format!("o{i}")).expect("valid id")
}

const WORDS: [&str; 8] = ["point", "line", "circle", "foot", "angle", "simson", "median", "chord"];

/// A store of up to `max_objects` objects with random keywords and up to
/// `max_relations` random relations. Duplicate and self relations drawn
/// by chance are dropped.
pub fn random_store(seed: u64, max_objects: usize, max_relations: usize) -> Store {
    let mut r = rng(seed);
    let n = r.gen_range(1..=max_objects.max(1));
    let mut store = Store::new();
    for i in 0..n {
        let kind = ObjectKind::ALL[r.gen_range(0..ObjectKind::ALL.len())];
        let kind = if kind == ObjectKind::Concept { ObjectKind::Lemma } else { kind };
        let k = r.gen_range(0..4);
        let words: Vec<&str> = WORDS.choose_multiple(&mut r, k).copied().collect();
        let o = KnowledgeObject::new(kind, format!("object {i}")).with_id(&format!("o{i}")).with_keywords(&words);
        store.put_knowledge(o).expect("fresh object");
    }
    for _ in 0..r.gen_range(0..=max_relations) {
        let (a, b) = (r.gen_range(0..n), r.gen_range(0..n));
        let k = RelationKind::ALL[r.gen_range(0..RelationKind::ALL.len())];
        let p = if r.gen_bool(0.5) { Provenance::Manual } else { Provenance::Discovered };
        let _ = store.add_relation(&oid(a), &oid(b), k, p);
    }
    store
}

/// A random store and a book over a random subset of its objects, at most
/// `max_leaves` leaves in randomly nested sections. About
/// `relations_per_object` relations are drawn per object.
pub fn random_book(seed: u64, max_leaves: usize, relations_per_object: f64) -> (Textbook, Store) {
    let mut r = rng(seed);
    let n = r.gen_range(1..=max_leaves + max_leaves / 4);
    let mut store = Store::new();
    for i in 0..n {
        let o = KnowledgeObject::new(ObjectKind::Lemma, format!("o{i}")).with_id(&format!("o{i}"));
        store.put_knowledge(o).expect("fresh object");
    }
    let rels = r.gen_range(0..=(relations_per_object * n as f64).ceil() as usize);
    for _ in 0..rels {
        let (a, b) = (r.gen_range(0..n), r.gen_range(0..n));
        let k = RelationKind::ALL[r.gen_range(0..RelationKind::ALL.len())];
        let _ = store.add_relation(&oid(a), &oid(b), k, Provenance::Manual);
    }
    let mut book = Textbook::new("b", &[]);
    let mut sections = vec![book.root.id.clone()];
    let leaves = r.gen_range(0..=n.min(max_leaves));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut r);
    for &o in &order[..leaves] {
        if r.gen_bool(0.2) {
            let s = format!("s{}", sections.len());
            let parent = sections[r.gen_range(0..sections.len())].clone();
            let len = book.section(&parent).expect("known section").children.len();
            let op = EditOp::Insert { section: parent, index: r.gen_range(0..=len), node: Node::Section(Section::new(&s, &[])) };
            book = book.apply(&op).expect("valid insert").0;
            sections.push(s);
        }
        let parent = sections[r.gen_range(0..sections.len())].clone();
        let len = book.section(&parent).expect("known section").children.len();
        let op = EditOp::Insert { section: parent, index: r.gen_range(0..=len), node: Node::Leaf(oid(o)) };
        book = book.apply(&op).expect("valid insert").0;
    }
    (book, store)
}

const NAMES: [&str; 8] = ["A", "B", "C", "P1", "l", "m_2", "circ", "x"];
const HEADS: [&str; 8] = ["point", "line", "foot", "midpoint", "collinear", "incident", "eqdist", "f_1"];

fn term(r: &mut ChaCha8Rng, depth: u32) -> Term {
    if depth == 0 || r.gen_bool(0.4) {
        return Term::var(NAMES[r.gen_range(0..NAMES.len())]);
    }
    let head = HEADS[r.gen_range(0..HEADS.len())];
    let args = (0..r.gen_range(0..4)).map(|_| term(r, depth - 1)).collect();
    Term::app(head, args)
}

fn atom(r: &mut ChaCha8Rng, depth: u32) -> Term {
    let head = HEADS[r.gen_range(0..HEADS.len())];
    let args = (0..r.gen_range(1..4)).map(|_| term(r, depth)).collect();
    Term::app(head, args)
}

fn formula(r: &mut ChaCha8Rng, depth: u32) -> Formula {
    if depth == 0 {
        return if r.gen_bool(0.1) { Formula::True(Span::default()) } else { Formula::Atom(atom(r, 2)) };
    }
    let a = Box::new(formula(r, depth - 1));
    let d = r.gen_range(0..depth);
    let b = Box::new(formula(r, d));
    match r.gen_range(0..6) {
        0 => Formula::Not(a),
        1 => Formula::And(a, b),
        2 => Formula::Or(a, b),
        3 => Formula::Implies(a, b),
        4 => Formula::Iff(a, b),
        _ => Formula::Atom(atom(r, 2)),
    }
}

fn param(r: &mut ChaCha8Rng, name: &str) -> Param {
    Param { name: name.to_string(), sort: Sort::ALL[r.gen_range(0..Sort::ALL.len())], span: Span::default() }
}

/// A syntactically valid program; it need not typecheck.
pub fn random_program(seed: u64) -> Program {
    let mut r = rng(seed);
    let items = (0..r.gen_range(1..6))
        .map(|_| match r.gen_range(0..3) {
            0 => Item::Declaration { name: NAMES[r.gen_range(0..NAMES.len())].to_string(), value: atom(&mut r, 2), span: Span::default() },
            1 => Item::Formula(formula(&mut r, 3)),
            _ => {
                let params = (0..r.gen_range(0..3)).map(|i| param(&mut r, ["p", "q", "s"][i])).collect();
                Item::Definition(Definition {
                    symbol: HEADS[r.gen_range(0..HEADS.len())].to_string(),
                    params,
                    result: param(&mut r, "res"),
                    body: formula(&mut r, 2),
                    span: Span::default(),
                })
            }
        })
        .collect();
    Program { items }
}

/// A polynomial in `vars` variables with at most `terms` terms, exponents
/// below `max_exp` and coefficients in `-coeff..=coeff`.
pub fn random_poly(r: &mut impl Rng, vars: usize, terms: usize, max_exp: u32, coeff: i64) -> Poly {
    Poly::from_terms((0..r.gen_range(0..=terms)).map(|_| {
        let m: Vec<u32> = (0..vars).map(|_| r.gen_range(0..max_exp)).collect();
        (m, BigInt::from(r.gen_range(-coeff..=coeff)))
    }))
}

/// The program with every span reset, for comparing parses of different
/// texts.
pub fn without_spans(p: &Program) -> Program {
    fn t(x: &Term) -> Term {
        match &x.kind {
            crate::geolang::TermKind::Var(v) => Term::var(v.clone()),
            crate::geolang::TermKind::App { head, args } => Term::app(head.clone(), args.iter().map(t).collect()),
        }
    }
    fn f(x: &Formula) -> Formula {
        let b = |y: &Formula| Box::new(f(y));
        match x {
            Formula::Atom(a) => Formula::Atom(t(a)),
            Formula::True(_) => Formula::True(Span::default()),
            Formula::Not(a) => Formula::Not(b(a)),
            Formula::And(l, r) => Formula::And(b(l), b(r)),
            Formula::Or(l, r) => Formula::Or(b(l), b(r)),
            Formula::Implies(l, r) => Formula::Implies(b(l), b(r)),
            Formula::Iff(l, r) => Formula::Iff(b(l), b(r)),
        }
    }
    let param = |q: &Param| Param { span: Span::default(), ..q.clone() };
    let items = p
        .items
        .iter()
        .map(|i| match i {
            Item::Declaration { name, value, .. } => Item::Declaration { name: name.clone(), value: t(value), span: Span::default() },
            Item::Formula(x) => Item::Formula(f(x)),
            Item::Definition(d) => Item::Definition(Definition {
                symbol: d.symbol.clone(),
                params: d.params.iter().map(param).collect(),
                result: param(&d.result),
                body: f(&d.body),
                span: Span::default(),
            }),
        })
        .collect();
    Program { items }
}
