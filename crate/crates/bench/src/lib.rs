//! Inputs for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use geobook_core::book::{Node, Section, Textbook};
use geobook_core::store::{KnowledgeObject, ObjectId, ObjectKind, Provenance, RelationKind, Store};

/// A book of `leaves` leaves in chapters of 25, over a store with about
/// `relations` random relations among those objects.
pub fn large_book(leaves: usize, relations: usize, seed: u64) -> (Textbook, Store) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = Store::new();
    let id = |i: usize| ObjectId::new(format!("o{i}")).expect("valid id");
    for i in 0..leaves {
        let o = KnowledgeObject::new(ObjectKind::Theorem, format!("o{i}")).with_id(&format!("o{i}"));
        store.put_knowledge(o).expect("fresh object");
    }
    let mut added = 0;
    while added < relations {
        let (a, b) = (rng.gen_range(0..leaves), rng.gen_range(0..leaves));
        let k = RelationKind::ALL[rng.gen_range(0..RelationKind::ALL.len())];
        if store.add_relation(&id(a), &id(b), k, Provenance::Manual).is_ok() {
            added += 1;
        }
    }
    let mut book = Textbook::new("large", &[("en", "Large")]);
    for (c, chunk) in (0..leaves).collect::<Vec<_>>().chunks(25).enumerate() {
        let mut s = Section::new(&format!("ch{c}"), &[]);
        for &i in chunk {
            s = s.leaf(&format!("o{i}"));
        }
        book.root = book.root.with(Node::Section(s));
    }
    (book, store)
}
