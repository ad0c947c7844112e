mod common;

use common::{seeded_dir, Events, Service};
use serde_json::json;

#[test]
fn objects_and_relations() {
    let (_dir, store, books) = seeded_dir();
    let s = Service::start(&store, &books);
    let (code, list) = s.get("/objects");
    assert_eq!(code, 200);
    let ids: Vec<&str> = list.as_array().unwrap().iter().map(|o| o["id"].as_str().unwrap()).collect();
    assert!(ids.contains(&"simson") && ids.contains(&"def-foot"), "{ids:?}");
    assert_eq!(s.get("/objects?keywords=Simson").1.as_array().unwrap().len(), 1);
    assert_eq!(s.get("/objects/simson").1["kind"], "Theorem");
    assert_eq!(s.get("/objects/ghost").0, 404);

    let obj = json!({ "kind": "Remark", "name": "Aside", "natural": { "en": "An aside." } });
    let (code, created) = s.post("/objects", obj);
    assert_eq!(code, 201);
    let id = created["id"].as_str().unwrap().to_string();
    let (code, _) = s.put(&format!("/objects/{id}"), json!({ "kind": "Remark", "name": "Renamed" }));
    assert_eq!(code, 200);
    assert_eq!(s.get(&format!("/objects/{id}")).1["name"], "Renamed");
    assert_eq!(s.post("/objects", json!({ "id": "simson", "kind": "Remark", "name": "x" })).0, 409);
    assert_eq!(s.post("/objects", json!({ "kind": "Definition2", "name": "x" })).0, 422);

    let rel = json!({ "source": id, "target": "simson", "kind": "Remark" });
    assert_eq!(s.post("/relations", rel.clone()).0, 201);
    assert_eq!(s.post("/relations", rel).0, 409);
    let (_, rels) = s.get("/relations?target=simson&kind=Context");
    assert_eq!(rels.as_array().unwrap().len(), 5);
    assert_eq!(s.get("/relations?kind=Sideways").0, 400);
}

#[test]
fn discover_and_accept() {
    let (_dir, store, books) = seeded_dir();
    let s = Service::start(&store, &books);
    let src = "A := point(); B := point(); M := midpoint(A, B); eqdist(M, A, M, B);";
    s.post("/objects", json!({ "id": "halves", "kind": "Lemma", "name": "Halves", "formal": src }));
    let (code, d) = s.post("/discover/halves", json!(null));
    assert_eq!(code, 200);
    let candidates = d["candidates"].clone();
    assert_eq!(candidates.as_array().unwrap().len(), 2);

    s.put("/objects/halves", json!({ "kind": "Lemma", "name": "Halves", "formal": "A := point(); eqdist(A, A, A, A);" }));
    let (code, err) = s.post("/discover/accept", json!({ "candidates": candidates }));
    assert_eq!((code, err["error"].as_str()), (409, Some("StaleCandidate")));

    let (_, d) = s.post("/discover/halves", json!(null));
    let (code, added) = s.post("/discover/accept", json!({ "candidates": d["candidates"] }));
    assert_eq!((code, added["added"].as_u64()), (200, Some(1)));
}

#[test]
fn late_foot_edit_and_conflict() {
    let (_dir, store, books) = seeded_dir();
    let s = Service::start(&store, &books);
    let (_, listed) = s.get("/books");
    assert_eq!(listed[0]["id"], "simson-ch");
    let mut events = Events::open(&s, "simson-ch");
    assert_eq!(events.next()["cause"], "snapshot");

    // simson moves into the definitions, ahead of def-foot.
    let op = json!({ "op": "move", "section": "lines", "index": 0, "toSection": "defs", "toIndex": 5 });
    let (code, r) = s.post("/books/simson-ch/edits", json!({ "serial": 0, "op": op }));
    assert_eq!(code, 200, "{r}");
    assert_eq!(r["serial"], 1);
    let violations = r["report"]["violations"].as_array().unwrap();
    assert_eq!(violations.len(), 1, "{violations:?}");
    assert_eq!(violations[0]["kind"], "orderingViolation");
    assert_eq!(violations[0]["relation"]["source"], "def-foot");
    let pushed = events.next();
    assert_eq!((pushed["serial"].clone(), pushed["report"].clone()), (json!(1), r["report"].clone()));

    let stale = s.post("/books/simson-ch/edits", json!({ "serial": 0, "op": r["inverse"] }));
    assert_eq!(stale.0, 409);
    assert_eq!(stale.1["currentSerial"], 1);

    let (code, back) = s.post("/books/simson-ch/edits", json!({ "serial": 1, "op": r["inverse"] }));
    assert_eq!(code, 200);
    assert_eq!(back["report"]["violations"], json!([]));
    assert_eq!(events.next()["serial"], 2);
    assert_eq!(s.get("/books/simson-ch").1["book"]["serial"], 2);
}

#[test]
fn books_render_prove_figure() {
    let (_dir, store, books) = seeded_dir();
    let s = Service::start(&store, &books);
    let book = json!({ "serial": 0, "root": { "id": "tiny", "title": { "en": "Tiny" }, "children": [{ "leaf": "def-point" }] } });
    let (code, created) = s.post("/books", book.clone());
    assert_eq!(code, 201, "{created}");
    assert_eq!(s.post("/books", book).0, 409);
    assert!(books.join("tiny.book").exists());

    let (code, html) = s.text("/books/simson-ch/render?locale=zh&format=html");
    assert_eq!(code, 200);
    assert!(html.contains("定理"));
    let (_, xml) = s.text("/books/simson-ch/render?format=xml&section=lines");
    assert!(xml.contains("<object id=\"simson\""), "{xml}");
    assert_eq!(s.text("/books/simson-ch/render?format=pdf").0, 400);

    let (code, proof) = s.post("/prove/simson", json!({ "direction": "backward" }));
    assert_eq!(code, 200);
    assert_eq!(proof["goals"][0]["result"]["status"], "proved");
    assert_eq!(s.post("/prove/simson-proof", json!(null)).0, 422);

    let drag = json!({ "assignment": { "C": [1.5, 2.5] } });
    let (code, fig) = s.post("/figure/simson/evaluate", drag);
    assert_eq!(code, 200);
    assert_eq!(fig["figure"]["objects"]["C"]["x"], 1.5);
    assert!(fig["figure"]["conclusionResidual"].as_f64().unwrap() < 1e-9);
    let (code, script) = s.text("/figure/simson/script?dialect=ggb-commands");
    assert_eq!(code, 200);
    assert!(script.contains("Circle("));
    assert_eq!(s.text("/figure/simson/script?dialect=svg").0, 400);
}
