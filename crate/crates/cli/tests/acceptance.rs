//! Acceptance run: one PASS/FAIL line per criterion.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use common::{seeded_dir, Events, Service};
use geobook_core::backends::{ProofStatus, WuLimits};
use geobook_core::book::{check, EditOp, Order, Policy, Severity, Textbook, ViolationKind};
use geobook_core::discover::discover;
use geobook_core::fixtures::{simson_book, simson_store};
use geobook_core::gen::{random_book, random_poly, random_program, random_store, without_spans};
use geobook_core::geolang::{parse, pretty};
use geobook_core::pipeline::{formal_source, prove_object, Pipeline};
use geobook_core::render::{to_html, to_xml, Scope, Theme};
use geobook_core::store::{ObjectId, RelationKind, Store};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn id(s: &str) -> ObjectId {
    ObjectId::new(s).unwrap()
}

fn c1_simson_proved() -> Outcome {
    let store = simson_store();
    let start = Instant::now();
    let proofs = prove_object(&store, &id("simson"), None, &WuLimits::default()).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure!(proofs.len() == 2, "expected two goals, got {}", proofs.len());
    let mut parts = Vec::new();
    for p in &proofs {
        ensure!(p.result.status == ProofStatus::Proved, "{} is {:?}", p.goal, p.result.status);
        ensure!(!p.result.nondegeneracy.is_empty(), "{} has no nondegeneracy conditions", p.goal);
        parts.push(format!("{} ({} conditions)", p.goal, p.result.nondegeneracy.len()));
    }
    ensure!(took.as_secs_f64() < 60.0, "took {took:?}");
    Ok(format!("Simson {} proved in {:.0?}", parts.join(" and "), took))
}

fn c2_wu_matches_oracle() -> Outcome {
    let store = simson_store();
    let pipe = Pipeline::for_store(&store);
    let theorems = ["simson", "midline", "midpoint-unique", "circumcenter-bisector", "false-pedal"];
    let (mut proved, mut refuted) = (0, 0);
    for t in theorems {
        let src = formal_source(&store, &id(t)).map_err(|e| e.to_string())?;
        let proofs = pipe.prove(src, None, &WuLimits::default()).map_err(|e| e.to_string())?;
        let oracle = pipe.oracle(src, None, 1000, 0x5eed).map_err(|e| e.to_string())?;
        ensure!(proofs.len() == oracle.len(), "{t}: goal count differs");
        for (p, (label, report)) in proofs.iter().zip(&oracle) {
            ensure!(report.instances == 1000, "{t} {label}: only {} instances", report.instances);
            let small = report.max_residual < 1e-9;
            let large = report.max_residual > 1e-3;
            match p.result.status {
                ProofStatus::Proved => {
                    ensure!(small, "{t} {label}: proved but residual {:e}", report.max_residual);
                    proved += 1;
                }
                ProofStatus::RefutedNumerically => {
                    ensure!(large, "{t} {label}: refuted but residual {:e}", report.max_residual);
                    refuted += 1;
                }
                ProofStatus::Inconclusive => return Err(format!("{t} {label}: inconclusive")),
            }
            ensure!(p.result.status == ProofStatus::Proved || !small, "{t} {label}: not proved but residual small");
        }
    }
    Ok(format!("{} theorems, {proved} goals proved and {refuted} refuted, 1000 instances each", theorems.len()))
}

fn c3_discover_simson() -> Outcome {
    let mut store = Store::new();
    for o in simson_store().objects() {
        store.put_knowledge(o.clone()).map_err(|e| e.to_string())?;
    }
    let d = discover(&id("simson"), &store).map_err(|e| e.to_string())?;
    ensure!(d.candidates.len() == 5, "{} candidates", d.candidates.len());
    ensure!(d.candidates.iter().all(|c| c.kind == RelationKind::Context), "non-Context candidate");
    let sources: BTreeSet<&str> = d.candidates.iter().map(|c| c.source.as_str()).collect();
    let want = BTreeSet::from(["def-circumcircle", "def-foot", "def-line", "def-point", "def-triangle"]);
    ensure!(sources == want, "sources {sources:?}");
    Ok(format!("5 Context candidates from {}", sources.into_iter().collect::<Vec<_>>().join(", ")))
}

/// Violated relations by direct search of the reading order.
fn brute_violations(book: &Textbook, store: &Store, policy: &Policy) -> BTreeSet<(ObjectId, ObjectId, RelationKind)> {
    let order = book.linearize();
    let at = |x: &ObjectId| order.iter().position(|o| o == x);
    store
        .relations()
        .filter(|r| {
            let rule = policy.rule(r.kind);
            match (at(&r.source), at(&r.target)) {
                (Some(s), Some(t)) => match rule.order {
                    Order::SourceFirst => s >= t,
                    Order::TargetFirst => t >= s,
                    Order::AdjacentAfterTarget => s != t + 1,
                    Order::None => false,
                },
                (None, Some(_)) => rule.required,
                _ => false,
            }
        })
        .map(|r| (r.source, r.target, r.kind))
        .collect()
}

fn c4_checker() -> Outcome {
    let store = simson_store();
    let policy = Policy::default_policy();
    let late_foot = EditOp::Move { section: "defs".into(), index: 5, to_section: "lines".into(), to_index: 1 };
    let (book, _) = simson_book().apply(&late_foot).map_err(|e| e.to_string())?;
    let report = check(&book, &store, &policy);
    let errors: Vec<_> = report.errors().collect();
    ensure!(errors.len() == 1 && report.violations.len() == 1, "{} violations", report.violations.len());
    let v = errors[0];
    ensure!(v.kind == ViolationKind::OrderingViolation && v.severity == Severity::Error, "{:?}", v.kind);
    ensure!(v.relation.as_ref().is_some_and(|r| r.source == id("def-foot")), "does not name def-foot");
    let swap = EditOp::Move { section: "lines".into(), index: 1, to_section: "lines".into(), to_index: 0 };
    let (fixed, after) = book.edit(&swap, Some((&store, &policy))).map_err(|e| e.to_string())?;
    ensure!(after.is_some_and(|r| r.is_consistent()), "swap leaves violations");
    ensure!(fixed.linearize().iter().position(|o| o == &id("def-foot")) < fixed.linearize().iter().position(|o| o == &id("simson")), "order");

    let (mut leaves, mut inconsistent) = (0, 0);
    for seed in 0..500u64 {
        let (book, store) = random_book(seed, 200, 1.0);
        leaves = leaves.max(book.linearize().len());
        let report = check(&book, &store, &policy);
        let got: BTreeSet<_> = report
            .violations
            .iter()
            .filter(|v| matches!(v.kind, ViolationKind::OrderingViolation | ViolationKind::MissingPrerequisite))
            .filter_map(|v| v.relation.as_ref().map(|r| (r.source.clone(), r.target.clone(), r.kind)))
            .collect();
        let want = brute_violations(&book, &store, &policy);
        ensure!(got == want, "seed {seed}: checker and brute force disagree");
        ensure!(report.is_consistent() == want.is_empty(), "seed {seed}: consistency differs");
        inconsistent += usize::from(!want.is_empty());
    }
    ensure!(leaves <= 200, "instance with {leaves} leaves");
    Ok(format!("def-foot placed after simson is the single error and the swap clears it; 500 random books (up to {leaves} leaves, {inconsistent} inconsistent) agree with brute force"))
}

fn c5_queries_match_scan() -> Outcome {
    let words = ["point", "line", "circle", "foot", "angle", "simson", "median", "chord", "missing"];
    let mut queries = 0;
    for seed in 0..100u64 {
        let store = random_store(seed, 1000, 1000);
        ensure!(store.objects().count() <= 1000 && store.relations().count() <= 1000, "seed {seed}: too large");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let k = rng.gen_range(1..=3);
            let q: Vec<String> = (0..k).map(|_| words[rng.gen_range(0..words.len())].to_uppercase()).collect();
            let scan: BTreeSet<ObjectId> =
                store.objects().filter(|o| q.iter().all(|w| o.keywords.iter().any(|x| x.eq_ignore_ascii_case(w)))).filter_map(|o| o.id.clone()).collect();
            ensure!(store.query_keywords(&q).map_err(|e| e.to_string())? == scan, "seed {seed}: keywords {q:?}");
            let ids: Vec<ObjectId> = store.objects().filter_map(|o| o.id.clone()).collect();
            let x = &ids[rng.gen_range(0..ids.len())];
            let kind = RelationKind::ALL[rng.gen_range(0..RelationKind::ALL.len())];
            let by_target: BTreeSet<ObjectId> = store.relations().filter(|r| &r.target == x && r.kind == kind).map(|r| r.source).collect();
            let by_source: BTreeSet<ObjectId> = store.relations().filter(|r| &r.source == x && r.kind == kind).map(|r| r.target).collect();
            ensure!(store.query_relation(None, Some(x), kind).map_err(|e| e.to_string())? == by_target, "seed {seed}: relation[*, {x}, {kind}]");
            ensure!(store.query_relation(Some(x), None, kind).map_err(|e| e.to_string())? == by_source, "seed {seed}: relation[{x}, *, {kind}]");
            queries += 3;
        }
    }
    Ok(format!("{queries} queries on 100 random stores match a linear scan"))
}

fn c6_round_trips() -> Outcome {
    for seed in 0..200u64 {
        let p = random_program(seed);
        let text = pretty(&p);
        let back = parse(&text).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure!(without_spans(&back) == p, "seed {seed}: parse(pretty(p)) differs from p");
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("s.store");
    let mut stores: Vec<Store> = (0..20u64).map(|s| random_store(s, 300, 300)).collect();
    stores.push(simson_store());
    for (i, s) in stores.iter().enumerate() {
        s.save(&path).map_err(|e| e.to_string())?;
        let back = Store::load(&path).map_err(|e| e.to_string())?;
        ensure!(back.state_hash() == s.state_hash(), "store {i}: state hash changed");
        ensure!(back.to_text() == std::fs::read_to_string(&path).map_err(|e| e.to_string())?, "store {i}: resave differs");
    }
    let render = |store: &Store| -> Result<Vec<String>, String> {
        let mut out = Vec::new();
        for (locale, theme) in [("en", Theme::DefaultEn), ("zh", Theme::DefaultZh)] {
            let doc = to_xml(&simson_book(), store, &Scope::Whole, locale).map_err(|e| e.to_string())?;
            out.push(doc.to_xml_string());
            out.push(to_html(&doc, theme));
        }
        Ok(out)
    };
    simson_store().save(&path).map_err(|e| e.to_string())?;
    let reloaded = Store::load(&path).map_err(|e| e.to_string())?;
    ensure!(render(&simson_store())? == render(&reloaded)?, "render output differs between runs");
    Ok("200 generated programs, 21 stores and the rendered chapter round-trip byte for byte".into())
}

fn c7_prem_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut nontrivial = 0;
    for i in 0..1000 {
        let g = random_poly(&mut rng, 3, 6, 4, 9);
        let f = random_poly(&mut rng, 3, 4, 3, 9);
        if f.is_zero() {
            continue;
        }
        let v = rng.gen_range(0..3);
        let (r, q, k) = g.prem(&f, v);
        ensure!(r.is_zero() || r.degree(v) < f.degree(v) || f.degree(v) == 0, "pair {i}: degree of remainder");
        let lc = f.lc(v);
        for _ in 0..4 {
            let pt: Vec<BigInt> = (0..3).map(|_| BigInt::from(rng.gen_range(-50..=50))).collect();
            let lhs = lc.eval_int(&pt).pow(k) * g.eval_int(&pt);
            let rhs = q.eval_int(&pt) * f.eval_int(&pt) + r.eval_int(&pt);
            ensure!(lhs == rhs, "pair {i}: identity fails at {pt:?}");
        }
        nontrivial += usize::from(k > 0 && f.degree(v) > 0);
    }
    Ok(format!("lc^k g = q f + r holds on 1000 random pairs ({nontrivial} with a division step), checked at integer points"))
}

fn snapshot(s: &Service) -> Value {
    json!({
        "objects": s.get("/objects").1,
        "relations": s.get("/relations").1,
        "books": s.get("/books").1,
        "book": s.get("/books/simson-ch").1,
        "simson": s.get("/relations?target=simson").1,
        "keywords": s.get("/objects?keywords=simson").1,
    })
}

fn c8_service() -> Outcome {
    let (_dir, store, books) = seeded_dir();
    let s = Service::start(&store, &books);
    let mut events = Events::open(&s, "simson-ch");
    ensure!(events.next()["cause"] == "snapshot", "no snapshot event");
    let mut acked = Vec::new();
    for i in 0..10 {
        let (code, body) = s.post("/objects", json!({ "id": format!("note-{i}"), "kind": "Remark", "name": format!("Note {i}"), "keywords": ["simson"] }));
        ensure!(code == 201, "object {i}: {code} {body}");
        let (code, _) = s.post("/relations", json!({ "source": format!("note-{i}"), "target": "simson", "kind": "Remark" }));
        ensure!(code == 201, "relation {i}: {code}");
    }
    let moves = [
        json!({ "op": "move", "section": "defs", "index": 5, "toSection": "lines", "toIndex": 1 }),
        json!({ "op": "move", "section": "lines", "index": 1, "toSection": "lines", "toIndex": 0 }),
        json!({ "op": "insert", "section": "more", "index": 0, "node": { "leaf": "note-0" } }),
        json!({ "op": "rename", "section": "more", "title": { "en": "Further results" } }),
    ];
    for (i, op) in moves.iter().cycle().take(12).enumerate() {
        let serial = i as u64;
        let (code, r) = s.post("/books/simson-ch/edits", json!({ "serial": serial, "op": op }));
        let (code, r) = if code == 200 {
            (code, r)
        } else {
            // Inserting an existing leaf fails; undo it instead.
            s.post("/books/simson-ch/edits", json!({ "serial": serial, "op": { "op": "remove", "section": "more", "index": 0 } }))
        };
        ensure!(code == 200, "edit {i}: {code} {r}");
        acked.push(r);
    }
    for (i, r) in acked.iter().enumerate() {
        let e = events.next();
        ensure!(e["serial"] == r["serial"] && e["report"] == r["report"], "event {i} does not match edit {}", r["serial"]);
    }
    let serial = acked.last().map(|r| r["serial"].as_u64().unwrap()).unwrap_or(0);
    let racers: Vec<_> = (0..4)
        .map(|_| {
            let url = s.url("/books/simson-ch/edits");
            std::thread::spawn(move || {
                let body = json!({ "serial": serial, "op": { "op": "rename", "section": "defs", "title": { "en": "Defs" } } });
                reqwest::blocking::Client::new().post(url).json(&body).send().unwrap().status().as_u16()
            })
        })
        .collect();
    let mut codes: Vec<u16> = racers.into_iter().map(|t| t.join().unwrap()).collect();
    codes.sort();
    ensure!(codes == [200, 409, 409, 409], "same-serial edits answered {codes:?}");

    let before = snapshot(&s);
    s.kill();
    let s = Service::start(&store, &books);
    let after = snapshot(&s);
    ensure!(before == after, "state differs after kill -9 and restart");
    Ok(format!("20 store writes and {} edits survive kill -9; events match edits 1:1 in order; racing edits get one 200", acked.len() + 1))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("simson both directions", c1_simson_proved),
        ("wu and numeric oracle agree", c2_wu_matches_oracle),
        ("discover simson", c3_discover_simson),
        ("consistency checker", c4_checker),
        ("queries", c5_queries_match_scan),
        ("round trips", c6_round_trips),
        ("pseudo-remainder identity", c7_prem_identity),
        ("service durability and ordering", c8_service),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()));
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
