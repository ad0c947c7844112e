use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn geobook(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geobook")).current_dir(dir).env_remove("GEOBOOK_STORE").env_remove("GEOBOOK_BOOKS").args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Checks `value` against one definition of the documented schema.
fn assert_schema(def: &str, value: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/cli-output.schema.json");
    let mut schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    schema["$ref"] = Value::String(format!("#/$defs/{def}"));
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{def}: {errors:?}\n{value:#}");
}

fn json(dir: &Path, args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let o = geobook(dir, &all);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn seeded() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    assert!(geobook(dir.path(), &["init", "--seed"]).status.success());
    dir
}

#[test]
fn json_output_matches_schema_for_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_schema("init", &json(d, &["init", "--seed"]));
    assert_schema("put", &json(d, &["put", "--kind", "Remark", "--name", "Aside", "--natural", "en=Note"]));
    let q = json(d, &["query", "keyWords[Simson]"]);
    assert_schema("query", &q);
    assert_eq!(q["ids"], serde_json::json!(["simson"]));
    assert_schema("discover", &json(d, &["discover", "false-pedal"]));
    assert_schema("bookCheck", &json(d, &["book", "check", "books/simson-ch.book"]));
    assert_schema("render", &json(d, &["render", "books/simson-ch.book", "--out", "out"]));
    assert_schema("prove", &json(d, &["prove", "simson", "--direction", "forward"]));
    assert_schema("prove", &json(d, &["prove", "false-pedal"]));
    assert_schema("figure", &json(d, &["figure", "simson"]));
    assert_schema("figureScript", &json(d, &["figure", "simson", "--dialect", "ggb-commands"]));

    let o = geobook(d, &["prove", "nope", "--format", "json"]);
    assert_eq!(o.status.code(), Some(2));
    assert_schema("error", &serde_json::from_slice(&o.stderr).unwrap());
}

#[test]
fn shipped_fixture_book_is_consistent() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let o = geobook(&root, &["--store", "fixtures/simson-chapter.store", "book", "check", "fixtures/simson-ch.book"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "0 violations");
}

#[test]
fn prove_lists_conditions() {
    let dir = seeded();
    let o = geobook(dir.path(), &["prove", "simson", "--direction", "forward"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("forward: proved\n"), "{out}");
    assert!(out.lines().filter(|l| l.trim_start().starts_with("provided ")).count() > 0);
}

#[test]
fn discover_accept_and_query() {
    let dir = seeded();
    let d = dir.path();
    let src = "A := point(); B := point(); M := midpoint(A, B); eqdist(M, A, M, B);";
    std::fs::write(d.join("t.geo"), src).unwrap();
    let id = stdout(&geobook(d, &["put", "--kind", "Lemma", "--name", "Halves", "--id", "halves", "--formal", "t.geo"]));
    assert_eq!(id.trim(), "halves");
    let out = json(d, &["discover", "halves", "--accept"]);
    assert_eq!(out["accepted"], 2);
    let q = json(d, &["query", "relation[*, halves, Context]"]);
    assert_eq!(q["ids"], serde_json::json!(["def-midpoint", "def-point"]));
}

#[test]
fn failing_check_exits_nonzero() {
    let dir = seeded();
    let d = dir.path();
    let book = std::fs::read_to_string(d.join("books/simson-ch.book")).unwrap();
    let swapped = book.replace("\"def-foot\"", "\"TMP\"").replace("\"def-point\"", "\"def-foot\"").replace("\"TMP\"", "\"def-point\"");
    std::fs::write(d.join("bad.book"), swapped).unwrap();
    let o = geobook(d, &["book", "check", "bad.book"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("error: OrderingViolation"));
}

#[test]
fn init_refuses_to_overwrite() {
    let dir = seeded();
    let o = geobook(dir.path(), &["init"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(geobook(dir.path(), &["init", "--force"]).status.success());
}
