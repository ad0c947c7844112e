#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};

use serde_json::Value;

/// A `geobook serve` child process on an ephemeral port.
pub struct Service {
    pub child: Child,
    pub base: String,
    pub store: PathBuf,
    pub books: PathBuf,
}

impl Service {
    pub fn start(store: &Path, books: &Path) -> Service {
        let mut child = Command::new(env!("CARGO_BIN_EXE_geobook"))
            .args(["serve", "--port", "0", "--store"])
            .arg(store)
            .arg("--books")
            .arg(books)
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .unwrap();
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let base = line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("unexpected banner `{line}`")).to_string();
        Service { child, base, store: store.into(), books: books.into() }
    }

    /// Sends SIGKILL; nothing gets a chance to flush.
    pub fn kill(mut self) {
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub fn get(&self, path: &str) -> (u16, Value) {
        send(reqwest::blocking::Client::new().get(self.url(path)))
    }

    pub fn post(&self, path: &str, body: Value) -> (u16, Value) {
        send(reqwest::blocking::Client::new().post(self.url(path)).json(&body))
    }

    pub fn put(&self, path: &str, body: Value) -> (u16, Value) {
        send(reqwest::blocking::Client::new().put(self.url(path)).json(&body))
    }

    pub fn text(&self, path: &str) -> (u16, String) {
        let r = reqwest::blocking::get(self.url(path)).unwrap();
        (r.status().as_u16(), r.text().unwrap())
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn send(req: reqwest::blocking::RequestBuilder) -> (u16, Value) {
    let r = req.send().unwrap();
    let status = r.status().as_u16();
    let text = r.text().unwrap();
    (status, if text.is_empty() { Value::Null } else { serde_json::from_str(&text).unwrap_or(Value::String(text)) })
}

/// A temporary directory seeded with the Simson chapter.
pub fn seeded_dir() -> (tempfile::TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("geobook.store");
    let books = dir.path().join("books");
    let ok = Command::new(env!("CARGO_BIN_EXE_geobook")).args(["init", "--seed", "--store"]).arg(&store).arg("--books").arg(&books).output().unwrap();
    assert!(ok.status.success());
    (dir, store, books)
}

/// Reads server-sent events from a stream, returning each `data:` payload.
pub struct Events {
    reader: BufReader<reqwest::blocking::Response>,
}

impl Events {
    pub fn open(service: &Service, book: &str) -> Events {
        let client = reqwest::blocking::Client::builder().timeout(None).build().unwrap();
        let r = client.get(service.url(&format!("/books/{book}/events"))).send().unwrap();
        assert_eq!(r.status().as_u16(), 200);
        Events { reader: BufReader::new(r) }
    }

    pub fn next(&mut self) -> Value {
        let mut data = String::new();
        loop {
            let mut line = String::new();
            assert!(self.reader.read_line(&mut line).unwrap() > 0, "event stream closed");
            let line = line.trim_end();
            if let Some(d) = line.strip_prefix("data:") {
                data.push_str(d.trim_start());
            } else if line.is_empty() && !data.is_empty() {
                return serde_json::from_str(&data).unwrap();
            }
        }
    }
}
