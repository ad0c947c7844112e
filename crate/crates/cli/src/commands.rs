use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use geobook_core::backends::{evaluate, export_script, FreeAssignment, WuLimits};
use geobook_core::book::{check, Policy, Severity, Textbook};
use geobook_core::discover::{accept_candidates, discover};
use geobook_core::fixtures::{simson_book, simson_store};
use geobook_core::pipeline::{figure_object, prove_object};
use geobook_core::render::{to_html, to_xml, Scope, Theme};
use geobook_core::store::{parse_query, KnowledgeObject, ObjectId, ObjectKind, Store};

use crate::{BookCommand, Cli, Command, Format, PutArgs};

/// What a command prints: a human form and a JSON form.
struct Output {
    text: String,
    json: Value,
    code: i32,
}

impl Output {
    fn ok(text: String, json: Value) -> Output {
        Output { text, json, code: 0 }
    }
}

/// Runs a parsed command line and returns the exit status.
pub fn run(cli: Cli) -> Result<i32> {
    if let Command::Serve { port } = cli.command {
        let rt = tokio::runtime::Runtime::new()?;
        rt.block_on(crate::server::serve(crate::server::Config { port, store: cli.store.clone(), books: cli.books_dir(), json: cli.format == Format::Json }))?;
        return Ok(0);
    }
    let out = dispatch(&cli)?;
    let body = match cli.format {
        Format::Text => out.text.trim_end().to_string(),
        Format::Json => serde_json::to_string_pretty(&out.json)?,
    };
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{body}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
        _ => {}
    }
    Ok(out.code)
}

fn load(path: &Path) -> Result<Store> {
    Store::load(path).with_context(|| format!("cannot load store {}", path.display()))
}

fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn oid(s: &str) -> Result<ObjectId> {
    Ok(ObjectId::new(s)?)
}

fn dispatch(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Init { seed, force } => init(cli, *seed, *force),
        Command::Put(args) => put(&cli.store, args),
        Command::Query { query } => {
            let store = load(&cli.store)?;
            let ids = parse_query(query)?.execute(&store)?;
            let text = ids.iter().map(|i| format!("{i}\n")).collect();
            Ok(Output::ok(text, json!({ "ids": ids })))
        }
        Command::Discover { id, accept } => {
            let mut store = load(&cli.store)?;
            let d = discover(&oid(id)?, &store)?;
            let mut text = String::new();
            for c in &d.candidates {
                let ev: Vec<_> = c.evidence.iter().cloned().collect();
                text += &format!("{} -> {} {} ({}){}\n", c.source, c.target, c.kind, ev.join(", "), if c.ambiguous { " ambiguous" } else { "" });
            }
            for w in &d.warnings {
                text += &format!("warning: {}\n", serde_json::to_string(w)?);
            }
            let accepted = if *accept {
                let n = accept_candidates(&d.candidates, &mut store)?;
                store.save(&cli.store)?;
                text += &format!("{n} relations added\n");
                Some(n)
            } else {
                None
            };
            Ok(Output::ok(text, json!({ "candidates": d.candidates, "warnings": d.warnings, "accepted": accepted })))
        }
        Command::Book(BookCommand::Check { book, policy }) => {
            let store = load(&cli.store)?;
            let book = Textbook::load(book)?;
            let policy = match policy {
                Some(p) => read_input(p)?.parse::<Policy>()?,
                None => Policy::default_policy(),
            };
            let report = check(&book, &store, &policy);
            let errors = report.errors().count();
            let mut text = format!("{} violations\n", report.violations.len());
            for v in &report.violations {
                let sev = if v.severity == Severity::Error { "error" } else { "warning" };
                text += &format!("{sev}: {:?}: {}\n", v.kind, v.message);
            }
            let json = json!({
                "book": book.id(),
                "serial": book.serial,
                "consistent": report.is_consistent(),
                "errors": errors,
                "violations": report.violations,
            });
            Ok(Output { text, json, code: i32::from(errors > 0) })
        }
        Command::Render { book, locale, theme, section, out } => render(cli, book, locale, theme.as_deref(), section.as_deref(), out),
        Command::Prove { id, direction, max_steps } => {
            let store = load(&cli.store)?;
            let mut limits = WuLimits::default();
            if let Some(m) = max_steps {
                limits.max_steps = *m;
            }
            let proofs = prove_object(&store, &oid(id)?, direction.as_deref(), &limits)?;
            let mut text = String::new();
            for p in &proofs {
                text += &format!("{}: {}\n", p.goal, serde_json::to_value(p.result.status)?.as_str().unwrap_or("?"));
                for c in &p.result.nondegeneracy {
                    text += &format!("  provided {c}\n");
                }
                if let Some(n) = &p.result.numeric {
                    text += &format!("  numeric: {}\n", serde_json::to_string(n)?);
                }
            }
            Ok(Output::ok(text, json!({ "object": id, "goals": proofs })))
        }
        Command::Figure { id, dialect } => {
            let store = load(&cli.store)?;
            let seq = figure_object(&store, &oid(id)?)?;
            if let Some(d) = dialect {
                let script = export_script(&seq, d)?;
                return Ok(Output::ok(script.clone(), json!({ "object": id, "dialect": d, "script": script })));
            }
            let fig = evaluate(&seq, &FreeAssignment::new());
            let mut text = String::new();
            for (name, c) in &fig.objects {
                text += &format!("{name} = {}\n", serde_json::to_string(c)?);
            }
            text += &format!("conclusion residual {:e}\n", fig.conclusion_residual);
            Ok(Output::ok(text, json!({ "object": id, "construction": seq, "figure": fig })))
        }
        Command::Serve { .. } => unreachable!("handled by run"),
    }
}

fn init(cli: &Cli, seed: bool, force: bool) -> Result<Output> {
    if cli.store.exists() && !force {
        bail!("{} already exists; pass --force to overwrite", cli.store.display());
    }
    let store = if seed { simson_store() } else { Store::new() };
    store.save(&cli.store)?;
    let mut books = Vec::new();
    if seed {
        let dir = cli.books_dir();
        std::fs::create_dir_all(&dir)?;
        let b = simson_book();
        let path = dir.join(format!("{}.book", b.id()));
        b.save(&path)?;
        books.push(path);
    }
    let n = store.objects().count();
    let mut text = format!("initialized {} with {n} objects\n", cli.store.display());
    for b in &books {
        text += &format!("wrote {}\n", b.display());
    }
    Ok(Output::ok(text, json!({ "store": cli.store, "objects": n, "books": books })))
}

fn put(path: &Path, args: &PutArgs) -> Result<Output> {
    let obj = match &args.json {
        Some(p) => serde_json::from_str::<KnowledgeObject>(&read_input(p)?).context("invalid knowledge object")?,
        None => {
            let kind: ObjectKind = args.kind.as_deref().unwrap_or_default().parse()?;
            let mut o = KnowledgeObject::new(kind, args.name.clone().unwrap_or_default());
            o.id = args.id.as_deref().map(oid).transpose()?;
            o.keywords = args.keywords.clone();
            for n in &args.natural {
                let (locale, text) = n.split_once('=').with_context(|| format!("expected locale=text, got `{n}`"))?;
                o.natural.insert(locale.into(), text.into());
            }
            o.formal = args.formal.as_deref().map(read_input).transpose()?;
            o.diagram = args.diagram.as_deref().map(read_input).transpose()?;
            o
        }
    };
    let mut store = load(path)?;
    let id = store.put_knowledge(obj)?;
    store.save(path)?;
    Ok(Output::ok(format!("{id}\n"), json!({ "id": id })))
}

fn render(cli: &Cli, book: &Path, locale: &str, theme: Option<&str>, section: Option<&str>, out: &Path) -> Result<Output> {
    let store = load(&cli.store)?;
    let book = Textbook::load(book)?;
    let theme = match theme {
        Some(t) => t.parse::<Theme>()?,
        None => Theme::for_locale(locale),
    };
    let scope = section.map_or(Scope::Whole, |s| Scope::Section(s.into()));
    let doc = to_xml(&book, &store, &scope, locale)?;
    std::fs::create_dir_all(out)?;
    let stem = section.unwrap_or(book.id());
    let xml: PathBuf = out.join(format!("{stem}.{locale}.xml"));
    let html: PathBuf = out.join(format!("{stem}.{locale}.html"));
    std::fs::write(&xml, doc.to_xml_string())?;
    std::fs::write(&html, to_html(&doc, theme))?;
    let text = format!("wrote {}\nwrote {}\n", xml.display(), html.display());
    Ok(Output::ok(text, json!({ "xml": xml, "html": html, "objects": doc.object_ids() })))
}
