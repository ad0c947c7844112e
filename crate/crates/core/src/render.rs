//! XML documents assembled from a textbook and the store, and the HTML
//! transform.
//!
//! ```xml
//! <textbook id="simson-ch" locale="en" version="1">
//!   <title>Simson lines</title>
//!   <category id="s1">
//!     <title fallback="en">Definitions</title>
//!     <object id="def-foot" kind="Concept">
//!       <name>Foot of a perpendicular</name>
//!       <natural locale="en">...</natural>
//!       <formal>foot(P::Point, l::Line) ::= ...</formal>
//!       <figure-ref object="def-foot"/>
//!       <proof-ref object="simson-proof"/>
//!     </object>
//!   </category>
//! </textbook>
//! ```
//!
//! `fallback` names the locale actually used when the requested one has no
//! text. `figure-ref` appears when the object has a diagram instruction and
//! `proof-ref` once per Proof object justifying it.

use std::collections::BTreeMap;
use std::fmt::Write;

use thiserror::Error;

use crate::book::{BookError, Node, Section, Textbook};
use crate::geolang::{parse, pretty};
use crate::store::{KnowledgeObject, ObjectId, ObjectKind, RelationKind, Store};

pub const DEFAULT_LOCALE: &str = "en";
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error(transparent)]
    Book(#[from] BookError),
    #[error("unknown theme `{0}`")]
    UnknownTheme(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    Whole,
    Section(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub name: &'static str,
    pub attrs: Vec<(&'static str, String)>,
    pub children: Vec<Content>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Content {
    Element(Element),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub root: Element,
}

impl Element {
    fn new(name: &'static str) -> Self {
        Element { name, attrs: vec![], children: vec![] }
    }

    fn attr(mut self, k: &'static str, v: impl Into<String>) -> Self {
        self.attrs.push((k, v.into()));
        self
    }

    fn text(mut self, t: impl Into<String>) -> Self {
        self.children.push(Content::Text(t.into()));
        self
    }

    fn child(mut self, e: Element) -> Self {
        self.children.push(Content::Element(e));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| *k == key).map(|(_, v)| v.as_str())
    }

    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.children.iter().filter_map(|c| match c {
            Content::Element(e) => Some(e),
            Content::Text(_) => None,
        })
    }

    pub fn text_content(&self) -> String {
        let mut s = String::new();
        for c in &self.children {
            match c {
                Content::Text(t) => s.push_str(t),
                Content::Element(e) => s.push_str(&e.text_content()),
            }
        }
        s
    }

    fn write_xml(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        let _ = write!(out, "{pad}<{}", self.name);
        for (k, v) in &self.attrs {
            let _ = write!(out, " {k}=\"{}\"", escape(v));
        }
        if self.children.is_empty() {
            out.push_str("/>\n");
        } else if self.children.iter().all(|c| matches!(c, Content::Text(_))) {
            let _ = writeln!(out, ">{}</{}>", escape(&self.text_content()), self.name);
        } else {
            out.push_str(">\n");
            for c in &self.children {
                match c {
                    Content::Element(e) => e.write_xml(out, depth + 1),
                    Content::Text(t) => {
                        let _ = writeln!(out, "{pad}  {}", escape(t));
                    }
                }
            }
            let _ = writeln!(out, "{pad}</{}>", self.name);
        }
    }
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

impl Document {
    pub fn to_xml_string(&self) -> String {
        let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        self.root.write_xml(&mut out, 0);
        out
    }

    /// Object ids in document order.
    pub fn object_ids(&self) -> Vec<String> {
        fn walk(e: &Element, out: &mut Vec<String>) {
            for c in e.elements() {
                if c.name == "object" {
                    out.extend(c.get("id").map(str::to_string));
                } else if c.name == "category" {
                    walk(c, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }
}

/// The text for `locale`, else for the default locale, else the first one.
/// The second value is the locale used when it differs from the request.
fn localized<'a>(map: &'a BTreeMap<String, String>, locale: &str) -> Option<(&'a str, Option<&'a str>)> {
    if let Some(t) = map.get(locale) {
        return Some((t, None));
    }
    map.get_key_value(DEFAULT_LOCALE).or_else(|| map.iter().next()).map(|(l, t)| (t.as_str(), Some(l.as_str())))
}

fn localized_element(name: &'static str, map: &BTreeMap<String, String>, locale: &str) -> Option<Element> {
    localized(map, locale).map(|(text, fallback)| {
        let e = Element::new(name);
        let e = match fallback {
            Some(l) => e.attr("fallback", l),
            None => e,
        };
        e.text(text)
    })
}

fn object_element(id: &ObjectId, obj: &KnowledgeObject, store: &Store, locale: &str) -> Element {
    let mut e = Element::new("object").attr("id", id.as_str()).attr("kind", obj.kind.as_str());
    e = e.child(Element::new("name").text(obj.name.as_str()));
    if let Some((text, fallback)) = localized(&obj.natural, locale) {
        e = e.child(Element::new("natural").attr("locale", fallback.unwrap_or(locale)).text(text));
    }
    if let Some(src) = &obj.formal {
        let canonical = parse(src).map(|p| pretty(&p)).unwrap_or_else(|_| src.clone());
        e = e.child(Element::new("formal").text(canonical));
    }
    if obj.diagram.is_some() {
        e = e.child(Element::new("figure-ref").attr("object", id.as_str()));
    }
    if let Ok(justifiers) = store.query_relation(None, Some(id), RelationKind::Justification) {
        for p in justifiers {
            if store.object(&p).is_some_and(|o| o.kind == ObjectKind::Proof) {
                e = e.child(Element::new("proof-ref").attr("object", p.as_str()));
            }
        }
    }
    e
}

fn category_element(s: &Section, store: &Store, locale: &str) -> Result<Element, BookError> {
    let mut e = Element::new("category").attr("id", s.id.as_str());
    if let Some(t) = localized_element("title", &s.title, locale) {
        e = e.child(t);
    }
    append_children(e, s, store, locale)
}

fn append_children(mut e: Element, s: &Section, store: &Store, locale: &str) -> Result<Element, BookError> {
    for c in &s.children {
        e = e.child(match c {
            Node::Leaf(id) => {
                let obj = store.object(id).ok_or_else(|| BookError::DanglingReference(id.clone()))?;
                object_element(id, obj, store, locale)
            }
            Node::Section(sub) => category_element(sub, store, locale)?,
        });
    }
    Ok(e)
}

pub fn to_xml(book: &Textbook, store: &Store, scope: &Scope, locale: &str) -> Result<Document, RenderError> {
    let mut root = Element::new("textbook").attr("id", book.id()).attr("locale", locale).attr("version", SCHEMA_VERSION);
    if let Some(t) = localized_element("title", &book.root.title, locale) {
        root = root.child(t);
    }
    let root = match scope {
        Scope::Whole => append_children(root, &book.root, store, locale)?,
        Scope::Section(id) => {
            let s = book.section(id).ok_or_else(|| BookError::UnknownSection(id.clone()))?;
            if s.id == book.root.id {
                append_children(root, s, store, locale)?
            } else {
                root.child(category_element(s, store, locale)?)
            }
        }
    };
    Ok(Document { root })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theme {
    DefaultEn,
    DefaultZh,
}

pub const THEMES: [&str; 2] = ["default-en", "default-zh"];

impl std::str::FromStr for Theme {
    type Err = RenderError;
    fn from_str(s: &str) -> Result<Theme, RenderError> {
        match s {
            "default-en" => Ok(Theme::DefaultEn),
            "default-zh" => Ok(Theme::DefaultZh),
            other => Err(RenderError::UnknownTheme(other.to_string())),
        }
    }
}

impl Theme {
    /// The theme matching a locale tag, English otherwise.
    pub fn for_locale(locale: &str) -> Theme {
        if locale.starts_with("zh") {
            Theme::DefaultZh
        } else {
            Theme::DefaultEn
        }
    }

    fn lang(self) -> &'static str {
        match self {
            Theme::DefaultEn => "en",
            Theme::DefaultZh => "zh",
        }
    }

    fn kind_label(self, kind: &str) -> &'static str {
        let en = [
            ("Concept", "Definition"),
            ("Axiom", "Axiom"),
            ("Lemma", "Lemma"),
            ("Theorem", "Theorem"),
            ("Corollary", "Corollary"),
            ("Conjecture", "Conjecture"),
            ("Proof", "Proof"),
            ("Problem", "Problem"),
            ("Example", "Example"),
            ("Exercise", "Exercise"),
            ("Solution", "Solution"),
            ("Algorithm", "Algorithm"),
            ("Introduction", "Introduction"),
            ("Remark", "Remark"),
        ];
        let zh = [
            ("Concept", "定义"),
            ("Axiom", "公理"),
            ("Lemma", "引理"),
            ("Theorem", "定理"),
            ("Corollary", "推论"),
            ("Conjecture", "猜想"),
            ("Proof", "证明"),
            ("Problem", "问题"),
            ("Example", "例"),
            ("Exercise", "习题"),
            ("Solution", "解"),
            ("Algorithm", "算法"),
            ("Introduction", "引言"),
            ("Remark", "注"),
        ];
        let table: &[(&str, &'static str)] = match self {
            Theme::DefaultEn => &en,
            Theme::DefaultZh => &zh,
        };
        table.iter().find(|(k, _)| *k == kind).map(|(_, v)| *v).unwrap_or("Item")
    }

    fn chrome(self, key: &str) -> &'static str {
        match (self, key) {
            (Theme::DefaultEn, "formal") => "Formal statement",
            (Theme::DefaultEn, "figure") => "Dynamic figure",
            (Theme::DefaultEn, "proof") => "See proof",
            (Theme::DefaultEn, "fallback") => "not available in this language",
            (Theme::DefaultZh, "formal") => "形式化表示",
            (Theme::DefaultZh, "figure") => "动态图形",
            (Theme::DefaultZh, "proof") => "参见证明",
            (Theme::DefaultZh, "fallback") => "暂无此语言版本",
            _ => "",
        }
    }
}

const STYLE: &str = "body{font-family:serif;max-width:46em;margin:2em auto;line-height:1.5}\
article{margin:1em 0}h1,h2,h3,h4{font-family:sans-serif}.label{font-weight:bold}\
pre.formal{background:#f4f4f4;padding:.5em;white-space:pre-wrap}.fallback{color:#888;font-size:small}";

struct Html {
    theme: Theme,
    out: String,
    labels: BTreeMap<String, String>,
}

impl Html {
    fn fallback_note(&mut self, e: &Element) {
        if let Some(l) = e.get("fallback") {
            let _ = write!(self.out, " <span class=\"fallback\">({}: {})</span>", escape(l), self.theme.chrome("fallback"));
        }
    }

    fn category(&mut self, e: &Element, depth: usize) {
        let _ = writeln!(self.out, "<section id=\"{}\">", escape(e.get("id").unwrap_or_default()));
        for c in e.elements() {
            match c.name {
                "title" => {
                    let h = (depth + 1).min(6);
                    let _ = write!(self.out, "<h{h}>{}", escape(&c.text_content()));
                    self.fallback_note(c);
                    let _ = writeln!(self.out, "</h{h}>");
                }
                "category" => self.category(c, depth + 1),
                "object" => self.object(c, depth + 1),
                _ => {}
            }
        }
        self.out.push_str("</section>\n");
    }

    fn object(&mut self, e: &Element, depth: usize) {
        let id = e.get("id").unwrap_or_default();
        let kind = e.get("kind").unwrap_or_default();
        let label = self.labels[id].clone();
        let _ = writeln!(self.out, "<article id=\"{}\" class=\"{}\">", escape(id), escape(&kind.to_lowercase()));
        let h = (depth + 1).min(6);
        let name = e.elements().find(|c| c.name == "name").map(|c| c.text_content()).unwrap_or_default();
        let _ = writeln!(self.out, "<h{h}><span class=\"label\">{}</span> {}</h{h}>", escape(&label), escape(&name));
        for c in e.elements() {
            match c.name {
                "natural" => {
                    let _ = write!(self.out, "<p class=\"natural\" lang=\"{}\">", escape(c.get("locale").unwrap_or_default()));
                    self.out.push_str(&escape(&c.text_content()));
                    self.out.push_str("</p>\n");
                }
                "formal" => {
                    let _ = writeln!(
                        self.out,
                        "<details class=\"formal\"><summary>{}</summary><pre class=\"formal\"><code>{}</code></pre></details>",
                        self.theme.chrome("formal"),
                        escape(&c.text_content())
                    );
                }
                "figure-ref" => {
                    let obj = c.get("object").unwrap_or_default();
                    let _ = writeln!(self.out, "<p class=\"figure\"><a href=\"figure/{}\">{}</a></p>", escape(obj), self.theme.chrome("figure"));
                }
                "proof-ref" => {
                    let obj = c.get("object").unwrap_or_default();
                    let text = self.labels.get(obj).cloned().unwrap_or_else(|| self.theme.chrome("proof").to_string());
                    let _ = writeln!(self.out, "<p class=\"proof-ref\"><a href=\"#{}\">{}</a></p>", escape(obj), escape(&text));
                }
                _ => {}
            }
        }
        self.out.push_str("</article>\n");
    }
}

/// Numbers objects per kind in document order: Theorem 1, Theorem 2, ...
fn number(e: &Element, theme: Theme, counters: &mut BTreeMap<String, usize>, labels: &mut BTreeMap<String, String>) {
    for c in e.elements() {
        match c.name {
            "object" => {
                let kind = c.get("kind").unwrap_or_default();
                let n = counters.entry(kind.to_string()).or_insert(0);
                *n += 1;
                labels.insert(c.get("id").unwrap_or_default().to_string(), format!("{} {}", theme.kind_label(kind), n));
            }
            "category" => number(c, theme, counters, labels),
            _ => {}
        }
    }
}

pub fn to_html(doc: &Document, theme: Theme) -> String {
    let mut labels = BTreeMap::new();
    number(&doc.root, theme, &mut BTreeMap::new(), &mut labels);
    let mut h = Html { theme, out: String::new(), labels };
    let title = doc.root.elements().find(|c| c.name == "title").map(|c| c.text_content()).unwrap_or_default();
    let _ = write!(
        h.out,
        "<!DOCTYPE html>\n<html lang=\"{}\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>{STYLE}</style>\n</head>\n<body>\n",
        theme.lang(),
        escape(&title)
    );
    let _ = writeln!(h.out, "<h1>{}</h1>", escape(&title));
    for c in doc.root.elements() {
        match c.name {
            "category" => h.category(c, 1),
            "object" => h.object(c, 1),
            _ => {}
        }
    }
    h.out.push_str("</body>\n</html>\n");
    h.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::KnowledgeObject;

    fn id(s: &str) -> ObjectId {
        ObjectId::new(s).unwrap()
    }

    fn setup() -> (Textbook, Store) {
        let mut store = Store::new();
        for (i, kind, en, zh) in [
            ("t1", ObjectKind::Theorem, "First <theorem> & more", Some("第一定理")),
            ("d1", ObjectKind::Concept, "A point", None),
            ("t2", ObjectKind::Theorem, "Second", None),
            ("p2", ObjectKind::Proof, "Because.", None),
        ] {
            let mut o = KnowledgeObject::new(kind, i).with_id(i).with_natural("en", en);
            if let Some(z) = zh {
                o = o.with_natural("zh", z);
            }
            store.put_knowledge(o).unwrap();
        }
        store.add_relation(&id("p2"), &id("t2"), RelationKind::Justification, crate::store::Provenance::Manual).unwrap();
        let mut book = Textbook::new("b", &[("en", "Book"), ("zh", "书")]);
        book.root = book
            .root
            .with(Node::Section(Section::new("c1", &[("en", "One")]).leaf("t1").leaf("d1")))
            .with(Node::Section(Section::new("c2", &[("en", "Two")]).leaf("t2").leaf("p2")));
        (book, store)
    }

    #[test]
    fn xml_order_escaping_and_fallback() {
        let (book, store) = setup();
        let doc = to_xml(&book, &store, &Scope::Whole, "zh").unwrap();
        assert_eq!(doc.object_ids(), ["t1", "d1", "t2", "p2"]);
        let xml = doc.to_xml_string();
        assert!(xml.contains("<title fallback=\"en\">One</title>"));
        assert!(xml.contains("<natural locale=\"zh\">第一定理</natural>"));
        assert!(xml.contains("<natural locale=\"en\">A point</natural>"));
        assert!(xml.contains("<proof-ref object=\"p2\"/>"));
        let en = to_xml(&book, &store, &Scope::Whole, "en").unwrap().to_xml_string();
        assert!(en.contains("First &lt;theorem&gt; &amp; more"));

        let mut reader = quick_xml::Reader::from_str(&xml);
        while !matches!(reader.read_event().expect("well-formed"), quick_xml::events::Event::Eof) {}
        assert_eq!(xml, to_xml(&book, &store, &Scope::Whole, "zh").unwrap().to_xml_string());
    }

    #[test]
    fn subtree_and_empty() {
        let (book, store) = setup();
        let doc = to_xml(&book, &store, &Scope::Section("c2".into()), "en").unwrap();
        assert_eq!(doc.object_ids(), ["t2", "p2"]);
        assert!(matches!(to_xml(&book, &store, &Scope::Section("c9".into()), "en"), Err(RenderError::Book(BookError::UnknownSection(_)))));
        let empty = to_xml(&Textbook::new("e", &[]), &store, &Scope::Whole, "en").unwrap();
        assert_eq!(empty.to_xml_string(), "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<textbook id=\"e\" locale=\"en\" version=\"1\"/>\n");
    }

    #[test]
    fn html_numbering_per_kind() {
        let (book, store) = setup();
        let html = to_html(&to_xml(&book, &store, &Scope::Whole, "en").unwrap(), Theme::DefaultEn);
        let t1 = html.find("Theorem 1").unwrap();
        let t2 = html.find("Theorem 2").unwrap();
        assert!(t1 < t2);
        assert!(html.contains("Definition 1"));
        assert!(html.contains("<a href=\"#p2\">Proof 1</a>"));
        let zh = to_html(&to_xml(&book, &store, &Scope::Whole, "zh").unwrap(), Theme::DefaultZh);
        assert!(zh.contains("定理 2") && zh.contains("<html lang=\"zh\">") && zh.contains("第一定理"));
    }

    #[test]
    fn dangling_leaf_fails() {
        let (mut book, store) = setup();
        book.root = book.root.leaf("ghost");
        assert_eq!(to_xml(&book, &store, &Scope::Whole, "en"), Err(RenderError::Book(BookError::DanglingReference(id("ghost")))));
    }
}
