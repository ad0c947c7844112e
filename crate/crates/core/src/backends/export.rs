//! Figure scripts for external tools.
//!
//! * `generic-json`: `{"format": "geobook-figure", "version": 1, "steps": [...],
//!   "conclusions": [...], "checks": [...]}` where each step is tagged by
//!   `"step"` (see [`Step`]).
//! * `ggb-commands`: one assignment per line in the command syntax of common
//!   dynamic geometry software. Names with a leading `_` get an `aux` prefix.

use std::fmt::Write;

use serde_json::json;
use thiserror::Error;

use super::construct::{ConstructionSequence, Locus, Step};
use crate::geolang::{pretty_term, Term};

pub const DIALECTS: [&str; 2] = ["generic-json", "ggb-commands"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExportError {
    #[error("unknown dialect `{0}`")]
    UnknownDialect(String),
    #[error("dialect {dialect} cannot express `{step}`")]
    UnsupportedStep { dialect: String, step: String },
}

pub fn export_script(seq: &ConstructionSequence, dialect: &str) -> Result<String, ExportError> {
    match dialect {
        "generic-json" => {
            let doc = json!({
                "format": "geobook-figure",
                "version": 1,
                "steps": seq.steps,
                "conclusions": seq.conclusions.iter().map(pretty_term).collect::<Vec<_>>(),
                "checks": seq.checks.iter().map(pretty_term).collect::<Vec<_>>(),
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("figure serializes");
            s.push('\n');
            Ok(s)
        }
        "ggb-commands" => ggb(seq),
        other => Err(ExportError::UnknownDialect(other.to_string())),
    }
}

fn name(n: &str) -> String {
    match n.strip_prefix('_') {
        Some(rest) => format!("aux_{rest}"),
        None => n.to_string(),
    }
}

fn num(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn locus(l: &Locus) -> String {
    match l {
        Locus::Line { a, b } => format!("Line({}, {})", name(a), name(b)),
        Locus::Perpendicular { through, a, b } => {
            format!("PerpendicularLine({}, Line({}, {}))", name(through), name(a), name(b))
        }
        Locus::Parallel { through, a, b } => format!("Line({}, Line({}, {}))", name(through), name(a), name(b)),
        Locus::Bisector { a, b } => format!("PerpendicularBisector({}, {})", name(a), name(b)),
        Locus::Circle { circle } => name(circle),
        Locus::CircleThrough { center, through } => format!("Circle({}, {})", name(center), name(through)),
        Locus::CircleRadius { center, a, b } => {
            format!("Circle({}, Distance({}, {}))", name(center), name(a), name(b))
        }
    }
}

fn ggb_term(t: &Term) -> String {
    match t.as_var() {
        Some(v) => name(v),
        None => {
            let args: Vec<String> = t.args().iter().map(ggb_term).collect();
            match t.head() {
                Some("line") => format!("Line({})", args.join(", ")),
                Some("circle") => format!("Circle({})", args.join(", ")),
                _ => pretty_term(t),
            }
        }
    }
}

fn ggb_atom(t: &Term) -> Result<String, ExportError> {
    let a = t.args();
    let s = |i: usize| ggb_term(&a[i]);
    Ok(match t.head() {
        Some("collinear") => format!("AreCollinear({}, {}, {})", s(0), s(1), s(2)),
        Some("parallel") => format!("AreParallel({}, {})", s(0), s(1)),
        Some("perpendicular") => format!("ArePerpendicular({}, {})", s(0), s(1)),
        Some("eqdist") => format!("AreCongruent(Segment({}, {}), Segment({}, {}))", s(0), s(1), s(2), s(3)),
        Some("equalp") => format!("AreEqual({}, {})", s(0), s(1)),
        Some("incident") if a[1].head() == Some("line") => {
            let l = a[1].args();
            format!("AreCollinear({}, {}, {})", s(0), ggb_term(&l[0]), ggb_term(&l[1]))
        }
        Some("incident") => format!("Distance({}, Center({c})) == Radius({c})", s(0), c = s(1)),
        _ => {
            return Err(ExportError::UnsupportedStep { dialect: "ggb-commands".into(), step: pretty_term(t) });
        }
    })
}

fn ggb(seq: &ConstructionSequence) -> Result<String, ExportError> {
    let mut out = String::new();
    for step in &seq.steps {
        let o = name(step.out());
        let rhs = match step {
            Step::FreePoint { at, .. } => format!("({}, {})", num(at[0]), num(at[1])),
            Step::Midpoint { a, b, .. } => format!("Midpoint({}, {})", name(a), name(b)),
            Step::Foot { p, a, b, .. } => format!("ClosestPoint(Line({}, {}), {})", name(a), name(b), name(p)),
            Step::Circumcircle { a, b, c, .. } => format!("Circle({}, {}, {})", name(a), name(b), name(c)),
            Step::Intersect { first, second, branch, .. } => {
                if first.is_circle() || second.is_circle() {
                    format!("Intersect({}, {}, {})", locus(first), locus(second), branch + 1)
                } else {
                    format!("Intersect({}, {})", locus(first), locus(second))
                }
            }
            Step::PointOn { locus: l, .. } => format!("Point({})", locus(l)),
        };
        let _ = writeln!(out, "{o} = {rhs}");
    }
    for (i, c) in seq.conclusions.iter().enumerate() {
        let _ = writeln!(out, "conclusion{} = {}", i + 1, ggb_atom(c)?);
    }
    for (i, c) in seq.checks.iter().enumerate() {
        let _ = writeln!(out, "check{} = {}", i + 1, ggb_atom(c)?);
    }
    Ok(out)
}
