//! Consistency of a book's reading order against the store's relations.
//!
//! Policy file:
//!
//! ```text
//! geobook-policy v1
//! # Kind=order[,required][,error]
//! Context=sourceFirst,required,error
//! Equality=none
//! ...
//! ```
//!
//! Every one of the 17 relation kinds must appear exactly once. `order` is
//! one of `sourceFirst`, `targetFirst`, `adjacentAfterTarget`, `none`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Textbook;
use crate::store::{ObjectId, Relation, RelationKind, Store};

pub const POLICY_HEADER: &str = "geobook-policy v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Order {
    SourceFirst,
    TargetFirst,
    /// The source sits immediately after the target.
    AdjacentAfterTarget,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Rule {
    pub order: Order,
    pub required: bool,
    pub severity: Severity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    rules: BTreeMap<RelationKind, Rule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("policy line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("policy has no rule for {0}")]
    Missing(RelationKind),
}

impl Policy {
    /// The shipped `policy-default`.
    pub fn default_policy() -> Policy {
        DEFAULT_POLICY.parse().expect("shipped policy parses")
    }

    pub fn rule(&self, kind: RelationKind) -> Rule {
        self.rules[&kind]
    }

    pub fn with_rule(mut self, kind: RelationKind, rule: Rule) -> Policy {
        self.rules.insert(kind, rule);
        self
    }
}

pub(crate) const DEFAULT_POLICY: &str = include_str!("../../data/policy-default.policy");

impl FromStr for Policy {
    type Err = PolicyError;

    fn from_str(text: &str) -> Result<Policy, PolicyError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let bad = |line: usize, reason: String| PolicyError::Malformed { line, reason };
        match lines.next() {
            Some((_, POLICY_HEADER)) => {}
            _ => return Err(bad(1, format!("expected `{POLICY_HEADER}`"))),
        }
        let mut rules = BTreeMap::new();
        for (n, line) in lines {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (kind, spec) = line.split_once('=').ok_or_else(|| bad(n, "expected `Kind=order`".into()))?;
            let kind: RelationKind = kind.trim().parse().map_err(|e| bad(n, format!("{e}")))?;
            let mut parts = spec.split(',').map(str::trim);
            let order = match parts.next() {
                Some("sourceFirst") => Order::SourceFirst,
                Some("targetFirst") => Order::TargetFirst,
                Some("adjacentAfterTarget") => Order::AdjacentAfterTarget,
                Some("none") => Order::None,
                other => return Err(bad(n, format!("unknown order `{}`", other.unwrap_or("")))),
            };
            let mut rule = Rule { order, required: false, severity: Severity::Warning };
            for flag in parts {
                match flag {
                    "required" => rule.required = true,
                    "error" => rule.severity = Severity::Error,
                    other => return Err(bad(n, format!("unknown flag `{other}`"))),
                }
            }
            if rules.insert(kind, rule).is_some() {
                return Err(bad(n, format!("second rule for {kind}")));
            }
        }
        if let Some(k) = RelationKind::ALL.iter().find(|k| !rules.contains_key(k)) {
            return Err(PolicyError::Missing(*k));
        }
        Ok(Policy { rules })
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{POLICY_HEADER}")?;
        for (k, r) in &self.rules {
            let order = match r.order {
                Order::SourceFirst => "sourceFirst",
                Order::TargetFirst => "targetFirst",
                Order::AdjacentAfterTarget => "adjacentAfterTarget",
                Order::None => "none",
            };
            write!(f, "{k}={order}")?;
            if r.required {
                f.write_str(",required")?;
            }
            if r.severity == Severity::Error {
                f.write_str(",error")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ViolationKind {
    OrderingViolation,
    MissingPrerequisite,
    DanglingReference,
    CycleDetected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub kind: ViolationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<Relation>,
    /// Objects to highlight; for an ordering violation the source of the
    /// relation comes first.
    pub objects: Vec<ObjectId>,
    pub positions: Vec<usize>,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Report {
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn is_consistent(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Error)
    }
}

/// Whether positions `s` (source) and `t` (target) satisfy `order`.
pub(crate) fn satisfied(order: Order, s: usize, t: usize) -> bool {
    match order {
        Order::SourceFirst => s < t,
        Order::TargetFirst => t < s,
        Order::AdjacentAfterTarget => s == t + 1,
        Order::None => true,
    }
}

fn describe(order: Order, r: &Relation) -> String {
    let (s, t, k) = (&r.source, &r.target, r.kind);
    match order {
        Order::SourceFirst => format!("`{s}` must come before `{t}` ({k})"),
        Order::TargetFirst => format!("`{t}` must come before `{s}` ({k})"),
        Order::AdjacentAfterTarget => format!("`{s}` must come directly after `{t}` ({k})"),
        Order::None => String::new(),
    }
}

/// Runs in time linear in the book size plus the relation count.
pub fn check(book: &Textbook, store: &Store, policy: &Policy) -> Report {
    let order = book.linearize();
    let pos: HashMap<&ObjectId, usize> = order.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let mut violations = Vec::new();
    for (i, id) in order.iter().enumerate() {
        if store.object(id).is_none() {
            violations.push(Violation {
                kind: ViolationKind::DanglingReference,
                relation: None,
                objects: vec![id.clone()],
                positions: vec![i],
                severity: Severity::Error,
                message: format!("`{id}` is not in the store"),
            });
        }
    }

    let mut graph = DiGraph::<usize, ()>::with_capacity(order.len(), 0);
    let nodes: Vec<NodeIndex> = (0..order.len()).map(|i| graph.add_node(i)).collect();
    for r in store.relations() {
        let rule = policy.rule(r.kind);
        match (pos.get(&r.source).copied(), pos.get(&r.target).copied()) {
            (Some(s), Some(t)) => {
                let (first, second) = match rule.order {
                    Order::None => continue,
                    Order::SourceFirst => (s, t),
                    Order::TargetFirst | Order::AdjacentAfterTarget => (t, s),
                };
                graph.add_edge(nodes[first], nodes[second], ());
                if !satisfied(rule.order, s, t) {
                    violations.push(Violation {
                        kind: ViolationKind::OrderingViolation,
                        message: describe(rule.order, &r),
                        objects: vec![r.source.clone(), r.target.clone()],
                        positions: vec![s, t],
                        severity: rule.severity,
                        relation: Some(r),
                    });
                }
            }
            (None, Some(t)) if rule.required => violations.push(Violation {
                kind: ViolationKind::MissingPrerequisite,
                message: format!("`{}` needs `{}` ({}), which is not in the book", r.target, r.source, r.kind),
                objects: vec![r.source.clone()],
                positions: vec![t],
                severity: rule.severity,
                relation: Some(r),
            }),
            _ => {}
        }
    }

    let mut cycles: Vec<Vec<usize>> = tarjan_scc(&graph)
        .into_iter()
        .filter(|c| c.len() > 1)
        .map(|c| {
            let mut p: Vec<usize> = c.into_iter().map(|n| graph[n]).collect();
            p.sort_unstable();
            p
        })
        .collect();
    cycles.sort();
    for positions in cycles {
        let objects: Vec<ObjectId> = positions.iter().map(|&p| order[p].clone()).collect();
        let names: Vec<&str> = objects.iter().map(|o| o.as_str()).collect();
        violations.push(Violation {
            kind: ViolationKind::CycleDetected,
            relation: None,
            message: format!("no order satisfies the relations among {}", names.join(", ")),
            objects,
            positions,
            severity: Severity::Error,
        });
    }
    Report { violations }
}
