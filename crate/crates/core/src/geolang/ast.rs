//! Syntax tree for the geometry language.
//!
//! Nodes are generic over an annotation `A`: the parser produces `()`
//! annotations, the type checker produces [`Sort`] annotations.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A 1-based source position.
///
/// Positions are carried on every node but are not part of node identity:
/// two spans always compare equal.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub column: u32,
}

impl Span {
    pub fn new(line: u32, column: u32) -> Self {
        Span { line, column }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sort {
    Point,
    Line,
    Segment,
    Circle,
    Triangle,
    Scalar,
    Bool,
}

impl Sort {
    pub const ALL: [Sort; 7] = [Sort::Point, Sort::Line, Sort::Segment, Sort::Circle, Sort::Triangle, Sort::Scalar, Sort::Bool];

    pub fn name(self) -> &'static str {
        match self {
            Sort::Point => "Point",
            Sort::Line => "Line",
            Sort::Segment => "Segment",
            Sort::Circle => "Circle",
            Sort::Triangle => "Triangle",
            Sort::Scalar => "Scalar",
            Sort::Bool => "Bool",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sort {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Sort::ALL.into_iter().find(|k| k.name() == s).ok_or(())
    }
}

/// A set of admissible sorts for one parameter position, e.g. `Line|Circle`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SortSet(u8);

impl SortSet {
    pub fn of(sorts: &[Sort]) -> Self {
        SortSet(sorts.iter().fold(0, |acc, s| acc | s.bit()))
    }

    pub fn contains(self, sort: Sort) -> bool {
        self.0 & sort.bit() != 0
    }

    pub fn sorts(self) -> impl Iterator<Item = Sort> {
        Sort::ALL.into_iter().filter(move |s| self.contains(*s))
    }

    /// The single sort of this set, if it has exactly one.
    pub fn single(self) -> Option<Sort> {
        let mut it = self.sorts();
        match (it.next(), it.next()) {
            (Some(s), None) => Some(s),
            _ => None,
        }
    }
}

impl From<Sort> for SortSet {
    fn from(s: Sort) -> Self {
        SortSet(s.bit())
    }
}

impl fmt::Display for SortSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.sorts().map(Sort::name).collect();
        f.write_str(&names.join("|"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TermKind<A> {
    /// A reference to a declared object, parameter or result variable.
    Var(String),
    /// Application of a concept symbol, `head(args...)`.
    App { head: String, args: Vec<Term<A>> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term<A = ()> {
    pub kind: TermKind<A>,
    pub span: Span,
    pub ann: A,
}

impl Term<()> {
    pub fn var(name: impl Into<String>) -> Self {
        Term { kind: TermKind::Var(name.into()), span: Span::default(), ann: () }
    }

    pub fn app(head: impl Into<String>, args: Vec<Term>) -> Self {
        Term { kind: TermKind::App { head: head.into(), args }, span: Span::default(), ann: () }
    }
}

impl<A> Term<A> {
    pub fn head(&self) -> Option<&str> {
        match &self.kind {
            TermKind::App { head, .. } => Some(head),
            TermKind::Var(_) => None,
        }
    }

    pub fn args(&self) -> &[Term<A>] {
        match &self.kind {
            TermKind::App { args, .. } => args,
            TermKind::Var(_) => &[],
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match &self.kind {
            TermKind::Var(v) => Some(v),
            TermKind::App { .. } => None,
        }
    }

    /// Drops annotations, keeping structure and spans.
    pub fn erase(&self) -> Term {
        let kind = match &self.kind {
            TermKind::Var(v) => TermKind::Var(v.clone()),
            TermKind::App { head, args } => TermKind::App { head: head.clone(), args: args.iter().map(Term::erase).collect() },
        };
        Term { kind, span: self.span, ann: () }
    }

    /// Visits every application head in pre-order.
    pub fn for_each_head<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        if let TermKind::App { head, args } = &self.kind {
            f(head);
            for a in args {
                a.for_each_head(f);
            }
        }
    }

    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match &self.kind {
            TermKind::Var(v) => f(v),
            TermKind::App { args, .. } => {
                for a in args {
                    a.for_each_var(f);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula<A = ()> {
    Atom(Term<A>),
    True(Span),
    Not(Box<Formula<A>>),
    And(Box<Formula<A>>, Box<Formula<A>>),
    Or(Box<Formula<A>>, Box<Formula<A>>),
    Implies(Box<Formula<A>>, Box<Formula<A>>),
    Iff(Box<Formula<A>>, Box<Formula<A>>),
}

impl<A> Formula<A> {
    pub fn and(a: Formula<A>, b: Formula<A>) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula<A>, b: Formula<A>) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula<A>, b: Formula<A>) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Atoms in left-to-right order.
    pub fn atoms(&self) -> Vec<&Term<A>> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Term<A>>) {
        match self {
            Formula::Atom(t) => out.push(t),
            Formula::True(_) => {}
            Formula::Not(f) => f.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Conjuncts of a formula built only from `/\`, atoms and `true`;
    /// `None` if any other connective occurs.
    pub fn conjuncts(&self) -> Option<Vec<&Term<A>>> {
        match self {
            Formula::Atom(t) => Some(vec![t]),
            Formula::True(_) => Some(vec![]),
            Formula::And(a, b) => {
                let mut v = a.conjuncts()?;
                v.extend(b.conjuncts()?);
                Some(v)
            }
            _ => None,
        }
    }

    pub fn map_atoms<B, E>(&self, f: &mut impl FnMut(&Term<A>) -> Result<Term<B>, E>) -> Result<Formula<B>, E> {
        Ok(match self {
            Formula::Atom(t) => Formula::Atom(f(t)?),
            Formula::True(s) => Formula::True(*s),
            Formula::Not(x) => Formula::Not(Box::new(x.map_atoms(f)?)),
            Formula::And(a, b) => Formula::And(Box::new(a.map_atoms(f)?), Box::new(b.map_atoms(f)?)),
            Formula::Or(a, b) => Formula::Or(Box::new(a.map_atoms(f)?), Box::new(b.map_atoms(f)?)),
            Formula::Implies(a, b) => Formula::Implies(Box::new(a.map_atoms(f)?), Box::new(b.map_atoms(f)?)),
            Formula::Iff(a, b) => Formula::Iff(Box::new(a.map_atoms(f)?), Box::new(b.map_atoms(f)?)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Param {
    pub name: String,
    pub sort: Sort,
    pub span: Span,
}

/// `symbol(params) ::= [result::Sort where body]`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Definition<A = ()> {
    pub symbol: String,
    pub params: Vec<Param>,
    pub result: Param,
    pub body: Formula<A>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Item<A = ()> {
    /// `name := constructor;`
    Declaration {
        name: String,
        value: Term<A>,
        span: Span,
    },
    Formula(Formula<A>),
    Definition(Definition<A>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Program<A = ()> {
    pub items: Vec<Item<A>>,
}

impl<A> Program<A> {
    pub fn definitions(&self) -> impl Iterator<Item = &Definition<A>> {
        self.items.iter().filter_map(|i| match i {
            Item::Definition(d) => Some(d),
            _ => None,
        })
    }

    pub fn formulas(&self) -> impl Iterator<Item = &Formula<A>> {
        self.items.iter().filter_map(|i| match i {
            Item::Formula(f) => Some(f),
            _ => None,
        })
    }

    /// Every concept symbol applied anywhere in the program.
    pub fn symbols_used(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        let mut add = |h: &str| {
            out.insert(h.to_string());
        };
        for item in &self.items {
            match item {
                Item::Declaration { value, .. } => value.for_each_head(&mut add),
                Item::Formula(f) => f.atoms().into_iter().for_each(|t| t.for_each_head(&mut add)),
                Item::Definition(d) => d.body.atoms().into_iter().for_each(|t| t.for_each_head(&mut add)),
            }
        }
        out
    }
}
