//! The formal geometry language: lexer, parser, type checker and
//! canonical pretty-printer.
//!
//! Statement sources use the `.geo` extension. The grammar is documented in
//! `docs/geolang.md` and at the top of [`parser`].

pub mod ast;
mod lexer;
pub mod parser;
pub mod pretty;
pub mod registry;
pub mod typecheck;

use thiserror::Error;

pub use ast::{Definition, Formula, Item, Param, Program, Sort, SortSet, Span, Term, TermKind};
pub use parser::{parse, parse_bytes, parse_formula};
pub use pretty::{pretty, pretty_formula, pretty_term};
pub use registry::{Concept, ConceptKind, ConceptSignature, Registry};
pub use typecheck::{typecheck, typecheck_definition, TypedProgram};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {line}:{column}: expected {}, found {found}", expected.join(" or "))]
pub struct SyntaxError {
    pub line: u32,
    pub column: u32,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("{span}: unknown symbol `{name}`")]
    UnknownSymbol { name: String, span: Span },
    #[error("{span}: `{symbol}` takes {expected} argument(s), found {found}")]
    ArityMismatch { symbol: String, expected: usize, found: usize, span: Span },
    #[error("{span}: expected {expected}, found {found}")]
    SortMismatch { expected: String, found: Sort, span: Span },
    #[error("{span}: `{name}` is already declared")]
    Redeclared { name: String, span: Span },
}

impl TypeError {
    pub fn span(&self) -> Span {
        match self {
            TypeError::UnknownSymbol { span, .. }
            | TypeError::ArityMismatch { span, .. }
            | TypeError::SortMismatch { span, .. }
            | TypeError::Redeclared { span, .. } => *span,
        }
    }
}

/// Simson's theorem as a biconditional statement.
pub const SIMSON_SOURCE: &str = "\
A := point();
B := point();
C := point();
D := point();
incident(D, circumcircle(triangle(A, B, C))) <=> collinear(foot(D, line(A, B)), foot(D, line(B, C)), foot(D, line(A, C)));";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expand::shipped_registry;

    fn simson_typed() -> TypedProgram {
        typecheck(&parse(SIMSON_SOURCE).unwrap(), &shipped_registry()).unwrap()
    }

    #[test]
    fn simson_parses_into_four_declarations_and_a_biconditional() {
        let p = parse(SIMSON_SOURCE).unwrap();
        assert_eq!(p.items.len(), 5);
        for (item, name) in p.items.iter().zip(["A", "B", "C", "D"]) {
            match item {
                Item::Declaration { name: n, value, .. } => {
                    assert_eq!(n, name);
                    assert_eq!(*value, Term::app("point", vec![]));
                }
                other => panic!("unexpected item {other:?}"),
            }
        }
        let Item::Formula(Formula::Iff(lhs, rhs)) = &p.items[4] else { panic!("expected iff") };
        assert_eq!(pretty_formula(lhs), "incident(D, circumcircle(triangle(A, B, C)))");
        let Formula::Atom(coll) = &**rhs else { panic!() };
        assert_eq!(coll.head(), Some("collinear"));
        assert!(coll.args().iter().all(|a| a.head() == Some("foot")));
    }

    #[test]
    fn simson_is_well_typed_with_point_feet() {
        let t = simson_typed();
        let Item::Formula(Formula::Iff(_, rhs)) = &t.program.items[4] else { panic!() };
        let Formula::Atom(coll) = &**rhs else { panic!() };
        assert_eq!(coll.ann, Sort::Bool);
        for foot in coll.args() {
            assert_eq!(foot.ann, Sort::Point);
            assert_eq!(foot.args()[1].ann, Sort::Line);
        }
        let used: Vec<_> = t.program.symbols_used().into_iter().collect();
        assert_eq!(used, ["circumcircle", "collinear", "foot", "incident", "line", "point", "triangle"]);
    }

    #[test]
    fn simson_pretty_round_trips() {
        let p = parse(SIMSON_SOURCE).unwrap();
        assert_eq!(parse(&pretty(&p)).unwrap(), p);
        assert_eq!(pretty(&p), SIMSON_SOURCE);
    }

    #[test]
    fn arity_and_sort_errors() {
        let reg = shipped_registry();
        let check = |src: &str| typecheck(&parse(src).unwrap(), &reg);
        let e = check("A := point(); B := point(); collinear(A, B);").unwrap_err();
        assert!(matches!(e, TypeError::ArityMismatch { expected: 3, found: 2, .. }), "{e}");

        let e = check("A := point(); B := point(); C := point(); incident(line(A, B), C);").unwrap_err();
        assert!(matches!(e, TypeError::SortMismatch { found: Sort::Line, .. }), "{e}");
        assert_eq!(e.span().column, 52);

        let e = check("collinear(A, B, C);").unwrap_err();
        assert!(matches!(e, TypeError::UnknownSymbol { ref name, .. } if name == "A"));

        let e = check("A := point(); A := point();").unwrap_err();
        assert!(matches!(e, TypeError::Redeclared { .. }));

        let e = check("A := point(); B := frobnicate(A);").unwrap_err();
        assert!(matches!(e, TypeError::UnknownSymbol { ref name, .. } if name == "frobnicate"));
    }

    #[test]
    fn declarations_may_interleave_with_formulas() {
        let reg = shipped_registry();
        let src = "A := point(); B := point(); equalp(A, B); C := midpoint(A, B); collinear(A, B, C);";
        assert!(typecheck(&parse(src).unwrap(), &reg).is_ok());
    }
}
