//! Recursive-descent parser.
//!
//! ```text
//! program    = { item } ;
//! item       = declaration | definition | formula ";" ;
//! declaration= IDENT ":=" term ";" ;
//! definition = IDENT "(" [ param { "," param } ] ")" "::=" "[" param "where" formula "]" ";" ;
//! param      = IDENT "::" SORT ;
//! formula    = implies { "<=>" implies } ;
//! implies    = or [ "=>" implies ] ;
//! or         = and { "\/" and } ;
//! and        = unary { "/\" unary } ;
//! unary      = "!" unary | "(" formula ")" | "true" | term ;
//! term       = IDENT [ "(" [ term { "," term } ] ")" ] ;
//! ```

use super::ast::*;
use super::lexer::{tokenize, Tok};
use super::SyntaxError;

/// Nesting beyond this depth is rejected rather than risking the stack.
const MAX_DEPTH: usize = 200;

pub fn parse(src: &str) -> Result<Program, SyntaxError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0, depth: 0 };
    p.program()
}

/// Parses raw bytes, reporting invalid UTF-8 as a located syntax error.
pub fn parse_bytes(bytes: &[u8]) -> Result<Program, SyntaxError> {
    match std::str::from_utf8(bytes) {
        Ok(s) => parse(s),
        Err(e) => {
            let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).unwrap_or_default();
            let line = valid.matches('\n').count() as u32 + 1;
            let column = valid.rsplit('\n').next().map_or(0, |l| l.chars().count()) as u32 + 1;
            Err(SyntaxError { line, column, expected: vec!["UTF-8 text".into()], found: "invalid UTF-8 sequence".into() })
        }
    }
}

/// Parses a single formula (no trailing `;`).
pub fn parse_formula(src: &str) -> Result<Formula, SyntaxError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0, depth: 0 };
    let f = p.formula()?;
    p.expect(Tok::Eof)?;
    Ok(f)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        let (tok, span) = &self.toks[self.pos];
        SyntaxError { line: span.line, column: span.column, expected: expected.iter().map(|s| s.to_string()).collect(), found: tok.describe() }
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, SyntaxError> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            Err(self.error(&[&tok.describe()]))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let span = self.bump().1;
                Ok((s, span))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn enter(&mut self) -> Result<(), SyntaxError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let mut e = self.error(&["shallower nesting"]);
            e.found = format!("nesting deeper than {MAX_DEPTH}");
            return Err(e);
        }
        Ok(())
    }

    fn program(&mut self) -> Result<Program, SyntaxError> {
        let mut items = Vec::new();
        while *self.peek() != Tok::Eof {
            items.push(self.item()?);
        }
        Ok(Program { items })
    }

    fn is_definition_head(&self) -> bool {
        if !matches!(self.peek(), Tok::Ident(_)) || *self.peek_at(1) != Tok::LParen {
            return false;
        }
        match self.peek_at(2) {
            Tok::RParen => *self.peek_at(3) == Tok::Defines,
            Tok::Ident(_) => *self.peek_at(3) == Tok::ColonColon,
            _ => false,
        }
    }

    fn item(&mut self) -> Result<Item, SyntaxError> {
        if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Assign {
            let (name, span) = self.ident()?;
            self.bump();
            let value = self.term()?;
            self.expect(Tok::Semi)?;
            return Ok(Item::Declaration { name, value, span });
        }
        if self.is_definition_head() {
            return self.definition().map(Item::Definition);
        }
        let f = self.formula()?;
        self.expect(Tok::Semi)?;
        Ok(Item::Formula(f))
    }

    fn param(&mut self) -> Result<Param, SyntaxError> {
        let (name, span) = self.ident()?;
        self.expect(Tok::ColonColon)?;
        let sort_span = self.span();
        let (sort_name, _) = self.ident().map_err(|_| self.error(&["sort name"]))?;
        let sort = sort_name.parse::<Sort>().map_err(|_| SyntaxError {
            line: sort_span.line,
            column: sort_span.column,
            expected: Sort::ALL.iter().map(|s| s.name().to_string()).collect(),
            found: format!("identifier `{sort_name}`"),
        })?;
        Ok(Param { name, sort, span })
    }

    fn definition(&mut self) -> Result<Definition, SyntaxError> {
        let (symbol, span) = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                params.push(self.param()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Defines)?;
        self.expect(Tok::LBracket)?;
        let result = self.param()?;
        self.expect(Tok::Where)?;
        let body = self.formula()?;
        self.expect(Tok::RBracket)?;
        self.expect(Tok::Semi)?;
        Ok(Definition { symbol, params, result, body, span })
    }

    fn formula(&mut self) -> Result<Formula, SyntaxError> {
        self.enter()?;
        let mut lhs = self.implies()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            let rhs = self.implies()?;
            lhs = Formula::iff(lhs, rhs);
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula, SyntaxError> {
        self.enter()?;
        let lhs = self.or()?;
        let f = if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implies()?;
            Formula::implies(lhs, rhs)
        } else {
            lhs
        };
        self.depth -= 1;
        Ok(f)
    }

    fn or(&mut self) -> Result<Formula, SyntaxError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, SyntaxError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, SyntaxError> {
        self.enter()?;
        let f = match self.peek() {
            Tok::Not => {
                self.bump();
                Formula::Not(Box::new(self.unary()?))
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                f
            }
            Tok::True => Formula::True(self.bump().1),
            Tok::Ident(_) => Formula::Atom(self.term()?),
            _ => return Err(self.error(&["`!`", "`(`", "`true`", "identifier"])),
        };
        self.depth -= 1;
        Ok(f)
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        self.enter()?;
        let (name, span) = self.ident()?;
        let t = if *self.peek() == Tok::LParen {
            self.bump();
            let mut args = Vec::new();
            if *self.peek() != Tok::RParen {
                loop {
                    args.push(self.term()?);
                    match self.peek() {
                        Tok::Comma => {
                            self.bump();
                        }
                        Tok::RParen => break,
                        _ => return Err(self.error(&["`,`", "`)`"])),
                    }
                }
            }
            self.expect(Tok::RParen)?;
            Term { kind: TermKind::App { head: name, args }, span, ann: () }
        } else {
            Term { kind: TermKind::Var(name), span, ann: () }
        };
        self.depth -= 1;
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_declaration() {
        let p = parse("A := point();").unwrap();
        assert_eq!(p.items, vec![Item::Declaration { name: "A".into(), value: Term::app("point", vec![]), span: Span::default() }]);
    }

    #[test]
    fn empty_source_is_empty_program() {
        assert!(parse("").unwrap().items.is_empty());
        assert!(parse("  // only a comment\n").unwrap().items.is_empty());
    }

    #[test]
    fn precedence_and_associativity() {
        let f = parse_formula("a() /\\ b() \\/ c() => d() => e()").unwrap();
        let atom = |s: &str| Formula::Atom(Term::app(s, vec![]));
        let expected = Formula::implies(Formula::Or(Box::new(Formula::and(atom("a"), atom("b"))), Box::new(atom("c"))), Formula::implies(atom("d"), atom("e")));
        assert_eq!(f, expected);
    }

    #[test]
    fn unicode_connectives_are_accepted() {
        let a = parse_formula("p(A) ⇔ q(A) ∧ ¬r(A)").unwrap();
        let b = parse_formula("p(A) <=> q(A) /\\ !r(A)").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn definition_with_binder() {
        let p = parse("intersection(l::Line, m::Line) ::= [A::Point where incident(A, l) /\\ incident(A, m)];").unwrap();
        let d = p.definitions().next().unwrap();
        assert_eq!(d.symbol, "intersection");
        assert_eq!(d.params.len(), 2);
        assert_eq!(d.result.sort, Sort::Point);
        assert_eq!(d.body.conjuncts().unwrap().len(), 2);
    }

    #[test]
    fn errors_are_located() {
        let e = parse("A := point();\nB := point(;").unwrap_err();
        assert_eq!((e.line, e.column), (2, 12));
        assert!(e.expected.iter().any(|x| x.contains("identifier")));

        let e = parse("A := point()").unwrap_err();
        assert_eq!(e.found, "end of input");

        let e = parse("f(x::Blob) ::= [y::Point where true];").unwrap_err();
        assert!(e.expected.contains(&"Point".to_string()));
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let src = format!("{}p(){};", "(".repeat(100_000), ")".repeat(100_000));
        assert!(parse(&src).is_err());
        let src = format!("{}x{};", "f(".repeat(100_000), ")".repeat(100_000));
        assert!(parse(&src).is_err());
    }

    #[test]
    fn invalid_utf8_is_reported() {
        let e = parse_bytes(b"A := po\xffint();").unwrap_err();
        assert_eq!((e.line, e.column), (1, 8));
    }
}
