use super::ast::Span;
use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Where,
    True,
    Assign,     // :=
    Defines,    // ::=
    ColonColon, // ::
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Iff,     // <=>
    Implies, // =>
    And,     // /\
    Or,      // \/
    Not,     // !
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Where => "`where`".into(),
            Tok::True => "`true`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::Defines => "`::=`".into(),
            Tok::ColonColon => "`::`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Iff => "`<=>`".into(),
            Tok::Implies => "`=>`".into(),
            Tok::And => "`/\\`".into(),
            Tok::Or => "`\\/`".into(),
            Tok::Not => "`!`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<(Tok, Span)>, SyntaxError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1u32, 1u32);

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let span = Span::new(line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut id = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_alphanumeric() || c == '_' || c == '\'' {
                    id.push(c);
                    bump!();
                } else {
                    break;
                }
            }
            let tok = match id.as_str() {
                "where" => Tok::Where,
                "true" => Tok::True,
                _ => Tok::Ident(id),
            };
            out.push((tok, span));
            continue;
        }
        bump!();
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '!' | '¬' => Tok::Not,
            '∧' => Tok::And,
            '∨' => Tok::Or,
            '⇔' => Tok::Iff,
            '⇒' => Tok::Implies,
            '≜' => Tok::Defines,
            '/' => match chars.peek() {
                Some('\\') => {
                    bump!();
                    Tok::And
                }
                Some('/') => {
                    while let Some(c) = bump!() {
                        if c == '\n' {
                            break;
                        }
                    }
                    continue;
                }
                _ => return Err(lex_error(span, c)),
            },
            '\\' => match chars.peek() {
                Some('/') => {
                    bump!();
                    Tok::Or
                }
                _ => return Err(lex_error(span, c)),
            },
            ':' => match chars.peek() {
                Some('=') => {
                    bump!();
                    Tok::Assign
                }
                Some(':') => {
                    bump!();
                    if chars.peek() == Some(&'=') {
                        bump!();
                        Tok::Defines
                    } else {
                        Tok::ColonColon
                    }
                }
                _ => return Err(lex_error(span, c)),
            },
            '=' => match chars.peek() {
                Some('>') => {
                    bump!();
                    Tok::Implies
                }
                _ => return Err(lex_error(span, c)),
            },
            '<' => {
                if chars.peek() == Some(&'=') {
                    bump!();
                    if chars.peek() == Some(&'>') {
                        bump!();
                        Tok::Iff
                    } else {
                        return Err(lex_error(span, '<'));
                    }
                } else {
                    return Err(lex_error(span, c));
                }
            }
            other => return Err(lex_error(span, other)),
        };
        out.push((tok, span));
    }
    out.push((Tok::Eof, Span::new(line, col)));
    Ok(out)
}

fn lex_error(span: Span, c: char) -> SyntaxError {
    SyntaxError { line: span.line, column: span.column, expected: vec!["token".into()], found: format!("character {c:?}") }
}
