//! Canonical surface syntax.

use std::fmt::Write;

use super::ast::*;

pub fn pretty<A>(program: &Program<A>) -> String {
    let lines: Vec<String> = program.items.iter().map(pretty_item).collect();
    lines.join("\n")
}

pub fn pretty_item<A>(item: &Item<A>) -> String {
    match item {
        Item::Declaration { name, value, .. } => format!("{name} := {};", pretty_term(value)),
        Item::Formula(f) => format!("{};", pretty_formula(f)),
        Item::Definition(d) => format!("{};", pretty_definition(d)),
    }
}

pub fn pretty_definition<A>(d: &Definition<A>) -> String {
    let params: Vec<String> = d.params.iter().map(|p| format!("{}::{}", p.name, p.sort)).collect();
    format!("{}({}) ::= [{}::{} where {}]", d.symbol, params.join(", "), d.result.name, d.result.sort, pretty_formula(&d.body))
}

pub fn pretty_term<A>(t: &Term<A>) -> String {
    let mut s = String::new();
    write_term(&mut s, t);
    s
}

fn write_term<A>(out: &mut String, t: &Term<A>) {
    match &t.kind {
        TermKind::Var(v) => out.push_str(v),
        TermKind::App { head, args } => {
            out.push_str(head);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_term(out, a);
            }
            out.push(')');
        }
    }
}

pub fn pretty_formula<A>(f: &Formula<A>) -> String {
    let mut s = String::new();
    write_formula(&mut s, f, 0);
    s
}

// iff 1 < implies 2 < or 3 < and 4 < not 5
fn write_formula<A>(out: &mut String, f: &Formula<A>, ctx: u8) {
    let (prec, l, op, r, lp, rp) = match f {
        Formula::Atom(t) => return write_term(out, t),
        Formula::True(_) => return out.push_str("true"),
        Formula::Not(x) => {
            out.push('!');
            return write_formula(out, x, 5);
        }
        Formula::Iff(a, b) => (1, a, "<=>", b, 1, 2),
        Formula::Implies(a, b) => (2, a, "=>", b, 3, 2),
        Formula::Or(a, b) => (3, a, "\\/", b, 3, 4),
        Formula::And(a, b) => (4, a, "/\\", b, 4, 5),
    };
    let paren = prec < ctx;
    if paren {
        out.push('(');
    }
    write_formula(out, l, lp);
    let _ = write!(out, " {op} ");
    write_formula(out, r, rp);
    if paren {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn canonicalizes_spacing() {
        assert_eq!(pretty(&parse("A:=point( ) ;").unwrap()), "A := point();");
    }

    #[test]
    fn keeps_needed_parentheses_only() {
        for (src, canon) in [
            ("(a() /\\ b()) /\\ c();", "a() /\\ b() /\\ c();"),
            ("a() /\\ (b() /\\ c());", "a() /\\ (b() /\\ c());"),
            ("(a() => b()) => c();", "(a() => b()) => c();"),
            ("a() => (b() => c());", "a() => b() => c();"),
            ("!(a() \\/ b());", "!(a() \\/ b());"),
            ("(a() <=> b()) /\\ c();", "(a() <=> b()) /\\ c();"),
        ] {
            let p = parse(src).unwrap();
            assert_eq!(pretty(&p), canon);
            assert_eq!(parse(canon).unwrap(), p);
        }
    }
}
