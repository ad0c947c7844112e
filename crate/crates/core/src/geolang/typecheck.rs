use std::collections::HashMap;

use super::ast::*;
use super::registry::{ConceptSignature, Registry};
use super::TypeError;

/// A program whose every term and atom carries its sort.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedProgram {
    pub program: Program<Sort>,
    /// Declared object names in declaration order.
    pub declared: Vec<(String, Sort)>,
}

impl TypedProgram {
    pub fn sort_of(&self, name: &str) -> Option<Sort> {
        self.declared.iter().find(|(n, _)| n == name).map(|(_, s)| *s)
    }
}

pub fn typecheck(program: &Program, registry: &Registry) -> Result<TypedProgram, TypeError> {
    let mut local: HashMap<String, ConceptSignature> = HashMap::new();
    let mut scope: Vec<(String, Sort)> = Vec::new();
    let mut items = Vec::with_capacity(program.items.len());

    for item in &program.items {
        let lookup = |s: &str| local.get(s).or_else(|| registry.signature(s)).cloned();
        match item {
            Item::Declaration { name, value, span } => {
                if scope.iter().any(|(n, _)| n == name) {
                    return Err(TypeError::Redeclared { name: name.clone(), span: *span });
                }
                let value = check_term(value, &scope, &lookup)?;
                if value.ann == Sort::Bool {
                    return Err(TypeError::SortMismatch { expected: "an object sort".into(), found: Sort::Bool, span: value.span });
                }
                scope.push((name.clone(), value.ann));
                items.push(Item::Declaration { name: name.clone(), value, span: *span });
            }
            Item::Formula(f) => {
                items.push(Item::Formula(check_formula(f, &scope, &lookup)?));
            }
            Item::Definition(d) => {
                let typed = check_definition(d, &lookup)?;
                local.insert(
                    d.symbol.clone(),
                    ConceptSignature {
                        symbol: d.symbol.clone(),
                        params: d.params.iter().map(|p| SortSet::from(p.sort)).collect(),
                        result: d.result.sort,
                        primitive: false,
                    },
                );
                items.push(Item::Definition(typed));
            }
        }
    }
    Ok(TypedProgram { program: Program { items }, declared: scope })
}

/// Checks a definition body against `registry`; the defined symbol itself
/// is not in scope inside its body.
pub fn typecheck_definition(d: &Definition, registry: &Registry) -> Result<Definition<Sort>, TypeError> {
    check_definition(d, &|s: &str| registry.signature(s).cloned())
}

fn check_definition(d: &Definition, lookup: &impl Fn(&str) -> Option<ConceptSignature>) -> Result<Definition<Sort>, TypeError> {
    let mut scope: Vec<(String, Sort)> = Vec::new();
    for p in d.params.iter().chain(std::iter::once(&d.result)) {
        if scope.iter().any(|(n, _)| *n == p.name) {
            return Err(TypeError::Redeclared { name: p.name.clone(), span: p.span });
        }
        scope.push((p.name.clone(), p.sort));
    }
    let lookup_no_self = |s: &str| if s == d.symbol { None } else { lookup(s) };
    let body = check_formula(&d.body, &scope, &lookup_no_self)?;
    Ok(Definition { symbol: d.symbol.clone(), params: d.params.clone(), result: d.result.clone(), body, span: d.span })
}

fn check_formula(f: &Formula, scope: &[(String, Sort)], lookup: &impl Fn(&str) -> Option<ConceptSignature>) -> Result<Formula<Sort>, TypeError> {
    f.map_atoms(&mut |t| {
        let typed = check_term(t, scope, lookup)?;
        if typed.ann != Sort::Bool {
            return Err(TypeError::SortMismatch { expected: "Bool".into(), found: typed.ann, span: typed.span });
        }
        Ok(typed)
    })
}

fn check_term(t: &Term, scope: &[(String, Sort)], lookup: &impl Fn(&str) -> Option<ConceptSignature>) -> Result<Term<Sort>, TypeError> {
    match &t.kind {
        TermKind::Var(v) => {
            let sort = scope.iter().rev().find(|(n, _)| n == v).map(|(_, s)| *s).ok_or_else(|| TypeError::UnknownSymbol { name: v.clone(), span: t.span })?;
            Ok(Term { kind: TermKind::Var(v.clone()), span: t.span, ann: sort })
        }
        TermKind::App { head, args } => {
            let sig = lookup(head).ok_or_else(|| TypeError::UnknownSymbol { name: head.clone(), span: t.span })?;
            if sig.params.len() != args.len() {
                return Err(TypeError::ArityMismatch { symbol: head.clone(), expected: sig.params.len(), found: args.len(), span: t.span });
            }
            let mut typed_args = Vec::with_capacity(args.len());
            for (arg, want) in args.iter().zip(&sig.params) {
                let a = check_term(arg, scope, lookup)?;
                if !want.contains(a.ann) {
                    return Err(TypeError::SortMismatch { expected: want.to_string(), found: a.ann, span: a.span });
                }
                typed_args.push(a);
            }
            Ok(Term { kind: TermKind::App { head: head.clone(), args: typed_args }, span: t.span, ann: sig.result })
        }
    }
}
