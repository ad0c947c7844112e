//! Definition unfolding.
//!
//! Every derived term `f(args)` outside the target profile is replaced by a
//! fresh variable of `f`'s result sort, and `f`'s body instantiated at
//! `(args, var)` is appended to the constraint list. Tuple-like concepts
//! are resolved structurally: a projection of a tuple term is rewritten to
//! the corresponding argument.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::geolang::{
    parse, pretty_formula, pretty_term, typecheck_definition, ConceptKind, ConceptSignature, Definition, Formula, Item, Registry, Sort, Term, TermKind,
    TypeError, TypedProgram,
};

const PRELUDE: &str = include_str!("../data/prelude.geo");
const PROVER_CORE: &str = include_str!("../data/prover-core.profile");
const DGS_CORE: &str = include_str!("../data/dgs-core.profile");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegisterError {
    #[error("symbol `{0}` is already registered")]
    DuplicateSymbol(String),
    #[error("definition of `{symbol}` uses unknown symbol `{unknown}`")]
    UnknownBodySymbol { symbol: String, unknown: String },
    #[error("definition of `{symbol}` is ill-typed: {source}")]
    IllTyped { symbol: String, source: TypeError },
    #[error("definition of `{symbol}` is not supported: {reason}")]
    UnsupportedBody { symbol: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpandError {
    #[error("no definition for `{0}` outside the target profile")]
    NoDefinition(String),
    #[error("definition cycle: {}", .0.join(" -> "))]
    ExpansionCycle(Vec<String>),
    #[error("sort mismatch: {0}")]
    SortMismatch(String),
    #[error("unsupported statement shape: {0}")]
    UnsupportedConclusion(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("profile line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("profile `{profile}` allows unregistered symbol `{symbol}`")]
    UnknownSymbol { profile: String, symbol: String },
}

/// Registers a derived concept definition.
///
/// The body may only use symbols registered before it, so the definition
/// dependency graph is acyclic by construction.
pub fn register_definition(def: &Definition, registry: &mut Registry) -> Result<ConceptSignature, RegisterError> {
    let symbol = def.symbol.clone();
    if registry.contains(&symbol) {
        return Err(RegisterError::DuplicateSymbol(symbol));
    }
    let typed = typecheck_definition(def, registry).map_err(|e| match e {
        TypeError::UnknownSymbol { name, .. } if !def.params.iter().any(|p| p.name == name) && name != def.result.name => {
            RegisterError::UnknownBodySymbol { symbol: symbol.clone(), unknown: name }
        }
        other => RegisterError::IllTyped { symbol: symbol.clone(), source: other },
    })?;
    let unsupported = |reason: &str| RegisterError::UnsupportedBody { symbol: symbol.clone(), reason: reason.to_string() };
    let conjuncts = typed.body.conjuncts().ok_or_else(|| unsupported("body must be a conjunction of atoms"))?;

    if let Some((tuple, projections)) = tuple_for_sort(registry, def.result.sort) {
        // Tuple-valued definitions must pin every projection of the result.
        let mut seen = vec![false; projections.len()];
        for atom in &conjuncts {
            let idx = projection_equation(atom, &def.result.name, &projections)
                .ok_or_else(|| unsupported(&format!("{tuple}-valued body must equate projections of the result")))?;
            seen[idx] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(unsupported(&format!("every projection of the {tuple} result must be given")));
        }
    }

    let deps: BTreeSet<String> = typed
        .body
        .atoms()
        .iter()
        .flat_map(|t| {
            let mut heads = Vec::new();
            t.for_each_head(&mut |h| heads.push(h.to_string()));
            heads
        })
        .collect();
    Ok(registry.insert_derived(typed, deps))
}

fn tuple_for_sort(registry: &Registry, sort: Sort) -> Option<(String, Vec<String>)> {
    registry.symbols().find_map(|s| match registry.get(s) {
        Some(c) if c.signature.result == sort => match &c.kind {
            ConceptKind::Tuple { projections } => Some((s.to_string(), projections.clone())),
            _ => None,
        },
        _ => None,
    })
}

/// Matches `equalp(proj_i(result), t)` and returns `i`.
fn projection_equation<A>(atom: &Term<A>, result: &str, projections: &[String]) -> Option<usize> {
    if atom.head() != Some("equalp") {
        return None;
    }
    let lhs = &atom.args()[0];
    let idx = projections.iter().position(|p| Some(p.as_str()) == lhs.head())?;
    (lhs.args().first()?.as_var() == Some(result)).then_some(idx)
}

/// Primitives, tuple concepts and the shipped derived definitions.
pub fn shipped_registry() -> Registry {
    let mut r = Registry::primitives();
    let prelude = parse(PRELUDE).expect("shipped prelude parses");
    for def in prelude.definitions() {
        register_definition(def, &mut r).expect("shipped prelude registers");
    }
    r
}

/// A target backend's vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Profile {
    pub name: String,
    pub allowed: BTreeSet<String>,
}

impl Profile {
    pub fn prover_core() -> Profile {
        PROVER_CORE.parse().expect("shipped profile parses")
    }

    pub fn dgs_core() -> Profile {
        DGS_CORE.parse().expect("shipped profile parses")
    }

    pub fn by_name(name: &str) -> Option<Profile> {
        match name {
            "prover-core" => Some(Profile::prover_core()),
            "dgs-core" => Some(Profile::dgs_core()),
            _ => None,
        }
    }

    pub fn allows(&self, symbol: &str) -> bool {
        self.allowed.contains(symbol)
    }

    pub fn validate(&self, registry: &Registry) -> Result<(), ProfileError> {
        match self.allowed.iter().find(|s| !registry.contains(s)) {
            Some(s) => Err(ProfileError::UnknownSymbol { profile: self.name.clone(), symbol: s.clone() }),
            None => Ok(()),
        }
    }
}

impl FromStr for Profile {
    type Err = ProfileError;

    /// ```text
    /// geobook-profile v1
    /// name = prover-core
    /// symbols = point line ...
    /// ```
    fn from_str(s: &str) -> Result<Profile, ProfileError> {
        let mut lines = s.lines().enumerate().filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
        match lines.next() {
            Some((_, l)) if l.trim() == "geobook-profile v1" => {}
            Some((i, _)) => return Err(ProfileError::Malformed { line: i + 1, reason: "expected `geobook-profile v1`".into() }),
            None => return Err(ProfileError::Malformed { line: 1, reason: "empty profile".into() }),
        }
        let (mut name, mut allowed) = (None, BTreeSet::new());
        for (i, line) in lines {
            let (key, value) = line.split_once('=').ok_or_else(|| ProfileError::Malformed { line: i + 1, reason: "expected `key = value`".into() })?;
            match key.trim() {
                "name" => name = Some(value.trim().to_string()),
                "symbols" => allowed.extend(value.split_whitespace().map(str::to_string)),
                other => return Err(ProfileError::Malformed { line: i + 1, reason: format!("unknown key `{other}`") }),
            }
        }
        let name = name.ok_or(ProfileError::Malformed { line: 1, reason: "missing `name`".into() })?;
        Ok(Profile { name, allowed })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuxVar {
    pub name: String,
    pub sort: Sort,
    /// The derived term this variable stands for, with expanded arguments.
    #[serde(serialize_with = "ser_term")]
    pub origin: Term,
    /// Indices into [`ExpandedStatement::constraints`] of this variable's
    /// instantiated definition body.
    pub constraints: Vec<usize>,
}

fn ser_term<S: serde::Serializer>(t: &Term, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&pretty_term(t))
}

fn ser_terms<S: serde::Serializer>(ts: &[Term], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(ts.iter().map(pretty_term))
}

fn ser_formula<S: serde::Serializer>(f: &Formula, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&pretty_formula(f))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpandedStatement {
    pub free_vars: Vec<(String, Sort)>,
    pub aux_vars: Vec<AuxVar>,
    /// Hypothesis atoms over the profile: definition bodies and, after
    /// [`split`](ExpandedStatement::split), the premises of the goal.
    #[serde(serialize_with = "ser_terms")]
    pub constraints: Vec<Term>,
    #[serde(serialize_with = "ser_formula")]
    pub conclusion: Formula,
    pub biconditional: bool,
}

/// One implication-shaped proof obligation with a single atomic conclusion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Goal {
    pub label: String,
    pub statement: ExpandedStatement,
}

impl ExpandedStatement {
    /// Indices of constraints that are not part of any auxiliary variable's
    /// definition.
    pub fn premise_indices(&self) -> Vec<usize> {
        let owned: BTreeSet<usize> = self.aux_vars.iter().flat_map(|a| a.constraints.iter().copied()).collect();
        (0..self.constraints.len()).filter(|i| !owned.contains(i)).collect()
    }

    pub fn conclusion_atom(&self) -> Option<&Term> {
        match &self.conclusion {
            Formula::Atom(t) => Some(t),
            _ => None,
        }
    }

    pub fn aux(&self, name: &str) -> Option<&AuxVar> {
        self.aux_vars.iter().find(|a| a.name == name)
    }

    /// Splits into goals whose premises are merged into the constraints and
    /// whose conclusion is a single atom. A biconditional yields its
    /// `forward` and `backward` implications; conjunctive conclusions yield
    /// one goal per conjunct.
    pub fn split(&self) -> Result<Vec<Goal>, ExpandError> {
        let mut goals = Vec::new();
        match &self.conclusion {
            Formula::Iff(l, r) => {
                self.push_goals("forward", l, r, &mut goals)?;
                self.push_goals("backward", r, l, &mut goals)?;
            }
            other => self.push_goals("goal", &Formula::True(Default::default()), other, &mut goals)?,
        }
        Ok(goals)
    }

    fn push_goals(&self, label: &str, premise: &Formula, conclusion: &Formula, out: &mut Vec<Goal>) -> Result<(), ExpandError> {
        let mut premises: Vec<Term> = premise
            .conjuncts()
            .ok_or_else(|| ExpandError::UnsupportedConclusion(format!("premise `{}` is not a conjunction", pretty_formula(premise))))?
            .into_iter()
            .cloned()
            .collect();
        let mut conclusion = conclusion;
        while let Formula::Implies(p, q) = conclusion {
            premises.extend(
                p.conjuncts()
                    .ok_or_else(|| ExpandError::UnsupportedConclusion(format!("premise `{}` is not a conjunction", pretty_formula(p))))?
                    .into_iter()
                    .cloned(),
            );
            conclusion = q;
        }
        let atoms = conclusion
            .conjuncts()
            .ok_or_else(|| ExpandError::UnsupportedConclusion(format!("conclusion `{}` is not a conjunction of atoms", pretty_formula(conclusion))))?;
        let many = atoms.len() > 1;
        for (k, atom) in atoms.into_iter().enumerate() {
            let mut stmt = self.clone();
            stmt.constraints.extend(premises.iter().cloned());
            stmt.conclusion = Formula::Atom(atom.clone());
            stmt.biconditional = false;
            let label = if many { format!("{label}.{}", k + 1) } else { label.to_string() };
            out.push(Goal { label, statement: stmt });
        }
        Ok(())
    }
}

impl fmt::Display for ExpandedStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let free: Vec<_> = self.free_vars.iter().map(|(n, s)| format!("{n}::{s}")).collect();
        writeln!(f, "free: {}", free.join(", "))?;
        for a in &self.aux_vars {
            writeln!(f, "aux: {}::{} = {}", a.name, a.sort, pretty_term(&a.origin))?;
        }
        for c in &self.constraints {
            writeln!(f, "constraint: {}", pretty_term(c))?;
        }
        write!(f, "conclusion: {}", pretty_formula(&self.conclusion))
    }
}

/// Unfolds every symbol outside `profile` until only profile symbols remain.
pub fn expand(statement: &TypedProgram, registry: &Registry, profile: &Profile) -> Result<ExpandedStatement, ExpandError> {
    let reserved: BTreeSet<String> = statement.declared.iter().map(|(n, _)| n.clone()).collect();
    let mut ex = Expander {
        registry,
        profile,
        reserved,
        counters: BTreeMap::new(),
        memo: HashMap::new(),
        aliases: HashMap::new(),
        stack: Vec::new(),
        free_vars: Vec::new(),
        aux_vars: Vec::new(),
        constraints: Vec::new(),
    };
    let mut conclusion: Option<Formula> = None;
    let mut formulas = 0;
    for item in &statement.program.items {
        match item {
            Item::Declaration { name, value, .. } => {
                let value = ex.term(&value.erase(), Some(name))?;
                match &value.kind {
                    TermKind::App { head, args } if head == "point" && args.is_empty() => {
                        ex.free_vars.push((name.clone(), Sort::Point));
                    }
                    TermKind::Var(v) if v == name => {}
                    _ => {
                        ex.aliases.insert(name.clone(), value);
                    }
                }
            }
            Item::Formula(f) => {
                formulas += 1;
                let f = f.map_atoms(&mut |t| ex.term(&t.erase(), None))?;
                conclusion = Some(match conclusion {
                    None => f,
                    Some(prev) => Formula::and(prev, f),
                });
            }
            Item::Definition(_) => {}
        }
    }
    let conclusion = conclusion.unwrap_or(Formula::True(Default::default()));
    let biconditional = formulas == 1 && matches!(conclusion, Formula::Iff(..));
    Ok(ExpandedStatement { free_vars: ex.free_vars, aux_vars: ex.aux_vars, constraints: ex.constraints, conclusion, biconditional })
}

struct Expander<'a> {
    registry: &'a Registry,
    profile: &'a Profile,
    reserved: BTreeSet<String>,
    counters: BTreeMap<String, usize>,
    memo: HashMap<Term, String>,
    aliases: HashMap<String, Term>,
    stack: Vec<String>,
    free_vars: Vec<(String, Sort)>,
    aux_vars: Vec<AuxVar>,
    constraints: Vec<Term>,
}

impl Expander<'_> {
    fn fresh(&mut self, symbol: &str) -> String {
        loop {
            let k = self.counters.entry(symbol.to_string()).or_insert(0);
            *k += 1;
            let name = format!("_{symbol}{k}");
            if !self.reserved.contains(&name) {
                return name;
            }
        }
    }

    /// Expands `t` leftmost-innermost. `retain` names the variable when `t`
    /// itself is the value of a declaration.
    fn term(&mut self, t: &Term, retain: Option<&str>) -> Result<Term, ExpandError> {
        let (head, args) = match &t.kind {
            TermKind::Var(v) => return Ok(self.aliases.get(v).cloned().unwrap_or_else(|| t.clone())),
            TermKind::App { head, args } => (head, args),
        };
        let args = args.iter().map(|a| self.term(a, None)).collect::<Result<Vec<_>, _>>()?;
        let concept = self.registry.get(head).ok_or_else(|| ExpandError::NoDefinition(head.clone()))?;
        let app = Term { kind: TermKind::App { head: head.clone(), args: args.clone() }, span: t.span, ann: () };
        if self.profile.allows(head) {
            return Ok(app);
        }
        match &concept.kind {
            ConceptKind::Primitive => Err(ExpandError::NoDefinition(head.clone())),
            ConceptKind::Tuple { .. } => Ok(app),
            ConceptKind::Projection { tuple, index } => match &args[0].kind {
                TermKind::App { head: h, args: targs } if h == tuple => Ok(targs[*index].clone()),
                _ => Err(ExpandError::SortMismatch(format!("`{}` applied to `{}`, which is not a {tuple} term", head, pretty_term(&args[0])))),
            },
            ConceptKind::Derived(def) => {
                if let Some(pos) = self.stack.iter().position(|s| s == head) {
                    let mut chain = self.stack[pos..].to_vec();
                    chain.push(head.clone());
                    return Err(ExpandError::ExpansionCycle(chain));
                }
                if let Some(v) = self.memo.get(&app) {
                    return Ok(Term::var(v.clone()));
                }
                self.stack.push(head.clone());
                let out = self.unfold(def, &app, &args, retain);
                self.stack.pop();
                out
            }
        }
    }

    fn unfold(&mut self, def: &Definition<Sort>, app: &Term, args: &[Term], retain: Option<&str>) -> Result<Term, ExpandError> {
        let mut subst: HashMap<&str, Term> = def.params.iter().map(|p| p.name.as_str()).zip(args.iter().cloned()).collect();
        let body = def.body.conjuncts().expect("registered bodies are conjunctive");

        if let Some(ConceptKind::Tuple { projections }) = self.tuple_kind(def.result.sort) {
            // Rewrite to the tuple constructor applied to the pinned components.
            let tuple = self.tuple_symbol(def.result.sort).expect("tuple sort has a constructor");
            let mut components = vec![None; projections.len()];
            for atom in body {
                let idx = projection_equation(atom, &def.result.name, &projections).expect("checked at registration");
                let rhs = substitute(&atom.args()[1].erase(), &subst);
                components[idx] = Some(self.term(&rhs, None)?);
            }
            let args = components.into_iter().map(|c| c.expect("all projections pinned")).collect();
            return Ok(Term { kind: TermKind::App { head: tuple, args }, span: app.span, ann: () });
        }

        let name = match retain {
            Some(n) => n.to_string(),
            None => self.fresh(&def.symbol),
        };
        self.memo.insert(app.clone(), name.clone());
        subst.insert(def.result.name.as_str(), Term::var(name.clone()));
        let mut owned = Vec::new();
        for atom in body {
            let inst = substitute(&atom.erase(), &subst);
            let expanded = self.term(&inst, None)?;
            owned.push(self.constraints.len());
            self.constraints.push(expanded);
        }
        self.aux_vars.push(AuxVar { name: name.clone(), sort: def.result.sort, origin: app.clone(), constraints: owned });
        Ok(Term::var(name))
    }

    fn tuple_symbol(&self, sort: Sort) -> Option<String> {
        tuple_for_sort(self.registry, sort).map(|(s, _)| s)
    }

    fn tuple_kind(&self, sort: Sort) -> Option<ConceptKind> {
        tuple_for_sort(self.registry, sort).map(|(_, projections)| ConceptKind::Tuple { projections })
    }
}

fn substitute(t: &Term, subst: &HashMap<&str, Term>) -> Term {
    match &t.kind {
        TermKind::Var(v) => subst.get(v.as_str()).cloned().unwrap_or_else(|| t.clone()),
        TermKind::App { head, args } => {
            Term { kind: TermKind::App { head: head.clone(), args: args.iter().map(|a| substitute(a, subst)).collect() }, span: t.span, ann: () }
        }
    }
}
