//! Compilation of an expanded statement into a ruler-and-compass style
//! construction sequence.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::expand::{ExpandError, ExpandedStatement};
use crate::geolang::{pretty_term, Sort, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructError {
    #[error("not constructive: cannot place `{object}`: {reason}")]
    NotConstructive { object: String, reason: String },
    #[error(transparent)]
    Expand(#[from] ExpandError),
}

/// A one-parameter set of points, given by already constructed objects.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Locus {
    /// The line through `a` and `b`.
    Line { a: String, b: String },
    /// The line through `through` perpendicular to line `ab`.
    Perpendicular { through: String, a: String, b: String },
    /// The line through `through` parallel to line `ab`.
    Parallel { through: String, a: String, b: String },
    /// The perpendicular bisector of `ab`.
    Bisector { a: String, b: String },
    /// A circle object.
    Circle { circle: String },
    /// The circle about `center` through `through`.
    CircleThrough { center: String, through: String },
    /// The circle about `center` with radius `|ab|`.
    CircleRadius { center: String, a: String, b: String },
}

impl Locus {
    pub fn is_circle(&self) -> bool {
        matches!(self, Locus::Circle { .. } | Locus::CircleThrough { .. } | Locus::CircleRadius { .. })
    }

    pub fn inputs(&self) -> Vec<&str> {
        match self {
            Locus::Line { a, b } | Locus::Bisector { a, b } => vec![a, b],
            Locus::Perpendicular { through, a, b } | Locus::Parallel { through, a, b } => vec![through, a, b],
            Locus::Circle { circle } => vec![circle],
            Locus::CircleThrough { center, through } => vec![center, through],
            Locus::CircleRadius { center, a, b } => vec![center, a, b],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "step", rename_all = "camelCase")]
pub enum Step {
    /// A draggable point with its default position.
    FreePoint {
        out: String,
        at: [f64; 2],
    },
    Midpoint {
        out: String,
        a: String,
        b: String,
    },
    /// Foot of the perpendicular from `p` to line `ab`.
    Foot {
        out: String,
        p: String,
        a: String,
        b: String,
    },
    /// The circle through three points.
    Circumcircle {
        out: String,
        a: String,
        b: String,
        c: String,
    },
    /// An intersection of two loci. `branch` picks one of two points when a
    /// circle is involved: 0 is the one with the smaller x (then y).
    Intersect {
        out: String,
        first: Locus,
        second: Locus,
        branch: u8,
    },
    /// A draggable point on a locus: the parameter is the angle in radians
    /// on circles and the affine coordinate on lines.
    PointOn {
        out: String,
        locus: Locus,
        param: f64,
    },
}

impl Step {
    pub fn out(&self) -> &str {
        match self {
            Step::FreePoint { out, .. }
            | Step::Midpoint { out, .. }
            | Step::Foot { out, .. }
            | Step::Circumcircle { out, .. }
            | Step::Intersect { out, .. }
            | Step::PointOn { out, .. } => out,
        }
    }

    pub fn inputs(&self) -> Vec<&str> {
        match self {
            Step::FreePoint { .. } => vec![],
            Step::Midpoint { a, b, .. } => vec![a, b],
            Step::Foot { p, a, b, .. } => vec![p, a, b],
            Step::Circumcircle { a, b, c, .. } => vec![a, b, c],
            Step::Intersect { first, second, .. } => first.inputs().into_iter().chain(second.inputs()).collect(),
            Step::PointOn { locus, .. } => locus.inputs(),
        }
    }

    pub fn output_sort(&self) -> Sort {
        match self {
            Step::Circumcircle { .. } => Sort::Circle,
            _ => Sort::Point,
        }
    }

    /// Whether the step has a user-adjustable value.
    pub fn is_draggable(&self) -> bool {
        matches!(self, Step::FreePoint { .. } | Step::PointOn { .. })
    }
}

fn ser_terms<S: serde::Serializer>(ts: &[Term], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(ts.iter().map(pretty_term))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructionSequence {
    pub steps: Vec<Step>,
    /// Conclusion atoms to display and measure.
    #[serde(serialize_with = "ser_terms")]
    pub conclusions: Vec<Term>,
    /// Hypotheses not enforced by any step; they hold only if the free
    /// values are chosen accordingly.
    #[serde(serialize_with = "ser_terms")]
    pub checks: Vec<Term>,
}

impl ConstructionSequence {
    pub fn step(&self, out: &str) -> Option<&Step> {
        self.steps.iter().find(|s| s.out() == out)
    }
}

/// Default positions for free points, a scalene triangle and then a spiral.
pub fn default_position(k: usize) -> [f64; 2] {
    const FIRST: [[f64; 2]; 4] = [[0.0, 0.0], [4.0, 0.0], [1.0, 3.0], [5.0, 3.0]];
    if let Some(p) = FIRST.get(k) {
        return *p;
    }
    let t = k as f64;
    [(2.0 + 0.5 * t) * t.cos(), (2.0 + 0.5 * t) * t.sin()]
}

/// Compiles a statement; biconditionals compile from their forward
/// direction.
pub fn compile_construction(stmt: &ExpandedStatement) -> Result<ConstructionSequence, ConstructError> {
    let goals = stmt.split()?;
    let first = goals.first().map(|g| g.label.split('.').next().unwrap_or("").to_string());
    let same: Vec<_> = goals.iter().filter(|g| Some(g.label.split('.').next().unwrap_or("").to_string()) == first).collect();
    let base = match same.first() {
        Some(g) => &g.statement,
        None => stmt,
    };
    let conclusions: Vec<Term> = same.iter().filter_map(|g| g.statement.conclusion_atom().cloned()).collect();
    compile_with(base, conclusions)
}

/// Compiles one goal of [`ExpandedStatement::split`], whose premises become
/// constraints on the free points.
pub fn compile_goal(goal: &ExpandedStatement) -> Result<ConstructionSequence, ConstructError> {
    compile_with(goal, goal.conclusion_atom().cloned().into_iter().collect())
}

struct Obj<'a> {
    name: &'a str,
    free: bool,
    origin: Option<&'a Term>,
    /// Constraints this object is placed by.
    owned: Vec<usize>,
    deps: BTreeSet<String>,
}

fn compile_with(goal: &ExpandedStatement, conclusions: Vec<Term>) -> Result<ConstructionSequence, ConstructError> {
    let mut objs: Vec<Obj> = goal.free_vars.iter().map(|(n, _)| Obj { name: n, free: true, origin: None, owned: vec![], deps: BTreeSet::new() }).collect();
    for a in &goal.aux_vars {
        let mut deps = BTreeSet::new();
        a.origin.for_each_var(&mut |v| {
            deps.insert(v.to_string());
        });
        objs.push(Obj { name: &a.name, free: false, origin: Some(&a.origin), owned: a.constraints.clone(), deps });
    }
    let transitive = |objs: &[Obj], name: &str| -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![name.to_string()];
        while let Some(n) = stack.pop() {
            if let Some(o) = objs.iter().find(|o| o.name == n) {
                for d in &o.deps {
                    if seen.insert(d.clone()) {
                        stack.push(d.clone());
                    }
                }
            }
        }
        seen
    };

    // Premises are owned by the latest free point they mention that no
    // other object in the atom depends on.
    let mut checks = Vec::new();
    for i in goal.premise_indices() {
        let atom = &goal.constraints[i];
        let names = vars_of(atom);
        let owner = objs
            .iter()
            .enumerate()
            .filter(|(_, o)| o.free && names.iter().any(|n| n == o.name))
            .filter(|(_, o)| names.iter().all(|n| n == o.name || !transitive(&objs, n).contains(o.name)))
            .map(|(k, _)| k)
            .next_back();
        match owner {
            Some(k) => objs[k].owned.push(i),
            None => checks.push(atom.clone()),
        }
    }

    let mut known: BTreeMap<String, Sort> = BTreeMap::new();
    let mut steps = Vec::new();
    let mut done = vec![false; objs.len()];
    let mut free_count = 0;
    while done.iter().any(|d| !d) {
        let ready = (0..objs.len()).find(|&k| {
            !done[k] && {
                let o = &objs[k];
                o.deps.iter().all(|d| known.contains_key(d))
                    && o.owned.iter().all(|&i| vars_of(&goal.constraints[i]).iter().all(|n| n == o.name || known.contains_key(n)))
            }
        });
        let Some(k) = ready else {
            let k = (0..objs.len()).find(|&k| !done[k]).expect("some object remains");
            return Err(ConstructError::NotConstructive {
                object: objs[k].name.to_string(),
                reason: "its constraints depend on objects that cannot be placed first".into(),
            });
        };
        done[k] = true;
        let o = &objs[k];
        let out = o.name.to_string();
        let step = match o.origin.and_then(|t| named_step(&out, t)) {
            // A recognized constructor satisfies its defining constraints.
            Some(step) => step,
            None => {
                let mut loci = Vec::new();
                for &i in &o.owned {
                    let atom = &goal.constraints[i];
                    match locus_of(atom, o.name, &known) {
                        Some(l) if loci.len() < 2 => loci.push(l),
                        Some(_) => checks.push(atom.clone()),
                        None => return Err(ConstructError::NotConstructive { object: out, reason: format!("no construction for `{}`", pretty_term(atom)) }),
                    }
                }
                let mut loci = loci.into_iter();
                match (loci.next(), loci.next()) {
                    (None, _) if o.free => {
                        free_count += 1;
                        Step::FreePoint { out: out.clone(), at: default_position(free_count - 1) }
                    }
                    (None, _) => return Err(ConstructError::NotConstructive { object: out, reason: "no constraint determines it".into() }),
                    (Some(locus), None) => {
                        let param = if locus.is_circle() { 1.0 } else { 0.3 };
                        Step::PointOn { out: out.clone(), locus, param }
                    }
                    (Some(first), Some(second)) => {
                        if first.is_circle() && !second.is_circle() {
                            Step::Intersect { out: out.clone(), first: second, second: first, branch: 0 }
                        } else {
                            Step::Intersect { out: out.clone(), first, second, branch: 0 }
                        }
                    }
                }
            }
        };
        known.insert(out, step.output_sort());
        steps.push(step);
    }
    Ok(ConstructionSequence { steps, conclusions, checks })
}

/// Recognized constructor heads.
fn named_step(out: &str, origin: &Term) -> Option<Step> {
    let v = |t: &Term| t.as_var().map(str::to_string);
    let line = |t: &Term| match (t.head(), t.args()) {
        (Some("line"), [a, b]) => Some((v(a)?, v(b)?)),
        _ => None,
    };
    let out = out.to_string();
    match (origin.head()?, origin.args()) {
        ("midpoint", [a, b]) => Some(Step::Midpoint { out, a: v(a)?, b: v(b)? }),
        ("foot", [p, l]) => {
            let (a, b) = line(l)?;
            Some(Step::Foot { out, p: v(p)?, a, b })
        }
        ("circumcircle", [t]) => match (t.head(), t.args()) {
            (Some("triangle"), [a, b, c]) => Some(Step::Circumcircle { out, a: v(a)?, b: v(b)?, c: v(c)? }),
            _ => None,
        },
        ("intersection", [l, m]) => {
            let ((a, b), (c, d)) = (line(l)?, line(m)?);
            Some(Step::Intersect { out, first: Locus::Line { a, b }, second: Locus::Line { a: c, b: d }, branch: 0 })
        }
        _ => None,
    }
}

fn vars_of(t: &Term) -> Vec<String> {
    let mut out = Vec::new();
    t.for_each_var(&mut |v| {
        if !out.iter().any(|o: &String| o == v) {
            out.push(v.to_string());
        }
    });
    out
}

/// The locus of `x` described by `atom`, given that every other object in
/// it is known.
fn locus_of(atom: &Term, x: &str, known: &BTreeMap<String, Sort>) -> Option<Locus> {
    let var = |t: &Term| t.as_var().map(str::to_string);
    let is_x = |t: &Term| t.as_var() == Some(x);
    let line_pts = |t: &Term| match (t.head(), t.args()) {
        (Some("line"), [a, b]) => Some((a.clone(), b.clone())),
        _ => None,
    };
    let count = {
        let mut n = 0;
        atom.for_each_var(&mut |v| n += usize::from(v == x));
        n
    };
    let args = atom.args();
    match atom.head()? {
        "incident" if count == 1 && is_x(&args[0]) => {
            if let Some((a, b)) = line_pts(&args[1]) {
                return Some(Locus::Line { a: var(&a)?, b: var(&b)? });
            }
            if let (Some("circle"), [c, t]) = (args[1].head(), args[1].args()) {
                return Some(Locus::CircleThrough { center: var(c)?, through: var(t)? });
            }
            let c = var(&args[1])?;
            (known.get(&c) == Some(&Sort::Circle)).then_some(Locus::Circle { circle: c })
        }
        "collinear" if count == 1 => {
            let others: Vec<String> = args.iter().filter(|t| !is_x(t)).map(var).collect::<Option<_>>()?;
            Some(Locus::Line { a: others[0].clone(), b: others[1].clone() })
        }
        h @ ("perpendicular" | "parallel") if count == 1 => {
            let (l1, l2) = (line_pts(&args[0])?, line_pts(&args[1])?);
            let (with_x, other) = if is_x(&l1.0) || is_x(&l1.1) { (l1, l2) } else { (l2, l1) };
            let through = if is_x(&with_x.0) { var(&with_x.1)? } else { var(&with_x.0)? };
            let (a, b) = (var(&other.0)?, var(&other.1)?);
            Some(if h == "perpendicular" { Locus::Perpendicular { through, a, b } } else { Locus::Parallel { through, a, b } })
        }
        "eqdist" => {
            let pair = |i: usize| -> Option<(bool, String)> {
                match (is_x(&args[i]), is_x(&args[i + 1])) {
                    (true, false) => Some((true, var(&args[i + 1])?)),
                    (false, true) => Some((true, var(&args[i])?)),
                    (false, false) => None,
                    (true, true) => None,
                }
            };
            match (pair(0), pair(2), count) {
                (Some((_, a)), Some((_, b)), 2) => Some(Locus::Bisector { a, b }),
                (Some((_, c)), None, 1) => Some(Locus::CircleRadius { center: c, a: var(&args[2])?, b: var(&args[3])? }),
                (None, Some((_, c)), 1) => Some(Locus::CircleRadius { center: c, a: var(&args[0])?, b: var(&args[1])? }),
                _ => None,
            }
        }
        _ => None,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::expand::{expand, shipped_registry, Profile};
    use crate::geolang::{parse, typecheck, SIMSON_SOURCE};

    pub(crate) fn compile(src: &str) -> Result<ConstructionSequence, ConstructError> {
        let reg = shipped_registry();
        let typed = typecheck(&parse(src).unwrap(), &reg).unwrap();
        compile_construction(&expand(&typed, &reg, &Profile::prover_core()).unwrap())
    }

    pub(crate) fn compile_backward_simson() -> ConstructionSequence {
        let reg = shipped_registry();
        let typed = typecheck(&parse(SIMSON_SOURCE).unwrap(), &reg).unwrap();
        let goals = expand(&typed, &reg, &Profile::prover_core()).unwrap().split().unwrap();
        compile_goal(&goals[1].statement).unwrap()
    }

    fn kinds(seq: &ConstructionSequence) -> Vec<String> {
        seq.steps.iter().map(|s| format!("{}:{}", serde_json::to_value(s).unwrap()["step"].as_str().unwrap(), s.out())).collect()
    }

    #[test]
    fn simson_sequence() {
        let seq = compile(SIMSON_SOURCE).unwrap();
        assert_eq!(
            kinds(&seq),
            ["freePoint:A", "freePoint:B", "freePoint:C", "circumcircle:_circumcircle1", "pointOn:D", "foot:_foot1", "foot:_foot2", "foot:_foot3"]
        );
        let Step::PointOn { locus, .. } = &seq.steps[4] else { panic!() };
        assert_eq!(*locus, Locus::Circle { circle: "_circumcircle1".into() });
        assert!(seq.checks.is_empty());
        assert_eq!(pretty_term(&seq.conclusions[0]), "collinear(_foot1, _foot2, _foot3)");
    }

    #[test]
    fn only_free_points() {
        let seq = compile("A := point(); B := point(); equalp(A, B);").unwrap();
        assert_eq!(kinds(&seq), ["freePoint:A", "freePoint:B"]);
    }

    #[test]
    fn three_concurrent_lines_move_the_third_to_checks() {
        let seq = compile(
            "A := point(); B := point(); C := point(); D := point(); E := point(); F := point(); P := point();
             incident(P, line(A, B)) /\\ incident(P, line(C, D)) /\\ incident(P, line(E, F)) => collinear(A, B, P);",
        )
        .unwrap();
        let Step::Intersect { first, second, .. } = seq.step("P").unwrap() else { panic!() };
        assert_eq!(*first, Locus::Line { a: "A".into(), b: "B".into() });
        assert_eq!(*second, Locus::Line { a: "C".into(), b: "D".into() });
        assert_eq!(seq.checks.iter().map(pretty_term).collect::<Vec<_>>(), ["incident(P, line(E, F))"]);
    }

    #[test]
    fn circumcenter_by_bisectors() {
        let seq = compile(
            "A := point(); B := point(); C := point(); O := point();
             eqdist(O, A, O, B) /\\ eqdist(O, B, O, C) => perpendicular(line(O, midpoint(A, C)), line(A, C));",
        )
        .unwrap();
        assert_eq!(
            *seq.step("O").unwrap(),
            Step::Intersect {
                out: "O".into(),
                first: Locus::Bisector { a: "A".into(), b: "B".into() },
                second: Locus::Bisector { a: "B".into(), b: "C".into() },
                branch: 0
            }
        );
        assert_eq!(seq.steps.len(), 5);
    }

    #[test]
    fn unconstructible_constraint_is_reported() {
        let err = compile("A := point(); B := point(); C := point(); P := point(); parallel(line(P, A), line(P, B)) => collinear(A, B, P);").unwrap_err();
        assert!(matches!(err, ConstructError::NotConstructive { ref object, .. } if object == "P"), "{err}");
    }
}
