//! Coordinate translation of an expanded goal into polynomial equations.
//!
//! Free points get parameter coordinates, except that the first free point
//! is placed at the origin and the second on the x-axis. Each hypothesis
//! atom is charged to one object, whose coordinates it determines; the
//! coordinates that no hypothesis determines stay parameters.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use super::poly::{Poly, Var};
use crate::expand::ExpandedStatement;
use crate::geolang::{pretty_formula, pretty_term, Sort, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("not expressible in coordinates: {0}")]
    Unsupported(String),
    #[error("`{atom}` over-constrains `{object}` and no earlier object has a free coordinate")]
    OverconstrainedDeclaration { object: String, atom: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hypothesis {
    #[serde(serialize_with = "ser_poly")]
    pub poly: Poly,
    pub source: String,
}

fn ser_poly<S: serde::Serializer>(p: &Poly, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&p.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObjectCoords {
    Point([Poly; 2]),
    /// A circle by its center and one point on it.
    Circle {
        center: [Poly; 2],
        through: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraicForm {
    /// `u1, u2, ...` for parameters, then `x1, x2, ...` for dependent
    /// variables; a variable's index is its position here.
    pub var_names: Vec<String>,
    pub num_params: usize,
    pub hypotheses: Vec<Hypothesis>,
    pub conclusion: Poly,
    pub conclusion_source: String,
    pub objects: BTreeMap<String, ObjectCoords>,
    /// Normalizations applied without loss of generality.
    pub wlog: Vec<String>,
}

impl AlgebraicForm {
    pub fn dependent_vars(&self) -> std::ops::Range<Var> {
        self.num_params..self.var_names.len()
    }

    pub fn show(&self, p: &Poly) -> String {
        p.display_with(&self.var_names).to_string()
    }
}

struct Obj {
    name: String,
    sort: Sort,
    /// Number of coordinates available to hypotheses.
    capacity: usize,
    /// Atoms charged here, as indices into the hypothesis atom list.
    charged: Vec<usize>,
    deps: BTreeSet<usize>,
    through: Option<String>,
}

/// Translates a single-conclusion goal (see [`ExpandedStatement::split`]).
pub fn algebraize(goal: &ExpandedStatement) -> Result<AlgebraicForm, AlgebraError> {
    let conclusion_atom =
        goal.conclusion_atom().ok_or_else(|| AlgebraError::Unsupported(format!("conclusion `{}` is not a single atom", pretty_formula(&goal.conclusion))))?;

    let mut objs: Vec<Obj> = Vec::new();
    for (k, (name, sort)) in goal.free_vars.iter().enumerate() {
        if *sort != Sort::Point {
            return Err(AlgebraError::Unsupported(format!("free object `{name}` of sort {sort}")));
        }
        objs.push(Obj { name: name.clone(), sort: *sort, capacity: k.min(2), charged: vec![], deps: BTreeSet::new(), through: None });
    }
    let index_of = |objs: &[Obj], n: &str| objs.iter().position(|o| o.name == n);
    for aux in &goal.aux_vars {
        if !matches!(aux.sort, Sort::Point | Sort::Circle) {
            return Err(AlgebraError::Unsupported(format!("auxiliary {} `{}` = {}", aux.sort, aux.name, pretty_term(&aux.origin))));
        }
        let deps = vars_of(&aux.origin).iter().filter_map(|v| index_of(&objs, v)).collect();
        objs.push(Obj { name: aux.name.clone(), sort: aux.sort, capacity: 2, charged: vec![], deps, through: None });
    }

    // Charge atoms to objects.
    let owner_of_aux: BTreeMap<usize, usize> = goal
        .aux_vars
        .iter()
        .flat_map(|a| {
            let o = index_of(&objs, &a.name).expect("aux registered");
            a.constraints.iter().map(move |&c| (c, o))
        })
        .collect();
    let atoms = &goal.constraints;
    let mut consumed = BTreeSet::new();
    for (i, atom) in atoms.iter().enumerate() {
        let objects: Vec<usize> = vars_of(atom)
            .iter()
            .map(|v| index_of(&objs, v).ok_or_else(|| AlgebraError::Unsupported(format!("unknown object `{v}`"))))
            .collect::<Result<_, _>>()?;
        let owner = match owner_of_aux.get(&i) {
            Some(&o) => o,
            None => *objects.iter().max().ok_or_else(|| AlgebraError::Unsupported(format!("`{}` mentions no object", pretty_term(atom))))?,
        };
        let o = &mut objs[owner];
        if o.sort == Sort::Circle && o.through.is_none() {
            if let Some(p) = incident_point_on(atom, &o.name) {
                o.through = Some(p.to_string());
                consumed.insert(i);
                continue;
            }
        }
        o.charged.push(i);
    }
    for o in &objs {
        if o.sort == Sort::Circle && o.through.is_none() {
            return Err(AlgebraError::Unsupported(format!("circle `{}` has no point on it", o.name)));
        }
    }

    // Spill excess atoms onto earlier objects with free coordinates.
    let mut used = vec![0usize; objs.len()];
    let mut absorbed: Vec<Vec<usize>> = vec![vec![]; objs.len()];
    for k in 0..objs.len() {
        for &i in &objs[k].charged.clone() {
            let need = poly_count(&atoms[i]);
            if used[k] + need <= objs[k].capacity {
                used[k] += need;
                absorbed[k].push(i);
                continue;
            }
            let closure = closure(&objs, vars_of(&atoms[i]).iter().filter_map(|v| index_of(&objs, v)));
            let target = closure
                .iter()
                .rev()
                .copied()
                .find(|&j| j < k && used[j] + need <= objs[j].capacity)
                .ok_or_else(|| AlgebraError::OverconstrainedDeclaration { object: objs[k].name.clone(), atom: pretty_term(&atoms[i]) })?;
            used[target] += need;
            absorbed[target].push(i);
        }
    }

    // Dependency order for the dependent variables.
    let mut edges: Vec<BTreeSet<usize>> = objs.iter().map(|o| o.deps.clone()).collect();
    for (k, list) in absorbed.iter().enumerate() {
        for &i in list {
            for j in vars_of(&atoms[i]).iter().filter_map(|v| index_of(&objs, v)) {
                if j != k && !closure(&objs, [j]).contains(&k) {
                    edges[k].insert(j);
                }
            }
        }
    }
    let order = stable_topo(&edges);

    // Allocate variables. Dependent slots take y before x.
    let mut names = Vec::new();
    let mut param_slots: Vec<[Option<Var>; 2]> = vec![[None, None]; objs.len()];
    for (k, o) in objs.iter().enumerate() {
        let free = o.capacity - used[k];
        let fixed = 2 - o.capacity;
        // Slots 0 = x, 1 = y. Fixed ones come from the WLOG placement.
        let mut param = [false, false];
        match (o.sort, fixed) {
            (Sort::Point, 2) => {}
            (Sort::Point, 1) => param[0] = free == 1,
            _ => {
                param[0] = free >= 1;
                param[1] = free >= 2;
            }
        }
        for s in 0..2 {
            if param[s] {
                param_slots[k][s] = Some(names.len());
                names.push(format!("u{}", names.len() + 1));
            }
        }
    }
    let num_params = names.len();
    let mut coords: Vec<[Poly; 2]> = vec![[Poly::zero(), Poly::zero()]; objs.len()];
    for &k in &order {
        let o = &objs[k];
        let fixed = 2 - o.capacity;
        for s in 0..2 {
            if let Some(v) = param_slots[k][s] {
                coords[k][s] = Poly::var(v);
            }
        }
        let dependent: Vec<usize> = match (o.sort, fixed) {
            (Sort::Point, 2) => vec![],
            (Sort::Point, 1) => {
                if used[k] == 1 {
                    vec![0]
                } else {
                    vec![]
                }
            }
            _ => match used[k] {
                0 => vec![],
                1 => vec![1],
                _ => vec![0, 1],
            },
        };
        for s in dependent {
            let v = names.len();
            names.push(format!("x{}", v - num_params + 1));
            coords[k][s] = Poly::var(v);
        }
    }
    let mut objects = BTreeMap::new();
    for (k, o) in objs.iter().enumerate() {
        let c = coords[k].clone();
        let entry = match o.sort {
            Sort::Circle => ObjectCoords::Circle { center: c, through: o.through.clone().expect("checked") },
            _ => ObjectCoords::Point(c),
        };
        objects.insert(o.name.clone(), entry);
    }
    let ctx = Ctx { objects: &objects };
    let mut hypotheses = Vec::new();
    for (i, atom) in atoms.iter().enumerate() {
        if consumed.contains(&i) {
            continue;
        }
        for poly in ctx.hypothesis(atom)? {
            if !poly.is_zero() {
                hypotheses.push(Hypothesis { poly: poly.primitive(), source: pretty_term(atom) });
            }
        }
    }
    let conclusion = ctx.conclusion(conclusion_atom)?;

    let mut wlog = Vec::new();
    let free = &goal.free_vars;
    if let Some((a, _)) = free.first() {
        wlog.push(format!("{a} = (0, 0)"));
    }
    if let Some((b, _)) = free.get(1) {
        wlog.push(format!("{b} lies on the x-axis"));
    }
    Ok(AlgebraicForm { var_names: names, num_params, hypotheses, conclusion, conclusion_source: pretty_term(conclusion_atom), objects, wlog })
}

fn vars_of(t: &Term) -> Vec<String> {
    let mut out = Vec::new();
    t.for_each_var(&mut |v| {
        if !out.iter().any(|o: &String| o == v) {
            out.push(v.to_string())
        }
    });
    out
}

fn incident_point_on<'a>(atom: &'a Term, circle: &str) -> Option<&'a str> {
    match (atom.head(), atom.args()) {
        (Some("incident"), [p, c]) if c.as_var() == Some(circle) => p.as_var(),
        _ => None,
    }
}

fn poly_count(atom: &Term) -> usize {
    if atom.head() == Some("equalp") {
        2
    } else {
        1
    }
}

fn closure(objs: &[Obj], start: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<usize> = start.into_iter().collect();
    while let Some(k) = stack.pop() {
        if seen.insert(k) {
            stack.extend(objs[k].deps.iter().copied());
        }
    }
    seen
}

/// Kahn's algorithm preferring the smallest index; a cycle is broken at its
/// smallest member.
fn stable_topo(edges: &[BTreeSet<usize>]) -> Vec<usize> {
    let n = edges.len();
    let mut done = vec![false; n];
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let next = (0..n).find(|&k| !done[k] && edges[k].iter().all(|&j| done[j])).or_else(|| (0..n).find(|&k| !done[k])).expect("some node remains");
        done[next] = true;
        out.push(next);
    }
    out
}

struct Ctx<'a> {
    objects: &'a BTreeMap<String, ObjectCoords>,
}

type Pt = [Poly; 2];

impl Ctx<'_> {
    fn point(&self, t: &Term) -> Result<Pt, AlgebraError> {
        match t.as_var().and_then(|v| self.objects.get(v)) {
            Some(ObjectCoords::Point(p)) => Ok(p.clone()),
            _ => Err(AlgebraError::Unsupported(format!("`{}` is not a point object", pretty_term(t)))),
        }
    }

    fn line(&self, t: &Term) -> Result<(Pt, Pt), AlgebraError> {
        match (t.head(), t.args()) {
            (Some("line"), [p, q]) => Ok((self.point(p)?, self.point(q)?)),
            _ => Err(AlgebraError::Unsupported(format!("line `{}` is not of the form line(P, Q)", pretty_term(t)))),
        }
    }

    /// Center and squared radius.
    fn circle(&self, t: &Term) -> Result<(Pt, Poly), AlgebraError> {
        match (t.as_var().and_then(|v| self.objects.get(v)), t.head(), t.args()) {
            (Some(ObjectCoords::Circle { center, through }), _, _) => {
                let p = self.point(&Term::var(through.clone()))?;
                Ok((center.clone(), sqdist(&p, center)))
            }
            (_, Some("circle"), [c, p]) => {
                let (c, p) = (self.point(c)?, self.point(p)?);
                let r = sqdist(&p, &c);
                Ok((c, r))
            }
            _ => Err(AlgebraError::Unsupported(format!("circle `{}`", pretty_term(t)))),
        }
    }

    fn hypothesis(&self, atom: &Term) -> Result<Vec<Poly>, AlgebraError> {
        if let (Some("equalp"), [p, q]) = (atom.head(), atom.args()) {
            let (p, q) = (self.point(p)?, self.point(q)?);
            return Ok(vec![&p[0] - &q[0], &p[1] - &q[1]]);
        }
        Ok(vec![self.atom(atom)?])
    }

    fn conclusion(&self, atom: &Term) -> Result<Poly, AlgebraError> {
        if let (Some("equalp"), [p, q]) = (atom.head(), atom.args()) {
            return Ok(sqdist(&self.point(p)?, &self.point(q)?));
        }
        self.atom(atom)
    }

    fn atom(&self, atom: &Term) -> Result<Poly, AlgebraError> {
        let a = atom.args();
        Ok(match atom.head() {
            Some("incident") => {
                let p = self.point(&a[0])?;
                if a[1].head() == Some("line") {
                    let (q, r) = self.line(&a[1])?;
                    det3(&p, &q, &r)
                } else {
                    let (c, r2) = self.circle(&a[1])?;
                    &sqdist(&p, &c) - &r2
                }
            }
            Some("collinear") => det3(&self.point(&a[0])?, &self.point(&a[1])?, &self.point(&a[2])?),
            Some("parallel") => {
                let (d1, d2) = (dir(self.line(&a[0])?), dir(self.line(&a[1])?));
                &(&d1[0] * &d2[1]) - &(&d1[1] * &d2[0])
            }
            Some("perpendicular") => {
                let (d1, d2) = (dir(self.line(&a[0])?), dir(self.line(&a[1])?));
                &(&d1[0] * &d2[0]) + &(&d1[1] * &d2[1])
            }
            Some("eqdist") => {
                let p: Vec<Pt> = a.iter().map(|t| self.point(t)).collect::<Result<_, _>>()?;
                &sqdist(&p[0], &p[1]) - &sqdist(&p[2], &p[3])
            }
            _ => return Err(AlgebraError::Unsupported(format!("predicate in `{}`", pretty_term(atom)))),
        })
    }
}

fn dir((p, q): (Pt, Pt)) -> Pt {
    [&q[0] - &p[0], &q[1] - &p[1]]
}

fn sqdist(p: &Pt, q: &Pt) -> Poly {
    let dx = &p[0] - &q[0];
    let dy = &p[1] - &q[1];
    &(&dx * &dx) + &(&dy * &dy)
}

/// Twice the signed area of triangle pqr.
fn det3(p: &Pt, q: &Pt, r: &Pt) -> Poly {
    let a = &(&q[0] - &p[0]) * &(&r[1] - &p[1]);
    let b = &(&q[1] - &p[1]) * &(&r[0] - &p[0]);
    &a - &b
}
