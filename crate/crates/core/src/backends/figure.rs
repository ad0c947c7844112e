//! Numeric evaluation of construction sequences.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::construct::{ConstructionSequence, Locus, Step};
use crate::geolang::Term;

/// Denominators smaller than this mark a step as degenerate.
pub const DEGENERACY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Coords {
    Point { x: f64, y: f64 },
    Circle { cx: f64, cy: f64, r: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FigureInstance {
    pub objects: BTreeMap<String, Coords>,
    pub degenerate: bool,
    /// Steps whose result is undefined at this assignment.
    pub degenerate_steps: Vec<String>,
    /// Largest scaled residual over the conclusions; NaN when degenerate.
    pub conclusion_residual: f64,
    pub check_residuals: Vec<f64>,
}

/// Values for draggable steps: `[x, y]` for free points, `[param]` for
/// points on a locus. Missing entries use the step's default.
pub type FreeAssignment = BTreeMap<String, Vec<f64>>;

type P = [f64; 2];

fn sub(a: P, b: P) -> P {
    [a[0] - b[0], a[1] - b[1]]
}
fn add(a: P, b: P) -> P {
    [a[0] + b[0], a[1] + b[1]]
}
fn scale(a: P, k: f64) -> P {
    [a[0] * k, a[1] * k]
}
fn dot(a: P, b: P) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}
fn cross(a: P, b: P) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}
fn perp(a: P) -> P {
    [-a[1], a[0]]
}

enum Shape {
    Line { p: P, d: P },
    Circle { c: P, r: f64 },
}

struct Eval {
    objects: BTreeMap<String, Coords>,
}

impl Eval {
    fn point(&self, n: &str) -> Option<P> {
        match self.objects.get(n)? {
            Coords::Point { x, y } if x.is_finite() && y.is_finite() => Some([*x, *y]),
            _ => None,
        }
    }

    fn circle(&self, n: &str) -> Option<(P, f64)> {
        match self.objects.get(n)? {
            Coords::Circle { cx, cy, r } if r.is_finite() => Some(([*cx, *cy], *r)),
            _ => None,
        }
    }

    fn shape(&self, l: &Locus) -> Option<Shape> {
        let line = |p: P, d: P| (dot(d, d) >= DEGENERACY_EPS).then_some(Shape::Line { p, d });
        match l {
            Locus::Line { a, b } => {
                let (a, b) = (self.point(a)?, self.point(b)?);
                line(a, sub(b, a))
            }
            Locus::Perpendicular { through, a, b } => line(self.point(through)?, perp(sub(self.point(b)?, self.point(a)?))),
            Locus::Parallel { through, a, b } => line(self.point(through)?, sub(self.point(b)?, self.point(a)?)),
            Locus::Bisector { a, b } => {
                let (a, b) = (self.point(a)?, self.point(b)?);
                line(scale(add(a, b), 0.5), perp(sub(b, a)))
            }
            Locus::Circle { circle } => self.circle(circle).map(|(c, r)| Shape::Circle { c, r }),
            Locus::CircleThrough { center, through } => {
                let (c, t) = (self.point(center)?, self.point(through)?);
                Some(Shape::Circle { c, r: dot(sub(t, c), sub(t, c)).sqrt() })
            }
            Locus::CircleRadius { center, a, b } => {
                let (c, a, b) = (self.point(center)?, self.point(a)?, self.point(b)?);
                Some(Shape::Circle { c, r: dot(sub(b, a), sub(b, a)).sqrt() })
            }
        }
    }

    fn step(&self, step: &Step, values: Option<&Vec<f64>>) -> Option<Coords> {
        let pt = |p: P| Some(Coords::Point { x: p[0], y: p[1] });
        match step {
            Step::FreePoint { at, .. } => {
                let v = values.filter(|v| v.len() == 2).map(|v| [v[0], v[1]]).unwrap_or(*at);
                pt(v)
            }
            Step::Midpoint { a, b, .. } => pt(scale(add(self.point(a)?, self.point(b)?), 0.5)),
            Step::Foot { p, a, b, .. } => {
                let (p, a, b) = (self.point(p)?, self.point(a)?, self.point(b)?);
                let d = sub(b, a);
                let dd = dot(d, d);
                if dd < DEGENERACY_EPS {
                    return None;
                }
                pt(add(a, scale(d, dot(sub(p, a), d) / dd)))
            }
            Step::Circumcircle { a, b, c, .. } => {
                let (a, b, c) = (self.point(a)?, self.point(b)?, self.point(c)?);
                let den = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
                if den.abs() < DEGENERACY_EPS {
                    return None;
                }
                let (na, nb, nc) = (dot(a, a), dot(b, b), dot(c, c));
                let ux = (na * (b[1] - c[1]) + nb * (c[1] - a[1]) + nc * (a[1] - b[1])) / den;
                let uy = (na * (c[0] - b[0]) + nb * (a[0] - c[0]) + nc * (b[0] - a[0])) / den;
                let o = [ux, uy];
                Some(Coords::Circle { cx: ux, cy: uy, r: dot(sub(a, o), sub(a, o)).sqrt() })
            }
            Step::Intersect { first, second, branch, .. } => {
                let mut pts = intersect(&self.shape(first)?, &self.shape(second)?)?;
                pts.sort_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
                pt(pts[(*branch as usize).min(pts.len() - 1)])
            }
            Step::PointOn { locus, param, .. } => {
                let t = values.and_then(|v| v.first().copied()).unwrap_or(*param);
                match self.shape(locus)? {
                    Shape::Line { p, d } => pt(add(p, scale(d, t))),
                    Shape::Circle { c, r } => pt([c[0] + r * t.cos(), c[1] + r * t.sin()]),
                }
            }
        }
    }

    fn scale_factor(&self) -> f64 {
        self.objects.values().fold(1.0f64, |m, c| match c {
            Coords::Point { x, y } => m.max(x.abs()).max(y.abs()),
            Coords::Circle { cx, cy, .. } => m.max(cx.abs()).max(cy.abs()),
        })
    }

    /// Raw value of an atom's standard polynomial.
    fn atom_value(&self, atom: &Term) -> Option<f64> {
        let args = atom.args();
        let p = |t: &Term| self.point(t.as_var()?);
        let line = |t: &Term| match (t.head(), t.args()) {
            (Some("line"), [a, b]) => Some((p(a)?, p(b)?)),
            _ => None,
        };
        let det = |a: P, b: P, c: P| cross(sub(b, a), sub(c, a));
        Some(match atom.head()? {
            "incident" => {
                let x = p(&args[0])?;
                if let Some((a, b)) = line(&args[1]) {
                    det(x, a, b)
                } else {
                    let (c, r2) = match (args[1].head(), args[1].args()) {
                        (Some("circle"), [c, t]) => {
                            let (c, t) = (p(c)?, p(t)?);
                            (c, dot(sub(t, c), sub(t, c)))
                        }
                        _ => {
                            let (c, r) = self.circle(args[1].as_var()?)?;
                            (c, r * r)
                        }
                    };
                    dot(sub(x, c), sub(x, c)) - r2
                }
            }
            "collinear" => det(p(&args[0])?, p(&args[1])?, p(&args[2])?),
            "parallel" | "perpendicular" => {
                let ((a, b), (c, d)) = (line(&args[0])?, line(&args[1])?);
                let (u, v) = (sub(b, a), sub(d, c));
                if atom.head() == Some("parallel") {
                    cross(u, v)
                } else {
                    dot(u, v)
                }
            }
            "eqdist" => {
                let (a, b, c, d) = (p(&args[0])?, p(&args[1])?, p(&args[2])?, p(&args[3])?);
                dot(sub(a, b), sub(a, b)) - dot(sub(c, d), sub(c, d))
            }
            "equalp" => {
                let (a, b) = (p(&args[0])?, p(&args[1])?);
                dot(sub(a, b), sub(a, b))
            }
            _ => return None,
        })
    }

    /// `|value| / S^2` with `S = max(1, max |coordinate|)`; every
    /// predicate polynomial has degree two.
    fn residual(&self, atom: &Term) -> f64 {
        match self.atom_value(atom) {
            Some(v) => v.abs() / self.scale_factor().powi(2),
            None => f64::NAN,
        }
    }
}

fn intersect(a: &Shape, b: &Shape) -> Option<Vec<P>> {
    match (a, b) {
        (Shape::Line { p: p1, d: d1 }, Shape::Line { p: p2, d: d2 }) => {
            let den = cross(*d1, *d2);
            if den.abs() < DEGENERACY_EPS {
                return None;
            }
            let s = cross(sub(*p2, *p1), *d2) / den;
            Some(vec![add(*p1, scale(*d1, s))])
        }
        (Shape::Line { p, d }, Shape::Circle { c, r }) | (Shape::Circle { c, r }, Shape::Line { p, d }) => {
            let w = sub(*p, *c);
            let (qa, qb, qc) = (dot(*d, *d), 2.0 * dot(*d, w), dot(w, w) - r * r);
            let disc = qb * qb - 4.0 * qa * qc;
            if disc < 0.0 {
                return None;
            }
            let s = disc.sqrt();
            Some(vec![add(*p, scale(*d, (-qb - s) / (2.0 * qa))), add(*p, scale(*d, (-qb + s) / (2.0 * qa)))])
        }
        (Shape::Circle { c: c1, r: r1 }, Shape::Circle { c: c2, r: r2 }) => {
            let d = sub(*c2, *c1);
            let dist2 = dot(d, d);
            if dist2 < DEGENERACY_EPS {
                return None;
            }
            let dist = dist2.sqrt();
            let a = (r1 * r1 - r2 * r2 + dist2) / (2.0 * dist);
            let h2 = r1 * r1 - a * a;
            if h2 < 0.0 {
                return None;
            }
            let m = add(*c1, scale(d, a / dist));
            let off = scale(perp(d), h2.sqrt() / dist);
            Some(vec![add(m, off), sub(m, off)])
        }
    }
}

/// Computes every step in order. Degenerate steps produce NaN coordinates
/// and make everything depending on them NaN too.
pub fn evaluate(seq: &ConstructionSequence, assignment: &FreeAssignment) -> FigureInstance {
    let mut ev = Eval { objects: BTreeMap::new() };
    let mut degenerate_steps = Vec::new();
    for step in &seq.steps {
        let value = ev.step(step, assignment.get(step.out())).unwrap_or_else(|| {
            degenerate_steps.push(step.out().to_string());
            match step.output_sort() {
                crate::geolang::Sort::Circle => Coords::Circle { cx: f64::NAN, cy: f64::NAN, r: f64::NAN },
                _ => Coords::Point { x: f64::NAN, y: f64::NAN },
            }
        });
        ev.objects.insert(step.out().to_string(), value);
    }
    let degenerate = !degenerate_steps.is_empty();
    let conclusion_residual = if degenerate {
        f64::NAN
    } else {
        // An atom that cannot be evaluated must not read as satisfied.
        seq.conclusions.iter().map(|c| ev.residual(c)).fold(0.0f64, |m, r| if r.is_nan() || m.is_nan() { f64::NAN } else { m.max(r) })
    };
    let check_residuals = seq.checks.iter().map(|c| ev.residual(c)).collect();
    FigureInstance { objects: ev.objects, degenerate, degenerate_steps, conclusion_residual, check_residuals }
}

/// The adjustable scalars of a sequence, latest first: `(step, index)`
/// with index 1 (y) before 0 (x) for free points.
fn adjustable(seq: &ConstructionSequence) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    for s in seq.steps.iter().rev() {
        match s {
            Step::FreePoint { out: o, .. } => {
                out.push((o.clone(), 1));
                out.push((o.clone(), 0));
            }
            Step::PointOn { out: o, .. } => out.push((o.clone(), 0)),
            _ => {}
        }
    }
    out
}

fn defaults(seq: &ConstructionSequence, assignment: &FreeAssignment) -> FreeAssignment {
    let mut full = assignment.clone();
    for s in &seq.steps {
        let d = match s {
            Step::FreePoint { at, .. } => at.to_vec(),
            Step::PointOn { param, .. } => vec![*param],
            _ => continue,
        };
        full.entry(s.out().to_string()).or_insert(d);
    }
    full
}

/// Adjusts the latest free values by Newton's method until every check
/// holds. Returns the adjusted assignment, or `None` if it fails to
/// converge.
pub fn satisfy_checks(seq: &ConstructionSequence, assignment: &FreeAssignment) -> Option<FreeAssignment> {
    let k = seq.checks.len();
    let mut a = defaults(seq, assignment);
    if k == 0 {
        return Some(a);
    }
    let unknowns: Vec<(String, usize)> = adjustable(seq).into_iter().take(k).collect();
    if unknowns.len() < k {
        return None;
    }
    let values = |a: &FreeAssignment| -> Option<Vec<f64>> {
        let fig = evaluate(seq, a);
        if fig.degenerate {
            return None;
        }
        let ev = Eval { objects: fig.objects };
        seq.checks.iter().map(|c| ev.atom_value(c)).collect()
    };
    // Once the checks hold to 1e-14, a few more steps polish the values
    // down to rounding level.
    let mut polish = 0;
    for _ in 0..100 {
        let f = values(&a)?;
        let fig = evaluate(seq, &a);
        if fig.check_residuals.iter().all(|r| *r < 1e-14) {
            polish += 1;
            if polish > 3 {
                return Some(a);
            }
        }
        let mut jac = vec![vec![0.0; k]; k];
        for (j, (name, idx)) in unknowns.iter().enumerate() {
            let x = a[name][*idx];
            let h = 1e-7 * x.abs().max(1.0);
            let mut ap = a.clone();
            ap.get_mut(name)?[*idx] = x + h;
            let mut am = a.clone();
            am.get_mut(name)?[*idx] = x - h;
            let (fp, fm) = (values(&ap)?, values(&am)?);
            for i in 0..k {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let step = solve(jac, f.iter().map(|v| -v).collect())?;
        for (j, (name, idx)) in unknowns.iter().enumerate() {
            a.get_mut(name)?[*idx] += step[j];
        }
    }
    let fig = evaluate(seq, &a);
    (!fig.degenerate && fig.check_residuals.iter().all(|r| *r < 1e-14)).then_some(a)
}

/// Gaussian elimination with partial pivoting.
fn solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        let (top, bottom) = m.split_at_mut(col + 1);
        let pivot = &top[col];
        for (k, r) in bottom.iter_mut().enumerate() {
            let f = r[col] / pivot[col];
            for (x, p) in r[col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
            b[col + 1 + k] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| m[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    Some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleReport {
    /// Nondegenerate instances on which all checks hold.
    pub instances: usize,
    pub skipped: usize,
    pub max_residual: f64,
}

/// Evaluates the conclusion on `n` random instances: free points uniform in
/// `[-5, 5]^2`, parameters uniform over their natural range, and checks
/// enforced by [`satisfy_checks`].
pub fn numeric_oracle(seq: &ConstructionSequence, n: usize, seed: u64) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport { instances: 0, skipped: 0, max_residual: 0.0 };
    while report.instances < n && report.skipped < 50 * n {
        let mut a = FreeAssignment::new();
        for s in &seq.steps {
            match s {
                Step::FreePoint { out, .. } => {
                    a.insert(out.clone(), vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]);
                }
                Step::PointOn { out, locus, .. } => {
                    let v = if locus.is_circle() { rng.gen_range(0.0..TAU) } else { rng.gen_range(-2.0..2.0) };
                    a.insert(out.clone(), vec![v]);
                }
                _ => {}
            }
        }
        let Some(a) = satisfy_checks(seq, &a) else {
            report.skipped += 1;
            continue;
        };
        let fig = evaluate(seq, &a);
        if fig.degenerate || !fig.conclusion_residual.is_finite() {
            report.skipped += 1;
            continue;
        }
        report.instances += 1;
        report.max_residual = report.max_residual.max(fig.conclusion_residual);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::construct::tests::compile;
    use crate::geolang::SIMSON_SOURCE;

    fn coords(fig: &FigureInstance, n: &str) -> Coords {
        fig.objects[n]
    }

    #[test]
    fn circumcenter_of_right_triangle() {
        let seq = compile("A := point(); B := point(); C := point(); incident(A, circumcircle(triangle(A, B, C)));").unwrap();
        let a: FreeAssignment = [("A", vec![0.0, 0.0]), ("B", vec![4.0, 0.0]), ("C", vec![0.0, 3.0])].map(|(k, v)| (k.to_string(), v)).into();
        let fig = evaluate(&seq, &a);
        assert_eq!(coords(&fig, "_circumcircle1"), Coords::Circle { cx: 2.0, cy: 1.5, r: 2.5 });
        assert!(fig.conclusion_residual < 1e-15);
    }

    #[test]
    fn foot_on_x_axis() {
        let seq = compile("A := point(); B := point(); P := point(); collinear(A, B, foot(P, line(A, B)));").unwrap();
        let a: FreeAssignment = [("A", vec![0.0, 0.0]), ("B", vec![4.0, 0.0]), ("P", vec![0.0, 2.0])].map(|(k, v)| (k.to_string(), v)).into();
        assert_eq!(coords(&evaluate(&seq, &a), "_foot1"), Coords::Point { x: 0.0, y: 0.0 });
    }

    #[test]
    fn collinear_vertices_are_degenerate() {
        let seq = compile(SIMSON_SOURCE).unwrap();
        let a: FreeAssignment = [("A", vec![0.0, 0.0]), ("B", vec![1.0, 0.0]), ("C", vec![2.0, 0.0])].map(|(k, v)| (k.to_string(), v)).into();
        let fig = evaluate(&seq, &a);
        assert!(fig.degenerate);
        assert_eq!(fig.degenerate_steps[0], "_circumcircle1");
    }

    #[test]
    fn simson_feet_on_and_off_the_circle() {
        let seq = compile(SIMSON_SOURCE).unwrap();
        let on = numeric_oracle(&seq, 1000, 1);
        assert_eq!(on.instances, 1000);
        assert!(on.max_residual < 1e-9, "{on:?}");

        let mut off = seq.clone();
        off.steps[4] = Step::FreePoint { out: "D".into(), at: [0.5, 0.5] };
        let r = numeric_oracle(&off, 1000, 2);
        assert!(r.max_residual > 1e-3);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let seq = compile(SIMSON_SOURCE).unwrap();
        let a = FreeAssignment::new();
        assert_eq!(serde_json::to_string(&evaluate(&seq, &a)).unwrap(), serde_json::to_string(&evaluate(&seq, &a)).unwrap());
    }

    #[test]
    fn newton_enforces_checks() {
        let seq = crate::backends::construct::tests::compile_backward_simson();
        assert_eq!(seq.checks.len(), 1);
        let r = numeric_oracle(&seq, 200, 3);
        assert!(r.instances == 200 && r.max_residual < 1e-9, "{r:?}");
    }
}
