//! Wu's method: triangulate the hypotheses by successive pseudo-division,
//! then reduce the conclusion by the resulting chain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::algebraize::AlgebraicForm;
use super::poly::{Poly, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WuLimits {
    /// Maximum number of pseudo-divisions.
    pub max_steps: usize,
    /// Maximum number of terms in any intermediate polynomial.
    pub max_terms: usize,
    /// Random instances tried when the remainder does not vanish.
    pub samples: usize,
    pub seed: u64,
}

impl Default for WuLimits {
    fn default() -> Self {
        WuLimits { max_steps: 20_000, max_terms: 200_000, samples: 50, seed: 7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ProofStatus {
    Proved,
    /// The remainder is nonzero and a random instance satisfying the
    /// hypotheses violates the conclusion (checked in floating point).
    RefutedNumerically,
    Inconclusive,
}

impl ProofStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ProofStatus::Proved => "proved",
            ProofStatus::RefutedNumerically => "refutedNumerically",
            ProofStatus::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceStep {
    pub action: String,
    pub var: String,
    pub terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NumericCheck {
    pub samples: usize,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProofResult {
    pub status: ProofStatus,
    /// Final pseudo-remainder of the conclusion, `0` when proved.
    pub pseudo_remainder: String,
    /// Initials that must not vanish, e.g. a non-degenerate triangle.
    pub nondegeneracy: Vec<String>,
    /// The triangular chain, lowest main variable first.
    pub chain: Vec<String>,
    pub wlog: Vec<String>,
    pub trace: Vec<TraceStep>,
    pub numeric: Option<NumericCheck>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WuError {
    #[error("hypotheses cannot be triangulated: {0}")]
    NotTriangularizable(String),
    #[error("resource limit exceeded: {limit}")]
    ResourceLimitExceeded { limit: String, trace: Vec<TraceStep> },
}

/// A triangular set: `chain[i]` has main variable `vars[i]`, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub polys: Vec<Poly>,
    pub vars: Vec<Var>,
}

struct Budget<'a> {
    limits: &'a WuLimits,
    steps: usize,
    trace: Vec<TraceStep>,
    names: &'a [String],
}

impl Budget<'_> {
    fn prem(&mut self, g: &Poly, f: &Poly, v: Var, action: &str) -> Result<Poly, WuError> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(self.exceeded(format!("more than {} pseudo-divisions", self.limits.max_steps)));
        }
        let r = g.prem(f, v).0.primitive();
        self.trace.push(TraceStep { action: action.into(), var: self.names[v].clone(), terms: r.num_terms() });
        if r.num_terms() > self.limits.max_terms {
            return Err(self.exceeded(format!("a polynomial with more than {} terms", self.limits.max_terms)));
        }
        Ok(r)
    }

    fn exceeded(&self, limit: String) -> WuError {
        WuError::ResourceLimitExceeded { limit, trace: self.trace.clone() }
    }
}

/// Triangulates the hypotheses over the dependent variables, from the
/// highest variable down.
fn triangulate(form: &AlgebraicForm, budget: &mut Budget) -> Result<Chain, WuError> {
    let mut pool: Vec<Poly> = form.hypotheses.iter().map(|h| h.poly.clone()).collect();
    let mut chain = Vec::new();
    for v in form.dependent_vars().rev() {
        loop {
            let (with_v, rest): (Vec<Poly>, Vec<Poly>) = pool.into_iter().partition(|p| p.contains_var(v));
            pool = rest;
            if with_v.len() <= 1 {
                if let Some(f) = with_v.into_iter().next() {
                    chain.push((v, f));
                }
                break;
            }
            let pick = (0..with_v.len()).min_by_key(|&i| (with_v[i].degree(v), with_v[i].num_terms(), i)).expect("nonempty");
            let f = with_v[pick].clone();
            pool.push(f.clone());
            for (i, g) in with_v.iter().enumerate() {
                if i == pick {
                    continue;
                }
                let r = budget.prem(g, &f, v, "triangulate")?;
                if r.is_zero() {
                    continue;
                }
                if r.vars().iter().all(|&w| w < form.num_params) {
                    return Err(WuError::NotTriangularizable(format!("the hypotheses imply {} = 0, a condition on the free parameters", form.show(&r))));
                }
                pool.push(r);
            }
        }
    }
    if let Some(p) = pool.iter().find(|p| !p.is_zero()) {
        return Err(WuError::NotTriangularizable(format!("{} = 0 constrains only free parameters", form.show(p))));
    }
    chain.reverse();
    Ok(Chain { vars: chain.iter().map(|(v, _)| *v).collect(), polys: chain.into_iter().map(|(_, p)| p).collect() })
}

pub fn wu_prove(form: &AlgebraicForm, limits: &WuLimits) -> Result<ProofResult, WuError> {
    let mut budget = Budget { limits, steps: 0, trace: Vec::new(), names: &form.var_names };
    let chain = triangulate(form, &mut budget)?;

    let mut r = form.conclusion.primitive();
    for (f, &v) in chain.polys.iter().zip(&chain.vars).rev() {
        if r.is_zero() {
            break;
        }
        if r.contains_var(v) {
            r = budget.prem(&r, f, v, "reduce")?;
        }
    }

    let mut nondegeneracy: Vec<Poly> = Vec::new();
    for (f, &v) in chain.polys.iter().zip(&chain.vars) {
        let init = f.lc(v).primitive();
        if !init.is_constant() && !nondegeneracy.contains(&init) {
            nondegeneracy.push(init);
        }
    }

    let (status, numeric) = if r.is_zero() {
        (ProofStatus::Proved, None)
    } else {
        let check = refute(form, &chain, limits);
        let status = if check.max_residual > 1e-3 { ProofStatus::RefutedNumerically } else { ProofStatus::Inconclusive };
        (status, Some(check))
    };
    Ok(ProofResult {
        status,
        pseudo_remainder: form.show(&r),
        nondegeneracy: nondegeneracy.iter().map(|p| format!("{} != 0", form.show(p))).collect(),
        chain: chain.polys.iter().map(|p| form.show(p)).collect(),
        wlog: form.wlog.clone(),
        trace: budget.trace,
        numeric,
    })
}

/// Scaled residual `|p(x)| / S^deg(p)` with `S = max(1, max |x_i|)`.
pub fn scaled_residual(p: &Poly, point: &[f64]) -> f64 {
    let s = point.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    p.eval_f64(point).abs() / s.powi(p.total_degree() as i32)
}

/// Samples real instances of the chain and records the largest conclusion
/// residual among those that satisfy the hypotheses.
fn refute(form: &AlgebraicForm, chain: &Chain, limits: &WuLimits) -> NumericCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(limits.seed);
    let mut check = NumericCheck { samples: 0, max_residual: 0.0 };
    let mut attempts = 0;
    while check.samples < limits.samples && attempts < limits.samples * 20 {
        attempts += 1;
        let Some(point) = sample_instance(form, chain, &mut rng) else { continue };
        if form.hypotheses.iter().any(|h| scaled_residual(&h.poly, &point) > 1e-7) {
            continue;
        }
        check.samples += 1;
        check.max_residual = check.max_residual.max(scaled_residual(&form.conclusion, &point));
    }
    check
}

/// Random parameters, then each chain polynomial solved for its main
/// variable; a random real root is taken when there are several.
pub fn sample_instance(form: &AlgebraicForm, chain: &Chain, rng: &mut impl Rng) -> Option<Vec<f64>> {
    let mut point: Vec<f64> = (0..form.var_names.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
    for (f, &v) in chain.polys.iter().zip(&chain.vars) {
        let coeffs = f.univariate_f64(v, &point);
        let lead = *coeffs.last()?;
        let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if lead.abs() <= 1e-9 * scale.max(1e-300) {
            return None;
        }
        let roots = real_roots(&coeffs);
        if roots.is_empty() {
            return None;
        }
        point[v] = roots[rng.gen_range(0..roots.len())];
    }
    Some(point)
}

/// Real roots of `sum coeffs[i] x^i`.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    match c.len() {
        0 | 1 => vec![],
        2 => vec![-c[0] / c[1]],
        3 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = b * b - 4.0 * a * cc;
            if disc < 0.0 {
                return vec![];
            }
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            if q == 0.0 {
                return vec![0.0];
            }
            vec![q / a, cc / q]
        }
        _ => bracket_roots(&c),
    }
}

fn bracket_roots(c: &[f64]) -> Vec<f64> {
    let eval = |x: f64| c.iter().rev().fold(0.0, |acc, k| acc * x + k);
    // Cauchy bound on the magnitude of any root.
    let lead = c.last().unwrap().abs();
    let bound = 1.0 + c[..c.len() - 1].iter().fold(0.0f64, |m, k| m.max(k.abs())) / lead;
    let n = 4000;
    let mut roots = Vec::new();
    let mut prev = (-bound, eval(-bound));
    for i in 1..=n {
        let x = -bound + 2.0 * bound * i as f64 / n as f64;
        let fx = eval(x);
        if fx == 0.0 {
            roots.push(x);
        } else if prev.1 != 0.0 && (prev.1 < 0.0) != (fx < 0.0) {
            let (mut lo, mut hi) = (prev.0, x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if eval(mid).signum() == eval(lo).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev = (x, fx);
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::algebraize::algebraize;
    use crate::expand::{expand, shipped_registry, Profile};
    use crate::geolang::{parse, typecheck, SIMSON_SOURCE};

    fn prove(src: &str) -> Vec<ProofResult> {
        let reg = shipped_registry();
        let typed = typecheck(&parse(src).unwrap(), &reg).unwrap();
        let e = expand(&typed, &reg, &Profile::prover_core()).unwrap();
        e.split().unwrap().iter().map(|g| wu_prove(&algebraize(&g.statement).unwrap(), &WuLimits::default()).unwrap()).collect()
    }

    #[test]
    fn midline_is_proved() {
        let r = prove("A := point(); B := point(); C := point(); parallel(line(midpoint(A, B), midpoint(A, C)), line(B, C));");
        assert_eq!(r[0].status, ProofStatus::Proved);
        assert_eq!(r[0].pseudo_remainder, "0");
    }

    #[test]
    fn simson_both_directions() {
        let r = prove(SIMSON_SOURCE);
        assert_eq!(r.len(), 2);
        for d in &r {
            assert_eq!(d.status, ProofStatus::Proved, "{d:#?}");
            assert!(!d.nondegeneracy.is_empty());
        }
    }

    #[test]
    fn false_pedal_statement_is_refuted() {
        let r = prove(
            "A := point(); B := point(); C := point(); D := midpoint(A, midpoint(B, C));
             collinear(foot(D, line(A, B)), foot(D, line(B, C)), foot(D, line(A, C)));",
        );
        assert_eq!(r[0].status, ProofStatus::RefutedNumerically);
        assert!(r[0].numeric.as_ref().unwrap().max_residual > 1e-3);
    }

    #[test]
    fn premises_can_determine_a_free_point() {
        let reg = shipped_registry();
        let src = "A := point(); B := point(); C := point(); collinear(A, B, C) /\\ eqdist(A, B, A, C) => collinear(A, B, C);";
        let typed = typecheck(&parse(src).unwrap(), &reg).unwrap();
        let e = expand(&typed, &reg, &Profile::prover_core()).unwrap();
        let g = &e.split().unwrap()[0];
        let r = wu_prove(&algebraize(&g.statement).unwrap(), &WuLimits::default()).unwrap();
        assert_eq!(r.status, ProofStatus::Proved);
    }

    #[test]
    fn step_budget_is_enforced() {
        let reg = shipped_registry();
        let typed = typecheck(&parse(SIMSON_SOURCE).unwrap(), &reg).unwrap();
        let e = expand(&typed, &reg, &Profile::prover_core()).unwrap();
        let g = &e.split().unwrap()[0];
        let limits = WuLimits { max_steps: 2, ..WuLimits::default() };
        let err = wu_prove(&algebraize(&g.statement).unwrap(), &limits).unwrap_err();
        let WuError::ResourceLimitExceeded { trace, .. } = err else { panic!() };
        assert_eq!(trace.len(), 2);
    }

    #[test]
    fn quadratic_and_cubic_roots() {
        let mut r = real_roots(&[-2.0, 0.0, 1.0]);
        r.sort_by(f64::total_cmp);
        assert!((r[0] + 2f64.sqrt()).abs() < 1e-12 && (r[1] - 2f64.sqrt()).abs() < 1e-12);
        let r = real_roots(&[-6.0, 11.0, -6.0, 1.0]);
        assert_eq!(r.len(), 3);
        assert!((r[2] - 3.0).abs() < 1e-9);
        assert!(real_roots(&[1.0, 0.0, 1.0]).is_empty());
    }
}
