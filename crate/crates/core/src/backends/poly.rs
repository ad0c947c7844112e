//! Sparse multivariate polynomials over the integers.
//!
//! Variables are indices; a larger index is a "later" variable. The main
//! variable of a polynomial is the largest index it contains.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Var = usize;

/// Exponent vector indexed by variable, with trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    fn trimmed(mut v: Vec<u32>) -> Self {
        while v.last() == Some(&0) {
            v.pop();
        }
        Monomial(v)
    }

    pub fn exp(&self, v: Var) -> u32 {
        self.0.get(v).copied().unwrap_or(0)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let n = self.0.len().max(other.0.len());
        Monomial((0..n).map(|i| self.exp(i) + other.exp(i)).collect())
    }

    fn with_exp(&self, v: Var, e: u32) -> Monomial {
        let mut x = self.0.clone();
        if x.len() <= v {
            x.resize(v + 1, 0);
        }
        x[v] = e;
        Monomial::trimmed(x)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigInt>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(BigInt::one())
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::default(), c);
        }
        Poly { terms }
    }

    pub fn var(v: Var) -> Self {
        Poly::var_pow(v, 1)
    }

    pub fn var_pow(v: Var, e: u32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::default().with_exp(v, e), BigInt::one());
        Poly { terms }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Vec<u32>, BigInt)>) -> Self {
        let mut p = Poly::zero();
        for (m, c) in terms {
            p.add_term(Monomial::trimmed(m), c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_default();
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn degree(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.exp(v)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::total_degree).max().unwrap_or(0)
    }

    /// Largest variable index occurring, or `None` for constants.
    pub fn main_var(&self) -> Option<Var> {
        self.terms.keys().filter_map(|m| m.0.len().checked_sub(1)).max()
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.terms.keys().any(|m| m.exp(v) > 0)
    }

    pub fn vars(&self) -> Vec<Var> {
        let n = self.terms.keys().map(|m| m.0.len()).max().unwrap_or(0);
        (0..n).filter(|&v| self.contains_var(v)).collect()
    }

    /// Coefficient of `v^d`, as a polynomial free of `v`.
    pub fn coeff(&self, v: Var, d: u32) -> Poly {
        let mut p = Poly::zero();
        for (m, c) in &self.terms {
            if m.exp(v) == d {
                p.add_term(m.with_exp(v, 0), c.clone());
            }
        }
        p
    }

    /// Leading coefficient with respect to `v` (the initial when `v` is
    /// the main variable).
    pub fn lc(&self, v: Var) -> Poly {
        self.coeff(v, self.degree(v))
    }

    pub fn scale(&self, c: &BigInt) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect() }
    }

    pub fn pow(&self, e: u32) -> Poly {
        (0..e).fold(Poly::one(), |acc, _| &acc * self)
    }

    /// Divides out the gcd of the integer coefficients and makes the
    /// leading term positive.
    pub fn primitive(&self) -> Poly {
        let Some((_, lead)) = self.terms.iter().next_back() else { return Poly::zero() };
        let mut g = self.terms.values().fold(BigInt::zero(), |g, c| g.gcd(c));
        if lead.is_negative() {
            g = -g;
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c / &g)).collect() }
    }

    /// Pseudo-remainder of `self` by `f` with respect to `v`.
    ///
    /// Returns `(r, q, k)` with `lc(f)^k * self = q * f + r` and
    /// `deg(r, v) < deg(f, v)`.
    pub fn prem(&self, f: &Poly, v: Var) -> (Poly, Poly, u32) {
        let d = f.degree(v);
        let init = f.lc(v);
        if d == 0 {
            return (Poly::zero(), self.clone(), 1);
        }
        let (mut r, mut q, mut k) = (self.clone(), Poly::zero(), 0);
        while !r.is_zero() && r.degree(v) >= d {
            let e = r.degree(v) - d;
            let step = &r.lc(v) * &Poly::var_pow(v, e);
            r = &(&init * &r) - &(&step * f);
            q = &(&init * &q) + &step;
            k += 1;
        }
        (r, q, k)
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut t = c.to_f64().unwrap_or(f64::NAN);
                for (v, &e) in m.0.iter().enumerate() {
                    if e > 0 {
                        t *= point[v].powi(e as i32);
                    }
                }
                t
            })
            .sum()
    }

    pub fn eval_int(&self, point: &[BigInt]) -> BigInt {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut t = c.clone();
                for (v, &e) in m.0.iter().enumerate() {
                    if e > 0 {
                        t *= num_traits::pow(point[v].clone(), e as usize);
                    }
                }
                t
            })
            .sum()
    }

    /// Univariate coefficients in `v` (index = degree) after substituting
    /// every other variable from `point`.
    pub fn univariate_f64(&self, v: Var, point: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.degree(v) as usize + 1];
        for (m, c) in &self.terms {
            let mut t = c.to_f64().unwrap_or(f64::NAN);
            for (w, &e) in m.0.iter().enumerate() {
                if w != v && e > 0 {
                    t *= point[w].powi(e as i32);
                }
            }
            out[m.exp(v) as usize] += t;
        }
        out
    }

    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        PolyDisplay { p: self, names }
    }
}

struct PolyDisplay<'a> {
    p: &'a Poly,
    names: &'a [String],
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.p.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.p.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mut factors = Vec::new();
            if !abs.is_one() || m.is_one() {
                factors.push(abs.to_string());
            }
            for (v, &e) in m.0.iter().enumerate() {
                let name = self.names.get(v).cloned().unwrap_or_else(|| format!("v{v}"));
                match e {
                    0 => {}
                    1 => factors.push(name),
                    _ => factors.push(format!("{name}^{e}")),
                }
            }
            f.write_str(&factors.join("*"))?;
        }
        Ok(())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.display_with(&[]).fmt(f)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut acc: BTreeMap<Monomial, BigInt> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                *acc.entry(ma.mul(mb)).or_default() += ca * cb;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Poly { terms: acc }
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
}

macro_rules! owned_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr for Poly {
            type Output = Poly;
            fn $f(self, rhs: Poly) -> Poly {
                (&self).$f(&rhs)
            }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn x() -> Poly {
        Poly::var(0)
    }
    fn y() -> Poly {
        Poly::var(1)
    }

    #[test]
    fn basic_arithmetic() {
        let p = &(&x() + &y()) * &(&x() - &y());
        assert_eq!(p, &x().pow(2) - &y().pow(2));
        assert_eq!(p.main_var(), Some(1));
        assert_eq!(p.degree(1), 2);
        assert_eq!(p.lc(1), Poly::constant(-1));
        assert!((&p - &p).is_zero());
        assert_eq!(Poly::constant(5).main_var(), None);
    }

    #[test]
    fn prem_by_linear_divisor() {
        // (x*y - 1) divides x^2*y^2 - 1 after scaling by x^2
        let f = &(&x() * &y()) - &Poly::one();
        let g = &(&x().pow(2) * &y().pow(2)) - &Poly::one();
        let (r, q, k) = g.prem(&f, 1);
        assert!(r.is_zero());
        assert_eq!(k, 2);
        assert_eq!(&x().pow(2).pow(1) * &g, &q * &f);
    }

    #[test]
    fn prem_leaves_lower_degree_remainder() {
        let f = &y().pow(2) - &x();
        let g = &y().pow(3) + &Poly::one();
        let (r, _, _) = g.prem(&f, 1);
        assert_eq!(r, &(&x() * &y()) + &Poly::one());
    }

    #[test]
    fn primitive_part() {
        let p = Poly::from_terms([(vec![1], BigInt::from(-4)), (vec![], BigInt::from(6))]);
        assert_eq!(p.primitive().to_string(), "2*v0 - 3");
    }

    #[test]
    fn display_uses_names() {
        let names = vec!["u1".to_string(), "x1".to_string()];
        let p = &(&x() * &y().pow(2)) - &Poly::constant(3);
        assert_eq!(p.display_with(&names).to_string(), "u1*x1^2 - 3");
    }

    fn arb_poly() -> impl Strategy<Value = Poly> {
        prop::collection::vec((prop::collection::vec(0u32..3, 3), -5i64..6), 0..6)
            .prop_map(|ts| Poly::from_terms(ts.into_iter().map(|(m, c)| (m, BigInt::from(c)))))
    }

    proptest! {
        #[test]
        fn prem_identity(g in arb_poly(), f in arb_poly(), v in 0usize..3) {
            prop_assume!(!f.is_zero());
            let (r, q, k) = g.prem(&f, v);
            let lhs = &f.lc(v).pow(k) * &g;
            prop_assert_eq!(lhs, &(&q * &f) + &r);
            prop_assert!(r.is_zero() || r.degree(v) < f.degree(v));
        }

        #[test]
        fn ring_laws(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert!((&(&a + &b) - &b - a.clone()).is_zero());
        }

        #[test]
        fn evaluation_is_a_homomorphism(a in arb_poly(), b in arb_poly(), pt in prop::collection::vec(-4i64..5, 3)) {
            let pt: Vec<BigInt> = pt.into_iter().map(BigInt::from).collect();
            prop_assert_eq!((&a * &b).eval_int(&pt), a.eval_int(&pt) * b.eval_int(&pt));
        }
    }
}
