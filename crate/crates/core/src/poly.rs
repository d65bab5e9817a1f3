//! Sparse multivariate polynomials over a two-sorted variable environment.
//!
//! The first `n` variables of a [`VarEnv`] are the spatial coordinates
//! `x1..xn`; the remaining ones are formal deformation parameters. Parameters
//! are constants for differentiation and never appear in vector fields.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::{prints_negative, Scalar};

/// Ordered variable names: `x1..xn` followed by the parameters in scope.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarEnv {
    n: usize,
    names: Vec<String>,
}

impl VarEnv {
    /// Spatial variables only.
    pub fn new(n: usize) -> Result<Arc<VarEnv>> {
        Self::with_params(n, &[] as &[&str])
    }

    pub fn with_params<T: AsRef<str>>(n: usize, params: &[T]) -> Result<Arc<VarEnv>> {
        if n < 2 {
            return Err(Error::Dimension(n));
        }
        let mut names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        for p in params {
            let p = p.as_ref();
            if !is_identifier(p) || is_reserved(p) {
                return Err(Error::BadVariableName(p.to_string()));
            }
            if names.iter().any(|q| q == p) {
                return Err(Error::DuplicateVariable(p.to_string()));
            }
            names.push(p.to_string());
        }
        Ok(Arc::new(VarEnv { n, names }))
    }

    /// Spatial dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of variables (spatial and parameter).
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, var: usize) -> &str {
        &self.names[var]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|v| v == name)
    }

    pub fn is_spatial(&self, var: usize) -> bool {
        var < self.n
    }

    pub fn param_names(&self) -> &[String] {
        &self.names[self.n..]
    }

    pub fn spatial_names(&self) -> &[String] {
        &self.names[..self.n]
    }

    /// Whether `other` has the same spatial dimension and a superset of our parameters.
    pub fn embeds_into(&self, other: &VarEnv) -> bool {
        self.n == other.n
            && self
                .param_names()
                .iter()
                .all(|p| other.index_of(p).is_some())
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// `x<digits>` names the spatial coordinates and `xi` the odd generators.
fn is_reserved(s: &str) -> bool {
    s == "xi" || (s.len() > 1 && s.starts_with('x') && s[1..].chars().all(|c| c.is_ascii_digit()))
}

pub(crate) fn same_env(a: &Arc<VarEnv>, b: &Arc<VarEnv>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Exponent vector; ordered by total degree, then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub SmallVec<[u16; 8]>);

impl Monomial {
    pub fn one(len: usize) -> Self {
        Monomial(SmallVec::from_elem(0, len))
    }

    pub fn var(len: usize, var: usize) -> Self {
        let mut m = Self::one(len);
        m.0[var] = 1;
        m
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn exponent(&self, var: usize) -> u16 {
        self.0[var]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Whether `self` divides `other` componentwise.
    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A polynomial with coefficients in `S` over the variables of a [`VarEnv`].
#[derive(Clone)]
pub struct Polynomial<S> {
    env: Arc<VarEnv>,
    terms: BTreeMap<Monomial, S>,
}

impl<S: Scalar> PartialEq for Polynomial<S> {
    fn eq(&self, other: &Self) -> bool {
        same_env(&self.env, &other.env) && self.terms == other.terms
    }
}

impl<S: Scalar> fmt::Debug for Polynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial({self})")
    }
}

impl<S: Scalar> Polynomial<S> {
    pub fn zero(env: &Arc<VarEnv>) -> Self {
        Polynomial {
            env: env.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(env: &Arc<VarEnv>, c: S) -> Self {
        let mut p = Self::zero(env);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(env.len()), c);
        }
        p
    }

    pub fn one(env: &Arc<VarEnv>) -> Self {
        Self::constant(env, S::one())
    }

    pub fn from_int(env: &Arc<VarEnv>, c: i64) -> Self {
        Self::constant(env, S::from_int(c))
    }

    /// The variable at position `var` of the environment.
    pub fn var_at(env: &Arc<VarEnv>, var: usize) -> Self {
        Self::monomial(env, Monomial::var(env.len(), var), S::one())
    }

    /// The spatial coordinate `x{i+1}`.
    pub fn x(env: &Arc<VarEnv>, i: usize) -> Self {
        assert!(
            i < env.n(),
            "spatial index {i} out of range for n = {}",
            env.n()
        );
        Self::var_at(env, i)
    }

    pub fn var(env: &Arc<VarEnv>, name: &str) -> Result<Self> {
        let idx = env
            .index_of(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        Ok(Self::var_at(env, idx))
    }

    pub fn monomial(env: &Arc<VarEnv>, m: Monomial, c: S) -> Self {
        assert_eq!(
            m.len(),
            env.len(),
            "monomial length does not match environment"
        );
        let mut p = Self::zero(env);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, S)>>(env: &Arc<VarEnv>, terms: I) -> Self {
        let mut p = Self::zero(env);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn env(&self) -> &Arc<VarEnv> {
        &self.env
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending monomial order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &S)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> S {
        self.terms.get(m).cloned().unwrap_or_else(S::zero)
    }

    /// The constant term.
    pub fn constant_term(&self) -> S {
        self.coeff(&Monomial::one(self.env.len()))
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// Maximum degree in the parameter variables alone.
    pub fn param_degree(&self) -> Option<u32> {
        let n = self.env.n();
        self.terms
            .keys()
            .map(|m| m.0[n..].iter().map(|&e| e as u32).sum())
            .max()
    }

    pub fn has_params(&self) -> bool {
        let n = self.env.n();
        self.terms.keys().any(|m| m.0[n..].iter().any(|&e| e > 0))
    }

    pub fn has_spatial(&self) -> bool {
        let n = self.env.n();
        self.terms.keys().any(|m| m.0[..n].iter().any(|&e| e > 0))
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: S) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    fn check_env(&self, other: &Self) -> Result<()> {
        if same_env(&self.env, &other.env) {
            Ok(())
        } else {
            Err(Error::EnvMismatch)
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_env(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_env(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_env(other)?;
        let mut out = Self::zero(&self.env);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &S) -> Self {
        if c.is_zero() {
            return Self::zero(&self.env);
        }
        Polynomial {
            env: self.env.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v.clone() * c.clone()))
                .collect(),
        }
    }

    /// In-place `self += c * other`.
    pub fn add_scaled(&mut self, other: &Self, c: &S) {
        assert!(same_env(&self.env, &other.env), "{}", Error::EnvMismatch);
        if c.is_zero() {
            return;
        }
        for (m, v) in &other.terms {
            self.add_term(m.clone(), v.clone() * c.clone());
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one(&self.env);
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Formal partial derivative in the spatial coordinate `x{i+1}`.
    pub fn partial(&self, i: usize) -> Result<Self> {
        if i >= self.env.len() {
            return Err(Error::IndexOutOfRange {
                what: "variable",
                index: i,
                bound: self.env.len(),
            });
        }
        if !self.env.is_spatial(i) {
            return Err(Error::ParameterDerivative(self.env.name(i).to_string()));
        }
        Ok(self.partial_unchecked(i))
    }

    pub(crate) fn partial_unchecked(&self, i: usize) -> Self {
        let mut out = Self::zero(&self.env);
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2.0[i] = e - 1;
            out.add_term(m2, c.clone() * S::from_int(e as i64));
        }
        out
    }

    /// Mixed partial derivative `∂^alpha` over the spatial exponents `alpha` (length n).
    pub fn partial_multi(&self, alpha: &[u16]) -> Self {
        debug_assert_eq!(alpha.len(), self.env.n());
        let mut out = Self::zero(&self.env);
        'terms: for (m, c) in &self.terms {
            let mut m2 = m.clone();
            let mut factor: i64 = 1;
            for (i, &a) in alpha.iter().enumerate() {
                let e = m.0[i];
                if a > e {
                    continue 'terms;
                }
                for j in 0..a {
                    factor *= (e - j) as i64;
                }
                m2.0[i] = e - a;
            }
            out.add_term(m2, c.clone() * S::from_int(factor));
        }
        out
    }

    /// Simultaneous substitution of variables by polynomials of the same environment.
    pub fn substitute(&self, bindings: &BTreeMap<String, Polynomial<S>>) -> Result<Self> {
        let mut slots: Vec<Option<&Polynomial<S>>> = vec![None; self.env.len()];
        for (name, value) in bindings {
            let idx = self
                .env
                .index_of(name)
                .ok_or_else(|| Error::UnknownVariable(name.clone()))?;
            self.check_env(value)?;
            if value.terms.keys().any(|m| m.0[idx] > 0) {
                return Err(Error::RecursiveSubstitution(name.clone()));
            }
            slots[idx] = Some(value);
        }
        let mut out = Self::zero(&self.env);
        for (m, c) in &self.terms {
            let mut kept = m.clone();
            let mut acc = Self::constant(&self.env, c.clone());
            for (var, slot) in slots.iter().enumerate() {
                if let Some(value) = slot {
                    let e = m.0[var];
                    if e > 0 {
                        acc = &acc * &value.pow(e as u32);
                        kept.0[var] = 0;
                    }
                }
            }
            for (m2, c2) in acc.terms {
                out.add_term(m2.mul(&kept), c2);
            }
        }
        Ok(out)
    }

    /// Re-express the polynomial in a larger environment (same `n`, more parameters).
    pub fn embed(&self, env: &Arc<VarEnv>) -> Result<Self> {
        if same_env(&self.env, env) {
            return Ok(self.clone());
        }
        if !self.env.embeds_into(env) {
            return Err(Error::EnvMismatch);
        }
        let map: Vec<usize> = (0..self.env.len())
            .map(|v| {
                env.index_of(self.env.name(v))
                    .expect("checked by embeds_into")
            })
            .collect();
        let mut out = Self::zero(env);
        for (m, c) in &self.terms {
            let mut m2 = Monomial::one(env.len());
            for (v, &e) in m.0.iter().enumerate() {
                m2.0[map[v]] = e;
            }
            out.add_term(m2, c.clone());
        }
        Ok(out)
    }

    /// Split into spatial monomials (length `n`) with parameter-polynomial coefficients.
    pub fn split_spatial(&self) -> BTreeMap<SmallVec<[u16; 8]>, Polynomial<S>> {
        let n = self.env.n();
        let mut out: BTreeMap<SmallVec<[u16; 8]>, Polynomial<S>> = BTreeMap::new();
        for (m, c) in &self.terms {
            let spatial: SmallVec<[u16; 8]> = m.0[..n].iter().copied().collect();
            let mut rest = m.clone();
            for e in rest.0[..n].iter_mut() {
                *e = 0;
            }
            out.entry(spatial)
                .or_insert_with(|| Self::zero(&self.env))
                .add_term(rest, c.clone());
        }
        out
    }

    pub fn map_coeffs<F: Fn(&S) -> S>(&self, f: F) -> Self {
        Self::from_terms(&self.env, self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    /// Evaluate every variable; `values` is indexed like the environment.
    pub fn eval(&self, values: &[S]) -> S {
        assert_eq!(values.len(), self.env.len());
        let mut acc = S::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, &e) in m.0.iter().enumerate() {
                for _ in 0..e {
                    t = t * values[v].clone();
                }
            }
            acc = acc + t;
        }
        acc
    }
}

impl<S: Scalar> fmt::Display for Polynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let negative = prints_negative(c);
            let magnitude = if negative { -c.clone() } else { c.clone() };
            match (idx, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mut factors: Vec<String> = Vec::new();
            if !magnitude.is_one() || m.is_one() {
                factors.push(magnitude.to_string());
            }
            for (v, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(self.env.name(v).to_string()),
                    _ => factors.push(format!("{}^{}", self.env.name(v), e)),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

macro_rules! poly_binop {
    ($tr:ident, $method:ident, $try:ident) => {
        impl<S: Scalar> $tr<&Polynomial<S>> for &Polynomial<S> {
            type Output = Polynomial<S>;
            fn $method(self, rhs: &Polynomial<S>) -> Polynomial<S> {
                self.$try(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl<S: Scalar> $tr<Polynomial<S>> for Polynomial<S> {
            type Output = Polynomial<S>;
            fn $method(self, rhs: Polynomial<S>) -> Polynomial<S> {
                (&self).$method(&rhs)
            }
        }
        impl<S: Scalar> $tr<&Polynomial<S>> for Polynomial<S> {
            type Output = Polynomial<S>;
            fn $method(self, rhs: &Polynomial<S>) -> Polynomial<S> {
                (&self).$method(rhs)
            }
        }
        impl<S: Scalar> $tr<Polynomial<S>> for &Polynomial<S> {
            type Output = Polynomial<S>;
            fn $method(self, rhs: Polynomial<S>) -> Polynomial<S> {
                self.$method(&rhs)
            }
        }
    };
}

poly_binop!(Add, add, try_add);
poly_binop!(Sub, sub, try_sub);
poly_binop!(Mul, mul, try_mul);

impl<S: Scalar> Neg for &Polynomial<S> {
    type Output = Polynomial<S>;
    fn neg(self) -> Polynomial<S> {
        self.map_coeffs(|c| -c.clone())
    }
}

impl<S: Scalar> Neg for Polynomial<S> {
    type Output = Polynomial<S>;
    fn neg(self) -> Polynomial<S> {
        -&self
    }
}
