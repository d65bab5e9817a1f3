use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use super::xi::XiMonomial;
use crate::error::{Error, Result};
use crate::poly::{same_env, Polynomial, VarEnv};
use crate::scalar::{prints_negative, Scalar};

/// A differential form `Σ ω_A(x) ξ^A` with polynomial coefficients.
#[derive(Clone)]
pub struct DifferentialForm<S> {
    env: Arc<VarEnv>,
    terms: BTreeMap<XiMonomial, Polynomial<S>>,
}

impl<S: Scalar> PartialEq for DifferentialForm<S> {
    fn eq(&self, other: &Self) -> bool {
        same_env(&self.env, &other.env) && self.terms == other.terms
    }
}

impl<S: Scalar> fmt::Debug for DifferentialForm<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Form({self})")
    }
}

impl<S: Scalar> DifferentialForm<S> {
    pub fn zero(env: &Arc<VarEnv>) -> Self {
        DifferentialForm {
            env: env.clone(),
            terms: BTreeMap::new(),
        }
    }

    /// The 0-form `f`.
    pub fn function(f: Polynomial<S>) -> Self {
        Self::term(f, XiMonomial::ONE)
    }

    /// `f ξ^A`.
    pub fn term(f: Polynomial<S>, xi: XiMonomial) -> Self {
        let mut out = Self::zero(f.env());
        assert!(
            xi.max_index().is_none_or(|i| i < out.env.n()),
            "odd index out of range"
        );
        out.add_term(xi, f);
        out
    }

    /// `ξ^{i+1}`.
    pub fn xi(env: &Arc<VarEnv>, i: usize) -> Self {
        Self::term(Polynomial::one(env), XiMonomial::single(i))
    }

    pub fn env(&self) -> &Arc<VarEnv> {
        &self.env
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&XiMonomial, &Polynomial<S>)> {
        self.terms.iter()
    }

    pub fn coeff(&self, xi: XiMonomial) -> Polynomial<S> {
        self.terms
            .get(&xi)
            .cloned()
            .unwrap_or_else(|| Polynomial::zero(&self.env))
    }

    pub(crate) fn add_term(&mut self, xi: XiMonomial, f: Polynomial<S>) {
        if f.is_zero() {
            return;
        }
        match self.terms.get_mut(&xi) {
            Some(existing) => {
                *existing = &*existing + &f;
                if existing.is_zero() {
                    self.terms.remove(&xi);
                }
            }
            None => {
                self.terms.insert(xi, f);
            }
        }
    }

    /// Degree-`k` component.
    pub fn component(&self, k: usize) -> Self {
        DifferentialForm {
            env: self.env.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(xi, _)| xi.len() == k)
                .map(|(xi, f)| (*xi, f.clone()))
                .collect(),
        }
    }

    /// The degree when the form is homogeneous and nonzero.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let mut degrees = self.terms.keys().map(|xi| xi.len());
        let first = degrees.next()?;
        degrees.all(|d| d == first).then_some(first)
    }

    pub fn try_wedge(&self, other: &Self) -> Result<Self> {
        if !same_env(&self.env, &other.env) {
            return Err(Error::EnvMismatch);
        }
        let mut out = Self::zero(&self.env);
        for (a, f) in &self.terms {
            for (b, g) in &other.terms {
                if let Some((sign, c)) = a.mul(*b) {
                    out.add_term(c, (f * g).scale(&S::from_int(sign)));
                }
            }
        }
        Ok(out)
    }

    pub fn wedge(&self, other: &Self) -> Self {
        self.try_wedge(other).unwrap_or_else(|e| panic!("{e}"))
    }

    /// Exterior derivative: `d(f ξ^A) = Σ_i ∂_i f ξ^i ∧ ξ^A`.
    pub fn d(&self) -> Self {
        let mut out = Self::zero(&self.env);
        for (a, f) in &self.terms {
            for i in 0..self.env.n() {
                let df = f.partial_unchecked(i);
                if df.is_zero() {
                    continue;
                }
                if let Some((sign, c)) = XiMonomial::single(i).mul(*a) {
                    out.add_term(c, df.scale(&S::from_int(sign)));
                }
            }
        }
        out
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut out = Self::zero(&self.env);
        for (xi, f) in &self.terms {
            out.add_term(*xi, f.scale(c));
        }
        out
    }

    pub fn mul_poly(&self, p: &Polynomial<S>) -> Self {
        let mut out = Self::zero(&self.env);
        for (xi, f) in &self.terms {
            out.add_term(*xi, f * p);
        }
        out
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if !same_env(&self.env, &other.env) {
            return Err(Error::EnvMismatch);
        }
        let mut out = self.clone();
        for (xi, f) in &other.terms {
            out.add_term(*xi, f.clone());
        }
        Ok(out)
    }

    pub fn map_coeffs<F: Fn(&Polynomial<S>) -> Polynomial<S>>(&self, f: F) -> Self {
        let mut out = Self::zero(&self.env);
        for (xi, p) in &self.terms {
            out.add_term(*xi, f(p));
        }
        out
    }
}

impl<S: Scalar> Add for &DifferentialForm<S> {
    type Output = DifferentialForm<S>;
    fn add(self, rhs: Self) -> DifferentialForm<S> {
        self.try_add(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<S: Scalar> Sub for &DifferentialForm<S> {
    type Output = DifferentialForm<S>;
    fn sub(self, rhs: Self) -> DifferentialForm<S> {
        self.try_add(&-rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<S: Scalar> Neg for &DifferentialForm<S> {
    type Output = DifferentialForm<S>;
    fn neg(self) -> DifferentialForm<S> {
        self.scale(&-S::one())
    }
}

/// `f*xi[1,2] + g*xi[] ...`; a scalar-only term prints without the `xi[]` factor.
impl<S: Scalar> fmt::Display for DifferentialForm<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (xi, p)) in self.terms.iter().enumerate() {
            let single_negative = p.num_terms() == 1 && p.terms().all(|(_, c)| prints_negative(c));
            let (sep, body) = if single_negative {
                (if idx == 0 { "-" } else { " - " }, (-p).to_string())
            } else {
                (if idx == 0 { "" } else { " + " }, p.to_string())
            };
            let wrapped = if p.num_terms() > 1 {
                format!("({body})")
            } else {
                body
            };
            if xi.is_empty() {
                write!(f, "{sep}{wrapped}")?;
            } else {
                write!(f, "{sep}{wrapped}*xi{xi}")?;
            }
        }
        Ok(())
    }
}
