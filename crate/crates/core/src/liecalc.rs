//! Polynomial vector fields: bracket, divergence and the Lie derivative on forms.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exterior::{spatial_monomial, DifferentialOperator, OpKey, XiMonomial};
use crate::poly::{same_env, Monomial, Polynomial, VarEnv};
use crate::scalar::Scalar;

/// `X = Σ X^i ∂_i` with polynomial components in the spatial variables.
#[derive(Clone)]
pub struct PolyVectorField<S> {
    components: Vec<Polynomial<S>>,
}

impl<S: Scalar> PartialEq for PolyVectorField<S> {
    fn eq(&self, other: &Self) -> bool {
        self.components == other.components
    }
}

impl<S: Scalar> fmt::Debug for PolyVectorField<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField({self})")
    }
}

impl<S: Scalar> fmt::Display for PolyVectorField<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.components.iter().map(|p| p.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

impl<S: Scalar> PolyVectorField<S> {
    pub fn new(components: Vec<Polynomial<S>>) -> Result<Self> {
        let env = components
            .first()
            .map(|p| p.env().clone())
            .ok_or(Error::Arity {
                what: "vector field components".into(),
                expected: 2,
                found: 0,
            })?;
        if components.len() != env.n() {
            return Err(Error::Arity {
                what: "vector field components".into(),
                expected: env.n(),
                found: components.len(),
            });
        }
        for (i, c) in components.iter().enumerate() {
            if !same_env(c.env(), &env) {
                return Err(Error::EnvMismatch);
            }
            if c.has_params() {
                return Err(Error::ParametricField(i + 1));
            }
        }
        Ok(PolyVectorField { components })
    }

    pub fn zero(env: &Arc<VarEnv>) -> Self {
        PolyVectorField {
            components: vec![Polynomial::zero(env); env.n()],
        }
    }

    /// The constant field `∂_{i+1}`.
    pub fn unit(env: &Arc<VarEnv>, i: usize) -> Self {
        Self::monomial(env, &vec![0; env.n()], i, S::one())
    }

    /// `c · x^α ∂_{i+1}`.
    pub fn monomial(env: &Arc<VarEnv>, alpha: &[u16], i: usize, c: S) -> Self {
        let mut out = Self::zero(env);
        out.components[i] = spatial_monomial::<S>(env, alpha).scale(&c);
        out
    }

    pub fn env(&self) -> &Arc<VarEnv> {
        self.components[0].env()
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial<S>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Polynomial<S> {
        &self.components[i]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Polynomial::is_zero)
    }

    /// `X(f) = X^j ∂_j f`.
    pub fn apply_to(&self, f: &Polynomial<S>) -> Polynomial<S> {
        let mut out = Polynomial::zero(f.env());
        for (j, xj) in self.components.iter().enumerate() {
            if xj.is_zero() {
                continue;
            }
            out = &out + &(xj * &f.partial_unchecked(j));
        }
        out
    }

    pub fn scale(&self, c: &S) -> Self {
        PolyVectorField {
            components: self.components.iter().map(|p| p.scale(c)).collect(),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.try_add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(PolyVectorField { components })
    }

    /// `[X, Y]^i = X^j ∂_j Y^i - Y^j ∂_j X^i`.
    pub fn bracket(&self, other: &Self) -> Self {
        let components = (0..self.n())
            .map(|i| &self.apply_to(&other.components[i]) - &other.apply_to(&self.components[i]))
            .collect();
        PolyVectorField { components }
    }

    /// `Div X = Σ ∂_i X^i`.
    pub fn divergence(&self) -> Polynomial<S> {
        let mut out = Polynomial::zero(self.env());
        for (i, c) in self.components.iter().enumerate() {
            out = &out + &c.partial_unchecked(i);
        }
        out
    }

    /// `L_X = X^i ∂_{x^i} + (∂X^i/∂x^j) ξ^j ∂_{ξ^i}`.
    pub fn lie_derivative(&self) -> DifferentialOperator<S> {
        let env = self.env();
        let n = self.n();
        let mut out = DifferentialOperator::zero(env);
        for (i, xi_comp) in self.components.iter().enumerate() {
            if xi_comp.is_zero() {
                continue;
            }
            let mut key = OpKey::identity(n);
            key.dx[i] = 1;
            out.add_term(key, xi_comp.clone());
            for j in 0..n {
                let d = xi_comp.partial_unchecked(j);
                if d.is_zero() {
                    continue;
                }
                let mut key = OpKey::identity(n);
                key.xi = XiMonomial::single(j);
                key.dxi = XiMonomial::single(i);
                out.add_term(key, d);
            }
        }
        out
    }

    /// Re-express in a larger environment.
    pub fn embed(&self, env: &Arc<VarEnv>) -> Result<Self> {
        Ok(PolyVectorField {
            components: self
                .components
                .iter()
                .map(|p| p.embed(env))
                .collect::<Result<Vec<_>>>()?,
        })
    }

    /// Pull back along the translation `x ↦ x - c`: components `X^i(x - c)`.
    pub fn translate(&self, shift: &[S]) -> Result<Self> {
        let env = self.env();
        let mut bindings = std::collections::BTreeMap::new();
        for (i, c) in shift.iter().enumerate() {
            let xi = Polynomial::x(env, i);
            bindings.insert(
                env.name(i).to_string(),
                &xi - &Polynomial::constant(env, c.clone()),
            );
        }
        // Simultaneous substitution of x_i by x_i - c_i.
        let components = self
            .components
            .iter()
            .map(|p| substitute_shift(p, &bindings))
            .collect::<Result<Vec<_>>>()?;
        Ok(PolyVectorField { components })
    }
}

fn substitute_shift<S: Scalar>(
    p: &Polynomial<S>,
    bindings: &std::collections::BTreeMap<String, Polynomial<S>>,
) -> Result<Polynomial<S>> {
    // x_i -> x_i - c_i mentions x_i itself, so expand monomial by monomial.
    let env = p.env();
    let mut out = Polynomial::zero(env);
    for (m, c) in p.terms() {
        let mut acc = Polynomial::constant(env, c.clone());
        let mut rest = m.clone();
        for (v, &e) in m.0.iter().enumerate() {
            if let Some(b) = bindings.get(env.name(v)) {
                acc = &acc * &b.pow(e as u32);
                rest.0[v] = 0;
            }
        }
        out = &out + &(&acc * &Polynomial::monomial(env, rest, S::one()));
    }
    Ok(out)
}

/// Exponent vectors of length `n` and total degree at most `max_degree`, graded-lex.
pub fn exponents_up_to(n: usize, max_degree: u32) -> Vec<Vec<u16>> {
    fn rec(n: usize, left: u32, prefix: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=left {
            prefix.push(e as u16);
            rec(n, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, max_degree, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| {
        let da: u32 = a.iter().map(|&e| e as u32).sum();
        let db: u32 = b.iter().map(|&e| e as u32).sum();
        da.cmp(&db).then_with(|| b.cmp(a))
    });
    out
}

/// All monomial fields `x^α ∂_i` with `|α| ≤ max_degree`.
pub fn monomial_fields<S: Scalar>(env: &Arc<VarEnv>, max_degree: u32) -> Vec<PolyVectorField<S>> {
    let exps = exponents_up_to(env.n(), max_degree);
    let mut out = Vec::with_capacity(exps.len() * env.n());
    for alpha in &exps {
        for i in 0..env.n() {
            out.push(PolyVectorField::monomial(env, alpha, i, S::one()));
        }
    }
    out
}

/// A random field with small integer coefficients and up to `max_terms` monomials per component.
pub fn random_field<S: Scalar, R: Rng>(
    env: &Arc<VarEnv>,
    rng: &mut R,
    max_degree: u32,
    max_terms: usize,
) -> PolyVectorField<S> {
    let exps = exponents_up_to(env.n(), max_degree);
    let components = (0..env.n())
        .map(|_| {
            let count = rng.gen_range(1..=max_terms);
            let mut p = Polynomial::zero(env);
            for _ in 0..count {
                let alpha = &exps[rng.gen_range(0..exps.len())];
                let mut m = Monomial::one(env.len());
                m.0[..alpha.len()].copy_from_slice(alpha);
                let c: i64 = rng.gen_range(-3..=3);
                p = &p + &Polynomial::monomial(env, m, S::from_int(c));
            }
            p
        })
        .collect();
    PolyVectorField { components }
}
