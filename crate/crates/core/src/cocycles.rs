//! The explicit cochains: the divergence 1-cocycles `C_0, C_1, C̃_1, C_2`, the
//! obstruction 2-cocycles `γ_1, γ_2, γ̃_2, γ_3`, their graded restrictions,
//! Chevalley–Eilenberg differentials and the cup product.
//!
//! Cochains are combinator expressions evaluated on demand, so parameter
//! polynomials in combination coefficients flow through unevaluated.

use std::fmt;

use crate::error::{Error, Result};
use crate::exterior::{DerivIndex, DifferentialForm, DifferentialOperator, OpKey};
use crate::liecalc::PolyVectorField;
use crate::poly::Polynomial;
use crate::scalar::Scalar;

type Op<S> = DifferentialOperator<S>;
type Field<S> = PolyVectorField<S>;

/// A linear map `Vect(R^n) → D(Ω(R^n))`.
#[derive(Clone)]
pub enum OneCochain<S> {
    /// `X ↦ Div X`
    C0,
    /// `X ↦ d ∘ Div X`
    C1,
    /// `X ↦ Div X ∘ d`
    C1Tilde,
    /// `X ↦ d ∘ Div X ∘ d`
    C2,
    /// `X ↦ c(X)|_{Ω^k}`
    Restrict { inner: Box<OneCochain<S>>, k: usize },
    /// `Σ p_j c_j` with polynomial (typically parameter) coefficients.
    Combination(Vec<(Polynomial<S>, OneCochain<S>)>),
    /// Elementary constant-coefficient cochain `X ↦ ∂^jet X^component · key`.
    Elementary {
        component: usize,
        jet: DerivIndex,
        key: OpKey,
    },
}

impl<S: Scalar> fmt::Debug for OneCochain<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<S: Scalar> fmt::Display for OneCochain<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OneCochain::C0 => write!(f, "C0"),
            OneCochain::C1 => write!(f, "C1"),
            OneCochain::C1Tilde => write!(f, "C1~"),
            OneCochain::C2 => write!(f, "C2"),
            OneCochain::Restrict { inner, k } => write!(f, "{inner}^{k}"),
            OneCochain::Combination(terms) => {
                let parts: Vec<String> = terms.iter().map(|(p, c)| format!("({p})*{c}")).collect();
                write!(
                    f,
                    "{}",
                    if parts.is_empty() {
                        "0".into()
                    } else {
                        parts.join(" + ")
                    }
                )
            }
            OneCochain::Elementary {
                component,
                jet,
                key,
            } => {
                write!(f, "D{:?}X^{}*{}", jet.as_slice(), component + 1, key)
            }
        }
    }
}

impl<S: Scalar> OneCochain<S> {
    pub fn zero() -> Self {
        OneCochain::Combination(Vec::new())
    }

    /// Degree shift, when homogeneous.
    pub fn shift(&self) -> Option<i64> {
        match self {
            OneCochain::C0 => Some(0),
            OneCochain::C1 | OneCochain::C1Tilde => Some(1),
            OneCochain::C2 => Some(2),
            OneCochain::Restrict { inner, .. } => inner.shift(),
            OneCochain::Combination(terms) => {
                let mut shifts = terms.iter().map(|(_, c)| c.shift());
                let first = shifts.next()?;
                shifts.all(|s| s == first).then_some(first).flatten()
            }
            OneCochain::Elementary { key, .. } => Some(key.shift()),
        }
    }

    /// `c|_{Ω^k}`; any source degree `0..=n` is accepted and restrictions
    /// landing above `Ω^n` evaluate to zero.
    pub fn restrict(&self, n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::DegreeOutOfRange {
                what: format!("restriction of {self}"),
                k,
                lo: 0,
                hi: n,
            });
        }
        Ok(OneCochain::Restrict {
            inner: Box::new(self.clone()),
            k,
        })
    }

    pub fn eval(&self, x: &Field<S>) -> Op<S> {
        let env = x.env();
        match self {
            OneCochain::C0 => Op::mult(&x.divergence()),
            OneCochain::C1 => c1(x),
            OneCochain::C1Tilde => c1_tilde(x),
            OneCochain::C2 => c2(x),
            OneCochain::Restrict { inner, k } => {
                let value = inner.eval(x);
                if value.is_zero() {
                    return value;
                }
                value.compose(&Op::projector(env, *k))
            }
            OneCochain::Combination(terms) => {
                let mut out = Op::zero(env);
                for (p, c) in terms {
                    out.add_mul_poly(&c.eval(x), p);
                }
                out
            }
            OneCochain::Elementary {
                component,
                jet,
                key,
            } => {
                let coeff = x.component(*component).partial_multi(jet);
                Op::term(coeff, key.clone())
            }
        }
    }
}

/// `X ↦ d ∘ Div X`.
pub fn c1<S: Scalar>(x: &Field<S>) -> Op<S> {
    Op::d(x.env()).compose(&Op::mult(&x.divergence()))
}

/// `X ↦ Div X ∘ d`.
pub fn c1_tilde<S: Scalar>(x: &Field<S>) -> Op<S> {
    Op::mult(&x.divergence()).compose(&Op::d(x.env()))
}

/// `X ↦ d ∘ Div X ∘ d`.
pub fn c2<S: Scalar>(x: &Field<S>) -> Op<S> {
    let d = Op::d(x.env());
    d.compose(&Op::mult(&x.divergence())).compose(&d)
}

/// The 1-form `Div X · d(Div Y) - Div Y · d(Div X)`.
pub fn gamma1_form<S: Scalar>(x: &Field<S>, y: &Field<S>) -> DifferentialForm<S> {
    let a = DifferentialForm::function(x.divergence());
    let b = DifferentialForm::function(y.divergence());
    &a.wedge(&b.d()) - &b.wedge(&a.d())
}

/// The 2-form `d(Div X) ∧ d(Div Y) - d(Div Y) ∧ d(Div X)`.
pub fn gamma2_tilde_form<S: Scalar>(x: &Field<S>, y: &Field<S>) -> DifferentialForm<S> {
    let da = DifferentialForm::function(x.divergence()).d();
    let db = DifferentialForm::function(y.divergence()).d();
    &da.wedge(&db) - &db.wedge(&da)
}

pub fn gamma1<S: Scalar>(x: &Field<S>, y: &Field<S>) -> Op<S> {
    Op::wedge_by(&gamma1_form(x, y))
}

pub fn gamma2<S: Scalar>(x: &Field<S>, y: &Field<S>) -> Op<S> {
    gamma1(x, y).compose(&Op::d(x.env()))
}

pub fn gamma2_tilde<S: Scalar>(x: &Field<S>, y: &Field<S>) -> Op<S> {
    Op::wedge_by(&gamma2_tilde_form(x, y))
}

pub fn gamma3<S: Scalar>(x: &Field<S>, y: &Field<S>) -> Op<S> {
    gamma2_tilde(x, y).compose(&Op::d(x.env()))
}

/// A bilinear skew map `Vect × Vect → D(Ω)`.
#[derive(Clone)]
pub enum TwoCochain<S> {
    Gamma1,
    Gamma2,
    Gamma2Tilde,
    Gamma3,
    Restrict {
        inner: Box<TwoCochain<S>>,
        k: usize,
    },
    Combination(Vec<(Polynomial<S>, TwoCochain<S>)>),
    /// `(X, Y) ↦ [a(X), b(Y)] + [b(X), a(Y)]`
    Cup(OneCochain<S>, OneCochain<S>),
    /// `δb`
    Coboundary(OneCochain<S>),
}

impl<S: Scalar> fmt::Debug for TwoCochain<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<S: Scalar> fmt::Display for TwoCochain<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TwoCochain::Gamma1 => write!(f, "gamma1"),
            TwoCochain::Gamma2 => write!(f, "gamma2"),
            TwoCochain::Gamma2Tilde => write!(f, "gamma2~"),
            TwoCochain::Gamma3 => write!(f, "gamma3"),
            TwoCochain::Restrict { inner, k } => write!(f, "{inner}^{k}"),
            TwoCochain::Combination(terms) => {
                let parts: Vec<String> = terms.iter().map(|(p, c)| format!("({p})*{c}")).collect();
                write!(
                    f,
                    "{}",
                    if parts.is_empty() {
                        "0".into()
                    } else {
                        parts.join(" + ")
                    }
                )
            }
            TwoCochain::Cup(a, b) => write!(f, "[[{a}, {b}]]"),
            TwoCochain::Coboundary(b) => write!(f, "delta({b})"),
        }
    }
}

impl<S: Scalar> TwoCochain<S> {
    pub fn shift(&self) -> Option<i64> {
        match self {
            TwoCochain::Gamma1 => Some(1),
            TwoCochain::Gamma2 | TwoCochain::Gamma2Tilde => Some(2),
            TwoCochain::Gamma3 => Some(3),
            TwoCochain::Restrict { inner, .. } => inner.shift(),
            TwoCochain::Combination(terms) => {
                let mut shifts = terms.iter().map(|(_, c)| c.shift());
                let first = shifts.next()?;
                shifts.all(|s| s == first).then_some(first).flatten()
            }
            TwoCochain::Cup(a, b) => Some(a.shift()? + b.shift()?),
            TwoCochain::Coboundary(b) => b.shift(),
        }
    }

    pub fn restrict(&self, n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::DegreeOutOfRange {
                what: format!("restriction of {self}"),
                k,
                lo: 0,
                hi: n,
            });
        }
        Ok(TwoCochain::Restrict {
            inner: Box::new(self.clone()),
            k,
        })
    }

    pub fn eval(&self, x: &Field<S>, y: &Field<S>) -> Op<S> {
        let env = x.env();
        match self {
            TwoCochain::Gamma1 => gamma1(x, y),
            TwoCochain::Gamma2 => gamma2(x, y),
            TwoCochain::Gamma2Tilde => gamma2_tilde(x, y),
            TwoCochain::Gamma3 => gamma3(x, y),
            TwoCochain::Restrict { inner, k } => {
                let value = inner.eval(x, y);
                if value.is_zero() {
                    return value;
                }
                value.compose(&Op::projector(env, *k))
            }
            TwoCochain::Combination(terms) => {
                let mut out = Op::zero(env);
                for (p, c) in terms {
                    out.add_mul_poly(&c.eval(x, y), p);
                }
                out
            }
            TwoCochain::Cup(a, b) => cup(a, b, x, y),
            TwoCochain::Coboundary(b) => ce_delta1(b, x, y),
        }
    }
}

/// `(δc)(X, Y) = [L_X, c(Y)] - [L_Y, c(X)] - c([X, Y])`.
pub fn ce_delta1<S: Scalar>(c: &OneCochain<S>, x: &Field<S>, y: &Field<S>) -> Op<S> {
    let lx = x.lie_derivative();
    let ly = y.lie_derivative();
    let cx = c.eval(x);
    let cy = c.eval(y);
    &(&lx.commutator(&cy) - &ly.commutator(&cx)) - &c.eval(&x.bracket(y))
}

/// `(δg)(X, Y, Z) = [L_X, g(Y,Z)] - [L_Y, g(X,Z)] + [L_Z, g(X,Y)]
///                 - g([X,Y],Z) + g([X,Z],Y) - g([Y,Z],X)`.
pub fn ce_delta2<S: Scalar>(g: &TwoCochain<S>, x: &Field<S>, y: &Field<S>, z: &Field<S>) -> Op<S> {
    let lx = x.lie_derivative();
    let ly = y.lie_derivative();
    let lz = z.lie_derivative();
    let mut out = lx.commutator(&g.eval(y, z));
    out = &out - &ly.commutator(&g.eval(x, z));
    out = &out + &lz.commutator(&g.eval(x, y));
    out = &out - &g.eval(&x.bracket(y), z);
    out = &out + &g.eval(&x.bracket(z), y);
    &out - &g.eval(&y.bracket(z), x)
}

/// Cup product of 1-cochains: `[a(X), b(Y)] + [b(X), a(Y)]`.
pub fn cup<S: Scalar>(a: &OneCochain<S>, b: &OneCochain<S>, x: &Field<S>, y: &Field<S>) -> Op<S> {
    let first = a.eval(x).commutator(&b.eval(y));
    let second = b.eval(x).commutator(&a.eval(y));
    &first + &second
}

/// Source degrees `k` for which a cochain of the given shift has a nonzero
/// graded piece `Ω^k → Ω^{k+shift}`.
pub fn degree_range(n: usize, shift: usize) -> std::ops::RangeInclusive<usize> {
    0..=n.saturating_sub(shift)
}
