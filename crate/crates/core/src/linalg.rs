//! Exact sparse linear systems with fraction-free elimination.
//!
//! Rows are scaled to primitive integer vectors and reduced against
//! echelon pivots by cross-multiplication (`p·r - r_c·pivot`) followed by
//! division by the row content, so no rational arithmetic happens inside
//! the elimination loop. Every pivot remembers which input rows it was
//! built from; an inconsistency therefore comes with a certificate that can
//! be checked by one row combination.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::scalar::{fmt_rational, Rational};

/// Sparse integer row: `(column, value)` sorted by column, no zeros.
pub type IntRow = Vec<(usize, BigInt)>;

fn content(row: &IntRow, combo: &IntRow) -> BigInt {
    let mut g = BigInt::zero();
    for (_, v) in row.iter().chain(combo.iter()) {
        g = g.gcd(v);
        if g.is_one() {
            break;
        }
    }
    g
}

fn normalize(row: &mut IntRow, combo: &mut IntRow) {
    let g = content(row, combo);
    if g.is_zero() || g.is_one() {
        return;
    }
    for (_, v) in row.iter_mut().chain(combo.iter_mut()) {
        *v = &*v / &g;
    }
}

/// `a·x - b·y` for sparse rows.
fn cross(a: &BigInt, x: &IntRow, b: &BigInt, y: &IntRow) -> IntRow {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let take_x = j >= y.len() || (i < x.len() && x[i].0 < y[j].0);
        let take_y = i >= x.len() || (j < y.len() && y[j].0 < x[i].0);
        if take_x {
            out.push((x[i].0, a * &x[i].1));
            i += 1;
        } else if take_y {
            out.push((y[j].0, -(b * &y[j].1)));
            j += 1;
        } else {
            let v = a * &x[i].1 - b * &y[j].1;
            if !v.is_zero() {
                out.push((x[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Scale a rational row to a primitive integer row; returns the row and the factor used.
pub fn integer_row(entries: &[(usize, Rational)]) -> (IntRow, Rational) {
    let mut lcm = BigInt::one();
    for (_, v) in entries {
        lcm = lcm.lcm(v.denom());
    }
    let mut row: IntRow = entries
        .iter()
        .filter(|(_, v)| !v.is_zero())
        .map(|(c, v)| (*c, (v * Rational::from_integer(lcm.clone())).to_integer()))
        .collect();
    row.sort_by_key(|(c, _)| *c);
    let mut g = BigInt::zero();
    for (_, v) in &row {
        g = g.gcd(v);
    }
    if !g.is_zero() && !g.is_one() {
        for (_, v) in row.iter_mut() {
            *v = &*v / &g;
        }
    }
    let factor = if g.is_zero() {
        Rational::from_integer(lcm)
    } else {
        Rational::new(lcm, g)
    };
    (row, factor)
}

struct Pivot {
    row: IntRow,
    combo: IntRow,
}

/// Outcome of inserting one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inserted {
    /// The row became a pivot in this column.
    Pivot(usize),
    /// The row was a combination of earlier ones.
    Dependent,
}

/// Incremental echelon form over the integers.
pub struct Eliminator {
    ncols: usize,
    pivots: BTreeMap<usize, Pivot>,
    stored: BTreeMap<usize, IntRow>,
    inserted: usize,
}

impl Eliminator {
    pub fn new(ncols: usize) -> Self {
        Eliminator {
            ncols,
            pivots: BTreeMap::new(),
            stored: BTreeMap::new(),
            inserted: 0,
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn rows_inserted(&self) -> usize {
        self.inserted
    }

    pub fn has_pivot(&self, col: usize) -> bool {
        self.pivots.contains_key(&col)
    }

    /// Number of pivots in columns `< bound`.
    pub fn rank_below(&self, bound: usize) -> usize {
        self.pivots.range(..bound).count()
    }

    /// Insert an integer row identified by `id` (ids must be unique).
    pub fn insert(&mut self, id: usize, row: IntRow) -> Inserted {
        self.inserted += 1;
        let original = row.clone();
        let mut row = row;
        let mut combo: IntRow = vec![(id, BigInt::one())];
        loop {
            let Some(&(lead, _)) = row.first() else {
                return Inserted::Dependent;
            };
            match self.pivots.get(&lead) {
                Some(p) => {
                    let a = p.row[0].1.clone();
                    let b = row[0].1.clone();
                    let g = a.gcd(&b);
                    let (a, b) = (&a / &g, &b / &g);
                    row = cross(&a, &row, &b, &p.row);
                    combo = cross(&a, &combo, &b, &p.combo);
                    normalize(&mut row, &mut combo);
                }
                None => {
                    if row[0].1.is_negative() {
                        for (_, v) in row.iter_mut().chain(combo.iter_mut()) {
                            *v = -&*v;
                        }
                    }
                    self.stored.insert(id, original);
                    self.pivots.insert(lead, Pivot { row, combo });
                    return Inserted::Pivot(lead);
                }
            }
        }
    }

    /// The stored input row with the given id (only rows that became pivots are kept).
    pub fn stored_row(&self, id: usize) -> Option<&IntRow> {
        self.stored.get(&id)
    }

    /// The pivot row in `col` with its combination of input rows.
    pub fn pivot(&self, col: usize) -> Option<(&IntRow, &IntRow)> {
        self.pivots.get(&col).map(|p| (&p.row, &p.combo))
    }

    /// Back substitution: treat column `rhs_col` as the right-hand side and
    /// columns `< rhs_col` as unknowns. Free unknowns are set to zero.
    pub fn back_substitute(&self, rhs_col: usize) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); rhs_col];
        for (&c, p) in self.pivots.range(..rhs_col).rev() {
            let mut acc = Rational::zero();
            let mut lead = BigInt::zero();
            for (j, v) in &p.row {
                if *j == c {
                    lead = v.clone();
                } else if *j < rhs_col {
                    acc -= Rational::from_integer(v.clone()) * &x[*j];
                } else if *j == rhs_col {
                    acc += Rational::from_integer(v.clone());
                }
            }
            x[c] = acc / Rational::from_integer(lead);
        }
        x
    }
}

/// One equation `Σ a_j u_j = b` with a provenance label.
#[derive(Clone, Debug, Serialize)]
pub struct Equation {
    #[serde(serialize_with = "ser_row")]
    pub coeffs: Vec<(usize, Rational)>,
    #[serde(serialize_with = "ser_rational")]
    pub rhs: Rational,
    pub label: String,
}

fn ser_rational<Ser: serde::Serializer>(q: &Rational, s: Ser) -> Result<Ser::Ok, Ser::Error> {
    s.serialize_str(&fmt_rational(q))
}

fn ser_row<Ser: serde::Serializer>(
    row: &[(usize, Rational)],
    s: Ser,
) -> Result<Ser::Ok, Ser::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(row.len()))?;
    for (c, v) in row {
        seq.serialize_element(&(c, fmt_rational(v)))?;
    }
    seq.end()
}

/// A sparse exact linear system `A u = b` with labelled columns and rows.
#[derive(Clone, Debug, Default)]
pub struct LinearSystem {
    pub columns: Vec<String>,
    pub rows: Vec<Equation>,
}

/// A row combination `Σ m_r row_r` whose coefficient part vanishes while the
/// right-hand side does not: a witness of `0 = nonzero`.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub rows: Vec<Equation>,
    #[serde(serialize_with = "ser_multipliers")]
    pub multipliers: Vec<Rational>,
}

fn ser_multipliers<Ser: serde::Serializer>(m: &[Rational], s: Ser) -> Result<Ser::Ok, Ser::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.len()))?;
    for v in m {
        seq.serialize_element(&fmt_rational(v))?;
    }
    seq.end()
}

impl Certificate {
    /// The combined right-hand side if the combination annihilates every unknown.
    pub fn check(&self) -> Option<Rational> {
        let mut lhs: BTreeMap<usize, Rational> = BTreeMap::new();
        let mut rhs = Rational::zero();
        for (eq, m) in self.rows.iter().zip(&self.multipliers) {
            for (c, v) in &eq.coeffs {
                *lhs.entry(*c).or_insert_with(Rational::zero) += v * m;
            }
            rhs += &eq.rhs * m;
        }
        (lhs.values().all(Zero::is_zero) && !rhs.is_zero()).then_some(rhs)
    }

    pub fn is_valid(&self) -> bool {
        self.check().is_some()
    }
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Consistent {
        solution: Vec<Rational>,
        kernel_dim: usize,
    },
    Inconsistent {
        certificate: Certificate,
    },
}

impl Verdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Verdict::Consistent { .. })
    }
}

impl LinearSystem {
    pub fn new(columns: Vec<String>) -> Self {
        LinearSystem {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn push(
        &mut self,
        coeffs: Vec<(usize, Rational)>,
        rhs: Rational,
        label: impl Into<String>,
    ) {
        self.rows.push(Equation {
            coeffs,
            rhs,
            label: label.into(),
        });
    }

    /// Whether `u` satisfies every equation.
    pub fn satisfied_by(&self, u: &[Rational]) -> bool {
        self.rows.iter().all(|eq| {
            let lhs: Rational = eq.coeffs.iter().map(|(c, v)| v * &u[*c]).sum();
            lhs == eq.rhs
        })
    }

    pub fn solve(&self) -> Verdict {
        let m = self.ncols();
        let mut elim = Eliminator::new(m + 1);
        let mut scales: BTreeMap<usize, Rational> = BTreeMap::new();
        for (id, eq) in self.rows.iter().enumerate() {
            let mut entries = eq.coeffs.clone();
            entries.push((m, eq.rhs.clone()));
            let (row, factor) = integer_row(&entries);
            scales.insert(id, factor);
            if elim.insert(id, row) == Inserted::Pivot(m) {
                return Verdict::Inconsistent {
                    certificate: certificate_from(&elim, m, |id| {
                        (self.rows[id].clone(), scales[&id].clone())
                    }),
                };
            }
        }
        Verdict::Consistent {
            solution: elim.back_substitute(m),
            kernel_dim: m - elim.rank_below(m),
        }
    }
}

/// Certificate from the pivot sitting in a right-hand-side column.
pub fn certificate_from<F>(elim: &Eliminator, col: usize, row_of: F) -> Certificate
where
    F: Fn(usize) -> (Equation, Rational),
{
    let (_, combo) = elim.pivot(col).expect("pivot in right-hand-side column");
    let mut rows = Vec::with_capacity(combo.len());
    let mut multipliers = Vec::with_capacity(combo.len());
    for (id, coeff) in combo {
        let (eq, scale) = row_of(*id);
        rows.push(eq);
        multipliers.push(Rational::from_integer(coeff.clone()) * scale);
    }
    Certificate { rows, multipliers }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn system(rows: &[(&[i64], i64)]) -> LinearSystem {
        let ncols = rows[0].0.len();
        let mut sys = LinearSystem::new((0..ncols).map(|c| format!("u{c}")).collect());
        for (i, (coeffs, rhs)) in rows.iter().enumerate() {
            sys.push(
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(c, v)| (c, int(*v)))
                    .collect(),
                int(*rhs),
                format!("row{i}"),
            );
        }
        sys
    }

    #[test]
    fn identity_system() {
        match system(&[(&[1, 0], 1), (&[0, 1], 2)]).solve() {
            Verdict::Consistent {
                solution,
                kernel_dim,
            } => {
                assert_eq!(solution, vec![int(1), int(2)]);
                assert_eq!(kernel_dim, 0);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn contradictory_rows() {
        match system(&[(&[1], 0), (&[1], 1)]).solve() {
            Verdict::Inconsistent { certificate } => {
                assert!(certificate.is_valid());
                let labels: Vec<&str> = certificate.rows.iter().map(|r| r.label.as_str()).collect();
                assert_eq!(labels, vec!["row0", "row1"]);
                assert_eq!(
                    certificate.multipliers[0],
                    -certificate.multipliers[1].clone()
                );
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn homogeneous_system() {
        match system(&[(&[1, 2, 3], 0), (&[2, 4, 6], 0)]).solve() {
            Verdict::Consistent {
                solution,
                kernel_dim,
            } => {
                assert!(solution.iter().all(Zero::is_zero));
                assert_eq!(kernel_dim, 2);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn rational_rows() {
        let mut sys = LinearSystem::new(vec!["a".into(), "b".into()]);
        sys.push(vec![(0, rat(1, 2)), (1, rat(1, 3))], rat(5, 6), "r0");
        sys.push(vec![(0, rat(1, 4)), (1, rat(-1, 3))], rat(-1, 12), "r1");
        match sys.solve() {
            Verdict::Consistent { solution, .. } => {
                assert_eq!(solution, vec![int(1), int(1)]);
                assert!(sys.satisfied_by(&solution));
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn echelon_rank_counts_leading_columns() {
        let mut e = Eliminator::new(3);
        assert_eq!(
            e.insert(0, vec![(1, BigInt::from(2)), (2, BigInt::from(1))]),
            Inserted::Pivot(1)
        );
        assert_eq!(
            e.insert(1, vec![(1, BigInt::from(4)), (2, BigInt::from(2))]),
            Inserted::Dependent
        );
        assert_eq!(
            e.insert(2, vec![(1, BigInt::from(1)), (2, BigInt::from(3))]),
            Inserted::Pivot(2)
        );
        assert_eq!(e.rank_below(2), 1);
        assert!(e.stored_row(1).is_none());
    }
}
