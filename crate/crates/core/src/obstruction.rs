//! Bounded-order coboundary probing: is `γ^k_i = δb` solvable for a
//! constant-coefficient cochain `b` of bounded jet order and operator order?
//!
//! The ansatz is `b(X) = Σ c · ∂^I X^ℓ · ξ^A ∂x^β ∂ξ^B`, restricted to `Ω^k`.
//! Equations come from matching `δb(X, Y)` and the target on `Ω^k` for many
//! monomial pairs; they are streamed into a fraction-free eliminator that
//! stops as soon as the target column becomes a pivot, which is exactly an
//! inconsistency. The row combination behind that pivot is the certificate.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use smallvec::SmallVec;

use crate::cocycles::{OneCochain, TwoCochain};
use crate::error::{Error, Result};
use crate::exterior::{BlockMatrix, DerivIndex, OpKey, XiMonomial};
use crate::liecalc::{exponents_up_to, monomial_fields};
use crate::linalg::{integer_row, Certificate, Eliminator, Equation, Inserted, LinearSystem};
use crate::poly::{Monomial, VarEnv};
use crate::scalar::Rational;
use crate::{DiffOp, Poly, VectorField};

/// Jet order `S_max` of the field argument and operator order `U_max` in `∂x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub jet: u32,
    pub order: u32,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { jet: 3, order: 2 }
    }
}

impl Bounds {
    /// Monomial degree of the probing pairs: `δb(X, Y)` sees jets of order `jet + 1`.
    pub fn pair_degree(&self) -> u32 {
        self.jet + 2
    }
}

/// `X ↦ ∂^jet X^component · key`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct AnsatzEntry {
    pub component: usize,
    pub jet: DerivIndex,
    pub key: OpKey,
}

impl AnsatzEntry {
    pub fn to_cochain(&self) -> OneCochain<Rational> {
        OneCochain::Elementary {
            component: self.component,
            jet: self.jet.clone(),
            key: self.key.clone(),
        }
    }
}

impl fmt::Display for AnsatzEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "D{:?}X^{}*{}",
            self.jet.as_slice(),
            self.component + 1,
            self.key
        )
    }
}

#[derive(Clone, Debug)]
pub struct AnsatzBasis {
    pub n: usize,
    pub k: usize,
    pub shift: usize,
    pub bounds: Bounds,
    pub entries: Vec<AnsatzEntry>,
}

impl AnsatzBasis {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.to_string()).collect()
    }
}

/// `(A, B)` with `|A| - |B| = shift` acting nontrivially from `Ω^k` (so `|B| ≤ k`).
fn odd_pairs(n: usize, k: usize, shift: usize) -> Vec<(XiMonomial, XiMonomial)> {
    let mut out = Vec::new();
    if k + shift > n {
        return out;
    }
    for b in 0..=k {
        let a = b + shift;
        if a > n {
            break;
        }
        for &am in &XiMonomial::all_of_degree(n, a) {
            for &bm in &XiMonomial::all_of_degree(n, b) {
                out.push((am, bm));
            }
        }
    }
    out
}

pub fn enumerate_ansatz(n: usize, k: usize, shift: usize, bounds: Bounds) -> AnsatzBasis {
    let jets = exponents_up_to(n, bounds.jet);
    let orders = exponents_up_to(n, bounds.order);
    let pairs = odd_pairs(n, k, shift);
    let mut entries = Vec::with_capacity(jets.len() * n * orders.len() * pairs.len());
    for jet in &jets {
        for component in 0..n {
            for beta in &orders {
                for &(xi, dxi) in &pairs {
                    entries.push(AnsatzEntry {
                        component,
                        jet: jet.iter().copied().collect(),
                        key: OpKey {
                            xi,
                            dx: beta.iter().copied().collect(),
                            dxi,
                        },
                    });
                }
            }
        }
    }
    AnsatzBasis {
        n,
        k,
        shift,
        bounds,
        entries,
    }
}

/// The `(k, shift)` cells carrying an obstruction cocycle: `shift ∈ {1,2,3}`, `k + shift ≤ n`.
pub fn valid_cells(n: usize) -> Vec<(usize, usize)> {
    (1..=3usize)
        .filter(|&s| s <= n)
        .flat_map(|s| (0..=n - s).map(move |k| (k, s)))
        .collect()
}

pub fn check_cell(n: usize, k: usize, shift: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Dimension(n));
    }
    if valid_cells(n).contains(&(k, shift)) {
        return Ok(());
    }
    let valid: Vec<String> = (1..=3usize)
        .filter(|&s| s <= n)
        .map(|s| format!("shift {s}: k = 0..={}", n - s))
        .collect();
    Err(Error::InvalidCell {
        n,
        k,
        shift,
        valid: valid.join("; "),
    })
}

/// The obstruction cocycles of a shift, by name.
pub fn targets_for_shift(shift: usize) -> Vec<TwoCochain<Rational>> {
    match shift {
        1 => vec![TwoCochain::Gamma1],
        2 => vec![TwoCochain::Gamma2, TwoCochain::Gamma2Tilde],
        3 => vec![TwoCochain::Gamma3],
        _ => Vec::new(),
    }
}

/// Monomial fields of degree `≤ degree` and their unordered pairs of distinct
/// fields, lowest total degree first. `δb` and the targets are antisymmetric,
/// so ordered pairs add no equations.
pub fn monomial_pairs(n: usize, degree: u32) -> Result<(Vec<VectorField>, Vec<(usize, usize)>)> {
    let env = VarEnv::new(n)?;
    let fields: Vec<VectorField> = monomial_fields(&env, degree);
    let deg = |f: &VectorField| {
        f.components()
            .iter()
            .filter_map(Poly::total_degree)
            .max()
            .unwrap_or(0)
    };
    let mut pairs: Vec<(usize, usize)> = (0..fields.len())
        .flat_map(|i| (i + 1..fields.len()).map(move |j| (i, j)))
        .collect();
    pairs.sort_by_key(|&(i, j)| (deg(&fields[i]) + deg(&fields[j]), i, j));
    Ok((fields, pairs))
}

type RowKey = (XiMonomial, XiMonomial, DerivIndex, Monomial);

/// Distinct operators of the basis with their restricted blocks.
struct Operators {
    keys: Vec<OpKey>,
    index: Vec<usize>,
    blocks: Vec<BlockMatrix<Rational>>,
}

impl Operators {
    fn new(basis: &AnsatzBasis) -> Result<Self> {
        let env = VarEnv::new(basis.n)?;
        let mut keys: Vec<OpKey> = basis.entries.iter().map(|e| e.key.clone()).collect();
        keys.sort();
        keys.dedup();
        let index = basis
            .entries
            .iter()
            .map(|e| keys.binary_search(&e.key).expect("key collected above"))
            .collect();
        let blocks = keys
            .iter()
            .map(|key| DiffOp::term(Poly::one(&env), key.clone()).block_matrix(basis.k))
            .collect();
        Ok(Operators {
            keys,
            index,
            blocks,
        })
    }

    /// Blocks of `[L_X, O]` for every distinct operator `O`.
    fn brackets(&self, x: &VectorField, k: usize) -> Vec<BlockMatrix<Rational>> {
        let lx = x.lie_derivative();
        self.keys
            .iter()
            .map(|key| {
                lx.commutator(&DiffOp::term(Poly::one(x.env()), key.clone()))
                    .block_matrix(k)
            })
            .collect()
    }
}

fn accumulate(
    rows: &mut HashMap<RowKey, BTreeMap<usize, Rational>>,
    col: usize,
    f: &Poly,
    block: &BlockMatrix<Rational>,
    sign: i64,
    target_degree: usize,
) {
    if f.is_zero() {
        return;
    }
    for ((e, t, beta), p) in &block.entries {
        if t.len() != target_degree {
            continue;
        }
        let product = f * p;
        for (m, c) in product.terms() {
            let slot = rows
                .entry((*e, *t, beta.clone(), m.clone()))
                .or_default()
                .entry(col)
                .or_insert_with(Rational::zero);
            if sign < 0 {
                *slot -= c;
            } else {
                *slot += c;
            }
        }
    }
}

/// Scalar rows for one pair: columns `0..m` are the basis, `m + q` the value of target `q`.
fn pair_rows(
    basis: &AnsatzBasis,
    ops: &Operators,
    x: &VectorField,
    y: &VectorField,
    bx: &[BlockMatrix<Rational>],
    by: &[BlockMatrix<Rational>],
    targets: &[TwoCochain<Rational>],
) -> Vec<(RowKey, Vec<(usize, Rational)>)> {
    let k = basis.k;
    let l = k + basis.shift;
    let m = basis.len();
    let xy = x.bracket(y);
    let mut rows: HashMap<RowKey, BTreeMap<usize, Rational>> = HashMap::new();
    for (j, entry) in basis.entries.iter().enumerate() {
        let fx = x.component(entry.component).partial_multi(&entry.jet);
        let fy = y.component(entry.component).partial_multi(&entry.jet);
        let fxy = xy.component(entry.component).partial_multi(&entry.jet);
        // δb(X,Y) = (X(f_Y) - Y(f_X) - f_[X,Y])·O + f_Y·[L_X, O] - f_X·[L_Y, O]
        let g = &(&x.apply_to(&fy) - &y.apply_to(&fx)) - &fxy;
        let o = ops.index[j];
        accumulate(&mut rows, j, &g, &ops.blocks[o], 1, l);
        accumulate(&mut rows, j, &fy, &bx[o], 1, l);
        accumulate(&mut rows, j, &fx, &by[o], -1, l);
    }
    for (q, target) in targets.iter().enumerate() {
        let block = target.eval(x, y).block_matrix(k);
        let one = Poly::one(x.env());
        accumulate(&mut rows, m + q, &one, &block, 1, l);
    }
    let mut out: Vec<(RowKey, Vec<(usize, Rational)>)> = rows
        .into_iter()
        .map(|(key, cols)| {
            (
                key,
                cols.into_iter()
                    .filter(|(_, v)| !v.is_zero())
                    .collect::<Vec<_>>(),
            )
        })
        .filter(|(_, cols)| !cols.is_empty())
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn row_label(x: &VectorField, y: &VectorField, k: usize, key: &RowKey) -> String {
    let (e, f, beta, m) = key;
    let mono: Vec<String> =
        m.0.iter()
            .enumerate()
            .filter(|(_, &p)| p > 0)
            .map(|(i, &p)| {
                if p == 1 {
                    format!("x{}", i + 1)
                } else {
                    format!("x{}^{p}", i + 1)
                }
            })
            .collect();
    let mono = if mono.is_empty() {
        "1".to_string()
    } else {
        mono.join("*")
    };
    format!(
        "X = {x}; Y = {y}; on Omega^{k}: xi{e} -> xi{f}, Dx{:?}, coefficient of {mono}",
        beta.as_slice()
    )
}

/// Split a full row at target column `col` into an equation: basis (and earlier
/// target) columns on the left, the value in `col` on the right.
fn equation_at(row: &[(usize, Rational)], col: usize, label: &str) -> Equation {
    Equation {
        coeffs: row.iter().filter(|(c, _)| *c < col).cloned().collect(),
        rhs: row
            .iter()
            .find(|(c, _)| *c == col)
            .map_or_else(Rational::zero, |(_, v)| v.clone()),
        label: label.to_string(),
    }
}

/// State of a streaming probe.
pub struct Probe {
    pub rows: usize,
    pub pairs_used: usize,
    pub target_pivots: Vec<bool>,
    pub certificates: Vec<Option<Certificate>>,
    elim: Eliminator,
}

impl Probe {
    pub fn rank(&self) -> usize {
        self.elim.rank()
    }

    /// One solution of `Σ c_j δb_j = target_0` when no inconsistency was found.
    pub fn solution(&self, m: usize) -> Vec<Rational> {
        self.elim.back_substitute(m)
    }
}

const CHUNK: usize = 16;

/// Stream the rows of all pairs (in order) into one eliminator whose columns are
/// the basis followed by the targets. With `stop_early`, stops once every target
/// column is a pivot.
pub fn probe(
    basis: &AnsatzBasis,
    targets: &[TwoCochain<Rational>],
    fields: &[VectorField],
    pairs: &[(usize, usize)],
    stop_early: bool,
) -> Result<Probe> {
    let m = basis.len();
    let ops = Operators::new(basis)?;
    let mut used = vec![false; fields.len()];
    for &(i, j) in pairs {
        used[i] = true;
        used[j] = true;
    }
    let brackets: Vec<Option<Vec<BlockMatrix<Rational>>>> = fields
        .par_iter()
        .zip(used.par_iter())
        .map(|(f, &u)| u.then(|| ops.brackets(f, basis.k)))
        .collect();
    let mut elim = Eliminator::new(m + targets.len());
    let mut saved: HashMap<usize, (Vec<(usize, Rational)>, Rational, String)> = HashMap::new();
    let mut next_id = 0usize;
    let mut pairs_used = 0;
    let done = |e: &Eliminator| (m..m + targets.len()).all(|c| e.has_pivot(c));
    for chunk in pairs.chunks(CHUNK) {
        if stop_early && !targets.is_empty() && done(&elim) {
            break;
        }
        let computed: Vec<Vec<(RowKey, Vec<(usize, Rational)>)>> = chunk
            .par_iter()
            .map(|&(i, j)| {
                pair_rows(
                    basis,
                    &ops,
                    &fields[i],
                    &fields[j],
                    brackets[i].as_ref().unwrap(),
                    brackets[j].as_ref().unwrap(),
                    targets,
                )
            })
            .collect();
        for (&(i, j), rows) in chunk.iter().zip(computed) {
            if stop_early && !targets.is_empty() && done(&elim) {
                break;
            }
            pairs_used += 1;
            for (key, row) in rows {
                let (int, factor) = integer_row(&row);
                let id = next_id;
                next_id += 1;
                if let Inserted::Pivot(_) = elim.insert(id, int) {
                    let label = row_label(&fields[i], &fields[j], basis.k, &key);
                    saved.insert(id, (row, factor, label));
                }
            }
        }
    }
    let target_pivots: Vec<bool> = (m..m + targets.len()).map(|c| elim.has_pivot(c)).collect();
    let certificates = (0..targets.len())
        .map(|q| {
            let col = m + q;
            elim.has_pivot(col).then(|| {
                crate::linalg::certificate_from(&elim, col, |id| {
                    let (row, factor, label) = &saved[&id];
                    (equation_at(row, col, label), factor.clone())
                })
            })
        })
        .collect();
    Ok(Probe {
        rows: next_id,
        pairs_used,
        target_pivots,
        certificates,
        elim,
    })
}

/// Materialise `δb = target` over the given pairs as a labelled linear system.
pub fn assemble(
    target: &TwoCochain<Rational>,
    basis: &AnsatzBasis,
    fields: &[VectorField],
    pairs: &[(usize, usize)],
) -> Result<LinearSystem> {
    let ops = Operators::new(basis)?;
    let m = basis.len();
    let mut sys = LinearSystem::new(basis.labels());
    let targets = [target.clone()];
    let per_pair: Vec<Vec<Equation>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (x, y) = (&fields[i], &fields[j]);
            let bx = ops.brackets(x, basis.k);
            let by = ops.brackets(y, basis.k);
            pair_rows(basis, &ops, x, y, &bx, &by, &targets)
                .into_iter()
                .map(|(key, row)| equation_at(&row, m, &row_label(x, y, basis.k, &key)))
                .collect()
        })
        .collect();
    for eqs in per_pair {
        sys.rows.extend(eqs);
    }
    Ok(sys)
}

/// `Σ c_j b_j` as a cochain.
pub fn combination(basis: &AnsatzBasis, coeffs: &[Rational]) -> Result<OneCochain<Rational>> {
    let env = VarEnv::new(basis.n)?;
    Ok(OneCochain::Combination(
        basis
            .entries
            .iter()
            .zip(coeffs)
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, c)| (Poly::constant(&env, c.clone()), e.to_cochain()))
            .collect(),
    ))
}

/// `δb(X, Y)` and `target(X, Y)` agree on `Ω^k → Ω^{k+shift}`.
pub fn agrees_on_block(
    b: &OneCochain<Rational>,
    target: &TwoCochain<Rational>,
    k: usize,
    shift: usize,
    x: &VectorField,
    y: &VectorField,
) -> bool {
    let lhs = crate::cocycles::ce_delta1(b, x, y)
        .block_matrix(k)
        .target_degree(k + shift);
    let rhs = target.eval(x, y).block_matrix(k).target_degree(k + shift);
    lhs == rhs
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CellStatus {
    #[serde(rename = "NOT-A-COBOUNDARY")]
    NotACoboundary,
    #[serde(rename = "COBOUNDARY-FOUND")]
    CoboundaryFound,
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellStatus::NotACoboundary => write!(f, "NOT-A-COBOUNDARY"),
            CellStatus::CoboundaryFound => write!(f, "COBOUNDARY-FOUND"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CellVerdict {
    pub n: usize,
    pub k: usize,
    pub shift: usize,
    pub target: String,
    pub bounds: Bounds,
    pub basis_size: usize,
    pub pairs_available: usize,
    pub pairs_used: usize,
    pub rows_used: usize,
    pub rank: usize,
    pub status: CellStatus,
    pub certificate: Option<Certificate>,
    pub certificate_checked: bool,
}

/// Decide whether `target` restricted to the cell is `δb` for some ansatz `b`.
pub fn probe_cell(
    n: usize,
    k: usize,
    shift: usize,
    target: &TwoCochain<Rational>,
    bounds: Bounds,
) -> Result<CellVerdict> {
    check_cell(n, k, shift)?;
    let basis = enumerate_ansatz(n, k, shift, bounds);
    let (fields, pairs) = monomial_pairs(n, bounds.pair_degree())?;
    cell_verdict(&basis, target, &fields, &pairs)
}

pub fn cell_verdict(
    basis: &AnsatzBasis,
    target: &TwoCochain<Rational>,
    fields: &[VectorField],
    pairs: &[(usize, usize)],
) -> Result<CellVerdict> {
    let p = probe(basis, std::slice::from_ref(target), fields, pairs, true)?;
    let certificate = p.certificates[0].clone();
    let certificate_checked = certificate.as_ref().is_some_and(Certificate::is_valid);
    Ok(CellVerdict {
        n: basis.n,
        k: basis.k,
        shift: basis.shift,
        target: format!("{target}^{}", basis.k),
        bounds: basis.bounds,
        basis_size: basis.len(),
        pairs_available: pairs.len(),
        pairs_used: p.pairs_used,
        rows_used: p.rows,
        rank: p.rank(),
        status: if p.target_pivots[0] {
            CellStatus::NotACoboundary
        } else {
            CellStatus::CoboundaryFound
        },
        certificate,
        certificate_checked,
    })
}

/// Shift-2 independence modulo coboundaries: `c·γ_2 + c̃·γ̃_2 = δb` forces `c = c̃ = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct IndependenceVerdict {
    pub n: usize,
    pub k: usize,
    pub bounds: Bounds,
    pub pairs_used: usize,
    pub independent: bool,
    /// Kills the basis and is nonzero on `γ_2`.
    pub first: Option<Certificate>,
    /// Kills the basis and `γ_2` and is nonzero on `γ̃_2`.
    pub second: Option<Certificate>,
    pub certificates_checked: bool,
}

pub fn shift2_independence(n: usize, k: usize, bounds: Bounds) -> Result<IndependenceVerdict> {
    check_cell(n, k, 2)?;
    let basis = enumerate_ansatz(n, k, 2, bounds);
    let (fields, pairs) = monomial_pairs(n, bounds.pair_degree())?;
    let p = probe(&basis, &targets_for_shift(2), &fields, &pairs, true)?;
    let independent = p.target_pivots.iter().all(|&b| b);
    let first = p.certificates[0].clone();
    let second = p.certificates[1].clone();
    let certificates_checked = independent
        && first.as_ref().is_some_and(Certificate::is_valid)
        && second.as_ref().is_some_and(Certificate::is_valid);
    Ok(IndependenceVerdict {
        n,
        k,
        bounds,
        pairs_used: p.pairs_used,
        independent,
        first,
        second,
        certificates_checked,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NontrivialityReport {
    pub n: usize,
    pub bounds: Bounds,
    pub cells: Vec<CellVerdict>,
    pub independence: Vec<IndependenceVerdict>,
}

impl NontrivialityReport {
    pub fn all_nontrivial(&self) -> bool {
        self.cells
            .iter()
            .all(|c| c.status == CellStatus::NotACoboundary && c.certificate_checked)
            && self
                .independence
                .iter()
                .all(|v| v.independent && v.certificates_checked)
    }
}

/// Every obstruction cocycle of every valid cell, plus shift-2 independence.
pub fn nontriviality_report(n: usize, bounds: Bounds) -> Result<NontrivialityReport> {
    let mut cells = Vec::new();
    let mut independence = Vec::new();
    for (k, shift) in valid_cells(n) {
        for target in targets_for_shift(shift) {
            cells.push(probe_cell(n, k, shift, &target, bounds)?);
        }
        if shift == 2 {
            independence.push(shift2_independence(n, k, bounds)?);
        }
    }
    Ok(NontrivialityReport {
        n,
        bounds,
        cells,
        independence,
    })
}

/// The monomial pair family moved to be centred at `c`: fields `X(x - c)`.
pub fn translate_fields(fields: &[VectorField], c: &[Rational]) -> Result<Vec<VectorField>> {
    fields.iter().map(|f| f.translate(c)).collect()
}

/// Jet multi-index of length `n` from a list of exponents.
pub fn jet(exps: &[u16]) -> DerivIndex {
    SmallVec::from_slice(exps)
}
