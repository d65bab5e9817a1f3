//! First-order deformations `𝓛_X = L_X + Σ t·C(X)` of the Lie derivative, their
//! homomorphism defect, the quadratic integrability relations and the
//! blockwise decomposition of the defect along the obstruction cocycles.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cocycles::{self, OneCochain};
use crate::error::{Error, Result};
use crate::exterior::{DerivIndex, XiMonomial};
use crate::liecalc::{monomial_fields, random_field};
use crate::linalg::{LinearSystem, Verdict};
use crate::poly::VarEnv;
use crate::scalar::Rational;
use crate::{DiffOp, Poly, VectorField};

/// Coefficients `t_0^k, t_1^k, t̃_1^k, t_2^k` of a first-order deformation.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamAssignment {
    env: Arc<VarEnv>,
    pub t0: Vec<Poly>,
    pub t1: Vec<Poly>,
    pub t1_tilde: Vec<Poly>,
    pub t2: Vec<Poly>,
}

/// Family names as they appear in parameter documents.
pub const FAMILIES: [&str; 4] = ["t0", "t1", "t1tilde", "t2"];

fn family_len(n: usize, family: usize) -> usize {
    match family {
        0 => n + 1,
        1 | 2 => n,
        _ => n - 1,
    }
}

impl ParamAssignment {
    pub fn new(
        env: &Arc<VarEnv>,
        t0: Vec<Poly>,
        t1: Vec<Poly>,
        t1_tilde: Vec<Poly>,
        t2: Vec<Poly>,
    ) -> Result<Self> {
        let n = env.n();
        for (f, v) in [&t0, &t1, &t1_tilde, &t2].into_iter().enumerate() {
            if v.len() != family_len(n, f) {
                return Err(Error::Arity {
                    what: format!("parameter family {}", FAMILIES[f]),
                    expected: family_len(n, f),
                    found: v.len(),
                });
            }
            for (k, p) in v.iter().enumerate() {
                if !crate::poly::same_env(p.env(), env) {
                    return Err(Error::EnvMismatch);
                }
                if p.has_spatial() {
                    return Err(Error::SpatialParameter(format!(
                        "{}[{k}] = {p}",
                        FAMILIES[f]
                    )));
                }
            }
        }
        Ok(ParamAssignment {
            env: env.clone(),
            t0,
            t1,
            t1_tilde,
            t2,
        })
    }

    pub fn zero(env: &Arc<VarEnv>) -> Self {
        let n = env.n();
        let z = |len| vec![Poly::zero(env); len];
        ParamAssignment {
            env: env.clone(),
            t0: z(n + 1),
            t1: z(n),
            t1_tilde: z(n),
            t2: z(n - 1),
        }
    }

    /// Names of the fully symbolic parameters, in family order: `t0_0..t0_n, t1_0.., t1t_0.., t2_0..`.
    pub fn symbolic_names(n: usize) -> Vec<String> {
        let prefixes = ["t0", "t1", "t1t", "t2"];
        (0..4)
            .flat_map(|f| (0..family_len(n, f)).map(move |k| format!("{}_{k}", prefixes[f])))
            .collect()
    }

    /// Every entry an independent parameter (`4n` of them).
    pub fn symbolic(n: usize) -> Result<Self> {
        let names = Self::symbolic_names(n);
        let env = VarEnv::with_params(n, &names)?;
        let mut vars = names.iter().map(|s| Poly::var(&env, s));
        let mut take = |len| {
            (0..len)
                .map(|_| vars.next().unwrap())
                .collect::<Result<Vec<_>>>()
        };
        let t0 = take(n + 1)?;
        let t1 = take(n)?;
        let t1_tilde = take(n)?;
        let t2 = take(n - 1)?;
        Self::new(&env, t0, t1, t1_tilde, t2)
    }

    /// `t_0^k = α_0, t_1^k = α_1, t̃_1^k = α̃_1, t_2^k = α_2` for every `k`.
    pub fn uniform(env: &Arc<VarEnv>, alpha: [&Poly; 4]) -> Result<Self> {
        let n = env.n();
        Self::new(
            env,
            vec![alpha[0].clone(); n + 1],
            vec![alpha[1].clone(); n],
            vec![alpha[2].clone(); n],
            vec![alpha[3].clone(); n - 1],
        )
    }

    pub fn env(&self) -> &Arc<VarEnv> {
        &self.env
    }

    pub fn n(&self) -> usize {
        self.env.n()
    }

    /// Total number of entries, `4n`.
    pub fn arity(&self) -> usize {
        self.t0.len() + self.t1.len() + self.t1_tilde.len() + self.t2.len()
    }

    pub fn families(&self) -> [&[Poly]; 4] {
        [&self.t0, &self.t1, &self.t1_tilde, &self.t2]
    }

    pub fn is_zero(&self) -> bool {
        self.families().iter().all(|f| f.iter().all(Poly::is_zero))
    }

    /// Every entry is a linear form in the parameters (no constants, no higher terms).
    pub fn is_linear_homogeneous(&self) -> bool {
        self.families()
            .iter()
            .all(|f| f.iter().all(|p| p.terms().all(|(m, _)| m.degree() == 1)))
    }

    pub fn substitute(&self, bindings: &BTreeMap<String, Poly>, env: &Arc<VarEnv>) -> Result<Self> {
        let sub = |v: &[Poly]| -> Result<Vec<Poly>> {
            v.iter()
                .map(|p| p.embed(env)?.substitute(bindings))
                .collect()
        };
        Self::new(
            env,
            sub(&self.t0)?,
            sub(&self.t1)?,
            sub(&self.t1_tilde)?,
            sub(&self.t2)?,
        )
    }
}

impl fmt::Display for ParamAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, family) in self.families().iter().enumerate() {
            let parts: Vec<String> = family.iter().map(|p| p.to_string()).collect();
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{} = ({})", FAMILIES[i], parts.join(", "))?;
        }
        Ok(())
    }
}

/// `L^{(1)} = Σ t_0^k C_0^k + Σ (t_1^k C_1^k + t̃_1^k C̃_1^k) + Σ t_2^k C_2^k`.
pub fn build_l1(t: &ParamAssignment) -> OneCochain<Rational> {
    let bases = [
        OneCochain::C0,
        OneCochain::C1,
        OneCochain::C1Tilde,
        OneCochain::C2,
    ];
    let mut terms = Vec::new();
    for (family, base) in t.families().iter().zip(bases) {
        for (k, p) in family.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let restricted = base.restrict(t.n(), k).expect("k <= n by construction");
            terms.push((p.clone(), restricted));
        }
    }
    OneCochain::Combination(terms)
}

fn field_in(x: &VectorField, env: &Arc<VarEnv>) -> Result<VectorField> {
    if x.n() != env.n() {
        return Err(Error::Dimension(x.n()));
    }
    x.embed(env)
}

/// `L^{(1)}_X`, evaluating each divergence cocycle once.
fn first_order(x: &VectorField, t: &ParamAssignment) -> DiffOp {
    let env = t.env();
    let mut out = DiffOp::zero(env);
    if t.is_zero() {
        return out;
    }
    let bases = [
        DiffOp::mult(&x.divergence()),
        cocycles::c1(x),
        cocycles::c1_tilde(x),
        cocycles::c2(x),
    ];
    for (family, base) in t.families().iter().zip(&bases) {
        if base.is_zero() {
            continue;
        }
        for (k, p) in family.iter().enumerate() {
            if !p.is_zero() {
                out.add_mul_poly(&base.compose(&DiffOp::projector(env, k)), p);
            }
        }
    }
    out
}

/// `𝓛_X = L_X + L^{(1)}_X`, in the environment of `t`.
pub fn deformed_action(x: &VectorField, t: &ParamAssignment) -> Result<DiffOp> {
    let x = field_in(x, t.env())?;
    Ok(&x.lie_derivative() + &first_order(&x, t))
}

/// `[𝓛_X, 𝓛_Y] - 𝓛_{[X,Y]}`.
pub fn defect(x: &VectorField, y: &VectorField, t: &ParamAssignment) -> Result<DiffOp> {
    let lx = deformed_action(x, t)?;
    let ly = deformed_action(y, t)?;
    let lxy = deformed_action(&x.bracket(y), t)?;
    let out = &lx.commutator(&ly) - &lxy;
    debug_assert!(
        !t.is_linear_homogeneous() || is_quadratic(&out),
        "defect is not quadratic"
    );
    Ok(out)
}

/// Every coefficient term has parameter degree exactly 2.
pub fn is_quadratic(op: &DiffOp) -> bool {
    let n = op.env().n();
    op.terms().all(|(_, p)| {
        p.terms()
            .all(|(m, _)| m.0[n..].iter().map(|&e| e as u32).sum::<u32>() == 2)
    })
}

/// The `4n - 4` integrability relations.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationSet {
    pub r1: Vec<Poly>,
    pub r2: Vec<Poly>,
    pub r2_tilde: Vec<Poly>,
    pub r3: Vec<Poly>,
}

/// Relation names, matched with the cocycles `γ_1, γ_2, γ̃_2, γ_3`.
pub const RELATION_NAMES: [&str; 4] = ["R1", "R2", "R2~", "R3"];

impl RelationSet {
    pub fn len(&self) -> usize {
        self.r1.len() + self.r2.len() + self.r2_tilde.len() + self.r3.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(name, k, R^k)` in family order.
    pub fn iter(&self) -> impl Iterator<Item = (&'static str, usize, &Poly)> {
        [&self.r1, &self.r2, &self.r2_tilde, &self.r3]
            .into_iter()
            .zip(RELATION_NAMES)
            .flat_map(|(v, name)| v.iter().enumerate().map(move |(k, p)| (name, k, p)))
    }

    pub fn all_zero(&self) -> bool {
        self.iter().all(|(_, _, p)| p.is_zero())
    }

    /// The relations attached to the `(k, shift)` block, ordered like [`gamma_basis`].
    pub fn block(&self, k: usize, shift: usize) -> Vec<Poly> {
        match shift {
            1 => vec![self.r1[k].clone()],
            2 => vec![self.r2[k].clone(), self.r2_tilde[k].clone()],
            3 => vec![self.r3[k].clone()],
            _ => Vec::new(),
        }
    }
}

pub fn relations(t: &ParamAssignment) -> RelationSet {
    let n = t.n();
    let (t0, t1, tt, t2) = (&t.t0, &t.t1, &t.t1_tilde, &t.t2);
    RelationSet {
        r1: (0..n)
            .map(|k| &(&t0[k] * &tt[k]) + &(&t0[k + 1] * &t1[k]))
            .collect(),
        r2: (0..n - 1)
            .map(|k| &(&t0[k] * &t2[k]) + &(&t1[k + 1] * &t1[k]))
            .collect(),
        r2_tilde: (0..n - 1)
            .map(|k| &(&t0[k + 2] * &t2[k]) + &(&tt[k + 1] * &tt[k]))
            .collect(),
        r3: (0..n.saturating_sub(2))
            .map(|k| &(&t1[k + 2] * &t2[k]) + &(&tt[k] * &t2[k + 1]))
            .collect(),
    }
}

/// Names of the obstruction cocycles spanning the shift-`shift` blocks.
pub fn gamma_basis(shift: usize) -> &'static [&'static str] {
    match shift {
        1 => &["gamma1"],
        2 => &["gamma2", "gamma2~"],
        3 => &["gamma3"],
        _ => &[],
    }
}

fn gamma_ops(x: &VectorField, y: &VectorField, shift: usize) -> Vec<DiffOp> {
    match shift {
        1 => vec![cocycles::gamma1(x, y)],
        2 => vec![cocycles::gamma2(x, y), cocycles::gamma2_tilde(x, y)],
        3 => vec![cocycles::gamma3(x, y)],
        _ => Vec::new(),
    }
}

type RowKey = (XiMonomial, XiMonomial, DerivIndex, DerivIndex);

/// Scalar rows of the `Ω^k → Ω^{k+shift}` block: one per (source, target, `∂x^β`, x-monomial).
fn block_rows(op: &DiffOp, k: usize, shift: usize) -> BTreeMap<RowKey, Poly> {
    let mut out = BTreeMap::new();
    for ((e, f, beta), p) in op.block_matrix(k).target_degree(k + shift).entries {
        for (m, c) in p.split_spatial() {
            out.insert((e, f, beta.clone(), m), c);
        }
    }
    out
}

/// Coefficients of one `(k, shift)` block of the defect.
#[derive(Clone, Debug)]
pub struct BlockCoefficients {
    pub k: usize,
    pub shift: usize,
    /// `None` when the γ's restricted to this block are dependent for the pair.
    pub coefficients: Option<Vec<Poly>>,
}

#[derive(Clone, Debug)]
pub struct Mc2Decomposition {
    pub blocks: Vec<BlockCoefficients>,
    pub residual: DiffOp,
}

impl Mc2Decomposition {
    pub fn is_degenerate(&self) -> bool {
        self.blocks.iter().any(|b| b.coefficients.is_none())
    }

    pub fn is_exact(&self) -> bool {
        self.residual.is_zero()
    }

    pub fn block(&self, k: usize, shift: usize) -> Option<&BlockCoefficients> {
        self.blocks.iter().find(|b| b.k == k && b.shift == shift)
    }
}

/// Pick rows making the γ columns independent and solve for the coefficients.
fn solve_block(rows: &[(Vec<Rational>, Poly)], m: usize) -> Option<Vec<Poly>> {
    use num_traits::Zero;
    let first = rows
        .iter()
        .position(|(g, _)| g.iter().any(|v| !v.is_zero()))?;
    let (g1, d1) = &rows[first];
    if m == 1 {
        return Some(vec![d1.scale(&(Rational::from_integer(1.into()) / &g1[0]))]);
    }
    for (g2, d2) in &rows[first + 1..] {
        let det = &g1[0] * &g2[1] - &g1[1] * &g2[0];
        if det.is_zero() {
            continue;
        }
        let inv = Rational::from_integer(1.into()) / det;
        let c0 = &d1.scale(&g2[1]) - &d2.scale(&g1[1]);
        let c1 = &d2.scale(&g1[0]) - &d1.scale(&g2[0]);
        return Some(vec![c0.scale(&inv), c1.scale(&inv)]);
    }
    None
}

/// Express the defect blockwise in the span of the obstruction cocycles.
pub fn mc2_decompose(
    x: &VectorField,
    y: &VectorField,
    t: &ParamAssignment,
) -> Result<Mc2Decomposition> {
    let env = t.env();
    let x = field_in(x, env)?;
    let y = field_in(y, env)?;
    let d = defect(&x, &y, t)?;
    let n = t.n();
    let mut residual = d.clone();
    let mut blocks = Vec::new();
    for shift in 1..=3usize {
        if shift > n {
            continue;
        }
        let gammas = gamma_ops(&x, &y, shift);
        for k in cocycles::degree_range(n, shift) {
            let target = block_rows(&d, k, shift);
            let columns: Vec<BTreeMap<RowKey, Poly>> =
                gammas.iter().map(|g| block_rows(g, k, shift)).collect();
            let mut keys: Vec<&RowKey> = target.keys().collect();
            for c in &columns {
                keys.extend(c.keys());
            }
            keys.sort();
            keys.dedup();
            let zero = Poly::zero(env);
            let rows: Vec<(Vec<Rational>, Poly)> = keys
                .iter()
                .map(|key| {
                    let g = columns
                        .iter()
                        .map(|c| {
                            c.get(*key).map_or_else(
                                || Rational::from_integer(0.into()),
                                Poly::constant_term,
                            )
                        })
                        .collect();
                    (g, target.get(*key).unwrap_or(&zero).clone())
                })
                .collect();
            let coefficients = solve_block(&rows, gammas.len());
            if let Some(cs) = &coefficients {
                let projector = DiffOp::projector(env, k);
                for (c, g) in cs.iter().zip(&gammas) {
                    residual.add_mul_poly(&g.shift_part(shift as i64).compose(&projector), &-c);
                }
            }
            blocks.push(BlockCoefficients {
                k,
                shift,
                coefficients,
            });
        }
    }
    Ok(Mc2Decomposition { blocks, residual })
}

/// Rational matrix `M` with `coefficient_i = Σ_r M[i][r]·R_r`, per block.
pub type SignTable = BTreeMap<(usize, usize), Vec<Vec<Rational>>>;

/// Write `target` as a rational combination of `basis`, if possible.
pub fn rational_combination(target: &Poly, basis: &[Poly]) -> Option<Vec<Rational>> {
    let mut rows: BTreeMap<crate::poly::Monomial, Vec<(usize, Rational)>> = BTreeMap::new();
    for (j, b) in basis.iter().enumerate() {
        for (m, c) in b.terms() {
            rows.entry(m.clone()).or_default().push((j, c.clone()));
        }
    }
    for (m, _) in target.terms() {
        rows.entry(m.clone()).or_default();
    }
    let mut sys = LinearSystem::new((0..basis.len()).map(|j| format!("m{j}")).collect());
    for (m, coeffs) in rows {
        let rhs = target.coeff(&m);
        sys.push(coeffs, rhs, format!("{m:?}"));
    }
    match sys.solve() {
        Verdict::Consistent { solution, .. } => Some(solution),
        Verdict::Inconsistent { .. } => None,
    }
}

/// Identify every block coefficient as a combination of that block's relations.
/// Blocks that are degenerate or not expressible are left out of the table and
/// listed in the second component.
pub fn identify(dec: &Mc2Decomposition, rel: &RelationSet) -> (SignTable, Vec<(usize, usize)>) {
    let mut table = SignTable::new();
    let mut unidentified = Vec::new();
    for b in &dec.blocks {
        let basis = rel.block(b.k, b.shift);
        let row = b.coefficients.as_ref().and_then(|cs| {
            cs.iter()
                .map(|c| rational_combination(c, &basis))
                .collect::<Option<Vec<_>>>()
        });
        match row {
            Some(m) => {
                table.insert((b.k, b.shift), m);
            }
            None => unidentified.push((b.k, b.shift)),
        }
    }
    (table, unidentified)
}

/// Fields used to test sufficiency: all monomial pairs up to a degree plus seeded random pairs.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct TestFamily {
    pub max_degree: u32,
    pub random_pairs: usize,
    pub random_degree: u32,
    pub seed: u64,
}

impl Default for TestFamily {
    fn default() -> Self {
        TestFamily {
            max_degree: 3,
            random_pairs: 20,
            random_degree: 4,
            seed: 0,
        }
    }
}

impl TestFamily {
    /// Unordered pairs of distinct monomial fields, then the random pairs.
    pub fn pairs(&self, n: usize) -> Result<Vec<(VectorField, VectorField)>> {
        let env = VarEnv::new(n)?;
        let fields: Vec<VectorField> = monomial_fields(&env, self.max_degree);
        let mut out = Vec::new();
        for (i, x) in fields.iter().enumerate() {
            for y in &fields[i + 1..] {
                out.push((x.clone(), y.clone()));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..self.random_pairs {
            let x = random_field(&env, &mut rng, self.random_degree, 3);
            let y = random_field(&env, &mut rng, self.random_degree, 3);
            out.push((x, y));
        }
        Ok(out)
    }
}

/// Outcome of a defect sweep; failures carry the offending pair.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyVerdict {
    pub pairs_checked: usize,
    pub failures: Vec<(String, String)>,
}

impl FamilyVerdict {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Check `defect ≡ 0` on every pair of the family.
pub fn defect_on_family(t: &ParamAssignment, family: &TestFamily) -> Result<FamilyVerdict> {
    let pairs = family.pairs(t.n())?;
    let env = t.env();
    // 𝓛 of every distinct field is computed once.
    let mut fields: Vec<VectorField> = Vec::new();
    let index =
        |f: &VectorField, fields: &mut Vec<VectorField>| match fields.iter().position(|g| g == f) {
            Some(i) => i,
            None => {
                fields.push(f.clone());
                fields.len() - 1
            }
        };
    let pair_ids: Vec<(usize, usize)> = pairs
        .iter()
        .map(|(x, y)| (index(x, &mut fields), index(y, &mut fields)))
        .collect();
    let embedded: Vec<VectorField> = fields
        .iter()
        .map(|f| field_in(f, env))
        .collect::<Result<_>>()?;
    let actions: Vec<DiffOp> = embedded
        .par_iter()
        .map(|f| &f.lie_derivative() + &first_order(f, t))
        .collect();
    let failures: Vec<(String, String)> = pair_ids
        .par_iter()
        .filter_map(|&(i, j)| {
            let bracket = embedded[i].bracket(&embedded[j]);
            let lb = &bracket.lie_derivative() + &first_order(&bracket, t);
            let d = &actions[i].commutator(&actions[j]) - &lb;
            (!d.is_zero()).then(|| (fields[i].to_string(), fields[j].to_string()))
        })
        .collect();
    Ok(FamilyVerdict {
        pairs_checked: pairs.len(),
        failures,
    })
}

/// A named assignment with its verification verdicts.
#[derive(Clone, Debug)]
pub struct GalleryEntry {
    pub name: String,
    pub assignment: ParamAssignment,
    pub relations_vanish: bool,
    pub family: FamilyVerdict,
}

impl GalleryEntry {
    pub fn pass(&self) -> bool {
        self.relations_vanish && self.family.pass()
    }
}

/// `L_X + t C_0(X)`: tensor densities of degree `t`.
pub fn densities(n: usize) -> Result<ParamAssignment> {
    let env = VarEnv::with_params(n, &["t"])?;
    let t = Poly::var(&env, "t")?;
    let z = Poly::zero(&env);
    ParamAssignment::uniform(&env, [&t, &z, &z, &z])
}

/// `L_X + t C_2(X)`.
pub fn second_order(n: usize) -> Result<ParamAssignment> {
    let env = VarEnv::with_params(n, &["t"])?;
    let t = Poly::var(&env, "t")?;
    let z = Poly::zero(&env);
    ParamAssignment::uniform(&env, [&z, &z, &z, &t])
}

/// The three-parameter planar family
/// `t_0^2 (C_0^2 - C̃_1^0) + t_1^0 C_1^0 + t̃_1^1 (C̃_1^1 + C_2^0)`.
pub fn planar_three_parameter() -> Result<ParamAssignment> {
    let env = VarEnv::with_params(2, &["t0_2", "t1_0", "t1t_1"])?;
    let a = Poly::var(&env, "t0_2")?;
    let b = Poly::var(&env, "t1_0")?;
    let c = Poly::var(&env, "t1t_1")?;
    let z = Poly::zero(&env);
    ParamAssignment::new(
        &env,
        vec![z.clone(), z.clone(), a.clone()],
        vec![b, z.clone()],
        vec![-&a, c.clone()],
        vec![c],
    )
}

/// The uniform family `t·(C_0 + a C_1 - a C̃_1 - a² C_2)`.
pub fn uniform_extra(n: usize) -> Result<ParamAssignment> {
    let env = VarEnv::with_params(n, &["t", "a"])?;
    let t = Poly::var(&env, "t")?;
    let a = Poly::var(&env, "a")?;
    let at = &a * &t;
    ParamAssignment::uniform(&env, [&t, &at, &-&at, &-&(&at * &a)])
}

/// Names accepted by [`gallery_entry`].
pub const GALLERY: [&str; 4] = ["densities", "second-order", "planar", "uniform-extra"];

/// Maps the numeric example ids `6.1`, `6.2`, `6.4` onto gallery names.
pub fn gallery_name(which: &str) -> Option<&'static str> {
    match which {
        "6.1" => Some(GALLERY[0]),
        "6.2" => Some(GALLERY[1]),
        "6.4" => Some(GALLERY[2]),
        w => GALLERY.iter().copied().find(|g| *g == w),
    }
}

pub fn gallery_entry(which: &str, n: usize, family: &TestFamily) -> Result<GalleryEntry> {
    let which = gallery_name(which).ok_or_else(|| Error::UnknownVariable(which.to_string()))?;
    let (name, assignment) = match which {
        "densities" => ("densities", densities(n)?),
        "second-order" => ("second-order", second_order(n)?),
        "planar" => {
            if n != 2 {
                return Err(Error::Dimension(n));
            }
            ("planar", planar_three_parameter()?)
        }
        "uniform-extra" => ("uniform (1, a, -a, -a^2)", uniform_extra(n)?),
        other => return Err(Error::UnknownVariable(other.to_string())),
    };
    let relations_vanish = relations(&assignment).all_zero();
    let family = defect_on_family(&assignment, family)?;
    Ok(GalleryEntry {
        name: format!("{name}, n = {n}"),
        assignment,
        relations_vanish,
        family,
    })
}

/// Every gallery entry for each `n`; the planar family only for `n = 2`.
pub fn example_gallery(ns: &[usize], family: &TestFamily) -> Result<Vec<GalleryEntry>> {
    let mut out = Vec::new();
    for &n in ns {
        for which in GALLERY {
            if which == "planar" && n != 2 {
                continue;
            }
            out.push(gallery_entry(which, n, family)?);
        }
    }
    Ok(out)
}

/// The reduced uniform system: `R(α t) = t² R(α)`, one polynomial per distinct relation.
pub fn uniform_system(n: usize) -> Result<(Arc<VarEnv>, Vec<Poly>)> {
    let env = VarEnv::with_params(n, &["a0", "a1", "a1t", "a2"])?;
    let alpha: Vec<Poly> = ["a0", "a1", "a1t", "a2"]
        .iter()
        .map(|s| Poly::var(&env, s))
        .collect::<Result<_>>()?;
    let t = ParamAssignment::uniform(&env, [&alpha[0], &alpha[1], &alpha[2], &alpha[3]])?;
    let mut system: Vec<Poly> = Vec::new();
    for (_, _, p) in relations(&t).iter() {
        if !system.contains(p) {
            system.push(p.clone());
        }
    }
    Ok((env, system))
}

/// One branch of the uniform solution set, normalised so the first nonzero
/// `α` is 1 (the scale is absorbed into `t`).
#[derive(Clone, Debug, Serialize)]
pub struct UniformComponent {
    pub label: String,
    /// `(α_0, α_1, α̃_1, α_2)` as polynomials in the formal parameter `a`.
    pub alpha: [String; 4],
    pub example: Option<String>,
    pub discrepancy: bool,
    /// The reduced system vanishes identically on the component.
    pub verified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformSolution {
    pub n: usize,
    pub r3_present: bool,
    pub system: Vec<String>,
    pub branches: Vec<String>,
    pub components: Vec<UniformComponent>,
}

/// Case analysis of the uniform system
/// `{α_0(α_1+α̃_1), α_0α_2+α_1², α_0α_2+α̃_1², α_2(α_1+α̃_1)}`.
pub fn solve_uniform(n: usize) -> Result<UniformSolution> {
    let (_, system) = uniform_system(n)?;
    let r3_present = n >= 3;
    let branches = vec![
        "a1 + a1t != 0: R1 forces a0 = 0, and R3 (or, without R3, R2 and R2~ with a0 = 0) forces a2 = 0; then a1^2 = a1t^2 = 0, contradicting a1 + a1t != 0. Empty.".to_string(),
        "a1t = -a1, a0 != 0: normalise a0 = 1; R2 gives a2 = -a1^2 and R2~ agrees. Component (1, a, -a, -a^2).".to_string(),
        "a1t = -a1, a0 = 0, a2 != 0: R2 gives a1^2 = 0. Component (0, 0, 0, 1).".to_string(),
        "a1t = -a1, a0 = 0, a2 = 0: a1^2 = 0, the trivial deformation.".to_string(),
    ];
    let aenv = VarEnv::with_params(n, &["a"])?;
    let a = Poly::var(&aenv, "a")?;
    let one = Poly::one(&aenv);
    let zero = Poly::zero(&aenv);
    let candidates: Vec<(&str, [Poly; 4], Option<&str>, bool)> = vec![
        (
            "a0 = 1, a1 = a1t = a2 = 0",
            [one.clone(), zero.clone(), zero.clone(), zero.clone()],
            Some("densities"),
            false,
        ),
        (
            "a2 = 1, a0 = a1 = a1t = 0",
            [zero.clone(), zero.clone(), zero.clone(), one.clone()],
            Some("second-order"),
            false,
        ),
        (
            "a0 = 1, a1 = a, a1t = -a, a2 = -a^2 (a != 0); not covered by the two examples",
            [one.clone(), a.clone(), -&a, -&(&a * &a)],
            None,
            true,
        ),
    ];
    let joint = VarEnv::with_params(n, &["a0", "a1", "a1t", "a2", "a"])?;
    let system_joint = system
        .iter()
        .map(|p| p.embed(&joint))
        .collect::<Result<Vec<_>>>()?;
    let mut components = Vec::new();
    for (label, alpha, example, discrepancy) in candidates {
        let mut bindings = BTreeMap::new();
        for (name, v) in ["a0", "a1", "a1t", "a2"].iter().zip(&alpha) {
            bindings.insert(name.to_string(), v.embed(&joint)?);
        }
        let verified = system_joint
            .iter()
            .map(|p| p.substitute(&bindings))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .all(Poly::is_zero);
        components.push(UniformComponent {
            label: label.to_string(),
            alpha: alpha.map(|p| p.to_string()),
            example: example.map(str::to_string),
            discrepancy,
            verified,
        });
    }
    Ok(UniformSolution {
        n,
        r3_present,
        system: system.iter().map(|p| p.to_string()).collect(),
        branches,
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn sample_pair(n: usize) -> (VectorField, VectorField) {
        let env = VarEnv::new(n).unwrap();
        let x1 = Poly::x(&env, 0);
        let x2 = Poly::x(&env, 1);
        let mut xs = vec![Poly::zero(&env); n];
        let mut ys = vec![Poly::zero(&env); n];
        xs[0] = &x1 * &x1;
        ys[1] = &x2 * &x2;
        (VectorField::new(xs).unwrap(), VectorField::new(ys).unwrap())
    }

    #[test]
    fn arities() {
        for n in 2..=6 {
            let t = ParamAssignment::symbolic(n).unwrap();
            assert_eq!(t.arity(), 4 * n);
            assert_eq!(relations(&t).len(), 4 * n - 4);
        }
    }

    #[test]
    fn wrong_length_rejected() {
        let env = VarEnv::new(2).unwrap();
        let z = Poly::zero(&env);
        let err = ParamAssignment::new(
            &env,
            vec![z.clone(); 2],
            vec![z.clone(); 2],
            vec![z.clone(); 2],
            vec![z],
        );
        assert!(matches!(
            err,
            Err(Error::Arity {
                expected: 3,
                found: 2,
                ..
            })
        ));
    }

    #[test]
    fn zero_assignment() {
        let env = VarEnv::new(2).unwrap();
        let t = ParamAssignment::zero(&env);
        assert!(build_l1(&t).eval(&sample_pair(2).0).is_zero());
        assert!(relations(&t).all_zero());
        let (x, y) = sample_pair(2);
        assert_eq!(deformed_action(&x, &t).unwrap(), x.lie_derivative());
        assert!(defect(&x, &y, &t).unwrap().is_zero());
    }

    #[test]
    fn build_l1_matches_direct_evaluation() {
        let t = ParamAssignment::symbolic(2).unwrap();
        let (x, _) = sample_pair(2);
        let xe = x.embed(t.env()).unwrap();
        let direct = &deformed_action(&x, &t).unwrap() - &xe.lie_derivative();
        assert_eq!(build_l1(&t).eval(&xe), direct);
    }

    #[test]
    fn densities_on_functions() {
        let t = densities(2).unwrap();
        let (x, _) = sample_pair(2);
        let xe = x.embed(t.env()).unwrap();
        let f = crate::Form::function(&Poly::x(t.env(), 1) * &Poly::x(t.env(), 0));
        let tv = Poly::var(t.env(), "t").unwrap();
        let expected = &xe.lie_derivative().apply(&f) + &f.mul_poly(&(&tv * &xe.divergence()));
        assert_eq!(deformed_action(&x, &t).unwrap().apply(&f), expected);
    }

    #[test]
    fn planar_three_parameter_relations_vanish() {
        let rel = relations(&planar_three_parameter().unwrap());
        assert_eq!(rel.len(), 4);
        assert!(rel.all_zero());
    }

    #[test]
    fn necessity_witness() {
        let env = VarEnv::new(2).unwrap();
        let mut t = ParamAssignment::zero(&env);
        t.t0[1] = Poly::one(&env);
        t.t1_tilde[1] = Poly::one(&env);
        let rel = relations(&t);
        assert_eq!(rel.r1[1], Poly::one(&env));
        assert!(rel.iter().filter(|(_, _, p)| !p.is_zero()).count() == 1);
        let (x, y) = sample_pair(2);
        let d = defect(&x, &y, &t).unwrap();
        assert!(!d.graded_block(1, 2).unwrap().is_zero());
    }

    #[test]
    fn defect_is_antisymmetric_and_quadratic() {
        let t = ParamAssignment::symbolic(2).unwrap();
        let (x, y) = sample_pair(2);
        let d = defect(&x, &y, &t).unwrap();
        assert!(is_quadratic(&d));
        assert_eq!(d, -&defect(&y, &x, &t).unwrap());
    }

    #[test]
    fn divergence_free_fields_are_undeformed() {
        let t = ParamAssignment::symbolic(2).unwrap();
        let env = VarEnv::new(2).unwrap();
        let x = VectorField::new(vec![Poly::x(&env, 1), Poly::x(&env, 0).scale(&int(-1))]).unwrap();
        let xe = x.embed(t.env()).unwrap();
        assert_eq!(deformed_action(&x, &t).unwrap(), xe.lie_derivative());
    }

    #[test]
    fn mc2_on_zero_assignment() {
        let env = VarEnv::new(2).unwrap();
        let t = ParamAssignment::zero(&env);
        let (x, y) = sample_pair(2);
        let dec = mc2_decompose(&x, &y, &t).unwrap();
        assert!(dec.is_exact());
        for b in &dec.blocks {
            if let Some(cs) = &b.coefficients {
                assert!(cs.iter().all(Poly::is_zero));
            }
        }
    }

    #[test]
    fn mc2_identifies_relations() {
        let t = ParamAssignment::symbolic(2).unwrap();
        let env = VarEnv::new(2).unwrap();
        let x1 = Poly::x(&env, 0);
        let x2 = Poly::x(&env, 1);
        let x = VectorField::new(vec![&(&x1 * &x1) * &x2, &x2 * &x2]).unwrap();
        let y =
            VectorField::new(vec![&(&x2 * &x2) * &x1, &(&x1 * &x1) * &x1 + &(&x2 * &x2)]).unwrap();
        let dec = mc2_decompose(&x, &y, &t).unwrap();
        assert!(!dec.is_degenerate());
        assert!(dec.is_exact(), "residual {}", dec.residual);
        let (table, missing) = identify(&dec, &relations(&t));
        assert!(missing.is_empty());
        assert_eq!(table[&(0, 1)], vec![vec![int(1)]]);
        assert_eq!(table[&(1, 1)], vec![vec![int(1)]]);
        assert_eq!(
            table[&(0, 2)],
            vec![vec![int(-1), int(1)], vec![int(1), int(0)]]
        );
    }

    #[test]
    fn rational_combination_basics() {
        let env = VarEnv::with_params(2, &["p", "q"]).unwrap();
        let p = Poly::var(&env, "p").unwrap();
        let q = Poly::var(&env, "q").unwrap();
        let target = &p.scale(&rat(1, 2)) - &q;
        assert_eq!(
            rational_combination(&target, &[p.clone(), q.clone()]),
            Some(vec![rat(1, 2), int(-1)])
        );
        assert_eq!(rational_combination(&(&p * &q), &[p, q]), None);
    }

    #[test]
    fn uniform_system_shape() {
        let (_, sys) = uniform_system(3).unwrap();
        let printed: Vec<String> = sys.iter().map(|p| p.to_string()).collect();
        assert_eq!(printed.len(), 4, "{printed:?}");
        let (_, sys2) = uniform_system(2).unwrap();
        assert_eq!(sys2.len(), 3);
    }

    #[test]
    fn uniform_components() {
        for n in [2, 3] {
            let sol = solve_uniform(n).unwrap();
            assert!(sol.components.iter().all(|c| c.verified));
            let examples: Vec<_> = sol
                .components
                .iter()
                .filter_map(|c| c.example.clone())
                .collect();
            assert_eq!(examples, vec!["densities", "second-order"]);
            assert_eq!(sol.components.iter().filter(|c| c.discrepancy).count(), 1);
        }
    }

    /// Every rational point of a small grid solving the system lies on a listed component (up to scale).
    #[test]
    fn uniform_case_analysis_is_exhaustive() {
        for n in [2, 3] {
            let (env, sys) = uniform_system(n).unwrap();
            let range = -3..=3i64;
            for a0 in range.clone() {
                for a1 in range.clone() {
                    for a1t in range.clone() {
                        for a2 in range.clone() {
                            let mut vals = vec![int(0); env.len()];
                            let v = [a0, a1, a1t, a2];
                            for (name, x) in ["a0", "a1", "a1t", "a2"].iter().zip(v) {
                                vals[env.index_of(name).unwrap()] = int(x);
                            }
                            if !sys
                                .iter()
                                .all(|p| num_traits::Zero::is_zero(&p.eval(&vals)))
                            {
                                continue;
                            }
                            let on_component = v == [0, 0, 0, 0]
                                || (a0 == 0 && a1 == 0 && a1t == 0)
                                || (a0 != 0 && a1t == -a1 && a2 * a0 == -a1 * a1);
                            assert!(on_component, "{v:?}");
                        }
                    }
                }
            }
        }
    }
}
