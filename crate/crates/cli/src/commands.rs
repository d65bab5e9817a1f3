//! The verification commands. Each returns a [`Report`]; nothing here prints.

use std::collections::BTreeMap;

use formdef::cocycles::{ce_delta1, ce_delta2, degree_range, OneCochain, TwoCochain};
use formdef::deformation::{
    self, defect, gallery_entry, identify, mc2_decompose, relations, solve_uniform, GalleryEntry,
    ParamAssignment, TestFamily, GALLERY, RELATION_NAMES,
};
use formdef::liecalc::{monomial_fields, random_field};
use formdef::obstruction::{self, Bounds, CellStatus};
use formdef::poly::VarEnv;
use formdef::scalar::fmt_rational;
use formdef::{Error, Rational, Result, VectorField};
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::report::{Report, Status};
use crate::syntax::{parse_field, parse_params};

const MAX_LISTED_FAILURES: usize = 5;

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Dimension(n));
    }
    Ok(())
}

#[derive(Serialize)]
struct IdentityResult {
    identity: String,
    checks: usize,
    failures: usize,
    examples: Vec<String>,
}

impl IdentityResult {
    fn new(identity: impl Into<String>, results: Vec<Option<String>>) -> Self {
        let failures: Vec<String> = results.iter().flatten().cloned().collect();
        IdentityResult {
            identity: identity.into(),
            checks: results.len(),
            failures: failures.len(),
            examples: failures.into_iter().take(MAX_LISTED_FAILURES).collect(),
        }
    }
}

/// Monomial fields up to `degree` plus `extra` seeded random fields of the same degree.
fn test_fields(
    n: usize,
    degree: u32,
    extra: usize,
    seed: u64,
) -> Result<(Vec<VectorField>, Vec<VectorField>)> {
    let env = VarEnv::new(n)?;
    let monomials = monomial_fields(&env, degree);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random = (0..extra)
        .map(|_| random_field(&env, &mut rng, degree, 3))
        .collect();
    Ok((monomials, random))
}

fn pairs_of(fields: &[VectorField]) -> Vec<(VectorField, VectorField)> {
    let mut out = Vec::new();
    for (i, x) in fields.iter().enumerate() {
        for y in &fields[i + 1..] {
            out.push((x.clone(), y.clone()));
        }
    }
    out
}

fn triples_of(fields: &[VectorField]) -> Vec<[VectorField; 3]> {
    let mut out = Vec::new();
    for i in 0..fields.len() {
        for j in i + 1..fields.len() {
            for k in j + 1..fields.len() {
                out.push([fields[i].clone(), fields[j].clone(), fields[k].clone()]);
            }
        }
    }
    out
}

fn random_chunks<T: Clone, const N: usize>(random: &[T]) -> Vec<[T; N]> {
    random
        .chunks_exact(N)
        .map(|c| std::array::from_fn(|i| c[i].clone()))
        .collect()
}

/// All 1-cocycles with their graded restrictions over the nontrivial source degrees.
pub fn one_cocycles(n: usize) -> Result<Vec<(String, OneCochain<Rational>)>> {
    let mut out = Vec::new();
    for (c, shift) in [
        (OneCochain::C0, 0usize),
        (OneCochain::C1, 1),
        (OneCochain::C1Tilde, 1),
        (OneCochain::C2, 2),
    ] {
        out.push((c.to_string(), c.clone()));
        for k in degree_range(n, shift) {
            let r = c.restrict(n, k)?;
            out.push((r.to_string(), r));
        }
    }
    Ok(out)
}

pub fn two_cocycles(n: usize) -> Vec<TwoCochain<Rational>> {
    let mut out = vec![
        TwoCochain::Gamma1,
        TwoCochain::Gamma2,
        TwoCochain::Gamma2Tilde,
    ];
    if n >= 3 {
        out.push(TwoCochain::Gamma3);
    }
    out
}

/// `[L_X, L_Y] = L_{[X,Y]}`, `δC = 0` for every divergence cocycle and restriction,
/// and `δγ = 0` for the obstruction cocycles.
pub fn cmd_verify_cocycles(n: usize, max_degree: u32, trials: usize, seed: u64) -> Result<Report> {
    check_n(n)?;
    let (monomials, random) = test_fields(n, max_degree, 3 * trials, seed)?;
    let mut pairs = pairs_of(&monomials);
    pairs.extend(
        random_chunks::<_, 2>(&random[..2 * trials])
            .into_iter()
            .map(|[x, y]| (x, y)),
    );
    let mut triples = triples_of(&monomials);
    triples.extend(random_chunks::<_, 3>(&random));

    let mut results = Vec::new();
    let rep: Vec<Option<String>> = pairs
        .par_iter()
        .map(|(x, y)| {
            let lhs = x.lie_derivative().commutator(&y.lie_derivative());
            (lhs != x.bracket(y).lie_derivative()).then(|| format!("X = {x}, Y = {y}"))
        })
        .collect();
    results.push(IdentityResult::new("[L_X, L_Y] = L_[X,Y]", rep));

    for (name, c) in one_cocycles(n)? {
        let r: Vec<Option<String>> = pairs
            .par_iter()
            .map(|(x, y)| {
                let d = ce_delta1(&c, x, y);
                (!d.is_zero()).then(|| format!("X = {x}, Y = {y}: {d}"))
            })
            .collect();
        results.push(IdentityResult::new(format!("delta({name}) = 0"), r));
    }
    for g in two_cocycles(n) {
        let r: Vec<Option<String>> = triples
            .par_iter()
            .map(|[x, y, z]| {
                let d = ce_delta2(&g, x, y, z);
                (!d.is_zero()).then(|| format!("X = {x}, Y = {y}, Z = {z}: {d}"))
            })
            .collect();
        results.push(IdentityResult::new(format!("delta({g}) = 0"), r));
    }

    let failing: Vec<&IdentityResult> = results.iter().filter(|r| r.failures > 0).collect();
    let status = if failing.is_empty() {
        Status::Pass
    } else {
        Status::Fail
    };
    let mut summary: Vec<String> = results
        .iter()
        .map(|r| {
            format!(
                "{}: {}/{} exact",
                r.identity,
                r.checks - r.failures,
                r.checks
            )
        })
        .collect();
    summary.insert(
        0,
        format!("{} pairs, {} triples", pairs.len(), triples.len()),
    );
    Ok(Report {
        command: format!(
            "verify-cocycles --n {n} --max-degree {max_degree} --trials {trials} --seed {seed}"
        ),
        n: Some(n),
        config: json!({"max_degree": max_degree, "trials": trials, "seed": seed,
                       "random_field_terms": 3, "pairs": pairs.len(), "triples": triples.len()}),
        status,
        summary,
        details: json!({ "identities": results }),
    })
}

fn matrix_strings(m: &[Vec<Rational>]) -> Vec<Vec<String>> {
    m.iter()
        .map(|row| row.iter().map(fmt_rational).collect())
        .collect()
}

fn is_identity(m: &[Vec<Rational>]) -> bool {
    m.iter().enumerate().all(|(i, row)| {
        row.iter()
            .enumerate()
            .all(|(j, v)| if i == j { v.is_one() } else { v.is_zero() })
    })
}

fn is_signed_diagonal(m: &[Vec<Rational>]) -> bool {
    m.iter().enumerate().all(|(i, row)| {
        row.iter().enumerate().all(|(j, v)| {
            if i == j {
                v.is_one() || (-v.clone()).is_one()
            } else {
                v.is_zero()
            }
        })
    })
}

fn is_invertible(m: &[Vec<Rational>]) -> bool {
    match m.len() {
        1 => !m[0][0].is_zero(),
        2 => !(&m[0][0] * &m[1][1] - &m[0][1] * &m[1][0]).is_zero(),
        _ => false,
    }
}

fn relation_names(shift: usize) -> Vec<&'static str> {
    match shift {
        1 => vec![RELATION_NAMES[0]],
        2 => vec![RELATION_NAMES[1], RELATION_NAMES[2]],
        3 => vec![RELATION_NAMES[3]],
        _ => Vec::new(),
    }
}

/// Symbolic-parameter defect decomposition on seeded random pairs.
pub fn cmd_mc2(n: usize, seed: u64, wanted: usize) -> Result<Report> {
    check_n(n)?;
    let t = ParamAssignment::symbolic(n)?;
    let rel = relations(&t);
    let env = VarEnv::new(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = 5 * wanted.max(1);
    let mut candidates = Vec::new();
    for _ in 0..max_attempts {
        let x = random_field(&env, &mut rng, 3, 3);
        let y = random_field(&env, &mut rng, 3, 3);
        candidates.push((x, y));
    }
    let decomposed: Vec<_> = candidates
        .par_iter()
        .take(wanted + wanted / 2 + 1)
        .map(|(x, y)| mc2_decompose(x, y, &t).map(|d| (x.clone(), y.clone(), d)))
        .collect::<Result<_>>()?;
    let mut used = Vec::new();
    let mut degenerate = 0usize;
    let mut next = decomposed.len();
    let mut pool = decomposed.into_iter();
    while used.len() < wanted {
        let item = match pool.next() {
            Some(item) => item,
            None if next < candidates.len() => {
                let (x, y) = &candidates[next];
                next += 1;
                (x.clone(), y.clone(), mc2_decompose(x, y, &t)?)
            }
            None => break,
        };
        if item.2.is_degenerate() {
            degenerate += 1;
        } else {
            used.push(item);
        }
    }

    let mut tables = Vec::new();
    let mut pair_records = Vec::new();
    let mut unidentified_any = false;
    for (x, y, dec) in &used {
        let (table, unidentified) = identify(dec, &rel);
        unidentified_any |= !unidentified.is_empty();
        pair_records.push(json!({
            "x": x.to_string(),
            "y": y.to_string(),
            "residual_zero": dec.is_exact(),
            "unidentified_blocks": unidentified,
        }));
        tables.push(table);
    }
    let residual_zero = used.iter().all(|(_, _, d)| d.is_exact());
    let pair_independent = tables.windows(2).all(|w| w[0] == w[1]);
    let enough = used.len() >= wanted;
    let table = tables.first().cloned().unwrap_or_default();
    let invertible = table.values().all(|m| is_invertible(m));
    let identity = table.values().all(|m| is_identity(m));
    let signed_diagonal = table.values().all(|m| is_signed_diagonal(m));

    let mut blocks = Vec::new();
    let mut deltas = Vec::new();
    for (&(k, shift), m) in &table {
        let gammas = deformation::gamma_basis(shift);
        let rels = relation_names(shift);
        let mut formulas = Vec::new();
        for (i, row) in m.iter().enumerate() {
            let terms: Vec<String> = row
                .iter()
                .zip(&rels)
                .filter(|(v, _)| !v.is_zero())
                .map(|(v, r)| format!("{}*{r}^{k}", fmt_rational(v)))
                .collect();
            let rhs = if terms.is_empty() {
                "0".to_string()
            } else {
                terms.join(" + ")
            };
            formulas.push(format!("coefficient of {}^{k} = {rhs}", gammas[i]));
        }
        if !is_identity(m) {
            deltas.push(format!("(k = {k}, shift {shift}): {}", formulas.join("; ")));
        }
        blocks.push(json!({
            "k": k,
            "shift": shift,
            "gammas": gammas,
            "relations": rels,
            "matrix": matrix_strings(m),
            "formulas": formulas,
        }));
    }

    let pass = enough
        && residual_zero
        && pair_independent
        && invertible
        && !unidentified_any
        && !table.is_empty();
    let status = if pass { Status::Pass } else { Status::Fail };
    let mut summary = vec![
        format!(
            "{} non-degenerate pairs ({} degenerate skipped), residual zero: {residual_zero}",
            used.len(),
            degenerate
        ),
        format!("table pair-independent: {pair_independent}, invertible: {invertible}, identity: {identity}"),
    ];
    for d in &deltas {
        summary.push(format!("convention delta {d}"));
    }
    Ok(Report {
        command: format!("mc2 --n {n} --seed {seed} --trials {wanted}"),
        n: Some(n),
        config: json!({"seed": seed, "pairs_wanted": wanted, "random_degree": 3, "random_field_terms": 3,
                       "parameters": ParamAssignment::symbolic_names(n)}),
        status,
        summary,
        details: json!({
            "pairs": pair_records,
            "degenerate_pairs_skipped": degenerate,
            "sign_table": blocks,
            "pair_independent": pair_independent,
            "residual_zero": residual_zero,
            "invertible": invertible,
            "identity": identity,
            "signed_diagonal": signed_diagonal,
            "convention_delta": deltas,
        }),
    })
}

fn relation_records(t: &ParamAssignment) -> (Vec<Value>, bool) {
    let rel = relations(t);
    let records = rel
        .iter()
        .map(|(name, k, p)| json!({"relation": format!("{name}^{k}"), "value": p.to_string()}))
        .collect();
    (records, rel.all_zero())
}

/// Print the `4n - 4` relations of a parameter document.
pub fn cmd_relations(params_text: &str, params_path: &str) -> Result<Report> {
    let t = parse_params(params_text)?;
    let (records, all_zero) = relation_records(&t);
    let mut summary: Vec<String> = relations(&t)
        .iter()
        .map(|(name, k, p)| format!("{name}^{k} = {p}"))
        .collect();
    summary.insert(
        0,
        format!("{} parameters, {} relations", t.arity(), summary.len()),
    );
    Ok(Report {
        command: format!("relations --params {params_path}"),
        n: Some(t.n()),
        config: json!({"assignment": t.to_string()}),
        status: if all_zero {
            Status::Pass
        } else {
            Status::Flagged
        },
        summary,
        details: json!({"relations": records, "all_zero": all_zero}),
    })
}

/// The defect of a parameter document on one pair of fields.
pub fn cmd_defect(params_text: &str, params_path: &str, x: &str, y: &str) -> Result<Report> {
    let t = parse_params(params_text)?;
    let env = VarEnv::new(t.n())?;
    let xf = parse_field(&env, x)?;
    let yf = parse_field(&env, y)?;
    let d = defect(&xf, &yf, &t)?;
    let (records, all_zero) = relation_records(&t);
    let n = t.n();
    let mut blocks = Vec::new();
    for k in 0..=n {
        for l in 0..=n {
            let b = d.graded_block(k, l)?;
            if !b.is_zero() {
                blocks.push(json!({"k": k, "l": l, "operator": b.to_string()}));
            }
        }
    }
    let mut summary = vec![format!(
        "defect {}",
        if d.is_zero() {
            "vanishes"
        } else {
            "is nonzero"
        }
    )];
    summary.extend(
        relations(&t)
            .iter()
            .filter(|(_, _, p)| !p.is_zero())
            .map(|(name, k, p)| format!("{name}^{k} = {p}")),
    );
    for b in &blocks {
        summary.push(format!(
            "nonzero block Omega^{} -> Omega^{}",
            b["k"], b["l"]
        ));
    }
    Ok(Report {
        command: format!("defect --params {params_path} --x {x} --y {y}"),
        n: Some(n),
        config: json!({"assignment": t.to_string(), "x": xf.to_string(), "y": yf.to_string()}),
        status: if d.is_zero() {
            Status::Pass
        } else {
            Status::Flagged
        },
        summary,
        details: json!({
            "defect": d.to_string(),
            "blocks": blocks,
            "relations": records,
            "relations_all_zero": all_zero,
        }),
    })
}

/// Coboundary probing for one `(k, shift)` cell.
pub fn cmd_obstruction(n: usize, k: usize, shift: usize, jet: u32, order: u32) -> Result<Report> {
    obstruction::check_cell(n, k, shift)?;
    let bounds = Bounds { jet, order };
    let mut verdicts = Vec::new();
    let mut status = Status::Pass;
    let mut summary = Vec::new();
    for target in obstruction::targets_for_shift(shift) {
        let v = obstruction::probe_cell(n, k, shift, &target, bounds)?;
        if v.status == CellStatus::CoboundaryFound {
            status = status.and(Status::Flagged);
        } else if !v.certificate_checked {
            status = status.and(Status::Fail);
        }
        summary.push(format!(
            "{}: {} (basis {}, {} of {} pairs, {} rows, certificate checked: {})",
            v.target,
            v.status,
            v.basis_size,
            v.pairs_used,
            v.pairs_available,
            v.rows_used,
            v.certificate_checked
        ));
        verdicts.push(v);
    }
    let independence = if shift == 2 {
        let v = obstruction::shift2_independence(n, k, bounds)?;
        summary.push(format!(
            "gamma2^{k}, gamma2~^{k} independent modulo coboundaries: {} (certificates checked: {})",
            v.independent, v.certificates_checked
        ));
        if !v.independent {
            status = status.and(Status::Flagged);
        } else if !v.certificates_checked {
            status = status.and(Status::Fail);
        }
        Some(v)
    } else {
        None
    };
    Ok(Report {
        command: format!("obstruction --n {n} --k {k} --shift {shift} --jet {jet} --order {order}"),
        n: Some(n),
        config: json!({
            "k": k, "shift": shift, "jet_bound": jet, "order_bound": order,
            "pair_degree": bounds.pair_degree(),
            "hypothesis": "constant-coefficient ansatz; verdicts hold for cochains within these bounds",
        }),
        status,
        summary,
        details: json!({"cells": verdicts, "independence": independence}),
    })
}

fn gallery_record(e: &GalleryEntry) -> Value {
    json!({
        "name": e.name,
        "assignment": e.assignment.to_string(),
        "relations_vanish": e.relations_vanish,
        "pairs_checked": e.family.pairs_checked,
        "failures": e.family.failures.iter().take(MAX_LISTED_FAILURES).collect::<Vec<_>>(),
        "verdict": if e.pass() { "pass" } else { "fail" },
    })
}

/// Relations and defect sweep for the named examples.
pub fn cmd_examples(which: &str, ns: &[usize], family: &TestFamily) -> Result<Report> {
    let names: Vec<&str> = match which {
        "all" => GALLERY.to_vec(),
        w => match deformation::gallery_name(w) {
            Some(name) => vec![name],
            None => {
                return Err(Error::Document(format!(
                    "unknown example `{w}`; expected one of {} or all",
                    GALLERY.join(", ")
                )))
            }
        },
    };
    let mut entries = Vec::new();
    for name in &names {
        for &n in ns {
            check_n(n)?;
            if *name == "planar" && n != 2 {
                continue;
            }
            entries.push(gallery_entry(name, n, family)?);
        }
    }
    let status = if entries.iter().all(GalleryEntry::pass) {
        Status::Pass
    } else {
        Status::Fail
    };
    let summary = entries
        .iter()
        .map(|e| {
            format!(
                "{}: relations vanish {}, defect zero on {}/{} pairs -> {}",
                e.name,
                e.relations_vanish,
                e.family.pairs_checked - e.family.failures.len(),
                e.family.pairs_checked,
                if e.pass() { "pass" } else { "fail" }
            )
        })
        .collect();
    let ns_text: Vec<String> = ns.iter().map(|n| n.to_string()).collect();
    Ok(Report {
        command: format!(
            "examples --which {which} --n {} --max-degree {} --trials {} --seed {}",
            ns_text.join(","),
            family.max_degree,
            family.random_pairs,
            family.seed
        ),
        n: (ns.len() == 1).then(|| ns[0]),
        config: json!({"family": family, "dimensions": ns}),
        status,
        summary,
        details: json!({"examples": entries.iter().map(gallery_record).collect::<Vec<_>>()}),
    })
}

/// The uniform one-parameter system and its components.
pub fn cmd_uniform(n: usize) -> Result<Report> {
    check_n(n)?;
    let sol = solve_uniform(n)?;
    let check_family = TestFamily {
        max_degree: 2,
        random_pairs: 5,
        random_degree: 3,
        seed: 0,
    };
    let extra = gallery_entry("uniform-extra", n, &check_family)?;
    let mut status = if sol.components.iter().all(|c| c.verified) {
        Status::Pass
    } else {
        Status::Fail
    };
    let mut summary = vec![format!("reduced system: {}", sol.system.join(", "))];
    if !sol.r3_present {
        summary.push("R3 family absent for n = 2".to_string());
    }
    for c in &sol.components {
        let tag = match (&c.example, c.discrepancy) {
            (Some(e), _) => e.clone(),
            (None, true) => "DISCREPANCY".to_string(),
            (None, false) => "component".to_string(),
        };
        summary.push(format!(
            "({}) [{tag}] verified: {}",
            c.alpha.join(", "),
            c.verified
        ));
        if c.discrepancy {
            status = status.and(Status::Flagged);
        }
    }
    summary.push(format!(
        "extra family as an operator deformation: defect zero on {}/{} pairs",
        extra.family.pairs_checked - extra.family.failures.len(),
        extra.family.pairs_checked
    ));
    Ok(Report {
        command: format!("uniform --n {n}"),
        n: Some(n),
        config: json!({"operator_check_family": check_family}),
        status,
        summary,
        details: json!({"solution": sol, "extra_family_operator_check": gallery_record(&extra)}),
    })
}

/// A sign table as plain nested strings, keyed `k,shift`; used by tests comparing seeds.
pub fn sign_table_of(report: &Report) -> BTreeMap<String, Value> {
    report.details["sign_table"]
        .as_array()
        .map(|blocks| {
            blocks
                .iter()
                .map(|b| (format!("{},{}", b["k"], b["shift"]), b["matrix"].clone()))
                .collect()
        })
        .unwrap_or_default()
}
