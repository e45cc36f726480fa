//! Measuring formulas, the dimension–measure assignment, and checks of
//! additivity and the Fubini property over a family of models.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::asymptotics::{exact_polynomial, fit_dim_measure, k_factorial, linear_fit, ln_biguint, sweep_formula, DimFit, Family, SweepResult, SweepRow};
use crate::error::{Error, Result};
use crate::geometry::{hbasis, su_rank_set, su_rank_tuple};
use crate::logic::{count, solve_with, Formula, NormalFormSet, Range, Strategy, Term, Tuple};
use crate::model::{FpVector, ModelSpec, VectorHModel};
use crate::semiring::{DimMeasure, Measure};

/// Numeric tolerances; every field can be overridden from a config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed distance between fitted measures.
    pub measure: f64,
    /// Allowed distance of a fitted dimension from an integer.
    pub dimension: f64,
    /// Allowed distance between the fitted and the given `k`.
    pub k_consistency: f64,
    /// Positive floor for `|X| / |H|^n`.
    pub lower_bound_floor: f64,
    /// Largest number of fibre classes accepted by the Fubini check.
    pub fiber_class_bound: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { measure: 0.05, dimension: 0.1, k_consistency: 0.25, lower_bound_floor: 0.01, fiber_class_bound: 4 }
    }
}

/// A formula `φ(x̄, z̄)` without `H`, proposed as a measuring formula for
/// `target`, with `|z̄|` equal to the target's H-arity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasuringCandidate {
    pub target: NormalFormSet,
    pub phi: Formula,
    pub x: Vec<String>,
    pub z: Vec<String>,
    pub permutation_closed: bool,
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(k - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, k - 1);
            out.push(p);
        }
    }
    out.sort();
    out
}

fn permuted(phi: &Formula, z: &[String], perm: &[usize]) -> Formula {
    let map: Vec<(String, String)> = perm.iter().enumerate().map(|(i, &j)| (z[i].clone(), z[j].clone())).collect();
    phi.rename_free(&map)
}

fn disjunct_keys(phi: &Formula) -> BTreeSet<String> {
    phi.disjuncts().iter().map(|d| d.to_string()).collect()
}

impl MeasuringCandidate {
    pub fn new(target: NormalFormSet, phi: Formula, x: Option<Vec<String>>, z: Option<Vec<String>>) -> Result<Self> {
        let x = x.unwrap_or_else(|| target.vars.clone());
        let z = z.unwrap_or_else(|| target.h_vars.clone());
        if x.len() != target.arity() {
            return Err(Error::InvalidCandidate(format!("{} x-variables for a target of arity {}", x.len(), target.arity())));
        }
        if z.len() != target.h_arity() {
            return Err(Error::InvalidCandidate(format!("{} z-variables for a target of H-arity {}", z.len(), target.h_arity())));
        }
        let mut seen = BTreeSet::new();
        for v in x.iter().chain(&z) {
            if !seen.insert(v) {
                return Err(Error::DuplicateVariable(v.clone()));
            }
        }
        for v in phi.free_vars() {
            if !seen.contains(&v) {
                return Err(Error::UnboundVariable(v));
            }
        }
        let mut cand = MeasuringCandidate { target, phi, x, z, permutation_closed: false };
        cand.permutation_closed = cand.is_permutation_closed();
        Ok(cand)
    }

    pub fn k(&self) -> usize {
        self.z.len()
    }

    /// True when permuting `z̄` permutes the top-level disjuncts of `φ`.
    pub fn is_permutation_closed(&self) -> bool {
        let keys = disjunct_keys(&self.phi);
        permutations(self.k()).iter().all(|p| disjunct_keys(&permuted(&self.phi, &self.z, p)) == keys)
    }

    /// The disjunction of `φ` over all permutations of `z̄`.
    pub fn symmetrize(&self) -> MeasuringCandidate {
        let mut seen = BTreeSet::new();
        let mut parts = Vec::new();
        for p in permutations(self.k()) {
            for d in permuted(&self.phi, &self.z, &p).disjuncts() {
                if seen.insert(d.to_string()) {
                    parts.push(d.clone());
                }
            }
        }
        let phi = Formula::disjunction(parts).expect("at least one disjunct");
        MeasuringCandidate { phi, permutation_closed: true, ..self.clone() }
    }

    /// `x̄` followed by `z̄`.
    pub fn all_vars(&self) -> Vec<String> {
        self.x.iter().chain(&self.z).cloned().collect()
    }

    /// `∃ z̄ ∈ H. φ(x̄, z̄)`.
    pub fn projection(&self) -> Formula {
        self.z.iter().rev().fold(self.phi.clone(), |body, v| Formula::exists(v, Range::H, body))
    }
}

fn fresh_names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("_{prefix}{i}")).collect()
}

fn rename_to(f: &Formula, from: &[String], to: &[String]) -> Formula {
    let map: Vec<(String, String)> = from.iter().cloned().zip(to.iter().cloned()).collect();
    f.rename_free(&map)
}

/// Exact counts over the family; members over budget are an error.
fn complete_sweep(family: &Family, formula: &Formula, vars: &[String], budget: u64) -> Result<SweepResult> {
    let s = sweep_formula(family, formula, vars, budget)?;
    if let Some(row) = s.rows.iter().find(|r| r.count.is_none()) {
        return Err(Error::BudgetExceeded { needed: format!("count at p={} m={}", row.p, row.m), budget });
    }
    Ok(s)
}

fn per_member<T: Send>(family: &Family, f: impl Fn(&VectorHModel) -> Result<T> + Sync) -> Result<Vec<(ModelSpec, T)>> {
    family
        .members()
        .into_par_iter()
        .map(|spec| {
            let model = VectorHModel::from_spec(spec)?;
            Ok((spec, f(&model)?))
        })
        .collect()
}

fn measure_json(m: &Measure) -> Value {
    match m {
        Measure::Exact(r) => Value::String(r.to_string()),
        Measure::Approx(x) => json!(x),
    }
}

pub fn dim_measure_json(t: &DimMeasure) -> Value {
    json!({ "dim": [t.n(), t.k()], "measure": measure_json(t.measure()), "triple": t.to_string() })
}

pub fn fit_report_json(f: &DimFit) -> Value {
    json!({
        "triple": f.triple.to_string(),
        "n_slope": f.n_slope,
        "k_slope": f.k_slope,
        "k_given": f.k_given,
        "k_consistent": f.k_consistent,
        "method": f.method,
    })
}

/// Balanced base-`b` digits of `x`, lowest first.
fn balanced_digits(x: &BigInt, b: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut x = x.clone();
    let half: BigInt = b / 2;
    while !x.is_zero() {
        let mut r = ((&x % b) + b) % b;
        if r > half {
            r -= b;
        }
        x = (&x - &r) / b;
        out.push(r);
    }
    out
}

/// The L-dimension and leading coefficient of `|φ(M^{|x̄|+k})|` as a
/// function of `|M|`.
#[derive(Clone, Debug, PartialEq)]
pub struct LCountFit {
    pub dimension: u32,
    pub slope: f64,
    /// Coefficients in `|M|`, constant term first, when exact.
    pub polynomial: Option<Vec<BigRational>>,
    pub leading: Measure,
    pub sweep: SweepResult,
}

pub fn fit_l_count(sweep: SweepResult, tol: f64) -> Result<LCountFit> {
    let rows: Vec<&SweepRow> = sweep.rows.iter().filter(|r| r.count.as_ref().is_some_and(|c| !c.is_zero())).collect();
    if rows.is_empty() {
        return Err(Error::InsufficientData("the L-count vanishes on every member".into()));
    }
    let ln = |r: &SweepRow| ln_biguint(r.count.as_ref().expect("positive"));
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.ln_card_m(), ln(r))).collect();
    let slope = match linear_fit(&pts) {
        Some(f) => f.slope,
        None => {
            let r = rows.iter().max_by(|a, b| a.card_m.cmp(&b.card_m)).expect("nonempty");
            ln(r) / r.ln_card_m()
        }
    };
    let dimension = slope.round();
    if dimension < 0.0 || (slope - dimension).abs() > tol {
        return Err(Error::NonIntegralDimension(slope));
    }
    let d = dimension as usize;
    let exact_pts: Vec<(BigRational, BigRational)> = sweep
        .rows
        .iter()
        .map(|r| {
            let c = r.count.as_ref().expect("complete sweep");
            (BigRational::from_integer(BigInt::from(r.card_m.clone())), BigRational::from_integer(BigInt::from(c.clone())))
        })
        .collect();
    let mut polynomial = exact_polynomial(&exact_pts, d, true).map(|(c, _)| c);
    if polynomial.is_none() {
        // Small integer coefficients show up as balanced digits in base |M|.
        let r = sweep.rows.iter().max_by(|a, b| a.card_m.cmp(&b.card_m)).expect("nonempty");
        let base = BigInt::from(r.card_m.clone());
        let digits = balanced_digits(&BigInt::from(r.count.clone().expect("complete sweep")), &base);
        let small = BigInt::from(r.card_m.sqrt());
        if digits.len() == d + 1 && digits.iter().all(|c| c.abs() <= small) {
            let coeffs: Vec<BigRational> = digits.into_iter().map(BigRational::from_integer).collect();
            if exact_pts.iter().all(|(x, y)| crate::asymptotics::poly_eval(&coeffs, x) == *y) {
                polynomial = Some(coeffs);
            }
        }
    }
    let leading = match &polynomial {
        Some(c) => Measure::Exact(c[d].clone()),
        None => {
            let r = rows.iter().max_by(|a, b| a.card_m.cmp(&b.card_m)).expect("nonempty");
            Measure::Approx((ln(r) - dimension * r.ln_card_m()).exp())
        }
    };
    Ok(LCountFit { dimension: d as u32, slope, polynomial, leading, sweep })
}

/// `(D − k, k, μ_L / k!)` where `|φ| ≈ μ_L |M|^D` over `x̄ z̄`.
pub fn measure_via_formula(family: &Family, cand: &MeasuringCandidate, tol: &Tolerances, budget: u64) -> Result<DimMeasure> {
    Ok(measure_via_formula_detailed(family, cand, tol, budget)?.0)
}

fn measure_via_formula_detailed(family: &Family, cand: &MeasuringCandidate, tol: &Tolerances, budget: u64) -> Result<(DimMeasure, LCountFit)> {
    let sweep = complete_sweep(family, &cand.phi, &cand.all_vars(), budget)?;
    let fit = fit_l_count(sweep, tol.dimension)?;
    let k = cand.k() as u32;
    if fit.dimension < k {
        return Err(Error::InvalidCandidate(format!("L-dimension {} is below k = {k}", fit.dimension)));
    }
    let fact = k_factorial(k);
    let mu = match &fit.leading {
        Measure::Exact(r) => Measure::Exact(r / BigRational::from_integer(BigInt::from(fact))),
        Measure::Approx(x) => Measure::Approx(x / fact.to_f64().unwrap_or(f64::INFINITY)),
    };
    Ok((DimMeasure::new(fit.dimension - k, k, mu)?, fit))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureReport {
    pub clauses: BTreeMap<String, bool>,
    pub triple: Option<DimMeasure>,
    pub diagnostics: Value,
}

impl MeasureReport {
    pub fn passed(&self) -> bool {
        self.clauses.values().all(|&b| b)
    }

    pub fn to_json(&self) -> Value {
        let (dim, measure) = match &self.triple {
            Some(t) => (json!([t.n(), t.k()]), measure_json(t.measure())),
            None => (Value::Null, Value::Null),
        };
        json!({ "clauses": self.clauses, "dim": dim, "measure": measure, "diagnostics": self.diagnostics })
    }
}

const TARGET_TUPLE_LIMIT: u64 = 1 << 12;
const TARGET_SAMPLES: usize = 256;
const FIBER_SAMPLES: usize = 16;

fn h_conjunction(phi: &Formula, z: &[String]) -> Formula {
    z.iter().fold(phi.clone(), |acc, v| Formula::and(acc, Formula::in_h(Term::var(v))))
}

fn assignment(names: &[String], values: &[FpVector]) -> Vec<(String, FpVector)> {
    names.iter().cloned().zip(values.iter().cloned()).collect()
}

/// `{ z̄ ∈ H^k : φ(ā, z̄) }`, sorted.
fn z_solutions(model: &VectorHModel, cand: &MeasuringCandidate, a: &[FpVector], budget: u64) -> Result<Vec<Tuple>> {
    let f = h_conjunction(&cand.phi, &cand.z);
    let solved = solve_with(model, &f, &cand.z, &assignment(&cand.x, a), Strategy::Auto, budget)?;
    solved.region.enumerate(budget).ok_or_else(|| Error::BudgetExceeded { needed: solved.region.count().to_string(), budget })
}

/// Largest `|φ(x̄, H^k)|` over `x̄`; exact when each `φ(M, z̄)` is finite.
fn max_fiber(model: &VectorHModel, cand: &MeasuringCandidate, budget: u64) -> Result<(usize, bool)> {
    let k = cand.k();
    let hs = model.h_elements();
    let mut zs: Vec<Tuple> = vec![vec![]];
    for _ in 0..k {
        zs = zs.into_iter().flat_map(|t| hs.iter().map(move |e| [t.clone(), vec![e.clone()]].concat())).collect();
    }
    let mut hits: HashMap<Tuple, usize> = HashMap::new();
    let mut exact = true;
    let mut best = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(0xf1b);
    for zt in &zs {
        let solved = solve_with(model, &cand.phi, &cand.x, &assignment(&cand.z, zt), Strategy::Auto, budget)?;
        match solved.region.enumerate(TARGET_TUPLE_LIMIT) {
            Some(points) => {
                for a in points {
                    *hits.entry(a).or_default() += 1;
                }
            }
            None => {
                exact = false;
                for _ in 0..FIBER_SAMPLES {
                    if let Some(a) = solved.region.sample(&mut rng) {
                        best = best.max(z_solutions(model, cand, &a, budget)?.len());
                    }
                }
            }
        }
    }
    Ok((best.max(hits.values().copied().max().unwrap_or(0)), exact))
}

fn target_tuples(model: &VectorHModel, target: &NormalFormSet, budget: u64) -> Result<(Vec<Tuple>, bool)> {
    let region = target.solve(model, budget)?.region;
    if let Some(all) = region.enumerate(TARGET_TUPLE_LIMIT.min(budget)) {
        return Ok((all, true));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x7a6);
    let mut out: Vec<Tuple> = (0..TARGET_SAMPLES).filter_map(|_| region.sample(&mut rng)).collect();
    out.sort();
    out.dedup();
    Ok((out, false))
}

struct ClauseThree {
    holds: bool,
    checked: usize,
    exhaustive: bool,
    witness: Option<String>,
}

fn clause_three(model: &VectorHModel, cand: &MeasuringCandidate, budget: u64) -> Result<ClauseThree> {
    let (tuples, exhaustive) = target_tuples(model, &cand.target, budget)?;
    let ranks: Vec<(u32, u32)> = tuples.iter().map(|t| su_rank_tuple(model, t, &[])).collect::<Result<_>>()?;
    let Some(top) = ranks.iter().max().copied() else {
        return Ok(ClauseThree { holds: true, checked: 0, exhaustive, witness: None });
    };
    let maximal: Vec<&Tuple> = tuples.iter().zip(&ranks).filter(|(_, r)| **r == top).map(|(t, _)| t).collect();
    let verdicts: Vec<Option<String>> = maximal
        .par_iter()
        .map(|a| {
            let hb: Vec<usize> = hbasis(model, a, &[])?.into_iter().collect();
            let got = z_solutions(model, cand, a, budget)?;
            let mut want: Vec<Tuple> = if hb.len() == cand.k() {
                permutations(hb.len())
                    .into_iter()
                    .map(|p| p.iter().map(|&i| model.basis(hb[i])).collect::<Result<Tuple>>())
                    .collect::<Result<_>>()?
            } else {
                vec![]
            };
            want.sort();
            let shown: Vec<String> = a.iter().map(|v| v.to_string()).collect();
            Ok((got != want).then(|| format!("({}) has {} z-solutions, expected {}", shown.join(", "), got.len(), want.len())))
        })
        .collect::<Result<_>>()?;
    let witness = verdicts.into_iter().flatten().next();
    Ok(ClauseThree { holds: witness.is_none(), checked: maximal.len(), exhaustive, witness })
}

struct MemberChecks {
    su: Option<(u32, u32)>,
    max_fiber: usize,
    fiber_exact: bool,
    symdiff_su: Option<(u32, u32)>,
    symdiff_count: BigUint,
    three: ClauseThree,
}

/// Checks the measuring-formula clauses on every member of `family`:
/// (i) `φ` is an L-formula without basis constants; (ii) fibres over `H^k`
/// stay bounded and `target △ ∃z̄∈H φ` has smaller rank; (iii) on tuples of
/// maximal rank the `z̄`-solutions are the enumerations of the H-basis;
/// (iv) `φ` has L-dimension `n + k`.
pub fn check_measuring(family: &Family, cand: &MeasuringCandidate, tol: &Tolerances, budget: u64) -> Result<MeasureReport> {
    let k = cand.k();
    let clause_i = cand.phi.is_l_formula() && cand.phi.basis_constants().is_empty();

    let xs = fresh_names("x", cand.x.len());
    let t = rename_to(&cand.target.formula(), &cand.target.vars, &xs);
    let e = rename_to(&cand.projection(), &cand.x, &xs);
    let symdiff = Formula::or(Formula::and(t.clone(), Formula::not(e.clone())), Formula::and(Formula::not(t), e));
    let symdiff_nf = NormalFormSet::from_formula(&symdiff, &xs)?;

    let members = per_member(family, |model| {
        let su = su_rank_set(model, &cand.target, budget)?;
        let (max_fiber, fiber_exact) = max_fiber(model, cand, budget)?;
        let symdiff_count = count(model, &symdiff, &xs, Strategy::Auto, budget)?;
        let symdiff_su = if symdiff_count.is_zero() { None } else { su_rank_set(model, &symdiff_nf, budget)? };
        let three = clause_three(model, cand, budget)?;
        Ok(MemberChecks { su, max_fiber, fiber_exact, symdiff_su, symdiff_count, three })
    })?;

    let sus: BTreeSet<Option<(u32, u32)>> = members.iter().map(|(_, c)| c.su).collect();
    let su = if sus.len() == 1 { *sus.iter().next().expect("nonempty") } else { None };
    let su_stable = sus.len() == 1;

    // Fibre bound: at every prime the two largest sizes give the same maximum.
    let mut by_p: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
    for (spec, c) in &members {
        by_p.entry(spec.p).or_default().push((spec.m, c.max_fiber));
    }
    let fiber_bounded = by_p.values().all(|v| v.len() < 2 || v[v.len() - 1].1 <= v[v.len() - 2].1);
    let symdiff_small = members.iter().all(|(_, c)| match (c.symdiff_su, su) {
        (None, _) => true,
        (Some(s), Some(t)) => s < t,
        (Some(_), None) => false,
    });
    let clause_ii = fiber_bounded && symdiff_small;
    let clause_iii = members.iter().all(|(_, c)| c.three.holds);

    let via = measure_via_formula_detailed(family, cand, tol, budget);
    let (clause_iv, l_dim) = match (&via, su) {
        (Ok((_, fit)), Some((n, kk))) if su_stable => (kk as usize == k && fit.dimension == n + kk, Some(fit.dimension)),
        (Ok((_, fit)), _) => (false, Some(fit.dimension)),
        (Err(e), _) if e.is_budget() => return Err(via.expect_err("error")),
        (Err(_), _) => (false, None),
    };

    let mut clauses = BTreeMap::new();
    clauses.insert("i".to_string(), clause_i);
    clauses.insert("ii".to_string(), clause_ii);
    clauses.insert("iii".to_string(), clause_iii);
    clauses.insert("iv".to_string(), clause_iv);
    let all = clauses.values().all(|&b| b);

    let member_json: Vec<Value> = members
        .iter()
        .map(|(spec, c)| {
            json!({
                "p": spec.p,
                "m": spec.m,
                "su_rank": c.su.map(|s| [s.0, s.1]),
                "max_fiber": c.max_fiber,
                "max_fiber_exact": c.fiber_exact,
                "symdiff_count": c.symdiff_count.to_string(),
                "symdiff_su_rank": c.symdiff_su.map(|s| [s.0, s.1]),
                "iii_checked": c.three.checked,
                "iii_exhaustive": c.three.exhaustive,
                "iii_witness": c.three.witness,
            })
        })
        .collect();
    let via_json = match &via {
        Ok((t, fit)) => json!({
            "triple": t.to_string(),
            "l_dimension": fit.dimension,
            "l_slope": fit.slope,
            "l_leading": measure_json(&fit.leading),
            "l_polynomial": fit.polynomial.as_ref().map(|c| c.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let diagnostics = json!({
        "k": k,
        "permutation_closed": cand.permutation_closed,
        "phi": cand.phi.to_string(),
        "target": cand.target.formula().to_string(),
        "target_su_rank": su.map(|s| [s.0, s.1]),
        "target_su_rank_stable": su_stable,
        "l_dimension": l_dim,
        "fiber_bounded": fiber_bounded,
        "symdiff_lower_rank": symdiff_small,
        "members": member_json,
        "measure_via_formula": via_json,
    });
    let triple = match via {
        Ok((t, _)) if all => Some(t),
        _ => None,
    };
    Ok(MeasureReport { clauses, triple, diagnostics })
}

fn compare(expected: &DimMeasure, got: &DimMeasure, tol: f64) -> bool {
    expected.dim() == got.dim() && (expected.measure().distance(got.measure()) <= tol || expected.approx_eq(got, tol))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdditivityReport {
    pub parts: [DimMeasure; 2],
    pub union: DimMeasure,
    pub expected: DimMeasure,
    pub holds: bool,
}

impl AdditivityReport {
    pub fn to_json(&self) -> Value {
        json!({
            "parts": [dim_measure_json(&self.parts[0]), dim_measure_json(&self.parts[1])],
            "union": dim_measure_json(&self.union),
            "expected": dim_measure_json(&self.expected),
            "holds": self.holds,
        })
    }
}

fn fit_formula(family: &Family, f: &Formula, vars: &[String], k: u32, budget: u64) -> Result<DimFit> {
    fit_dim_measure(&complete_sweep(family, f, vars, budget)?, k)
}

/// Checks `h(X1 ∪ X2) = h(X1) ⊕ h(X2)` for sets disjoint on every member.
pub fn verify_additivity(family: &Family, a: &NormalFormSet, b: &NormalFormSet, tol: &Tolerances, budget: u64) -> Result<AdditivityReport> {
    if a.arity() != b.arity() {
        return Err(Error::InvalidCandidate(format!("arities {} and {} differ", a.arity(), b.arity())));
    }
    let xs = fresh_names("x", a.arity());
    let fa = rename_to(&a.formula(), &a.vars, &xs);
    let fb = rename_to(&b.formula(), &b.vars, &xs);
    let both = Formula::and(fa.clone(), fb.clone());
    let overlaps = per_member(family, |model| count(model, &both, &xs, Strategy::Auto, budget))?;
    if let Some((spec, c)) = overlaps.iter().find(|(_, c)| !c.is_zero()) {
        return Err(Error::NotDisjoint { p: spec.p, m: spec.m, overlap: c.to_string() });
    }
    let pa = fit_formula(family, &fa, &xs, a.h_arity() as u32, budget)?.triple;
    let pb = fit_formula(family, &fb, &xs, b.h_arity() as u32, budget)?.triple;
    let k = a.h_arity().max(b.h_arity()) as u32;
    let union = fit_formula(family, &Formula::or(fa, fb), &xs, k, budget)?.triple;
    let expected = pa.oplus(&pb);
    let holds = compare(&expected, &union, tol.measure);
    Ok(AdditivityReport { parts: [pa, pb], union, expected, holds })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberClass {
    pub fiber: DimMeasure,
    pub class: DimMeasure,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FubiniReport {
    pub classes: Vec<FiberClass>,
    pub domain: DimMeasure,
    pub expected: DimMeasure,
    pub holds: bool,
}

impl FubiniReport {
    pub fn to_json(&self) -> Value {
        let classes: Vec<Value> = self
            .classes
            .iter()
            .map(|c| json!({ "fiber": dim_measure_json(&c.fiber), "class": dim_measure_json(&c.class) }))
            .collect();
        json!({
            "classes": classes,
            "domain": dim_measure_json(&self.domain),
            "expected": dim_measure_json(&self.expected),
            "holds": self.holds,
        })
    }
}

const FIBER_BASE_LIMIT: u64 = 1 << 14;

/// Checks `h(dom f) = ⊕ h(fibre) ⊙ h(class)` for the surjection whose graph
/// is `graph` (variables `x̄ ȳ`, with `|ȳ|` the arity of `base`), grouping
/// base points by fibre size.
pub fn verify_fubini(family: &Family, graph: &NormalFormSet, base: &NormalFormSet, tol: &Tolerances, budget: u64) -> Result<FubiniReport> {
    let ny = base.arity();
    if graph.arity() < ny {
        return Err(Error::InvalidCandidate(format!("graph arity {} is below base arity {ny}", graph.arity())));
    }
    let (x, y) = graph.vars.split_at(graph.arity() - ny);
    let gf = graph.formula();
    let domain = y.iter().rev().fold(gf.clone(), |body, v| Formula::exists(v, Range::All, body));
    let image = x.iter().rev().fold(gf.clone(), |body, v| Formula::exists(v, Range::All, body));
    let bf = rename_to(&base.formula(), &base.vars, y);
    let mismatch = Formula::or(Formula::and(image.clone(), Formula::not(bf.clone())), Formula::and(bf, Formula::not(image)));

    let members = per_member(family, |model| {
        let spec = model.spec();
        let graph_count = count(model, &gf, &graph.vars, Strategy::Auto, budget)?;
        let domain_count = count(model, &domain, x, Strategy::Auto, budget)?;
        if graph_count != domain_count {
            return Err(Error::NotAFunction { p: spec.p, m: spec.m });
        }
        if !count(model, &mismatch, y, Strategy::Auto, budget)?.is_zero() {
            return Err(Error::NotSurjective { p: spec.p, m: spec.m });
        }
        let points = base.project_solutions(model, budget.min(FIBER_BASE_LIMIT))?;
        let fibers: Vec<BigUint> = points
            .par_iter()
            .map(|b| Ok(solve_with(model, &gf, x, &assignment(y, b), Strategy::Auto, budget)?.region.count()))
            .collect::<Result<_>>()?;
        let mut classes: BTreeMap<BigUint, usize> = BTreeMap::new();
        for f in fibers {
            *classes.entry(f).or_default() += 1;
        }
        Ok((domain_count, classes))
    })?;

    let sizes: BTreeSet<usize> = members.iter().map(|(_, (_, c))| c.len()).collect();
    let found = *sizes.iter().max().unwrap_or(&0);
    if found > tol.fiber_class_bound {
        return Err(Error::TooManyFiberClasses { found, bound: tol.fiber_class_bound });
    }
    if sizes.len() > 1 {
        let shown: Vec<String> = members.iter().map(|(s, (_, c))| format!("p={} m={}: {}", s.p, s.m, c.len())).collect();
        return Err(Error::UnstableFiberClasses(shown.join("; ")));
    }
    let row = |spec: &ModelSpec, c: BigUint| SweepRow::new(*spec, Some(c));
    let domain_sweep = SweepResult { rows: members.iter().map(|(s, (d, _))| row(s, d.clone())).collect() };
    let domain_fit = fit_dim_measure(&domain_sweep, graph.h_arity() as u32)?.triple;
    let mut classes = Vec::new();
    for j in 0..found {
        let nth = |c: &BTreeMap<BigUint, usize>| c.iter().nth(j).map(|(f, n)| (f.clone(), *n)).expect("same class count");
        let fiber = SweepResult { rows: members.iter().map(|(s, (_, c))| row(s, nth(c).0)).collect() };
        let class = SweepResult { rows: members.iter().map(|(s, (_, c))| row(s, BigUint::from(nth(c).1))).collect() };
        classes.push(FiberClass {
            fiber: fit_dim_measure(&fiber, 0)?.triple,
            class: fit_dim_measure(&class, base.h_arity() as u32)?.triple,
        });
    }
    let expected = classes.iter().fold(DimMeasure::zero(), |acc, c| acc.oplus(&c.fiber.odot(&c.class)));
    let holds = compare(&expected, &domain_fit, tol.measure);
    Ok(FubiniReport { classes, domain: domain_fit, expected, holds })
}

/// The fit of a set's own counts, as `fit_dim_measure` with the H-arity as
/// the given `k`.
pub fn fit_set(family: &Family, nf: &NormalFormSet, budget: u64) -> Result<DimFit> {
    fit_formula(family, &nf.formula(), &nf.vars, nf.h_arity() as u32, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::FamilySpec;
    use crate::logic::{parse, DEFAULT_BUDGET};

    fn nf(text: &str) -> NormalFormSet {
        NormalFormSet::parse(text, None).unwrap()
    }

    fn fam(ps: &[u32], ms: &[usize]) -> Family {
        FamilySpec::new(ps.to_vec(), ms.to_vec()).unwrap().into()
    }

    fn grid() -> Family {
        Family::new(vec![FamilySpec::new(vec![5, 7, 11], vec![8]).unwrap(), FamilySpec::new(vec![5], vec![8, 16, 32, 64]).unwrap()]).unwrap()
    }

    fn cand(target: &str, phi: &str) -> MeasuringCandidate {
        MeasuringCandidate::new(nf(target), parse(phi).unwrap(), None, None).unwrap()
    }

    const HH: &str = "exists z1 in H. exists z2 in H. x = z1 + z2";
    const H2H: &str = "exists z1 in H. exists z2 in H. x = z1 + 2*z2";

    fn exact(n: u32, k: u32, num: i64, den: i64) -> DimMeasure {
        DimMeasure::new(n, k, Measure::ratio(num, den)).unwrap()
    }

    #[test]
    fn symmetrization() {
        let c = cand(H2H, "x = z1 + 2*z2");
        assert!(!c.permutation_closed);
        let s = c.symmetrize();
        assert!(s.permutation_closed);
        assert_eq!(s.phi.disjuncts().len(), 2);
        assert!(cand(HH, "x = z1 + z2").symmetrize().phi.disjuncts().len() == 2);
        assert_eq!(permutations(3).len(), 6);
    }

    #[test]
    fn measures_from_formulas() {
        let f = fam(&[5], &[4, 8, 16]);
        let t = Tolerances::default();
        let sym = cand(H2H, "x = z1 + 2*z2").symmetrize();
        assert_eq!(measure_via_formula(&f, &sym, &t, DEFAULT_BUDGET).unwrap(), exact(0, 2, 1, 1));
        let c = cand(HH, "x = z1 + z2");
        assert_eq!(measure_via_formula(&f, &c, &t, DEFAULT_BUDGET).unwrap(), exact(0, 2, 1, 2));
        let c = cand("x = x", "x = x");
        assert_eq!(measure_via_formula(&f, &c, &t, DEFAULT_BUDGET).unwrap(), exact(1, 0, 1, 1));
        let single = fam(&[5], &[8]);
        assert_eq!(measure_via_formula(&single, &sym, &t, DEFAULT_BUDGET).unwrap(), exact(0, 2, 1, 1));
    }

    #[test]
    fn measuring_clauses() {
        let t = Tolerances::default();
        let f = fam(&[5], &[4, 8, 16]);
        let r = check_measuring(&f, &cand(HH, "x = z1 + z2"), &t, DEFAULT_BUDGET).unwrap();
        assert!(r.passed(), "{}", r.to_json());
        assert_eq!(r.triple, Some(exact(0, 2, 1, 2)));
        let single = fam(&[5], &[8]);
        let bad = check_measuring(&single, &cand(H2H, "x = z1 + 2*z2"), &t, DEFAULT_BUDGET).unwrap();
        assert!(!bad.clauses["iii"]);
        assert!(bad.triple.is_none());
        let good = check_measuring(&single, &cand(H2H, "x = z1 + 2*z2").symmetrize(), &t, DEFAULT_BUDGET).unwrap();
        assert!(good.passed(), "{}", good.to_json());
        let zero = check_measuring(&f, &cand("x = 0", "x = 0"), &t, DEFAULT_BUDGET).unwrap();
        assert!(zero.passed());
        assert_eq!(zero.triple, Some(exact(0, 0, 1, 1)));
    }

    #[test]
    fn clause_one_rejects_h() {
        let r = check_measuring(&fam(&[5], &[4]), &cand(HH, "H(z1) & x = z1 + z2"), &Tolerances::default(), DEFAULT_BUDGET).unwrap();
        assert!(!r.clauses["i"]);
    }

    #[test]
    fn additivity_examples() {
        let t = Tolerances::default();
        let g = grid();
        let r = verify_additivity(&g, &nf("H(x)"), &nf("exists z in H. x = e(h+1) + z"), &t, DEFAULT_BUDGET).unwrap();
        assert!(r.holds);
        assert_eq!(r.union, exact(0, 1, 2, 1));
        let r = verify_additivity(&g, &nf(HH), &nf("x = 0"), &t, DEFAULT_BUDGET).unwrap();
        assert!(r.holds);
        assert_eq!(r.union, exact(0, 2, 1, 2));
        let r = verify_additivity(&g, &nf("x = x & !(x = x)"), &nf("H(x)"), &t, DEFAULT_BUDGET).unwrap();
        assert!(r.holds);
        assert_eq!(r.union, exact(0, 1, 1, 1));
        let err = verify_additivity(&g, &nf("H(x)"), &nf("x = e1"), &t, DEFAULT_BUDGET).unwrap_err();
        assert!(matches!(err, Error::NotDisjoint { .. }));
    }

    fn graph(text: &str, vars: &[&str]) -> NormalFormSet {
        let vars: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        NormalFormSet::parse(text, Some(&vars)).unwrap()
    }

    #[test]
    fn fubini_examples() {
        let t = Tolerances::default();
        let g = grid();
        let r = verify_fubini(&g, &graph("H(x1) & H(x2) & y = x1", &["x1", "x2", "y"]), &nf("H(y)"), &t, DEFAULT_BUDGET).unwrap();
        assert!(r.holds);
        assert_eq!(r.domain, exact(0, 2, 1, 1));
        let r = verify_fubini(&g, &graph("H(x) & y = x", &["x", "y"]), &nf("H(y)"), &t, DEFAULT_BUDGET).unwrap();
        assert!(r.holds);
        assert_eq!(r.classes[0].fiber, exact(0, 0, 1, 1));
        let r = verify_fubini(&g, &graph("H(x) & y = 0", &["x", "y"]), &nf("y = 0"), &t, DEFAULT_BUDGET).unwrap();
        assert!(r.holds);
        assert_eq!(r.domain, exact(0, 1, 1, 1));
        let err = verify_fubini(&g, &graph("H(x) & H(y)", &["x", "y"]), &nf("H(y)"), &t, DEFAULT_BUDGET).unwrap_err();
        assert!(matches!(err, Error::NotAFunction { .. }));
        let err = verify_fubini(&g, &graph("H(x) & y = x", &["x", "y"]), &nf("y = y"), &t, DEFAULT_BUDGET).unwrap_err();
        assert!(matches!(err, Error::NotSurjective { .. }));
    }

    #[test]
    fn balanced_digit_expansion() {
        let b = BigInt::from(1000);
        let x = BigInt::from(2 * 1000 * 1000 - 1000 + 3);
        assert_eq!(balanced_digits(&x, &b), vec![BigInt::from(3), BigInt::from(-1), BigInt::from(2)]);
    }
}
