//! One PASS/FAIL line per acceptance criterion.

mod common;

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hstruct::asymptotics::{coarse_dim, fit_dim_measure, lower_bound_diagnostic, sweep, Denominator, Family, FamilySpec};
use hstruct::geometry::{closed_base, hbasis, su_rank_tuple};
use hstruct::logic::{count, parse, Formula, NormalFormSet, Strategy, DEFAULT_BUDGET};
use hstruct::measures::{check_measuring, measure_via_formula, verify_fubini, MeasuringCandidate, Tolerances};
use hstruct::model::{FpVector, VectorHModel};
use hstruct::semiring::{DimMeasure, Measure};

use common::{rank_mod_p, unit, Gen};

const HH: &str = "exists z1 in H. exists z2 in H. x = z1 + z2";
const H2H: &str = "exists z1 in H. exists z2 in H. x = z1 + 2*z2";

const PER_MEMBER_SECONDS: f64 = 1.0;
const FIT_SECONDS: f64 = 10.0;
const MEASURE_TOL: f64 = 0.05;
const DIM_TOL: f64 = 0.1;
const LOWER_BOUND_FLOOR: f64 = 0.01;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn nf(text: &str) -> NormalFormSet {
    NormalFormSet::parse(text, None).unwrap()
}

fn vars(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn fit_family() -> Family {
    Family::new(vec![FamilySpec::new(vec![5, 7, 11], vec![8]).unwrap(), FamilySpec::new(vec![5], vec![8, 16, 32, 64]).unwrap()]).unwrap()
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// `{e_i + c·e_j : 1 ≤ i, j ≤ m}` built directly from coordinates.
fn sumset_oracle(p: u32, m: usize, c: u32) -> usize {
    let mut set = HashSet::new();
    for i in 0..m {
        for j in 0..m {
            let mut v = vec![0u32; 2 * m];
            v[i] = (v[i] + 1) % p;
            v[j] = (v[j] + c) % p;
            set.insert(v);
        }
    }
    set.len()
}

fn crit1() -> Verdict {
    let (hh, h2h) = (parse(HH).unwrap(), parse(H2H).unwrap());
    let x = vars(&["x"]);
    let mut slowest = Duration::ZERO;
    for p in [5u32, 7, 11] {
        for m in 2..=20usize {
            let model = VectorHModel::new(p, m).map_err(err)?;
            let start = Instant::now();
            let a = count(&model, &h2h, &x, Strategy::HFirst, DEFAULT_BUDGET).map_err(err)?;
            let b = count(&model, &hh, &x, Strategy::HFirst, DEFAULT_BUDGET).map_err(err)?;
            let spent = start.elapsed();
            slowest = slowest.max(spent);
            ensure(a == BigUint::from(m * m), format!("H+2H at p={p} m={m}: {a}"))?;
            ensure(b == BigUint::from(m * (m + 1) / 2), format!("H+H at p={p} m={m}: {b}"))?;
            ensure(a == BigUint::from(sumset_oracle(p, m, 2)), format!("H+2H oracle at p={p} m={m}"))?;
            ensure(b == BigUint::from(sumset_oracle(p, m, 1)), format!("H+H oracle at p={p} m={m}"))?;
            ensure(spent.as_secs_f64() < PER_MEMBER_SECONDS, format!("p={p} m={m} took {spent:?}"))?;
        }
    }
    for (p, m) in [(3u32, 2usize), (5, 2)] {
        let model = VectorHModel::new(p, m).map_err(err)?;
        for f in [&hh, &h2h] {
            let a = count(&model, f, &x, Strategy::HFirst, DEFAULT_BUDGET).map_err(err)?;
            let b = count(&model, f, &x, Strategy::Enumerate, DEFAULT_BUDGET).map_err(err)?;
            ensure(a == b, format!("H-first {a} vs enumeration {b} at p={p} m={m}"))?;
        }
    }
    Ok(format!("57 members exact, enumeration agrees at (3,2),(5,2); slowest member {:.3}s", slowest.as_secs_f64()))
}

fn crit2() -> Verdict {
    let start = Instant::now();
    let fam = fit_family();
    let mut shown = Vec::new();
    for (text, target) in [(HH, 0.5), (H2H, 1.0)] {
        let s = sweep(&fam, &nf(text), DEFAULT_BUDGET).map_err(err)?;
        let fit = fit_dim_measure(&s, 2).map_err(err)?;
        let mu = fit.triple.measure().to_f64();
        ensure(fit.triple.dim() == (0, 2), format!("dimension {:?}", fit.triple.dim()))?;
        ensure((mu - target).abs() <= MEASURE_TOL, format!("measure {mu} vs {target}"))?;
        shown.push(fit.triple.to_string());
    }
    let spent = start.elapsed().as_secs_f64();
    ensure(spent < FIT_SECONDS, format!("took {spent:.2}s"))?;
    Ok(format!("H+H {} H+2H {} in {spent:.2}s", shown[0], shown[1]))
}

fn sym_h2h() -> MeasuringCandidate {
    MeasuringCandidate::new(nf(H2H), parse("x = z1 + 2*z2").unwrap(), None, None).unwrap().symmetrize()
}

/// `Σ_{z1,z2} |{z1 + 2 z2, 2 z1 + z2}|`, by enumeration of pairs.
fn symmetric_l_count_oracle(model: &VectorHModel) -> u64 {
    let (p, d) = (model.p(), model.d());
    let all: Vec<FpVector> = (0..(p as usize).pow(d as u32))
        .map(|mut n| {
            let coords: Vec<u32> = (0..d)
                .map(|_| {
                    let c = (n % p as usize) as u32;
                    n /= p as usize;
                    c
                })
                .collect();
            model.vector(&coords).unwrap()
        })
        .collect();
    let mut total = 0u64;
    for a in &all {
        for b in &all {
            let u = a.add(&b.scale(2).unwrap()).unwrap();
            let v = a.scale(2).unwrap().add(b).unwrap();
            total += if u == v { 1 } else { 2 };
        }
    }
    total
}

fn crit3() -> Verdict {
    let cand = sym_h2h();
    let small = VectorHModel::new(5, 2).map_err(err)?;
    let engine = count(&small, &cand.phi, &cand.all_vars(), Strategy::HFirst, DEFAULT_BUDGET).map_err(err)?;
    let oracle = symmetric_l_count_oracle(&small);
    let card = small.card_m();
    let closed = &card * &card * 2u32 - &card;
    ensure(engine == BigUint::from(oracle) && engine == closed, format!("L-count {engine}, enumeration {oracle}, 2|M|^2-|M| = {closed}"))?;
    let fam = Family::new(vec![FamilySpec::new(vec![5, 7, 11], vec![8]).unwrap(), FamilySpec::new(vec![5], vec![8, 16]).unwrap()]).unwrap();
    let t = measure_via_formula(&fam, &cand, &Tolerances::default(), DEFAULT_BUDGET).map_err(err)?;
    let one = DimMeasure::new(0, 2, Measure::Exact(BigRational::from_integer(BigInt::from(1)))).unwrap();
    ensure(t == one, format!("got {t}"))?;
    Ok(format!("L-count 2|M|^2-|M| ({oracle} at p=5 m=2), triple {t}"))
}

fn crit4() -> Verdict {
    let fam: Family = FamilySpec::new(vec![5], vec![8]).unwrap().into();
    let tol = Tolerances::default();
    let plain = MeasuringCandidate::new(nf(H2H), parse("x = z1 + 2*z2").unwrap(), None, None).unwrap();
    let a = check_measuring(&fam, &plain, &tol, DEFAULT_BUDGET).map_err(err)?;
    let b = check_measuring(&fam, &sym_h2h(), &tol, DEFAULT_BUDGET).map_err(err)?;
    ensure(!a.clauses["iii"], "unsymmetrized candidate passes clause (iii)")?;
    ensure(b.passed(), format!("symmetrized candidate clauses {:?}", b.clauses))?;
    Ok(format!("plain {:?}, symmetrized {:?}", a.clauses, b.clauses))
}

fn random_vector<R: Rng>(rng: &mut R, p: u32, d: usize, h: usize) -> Vec<u32> {
    // Mostly sparse vectors, biased towards H, so that H-bases are nontrivial.
    let mut v = vec![0u32; d];
    for _ in 0..rng.gen_range(1..=3) {
        let i = if rng.gen_bool(0.7) { rng.gen_range(0..h) } else { rng.gen_range(0..d) };
        v[i] = rng.gen_range(0..p);
    }
    v
}

fn random_shape<R: Rng>(rng: &mut R) -> (usize, usize) {
    let d = rng.gen_range(2..=8);
    let h = rng.gen_range(1..=4usize.min(d - 1));
    (d, h)
}

/// Minimal subsets `S ⊆ {1..h}` with `dim(ā / e_S) = dim(ā / H)`.
fn exhaustive_hbasis(p: u32, d: usize, h: usize, tuple: &[Vec<u32>]) -> Vec<BTreeSet<usize>> {
    let dim_over = |base: &[Vec<u32>]| {
        let mut all = base.to_vec();
        let b = rank_mod_p(p, &all);
        all.extend(tuple.iter().cloned());
        rank_mod_p(p, &all) - b
    };
    let h_all: Vec<Vec<u32>> = (1..=h).map(|i| unit(d, i)).collect();
    let target = dim_over(&h_all);
    let mut best: Vec<BTreeSet<usize>> = Vec::new();
    for mask in 0u32..(1 << h) {
        let s: BTreeSet<usize> = (1..=h).filter(|i| mask & (1 << (i - 1)) != 0).collect();
        let base: Vec<Vec<u32>> = s.iter().map(|&i| unit(d, i)).collect();
        if dim_over(&base) != target {
            continue;
        }
        match best.first().map(|b| b.len()) {
            Some(n) if s.len() > n => {}
            Some(n) if s.len() == n => best.push(s),
            _ => best = vec![s],
        }
    }
    best
}

fn crit5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = 3;
    for case in 0..200 {
        let (d, h) = random_shape(&mut rng);
        let model = VectorHModel::with_shape(p, d, h).map_err(err)?;
        let coords: Vec<Vec<u32>> = (0..rng.gen_range(1..=3)).map(|_| random_vector(&mut rng, p, d, h)).collect();
        let tuple: Vec<FpVector> = coords.iter().map(|c| model.vector(c).unwrap()).collect();
        let got = hbasis(&model, &tuple, &[]).map_err(err)?;
        let minimal = exhaustive_hbasis(p, d, h, &coords);
        ensure(minimal.len() == 1, format!("case {case}: {} minimal subsets", minimal.len()))?;
        ensure(got == minimal[0], format!("case {case}: hbasis {got:?} vs exhaustive {:?}", minimal[0]))?;
    }
    Ok("200 random tuples, p=3, d<=8, h<=4: 0 failures".into())
}

fn crit6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = 3;
    for case in 0..200 {
        let (d, h) = random_shape(&mut rng);
        let model = VectorHModel::with_shape(p, d, h).map_err(err)?;
        let mut pick = |n: usize| -> Vec<FpVector> { (0..n).map(|_| model.vector(&random_vector(&mut rng, p, d, h)).unwrap()).collect() };
        let a = pick(1 + case % 2);
        let b = pick(1 + case % 3);
        let ab: Vec<FpVector> = a.iter().chain(&b).cloned().collect();
        let closure = closed_base(&model, &a).map_err(err)?;
        let hb_ab = hbasis(&model, &ab, &[]).map_err(err)?;
        let hb_a = hbasis(&model, &a, &[]).map_err(err)?;
        let hb_b = hbasis(&model, &b, &closure).map_err(err)?;
        let joined: BTreeSet<usize> = hb_a.union(&hb_b).copied().collect();
        ensure(hb_ab == joined, format!("case {case}: HB(ab) {hb_ab:?} vs {joined:?}"))?;
        let (na, ka) = su_rank_tuple(&model, &a, &[]).map_err(err)?;
        let (nb, kb) = su_rank_tuple(&model, &b, &closure).map_err(err)?;
        let sum = su_rank_tuple(&model, &ab, &[]).map_err(err)?;
        ensure(sum == (na + nb, ka + kb), format!("case {case}: su(ab) {sum:?} vs ({},{})", na + nb, ka + kb))?;
    }
    Ok("200 random pairs: HB and SU-pair additivity, 0 failures".into())
}

fn q(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Triples as plain tuples with the semiring operations written out.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct T(u32, u32, BigRational);

fn t_oplus(a: &T, b: &T) -> T {
    match (a.0, a.1).cmp(&(b.0, b.1)) {
        std::cmp::Ordering::Greater => a.clone(),
        std::cmp::Ordering::Less => b.clone(),
        std::cmp::Ordering::Equal => T(a.0, a.1, &a.2 + &b.2),
    }
}

fn t_odot(a: &T, b: &T) -> T {
    let zero = BigRational::from_integer(0.into());
    if a.2 == zero || b.2 == zero {
        return T(0, 0, zero);
    }
    T(a.0 + b.0, a.1 + b.1, &a.2 * &b.2)
}

fn to_dm(t: &T) -> DimMeasure {
    DimMeasure::new(t.0, t.1, Measure::Exact(t.2.clone())).unwrap()
}

fn random_t<R: Rng>(rng: &mut R) -> T {
    if rng.gen_ratio(1, 8) {
        return T(0, 0, q(0, 1));
    }
    let (n, k) = (rng.gen_range(0..3), rng.gen_range(0..3));
    if (n, k) == (0, 0) {
        T(0, 0, q(rng.gen_range(0..6), 1))
    } else {
        T(n, k, q(rng.gen_range(1..60), rng.gen_range(1..24)))
    }
}

fn crit7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let zero = DimMeasure::zero();
    let one = DimMeasure::one();
    for case in 0..1000 {
        let (ta, tb, tc) = (random_t(&mut rng), random_t(&mut rng), random_t(&mut rng));
        let (a, b, c) = (to_dm(&ta), to_dm(&tb), to_dm(&tc));
        let fail = |law: &str| Err(format!("case {case}: {law} fails on {a} {b} {c}"));
        // The library against the written-out operations.
        if a.oplus(&b) != to_dm(&t_oplus(&ta, &tb)) || a.odot(&b) != to_dm(&t_odot(&ta, &tb)) {
            return fail("operation oracle");
        }
        if a.oplus(&b).oplus(&c) != a.oplus(&b.oplus(&c)) {
            return fail("oplus associativity");
        }
        if a.odot(&b).odot(&c) != a.odot(&b.odot(&c)) {
            return fail("odot associativity");
        }
        if a.oplus(&b) != b.oplus(&a) || a.odot(&b) != b.odot(&a) {
            return fail("commutativity");
        }
        if a.odot(&b.oplus(&c)) != a.odot(&b).oplus(&a.odot(&c)) {
            return fail("distributivity");
        }
        if a.oplus(&zero) != a || a.odot(&one) != a {
            return fail("identity");
        }
        if a.odot(&zero) != zero {
            return fail("absorption");
        }
        let (lo, hi) = if ta <= tb { (&a, &b) } else { (&b, &a) };
        if lo.compare(hi) == std::cmp::Ordering::Greater || lo.oplus(&c) > hi.oplus(&c) || lo.odot(&c) > hi.odot(&c) {
            return fail("order monotonicity");
        }
    }
    Ok("1000 random triples, exact arithmetic: 0 failures".into())
}

fn crit8() -> Verdict {
    let fam: Family = FamilySpec::new(vec![5], vec![8, 16, 32, 64]).unwrap().into();
    let battery: [(&str, bool); 10] = [
        ("H(x)", true),
        ("exists z in H. x = e(h+1) + z", true),
        (HH, true),
        (H2H, true),
        ("exists z1 in H. exists z2 in H. exists z3 in H. x = z1 + z2 + z3", true),
        ("x = 0 | x = e(h+1) | x = e(h+2)", true),
        ("!H(x)", false),
        ("!(exists z in H. x = e(h+1) + z)", false),
        ("!(exists z1 in H. exists z2 in H. x = z1 + z2)", false),
        ("exists y. x = 2*y", false),
    ];
    let mut shown = Vec::new();
    for (text, small) in battery {
        let s = sweep(&fam, &nf(text), DEFAULT_BUDGET).map_err(err)?;
        let slope = coarse_dim(&s, Denominator::M).map_err(err)?.slope.ok_or("empty set")?;
        let nearest = if small { 0.0 } else { 1.0 };
        ensure((slope - nearest).abs() <= DIM_TOL, format!("{text}: delta_M {slope:.4}, expected near {nearest}"))?;
        ensure(slope.abs() <= DIM_TOL || (slope - 1.0).abs() <= DIM_TOL, format!("{text}: delta_M {slope:.4} not near 0 or 1"))?;
        shown.push(format!("{slope:.3}"));
    }
    Ok(format!("delta_M = [{}]", shown.join(", ")))
}

fn crit9() -> Verdict {
    let fam: Family = FamilySpec::new(vec![5], vec![8, 16, 32, 64]).unwrap().into();
    let s = sweep(&fam, &nf(HH), DEFAULT_BUDGET).map_err(err)?;
    let dh = coarse_dim(&s, Denominator::H).map_err(err)?.slope.ok_or("empty set")?;
    ensure((dh - 2.0).abs() <= DIM_TOL, format!("delta_H {dh}"))?;
    let lb = lower_bound_diagnostic(&s, 2, LOWER_BOUND_FLOOR).map_err(err)?;
    ensure(lb.holds && lb.min_ratio > 0.0, format!("min |X|/|H|^2 = {}", lb.min_ratio))?;
    Ok(format!("delta_H {dh:.4}, min |X|/|H|^2 = {:.4}", lb.min_ratio))
}

fn crit10() -> Verdict {
    let fam = fit_family();
    let tol = Tolerances::default();
    let maps = [
        ("H(x1) & H(x2) & y = x1", vec!["x1", "x2", "y"], "H(y)"),
        ("H(x) & y = x", vec!["x", "y"], "H(y)"),
        ("H(x) & y = 0", vec!["x", "y"], "y = 0"),
    ];
    let mut shown = Vec::new();
    for (graph, names, base) in maps {
        let g = NormalFormSet::parse(graph, Some(&vars(&names))).map_err(err)?;
        let r = verify_fubini(&fam, &g, &nf(base), &tol, DEFAULT_BUDGET).map_err(err)?;
        ensure(r.holds, format!("{graph}: domain {} vs {}", r.domain, r.expected))?;
        ensure(r.domain.dim() == r.expected.dim(), format!("{graph}: dimensions differ"))?;
        ensure(r.domain.measure().distance(r.expected.measure()) <= MEASURE_TOL, format!("{graph}: measures differ"))?;
        shown.push(r.domain.to_string());
    }
    Ok(format!("domains {}", shown.join(" ")))
}

fn crit11() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let budget = 4_000_000;
    let mut accepted = 0;
    let mut skipped = 0;
    let mut laws = 0;
    let mut previous: Vec<(VectorHModel, Formula, Vec<String>, BigUint)> = Vec::new();
    while accepted < 100 {
        let m = rng.gen_range(1..=2);
        let model = VectorHModel::new(3, m).map_err(err)?;
        let gen = Gen { p: 3, d: 2 * m, h: m };
        let free = if m == 1 || rng.gen_bool(0.5) { vars(&["x", "y"]) } else { vars(&["x"]) };
        let mut scope = free.clone();
        let f = gen.formula(&mut rng, 3, &mut scope, 0);
        let enumerated = match count(&model, &f, &free, Strategy::Enumerate, budget) {
            Ok(c) => c,
            Err(e) if e.is_budget() => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(format!("{f}: {e}")),
        };
        let planned = count(&model, &f, &free, Strategy::HFirst, DEFAULT_BUDGET).map_err(|e| format!("{f}: {e}"))?;
        ensure(planned == enumerated, format!("{f} at m={m}: H-first {planned} vs enumeration {enumerated}"))?;
        let total = model.card_power(free.len());
        let neg = count(&model, &Formula::not(f.clone()), &free, Strategy::HFirst, DEFAULT_BUDGET).map_err(err)?;
        ensure(&neg + &planned == total, format!("{f}: |not f| + |f| != |M|^n"))?;
        laws += 1;
        if let Some((_, g, _, gc)) = previous.iter().rev().find(|(pm, _, pv, _)| pm.p() == model.p() && pm.h() == model.h() && *pv == free) {
            let or = count(&model, &Formula::or(f.clone(), g.clone()), &free, Strategy::HFirst, DEFAULT_BUDGET).map_err(err)?;
            let and = count(&model, &Formula::and(f.clone(), g.clone()), &free, Strategy::HFirst, DEFAULT_BUDGET).map_err(err)?;
            ensure(&or + &and == &planned + gc, format!("inclusion-exclusion fails for {f} and {g}"))?;
            let imp = count(&model, &Formula::implies(f.clone(), g.clone()), &free, Strategy::HFirst, DEFAULT_BUDGET).map_err(err)?;
            ensure(imp == &total - &planned + &and, format!("implication count fails for {f} and {g}"))?;
            laws += 2;
        }
        previous.push((model, f, free, planned));
        accepted += 1;
    }
    Ok(format!("100 formulas agree ({skipped} over budget skipped), {laws} boolean identities exact"))
}

fn crit12() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_hstruct");
    let dir = tempfile::tempdir().map_err(err)?;
    let config = dir.path().join("config.json");
    let text = r#"{
        "family": [{"p": [5, 7, 11], "m": [8]}, {"p": [5], "m": [8, 16, 32]}],
        "task": "dims",
        "formulas": {
            "sum_hh": "exists z1 in H. exists z2 in H. x = z1 + z2",
            "sum_h2h": "exists z1 in H. exists z2 in H. x = z1 + 2*z2",
            "co_h": "!H(x)"
        }
    }"#;
    fs::write(&config, text).map_err(err)?;
    let mut outputs = Vec::new();
    for jobs in ["1", "8"] {
        let out = dir.path().join(format!("out{jobs}"));
        let status = Command::new(bin).args(["run"]).arg(&config).arg("--out").arg(&out).args(["--jobs", jobs]).status().map_err(err)?;
        ensure(status.code() == Some(0), format!("--jobs {jobs} exit {status}"))?;
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .map_err(err)?
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        outputs.push(files);
    }
    ensure(outputs[0] == outputs[1], "reports differ between --jobs 1 and --jobs 8")?;
    Ok(format!("{} report files byte-identical", outputs[0].len()))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("sumset counts exact", crit1),
        ("sumset measures fitted", crit2),
        ("measure from symmetrized formula", crit3),
        ("measuring clause (iii) example", crit4),
        ("H-basis oracle", crit5),
        ("HB and SU additivity", crit6),
        ("semiring laws", crit7),
        ("zero-one law", crit8),
        ("delta_H of H+H", crit9),
        ("Fubini examples", crit10),
        ("counting self-consistency", crit11),
        ("determinism", crit12),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
