//! Executes experiments and renders their reports.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::asymptotics::{coarse_dim, fit_dim_measure, lower_bound_diagnostic, sweep, Denominator, SweepResult};
use crate::config::{Expectation, Experiment, Task};
use crate::error::{Error, Result};
use crate::geometry::{profile, su_rank_set_detailed};
use crate::logic::{count_outcome, Method, NormalFormSet};
use crate::measures::{check_measuring, dim_measure_json, fit_report_json, fit_set, measure_via_formula, verify_additivity, verify_fubini};
use crate::model::{ModelSpec, VectorHModel};
use crate::semiring::{law_violations, random_triple, LAWS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_VERIFICATION: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Report files keyed by file name, and the outcome of the run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub files: BTreeMap<String, String>,
    pub budget_exceeded: bool,
    pub failures: Vec<String>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.budget_exceeded {
            EXIT_BUDGET
        } else if !self.failures.is_empty() {
            EXIT_VERIFICATION
        } else {
            EXIT_OK
        }
    }

    fn status(&self) -> &'static str {
        match self.exit_code() {
            EXIT_BUDGET => "budget-exceeded",
            EXIT_VERIFICATION => "verification-failed",
            _ => "ok",
        }
    }

    fn fail(&mut self, what: String) {
        self.failures.push(what);
    }

    /// Records a non-configuration error under `what`; configuration errors
    /// abort the run.
    fn absorb(&mut self, what: &str, e: Error) -> Result<Value> {
        if e.is_config() {
            return Err(e);
        }
        if e.is_budget() {
            self.budget_exceeded = true;
        } else {
            self.fail(format!("{what}: {e}"));
        }
        Ok(json!({ "error": e.to_string() }))
    }

    fn json(&mut self, name: &str, value: Value) {
        let text = serde_json::to_string_pretty(&value).expect("serializable") + "\n";
        self.files.insert(name.to_string(), text);
    }
}

fn member_key(spec: &ModelSpec) -> String {
    format!("p={} m={}", spec.p, spec.m)
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::HFirst => "hfirst",
        Method::Enumerate => "enumerate",
    }
}

/// Runs `f` on every (set, member) pair in parallel; results keep the
/// order of `sets` and of the family.
fn grid<T: Send>(exp: &Experiment, f: impl Fn(&NormalFormSet, &VectorHModel) -> Result<T> + Sync) -> Vec<(String, ModelSpec, Result<T>)> {
    let jobs: Vec<(&String, &NormalFormSet, ModelSpec)> =
        exp.sets.iter().flat_map(|(n, s)| exp.family.members().into_iter().map(move |m| (n, s, m))).collect();
    jobs.into_par_iter()
        .map(|(name, set, spec)| {
            let r = VectorHModel::from_spec(spec).and_then(|model| f(set, &model));
            (name.clone(), spec, r)
        })
        .collect()
}

fn run_count(exp: &Experiment, report: &mut Report) -> Result<()> {
    let results = grid(exp, |set, model| count_outcome(model, &set.formula(), &set.vars, exp.strategy, exp.budget));
    let mut out: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    let mut csv = String::from("name,p,m,count,method\n");
    for (name, spec, r) in results {
        let row = match r {
            Ok(c) => {
                csv.push_str(&format!("{name},{},{},{},{}\n", spec.p, spec.m, c.count, method_name(c.method)));
                json!({ "p": spec.p, "m": spec.m, "count": c.count.to_string(), "method": method_name(c.method) })
            }
            Err(e) => {
                csv.push_str(&format!("{name},{},{},gap,\n", spec.p, spec.m));
                let mut v = report.absorb(&format!("count {name} at {}", member_key(&spec)), e)?;
                v["p"] = json!(spec.p);
                v["m"] = json!(spec.m);
                v
            }
        };
        out.entry(name).or_default().push(row);
    }
    report.json("count.json", json!({ "task": "count", "results": out }));
    report.files.insert("count.csv".into(), csv);
    Ok(())
}

const PROFILE_ENUMERATION_LIMIT: u64 = 1 << 16;

fn run_profile(exp: &Experiment, report: &mut Report) -> Result<()> {
    let results = grid(exp, |set, model| {
        let rank = su_rank_set_detailed(model, set, exp.budget)?;
        let region = set.solve(model, exp.budget)?.region;
        let listed = region.enumerate(PROFILE_ENUMERATION_LIMIT.min(exp.budget));
        let mut profiles = Vec::new();
        if let Some(all) = &listed {
            for t in all.iter().take(exp.profile_limit) {
                let shown: Vec<String> = t.iter().map(|v| v.to_string()).collect();
                profiles.push(json!({ "tuple": shown, "profile": profile(model, t, &[])?.to_string() }));
            }
        }
        Ok(json!({
            "count": region.count().to_string(),
            "su_rank": rank.as_ref().map(|r| [r.su.0, r.su.1]),
            "evidence": rank.as_ref().map(|r| r.evidence),
            "solutions_listed": listed.is_some(),
            "profiles": profiles,
        }))
    });
    let mut out: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    for (name, spec, r) in results {
        let mut v = match r {
            Ok(v) => v,
            Err(e) => report.absorb(&format!("profile {name} at {}", member_key(&spec)), e)?,
        };
        v["p"] = json!(spec.p);
        v["m"] = json!(spec.m);
        out.entry(name).or_default().push(v);
    }
    report.json("profile.json", json!({ "task": "profile", "results": out }));
    Ok(())
}

fn sweeps(exp: &Experiment, report: &mut Report) -> Result<BTreeMap<String, Option<SweepResult>>> {
    let done: Vec<(String, Result<SweepResult>)> = exp
        .sets
        .par_iter()
        .map(|(name, set)| (name.clone(), sweep(&exp.family, set, exp.budget)))
        .collect();
    let mut out = BTreeMap::new();
    for (name, r) in done {
        match r {
            Ok(s) => {
                if s.has_gaps() {
                    report.budget_exceeded = true;
                }
                report.files.insert(format!("sweep_{name}.csv"), s.to_csv());
                out.insert(name, Some(s));
            }
            Err(e) => {
                report.absorb(&format!("sweep {name}"), e)?;
                out.insert(name, None);
            }
        }
    }
    Ok(out)
}

fn run_sweep(exp: &Experiment, report: &mut Report) -> Result<()> {
    let done = sweeps(exp, report)?;
    let files: Vec<String> = done.keys().map(|n| format!("sweep_{n}.csv")).collect();
    report.json("sweep.json", json!({ "task": "sweep", "files": files }));
    Ok(())
}

fn or_reason<T: serde::Serialize>(r: Result<T>) -> Result<Value> {
    match r {
        Ok(v) => Ok(serde_json::to_value(v).expect("serializable")),
        Err(e) if e.is_config() => Err(e),
        Err(e) => Ok(json!({ "undetermined": e.to_string() })),
    }
}

fn run_dims(exp: &Experiment, report: &mut Report) -> Result<()> {
    let done = sweeps(exp, report)?;
    let mut out = BTreeMap::new();
    for (name, s) in done {
        let Some(s) = s else { continue };
        let set = &exp.sets[&name];
        let fit = fit_dim_measure(&s, set.h_arity() as u32);
        let lower = match &fit {
            Ok(f) if f.triple.n() == 0 && f.triple.k() > 0 => or_reason(lower_bound_diagnostic(&s, f.triple.k(), exp.tolerances.lower_bound_floor))?,
            _ => Value::Null,
        };
        let fit = match fit {
            Ok(f) => fit_report_json(&f),
            Err(e) => or_reason::<()>(Err(e))?,
        };
        out.insert(
            name,
            json!({
                "delta_m": or_reason(coarse_dim(&s, Denominator::M))?,
                "delta_h": or_reason(coarse_dim(&s, Denominator::H))?,
                "fit": fit,
                "lower_bound": lower,
            }),
        );
    }
    report.json("dims.json", json!({ "task": "dims", "results": out }));
    Ok(())
}

fn run_measure(exp: &Experiment, report: &mut Report) -> Result<()> {
    let tol = &exp.tolerances;
    let done: Vec<(String, Result<Value>, bool)> = exp
        .candidates
        .par_iter()
        .map(|(name, c)| {
            let cand = &c.candidate;
            let r = measure_via_formula(&exp.family, cand, tol, exp.budget).and_then(|t| {
                let target = fit_set(&exp.family, &cand.target, exp.budget);
                let (target_json, agree) = match &target {
                    Ok(f) => {
                        let ok = f.triple.dim() == t.dim() && f.triple.measure().distance(t.measure()) <= tol.measure;
                        (fit_report_json(f), Some(ok))
                    }
                    Err(e) if e.is_budget() || e.is_config() => return Err(e.clone()),
                    Err(e) => (json!({ "undetermined": e.to_string() }), None),
                };
                let mut v = dim_measure_json(&t);
                v["target_fit"] = target_json;
                v["routes_agree"] = json!(agree);
                Ok(v)
            });
            let disagree = matches!(&r, Ok(v) if v["routes_agree"] == json!(false));
            (name.clone(), r, disagree)
        })
        .collect();
    let mut out = BTreeMap::new();
    for (name, r, disagree) in done {
        let v = match r {
            Ok(v) => v,
            Err(e) => report.absorb(&format!("measure {name}"), e)?,
        };
        if disagree {
            report.fail(format!("measure {name}: formula measure and target fit disagree"));
        }
        out.insert(name, v);
    }
    report.json("measure.json", json!({ "task": "measure", "results": out }));
    Ok(())
}

fn run_check_measuring(exp: &Experiment, report: &mut Report) -> Result<()> {
    let done: Vec<(String, Result<crate::measures::MeasureReport>)> = exp
        .candidates
        .par_iter()
        .map(|(name, c)| (name.clone(), check_measuring(&exp.family, &c.candidate, &exp.tolerances, exp.budget)))
        .collect();
    let mut out = BTreeMap::new();
    for (name, r) in done {
        let expect = exp.candidates[&name].expect.unwrap_or(Expectation::Pass);
        let v = match r {
            Ok(m) => {
                let passed = m.passed();
                if passed != (expect == Expectation::Pass) {
                    let failed: Vec<&str> = m.clauses.iter().filter(|(_, &b)| !b).map(|(c, _)| c.as_str()).collect();
                    report.fail(format!("check-measuring {name}: expected {expect:?}, failing clauses [{}]", failed.join(",")));
                }
                let mut v = m.to_json();
                v["passed"] = json!(passed);
                v["expect"] = json!(expect);
                v
            }
            Err(e) => report.absorb(&format!("check-measuring {name}"), e)?,
        };
        out.insert(name, v);
    }
    report.json("check-measuring.json", json!({ "task": "check-measuring", "results": out }));
    Ok(())
}

fn run_additivity(exp: &Experiment, report: &mut Report) -> Result<()> {
    let done: Vec<_> = exp
        .pairs
        .par_iter()
        .map(|(a, b)| verify_additivity(&exp.family, &exp.sets[a], &exp.sets[b], &exp.tolerances, exp.budget))
        .collect();
    let mut out = Vec::new();
    for ((a, b), r) in exp.pairs.iter().zip(done) {
        let what = format!("additivity {a} + {b}");
        let mut v = match r {
            Ok(rep) => {
                if !rep.holds {
                    report.fail(format!("{what}: union {} differs from {}", rep.union, rep.expected));
                }
                rep.to_json()
            }
            Err(e) => report.absorb(&what, e)?,
        };
        v["pair"] = json!([a, b]);
        out.push(v);
    }
    report.json("verify-additivity.json", json!({ "task": "verify-additivity", "results": out }));
    Ok(())
}

fn run_fubini(exp: &Experiment, report: &mut Report) -> Result<()> {
    let done: Vec<_> = exp
        .maps
        .par_iter()
        .map(|m| verify_fubini(&exp.family, &exp.sets[&m.graph], &exp.sets[&m.base], &exp.tolerances, exp.budget))
        .collect();
    let mut out = Vec::new();
    for (m, r) in exp.maps.iter().zip(done) {
        let what = format!("fubini {} over {}", m.graph, m.base);
        let mut v = match r {
            Ok(rep) => {
                if !rep.holds {
                    report.fail(format!("{what}: domain {} differs from {}", rep.domain, rep.expected));
                }
                rep.to_json()
            }
            Err(e) => report.absorb(&what, e)?,
        };
        v["graph"] = json!(m.graph);
        v["base"] = json!(m.base);
        out.push(v);
    }
    report.json("verify-fubini.json", json!({ "task": "verify-fubini", "results": out }));
    Ok(())
}

fn run_semiring(exp: &Experiment, report: &mut Report) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(exp.semiring.seed);
    let cases: Vec<_> = (0..exp.semiring.cases).map(|_| (random_triple(&mut rng), random_triple(&mut rng), random_triple(&mut rng))).collect();
    let violations: Vec<Vec<&str>> = cases.par_iter().map(|(a, b, c)| law_violations(a, b, c)).collect();
    let mut counts: BTreeMap<&str, usize> = LAWS.iter().map(|l| (*l, 0)).collect();
    let mut examples: BTreeMap<&str, String> = BTreeMap::new();
    for ((a, b, c), v) in cases.iter().zip(&violations) {
        for law in v {
            *counts.get_mut(law).expect("known law") += 1;
            examples.entry(law).or_insert_with(|| format!("{a} {b} {c}"));
        }
    }
    for (law, n) in &counts {
        if *n > 0 {
            report.fail(format!("semiring law {law} fails in {n} cases"));
        }
    }
    report.json(
        "verify-semiring.json",
        json!({ "task": "verify-semiring", "cases": exp.semiring.cases, "seed": exp.semiring.seed, "violations": counts, "examples": examples }),
    );
    Ok(())
}

/// Runs `exp`; configuration errors met while running are returned as `Err`.
pub fn run(exp: &Experiment) -> Result<Report> {
    let mut report = Report::default();
    match exp.task {
        Task::Count => run_count(exp, &mut report)?,
        Task::Profile => run_profile(exp, &mut report)?,
        Task::Sweep => run_sweep(exp, &mut report)?,
        Task::Dims => run_dims(exp, &mut report)?,
        Task::Measure => run_measure(exp, &mut report)?,
        Task::CheckMeasuring => run_check_measuring(exp, &mut report)?,
        Task::VerifyAdditivity => run_additivity(exp, &mut report)?,
        Task::VerifyFubini => run_fubini(exp, &mut report)?,
        Task::VerifySemiring => run_semiring(exp, &mut report)?,
    }
    let members: Vec<Value> = exp.family.members().iter().map(|s| json!({ "p": s.p, "m": s.m })).collect();
    let summary = json!({
        "task": exp.task.name(),
        "status": report.status(),
        "exit_code": report.exit_code(),
        "failures": report.failures,
        "budget": exp.budget,
        "members": members,
    });
    report.json("summary.json", summary);
    Ok(report)
}

/// Parses, resolves and runs a config text.
pub fn run_config(text: &str, budget: Option<u64>) -> Result<Report> {
    let exp = crate::config::ExperimentConfig::from_json(text)?.resolve(budget)?;
    run(&exp)
}
