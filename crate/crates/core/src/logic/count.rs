//! Counting and evaluation entry points.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::bound::bind;
use crate::logic::plan::{Ctx, Planner};
use crate::logic::region::Region;
use crate::logic::syntax::Formula;
use crate::model::{FpVector, VectorHModel};

pub const DEFAULT_BUDGET: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// H-first solving, falling back to enumeration within budget.
    #[default]
    Auto,
    /// Exhaustive enumeration with naive evaluation.
    Enumerate,
    /// H-first solving only; fails with `NotSolvable` otherwise.
    #[serde(rename = "hfirst")]
    HFirst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[serde(rename = "hfirst")]
    HFirst,
    Enumerate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountOutcome {
    pub count: BigUint,
    pub method: Method,
}

/// The solution set of a formula together with how it was obtained.
#[derive(Clone, Debug)]
pub struct Solved {
    pub region: Region,
    pub method: Method,
}

fn env_for(var_count: usize, fixed: &[FpVector]) -> Vec<Option<FpVector>> {
    let mut env = vec![None; var_count];
    for (slot, v) in env.iter_mut().zip(fixed) {
        *slot = Some(v.clone());
    }
    env
}

fn check_values(model: &VectorHModel, values: &[FpVector]) -> Result<()> {
    for v in values {
        if v.modulus() != model.p() {
            return Err(Error::ModulusMismatch { left: v.modulus(), right: model.p() });
        }
        if v.dim() != model.d() {
            return Err(Error::DimensionMismatch { left: v.dim(), right: model.d() });
        }
    }
    Ok(())
}

/// `{ x̄ ∈ M^{|vars|} : M ⊨ φ(x̄, fixed) }`, where `fixed` assigns further
/// free variables by name.
pub fn solve_with(
    model: &VectorHModel,
    formula: &Formula,
    vars: &[String],
    fixed: &[(String, FpVector)],
    strategy: Strategy,
    budget: u64,
) -> Result<Solved> {
    let mut names: Vec<String> = fixed.iter().map(|(n, _)| n.clone()).collect();
    names.extend(vars.iter().cloned());
    let values: Vec<FpVector> = fixed.iter().map(|(_, v)| v.clone()).collect();
    check_values(model, &values)?;
    let bound = bind(model, formula, &names)?;
    let ctx = Ctx::new(model, budget);
    let planner = Planner { ctx: &ctx };
    let mut env = env_for(bound.var_count, &values);
    let k = fixed.len();
    let (p, d) = (model.p(), model.d());
    if strategy != Strategy::Enumerate {
        let mut scope: Vec<usize> = (k..k + vars.len()).collect();
        if let Some(region) = planner.plan(&bound.formula, &mut scope, &mut env)? {
            return Ok(Solved { region, method: Method::HFirst });
        }
        if strategy == Strategy::HFirst {
            return Err(Error::NotSolvable);
        }
    }
    // Enumerate over the variables after the fixed prefix.
    let total = ctx.reserve(&model.card_power(vars.len()))?;
    let all = crate::logic::linear::AffineFlat::full(p, d, vars.len())
        .enumerate(total)
        .expect("reserved within limits");
    let mut points = Vec::new();
    for t in all {
        for (i, x) in t.iter().enumerate() {
            env[k + i] = Some(x.clone());
        }
        if planner.naive(&bound.formula, &mut env)? {
            points.push(t);
        }
    }
    Ok(Solved { region: Region::from_points(points, p, d, vars.len()), method: Method::Enumerate })
}

pub fn solve(model: &VectorHModel, formula: &Formula, vars: &[String], budget: u64) -> Result<Solved> {
    solve_with(model, formula, vars, &[], Strategy::Auto, budget)
}

/// `|{ x̄ ∈ M^{|vars|} : M ⊨ φ(x̄) }|`.
pub fn count_outcome(
    model: &VectorHModel,
    formula: &Formula,
    vars: &[String],
    strategy: Strategy,
    budget: u64,
) -> Result<CountOutcome> {
    let solved = solve_with(model, formula, vars, &[], strategy, budget)?;
    Ok(CountOutcome { count: solved.region.count(), method: solved.method })
}

pub fn count(model: &VectorHModel, formula: &Formula, vars: &[String], strategy: Strategy, budget: u64) -> Result<BigUint> {
    Ok(count_outcome(model, formula, vars, strategy, budget)?.count)
}

/// Truth of `φ` under `assignment`, which must cover every free variable.
pub fn eval_with_budget(
    model: &VectorHModel,
    formula: &Formula,
    assignment: &[(String, FpVector)],
    strategy: Strategy,
    budget: u64,
) -> Result<bool> {
    let solved = solve_with(model, formula, &[], assignment, strategy, budget)?;
    Ok(!solved.region.is_empty())
}

pub fn eval(model: &VectorHModel, formula: &Formula, assignment: &[(String, FpVector)]) -> Result<bool> {
    eval_with_budget(model, formula, assignment, Strategy::Auto, DEFAULT_BUDGET)
}
