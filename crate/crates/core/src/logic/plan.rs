//! H-first solving of bound formulas into regions, and naive evaluation.
//!
//! Quantifiers over `H` are unrolled by substituting each `e_i`, equations
//! become flats, and quantifiers over `M` become projections. Subformulas the
//! region algebra cannot express are evaluated pointwise when the surrounding
//! set is already finite; otherwise planning gives up with `None`.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::logic::bound::{BFormula, LinTerm, VarId};
use crate::logic::linear::{AffineFlat, Row, Tuple};
use crate::logic::region::{Region, Sign};
use crate::model::{FpVector, VectorHModel};
use crate::logic::syntax::Range;

/// Largest finite set the planner will expand into explicit points.
const EXPAND_LIMIT: u64 = 1 << 18;

pub struct Ctx<'a> {
    pub model: &'a VectorHModel,
    budget: u64,
    spent: AtomicU64,
}

impl<'a> Ctx<'a> {
    pub fn new(model: &'a VectorHModel, budget: u64) -> Self {
        Ctx { model, budget, spent: AtomicU64::new(0) }
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn spent(&self) -> u64 {
        self.spent.load(Ordering::Relaxed)
    }

    pub fn remaining(&self) -> u64 {
        self.budget.saturating_sub(self.spent())
    }

    pub fn charge(&self, steps: u64) -> Result<()> {
        let total = self.spent.fetch_add(steps, Ordering::Relaxed).saturating_add(steps);
        if total > self.budget {
            return Err(Error::BudgetExceeded { needed: total.to_string(), budget: self.budget });
        }
        Ok(())
    }

    /// Fails up front when `needed` steps cannot fit in the remaining budget.
    pub fn reserve(&self, needed: &num_bigint::BigUint) -> Result<u64> {
        use num_traits::ToPrimitive;
        match needed.to_u64() {
            Some(n) if n <= self.remaining() => Ok(n),
            _ => Err(Error::BudgetExceeded { needed: needed.to_string(), budget: self.budget }),
        }
    }

    fn limit(&self) -> u64 {
        self.remaining().min(EXPAND_LIMIT)
    }
}

pub struct Planner<'c, 'a> {
    pub ctx: &'c Ctx<'a>,
}

type Env = Vec<Option<FpVector>>;

impl<'c, 'a> Planner<'c, 'a> {
    fn model(&self) -> &VectorHModel {
        self.ctx.model
    }

    fn shape(&self) -> (u32, usize) {
        (self.model().p(), self.model().d())
    }

    /// Splits `t` into scalar coefficients on `scope` and a constant, folding
    /// in substituted variables.
    fn linearize(&self, t: &LinTerm, scope: &[VarId], env: &Env) -> Result<(Vec<u32>, FpVector)> {
        let mut coeffs = vec![0u32; scope.len()];
        let mut constant = t.constant.clone();
        for &(v, c) in &t.coeffs {
            if let Some(pos) = scope.iter().position(|&s| s == v) {
                coeffs[pos] = c;
            } else {
                let value = env[v].as_ref().ok_or_else(|| Error::MissingAssignment(format!("#{v}")))?;
                constant.axpy_in_place(c, value);
            }
        }
        Ok((coeffs, constant))
    }

    /// The flat `Σ coeffs·X = rhs`.
    fn equation(&self, coeffs: Vec<u32>, rhs: FpVector, n: usize) -> Region {
        let (p, d) = self.shape();
        match AffineFlat::from_rows(p, d, n, vec![Row { coeffs, rhs }]) {
            Some(f) => Region::from_flat(f, p, d),
            None => Region::empty(p, d, n),
        }
    }

    pub fn plan(&self, f: &BFormula, scope: &mut Vec<VarId>, env: &mut Env) -> Result<Option<Region>> {
        self.ctx.charge(1)?;
        let (p, d) = self.shape();
        let n = scope.len();
        match f {
            BFormula::Zero(t) => {
                let (coeffs, constant) = self.linearize(t, scope, env)?;
                Ok(Some(self.equation(coeffs, constant.neg(), n)))
            }
            BFormula::InH(t) => {
                let (coeffs, constant) = self.linearize(t, scope, env)?;
                if coeffs.iter().all(|&c| c == 0) {
                    let holds = self.model().in_h(&constant);
                    return Ok(Some(if holds { Region::full(p, d, n) } else { Region::empty(p, d, n) }));
                }
                let branches = self
                    .model()
                    .h_elements()
                    .into_iter()
                    .map(|e| Ok(Some(self.equation(coeffs.clone(), e.sub(&constant)?, n))));
                self.fold(branches, Sign::Pos, n)
            }
            BFormula::Not(g) => Ok(self.plan(g, scope, env)?.map(|r| r.not())),
            BFormula::And(..) => {
                let parts = f.conjuncts();
                self.junction(&parts, Sign::Neg, scope, env)
            }
            BFormula::Or(..) => {
                let parts = f.disjuncts();
                self.junction(&parts, Sign::Pos, scope, env)
            }
            BFormula::Exists { var, range, body } | BFormula::Forall { var, range, body } => {
                let universal = matches!(f, BFormula::Forall { .. });
                if !body.mentions(*var) {
                    return self.plan(body, scope, env);
                }
                match range {
                    Range::H => {
                        let join = if universal { Sign::Neg } else { Sign::Pos };
                        let mut out = Vec::new();
                        for e in self.model().h_elements() {
                            env[*var] = Some(e);
                            let r = self.plan(body, scope, env);
                            env[*var] = None;
                            out.push(r);
                        }
                        self.fold(out.into_iter(), join, n)
                    }
                    Range::All => {
                        scope.push(*var);
                        let r = self.plan(body, scope, env);
                        scope.pop();
                        let Some(r) = r? else { return Ok(None) };
                        let limit = self.ctx.limit();
                        let r = if universal { r.not() } else { r };
                        let projected = r.project_out(n, limit);
                        Ok(projected.map(|q| if universal { q.not() } else { q }))
                    }
                }
            }
        }
    }

    /// Combines branches with `∪` (`join = Pos`) or `∩` (`join = Neg`).
    fn fold<I>(&self, branches: I, join: Sign, n: usize) -> Result<Option<Region>>
    where
        I: Iterator<Item = Result<Option<Region>>>,
    {
        let (p, d) = self.shape();
        let limit = self.ctx.limit();
        // Under ∩ work with complements so that every fold is a union.
        let flip = |r: Region| if join == Sign::Neg { r.not() } else { r };
        let mut acc = Region::empty(p, d, n);
        for b in branches {
            let Some(r) = b? else { return Ok(None) };
            let r = flip(r);
            self.ctx.charge(1 + (r.flats().len() + r.points().len()) as u64)?;
            acc = match acc.or(&r, limit) {
                Some(a) => a,
                None => return Ok(None),
            };
            if acc.is_full() {
                break;
            }
        }
        Ok(Some(flip(acc)))
    }

    /// Conjunction (`join = Neg`) or disjunction (`join = Pos`) of `parts`,
    /// evaluating unplannable parts pointwise on a finite remainder.
    fn junction(&self, parts: &[&BFormula], join: Sign, scope: &mut Vec<VarId>, env: &mut Env) -> Result<Option<Region>> {
        let (p, d) = self.shape();
        let n = scope.len();
        let mut planned = Vec::new();
        let mut deferred = Vec::new();
        for part in parts {
            match self.plan(part, scope, env)? {
                Some(r) => planned.push(Ok(Some(r))),
                None => deferred.push(*part),
            }
        }
        let Some(acc) = self.fold(planned.into_iter(), join, n)? else { return Ok(None) };
        if deferred.is_empty() {
            return Ok(Some(acc));
        }
        // The undecided tuples: the conjunction so far, or the complement of
        // the disjunction so far.
        let undecided = if join == Sign::Neg { acc.clone() } else { acc.not() };
        let Some(points) = undecided.enumerate(self.ctx.limit()) else { return Ok(None) };
        let mut decided = Vec::new();
        for t in points {
            for (v, x) in scope.iter().zip(&t) {
                env[*v] = Some(x.clone());
            }
            let mut keep = join == Sign::Neg;
            for g in &deferred {
                let holds = self.eval_closed(g, env)?;
                if join == Sign::Neg && !holds {
                    keep = false;
                    break;
                }
                if join == Sign::Pos && holds {
                    keep = true;
                    break;
                }
            }
            if keep {
                decided.push(t);
            }
        }
        for v in scope.iter() {
            env[*v] = None;
        }
        let decided = Region::from_points(decided, p, d, n);
        Ok(if join == Sign::Neg { Some(decided) } else { acc.or(&decided, self.ctx.limit()) })
    }

    /// Truth of `f` when every free variable is assigned in `env`.
    pub fn eval_closed(&self, f: &BFormula, env: &mut Env) -> Result<bool> {
        let mut scope = Vec::new();
        match self.plan(f, &mut scope, env)? {
            Some(r) => Ok(!r.is_empty()),
            None => self.naive(f, env),
        }
    }

    /// Tarskian evaluation by exhaustive search over quantifier ranges.
    pub fn naive(&self, f: &BFormula, env: &mut Env) -> Result<bool> {
        self.ctx.charge(1)?;
        Ok(match f {
            BFormula::Zero(t) => t.eval(env)?.is_zero(),
            BFormula::InH(t) => self.model().in_h(&t.eval(env)?),
            BFormula::Not(g) => !self.naive(g, env)?,
            BFormula::And(a, b) => self.naive(a, env)? && self.naive(b, env)?,
            BFormula::Or(a, b) => self.naive(a, env)? || self.naive(b, env)?,
            BFormula::Exists { var, range, body } | BFormula::Forall { var, range, body } => {
                let universal = matches!(f, BFormula::Forall { .. });
                let domain: Box<dyn Iterator<Item = FpVector>> = match range {
                    Range::H => Box::new(self.model().h_elements().into_iter()),
                    Range::All => Box::new(self.model().elements(self.ctx.remaining())?),
                };
                let mut result = universal;
                for x in domain {
                    env[*var] = Some(x);
                    let holds = self.naive(body, env);
                    let holds = match holds {
                        Ok(h) => h,
                        Err(e) => {
                            env[*var] = None;
                            return Err(e);
                        }
                    };
                    if holds != universal {
                        result = !universal;
                        break;
                    }
                }
                env[*var] = None;
                result
            }
        })
    }

    /// All tuples over `0..n` satisfying `f`, by naive evaluation.
    pub fn enumerate_solutions(&self, f: &BFormula, n: usize, env: &mut Env) -> Result<Vec<Tuple>> {
        let total = self.ctx.reserve(&self.model().card_power(n))?;
        let (p, d) = self.shape();
        let mut out = Vec::new();
        let all = AffineFlat::full(p, d, n).enumerate(total).expect("reserved within limits");
        for t in all {
            for (i, x) in t.iter().enumerate() {
                env[i] = Some(x.clone());
            }
            if self.naive(f, env)? {
                out.push(t);
            }
        }
        for slot in env.iter_mut().take(n) {
            *slot = None;
        }
        Ok(out)
    }
}
