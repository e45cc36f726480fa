//! Formulas resolved against a concrete model.
//!
//! Variables become dense indices: the requested free variables come first,
//! then one fresh index per binder, so shadowing is resolved once here.
//! Equations are normalized to `Σ c_j X_j + v = 0`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::logic::syntax::{Atom, Constant, Formula, Range, Term};
use crate::model::{FpVector, VectorHModel};

pub type VarId = usize;

/// `Σ c_j X_j + constant`, with nonzero coefficients only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinTerm {
    pub coeffs: Vec<(VarId, u32)>,
    pub constant: FpVector,
}

#[derive(Clone, Debug)]
pub enum BFormula {
    /// The term equals zero.
    Zero(LinTerm),
    InH(LinTerm),
    Not(Box<BFormula>),
    And(Box<BFormula>, Box<BFormula>),
    Or(Box<BFormula>, Box<BFormula>),
    Exists { var: VarId, range: Range, body: Box<BFormula> },
    Forall { var: VarId, range: Range, body: Box<BFormula> },
}

#[derive(Clone, Debug)]
pub struct Bound {
    pub formula: BFormula,
    pub frees: Vec<String>,
    pub var_count: usize,
}

impl LinTerm {
    fn add_term(&mut self, p: u32, var: VarId, c: u32) {
        if let Some(entry) = self.coeffs.iter_mut().find(|(v, _)| *v == var) {
            entry.1 = (entry.1 + c) % p;
        } else {
            self.coeffs.push((var, c % p));
        }
        self.coeffs.retain(|&(_, c)| c != 0);
    }

    pub fn coeff(&self, var: VarId) -> u32 {
        self.coeffs.iter().find(|(v, _)| *v == var).map_or(0, |&(_, c)| c)
    }

    /// Value under an assignment of every variable that occurs.
    pub fn eval(&self, env: &[Option<FpVector>]) -> Result<FpVector> {
        let mut acc = self.constant.clone();
        for &(v, c) in &self.coeffs {
            let value = env.get(v).and_then(|x| x.as_ref()).ok_or_else(|| Error::MissingAssignment(format!("#{v}")))?;
            acc.axpy_in_place(c, value);
        }
        Ok(acc)
    }
}

impl BFormula {
    /// True when `var` occurs with a nonzero coefficient somewhere.
    pub fn mentions(&self, var: VarId) -> bool {
        match self {
            BFormula::Zero(t) | BFormula::InH(t) => t.coeff(var) != 0,
            BFormula::Not(f) => f.mentions(var),
            BFormula::And(a, b) | BFormula::Or(a, b) => a.mentions(var) || b.mentions(var),
            BFormula::Exists { body, .. } | BFormula::Forall { body, .. } => body.mentions(var),
        }
    }

    pub fn conjuncts(&self) -> Vec<&BFormula> {
        match self {
            BFormula::And(a, b) => {
                let mut out = a.conjuncts();
                out.extend(b.conjuncts());
                out
            }
            f => vec![f],
        }
    }

    pub fn disjuncts(&self) -> Vec<&BFormula> {
        match self {
            BFormula::Or(a, b) => {
                let mut out = a.disjuncts();
                out.extend(b.disjuncts());
                out
            }
            f => vec![f],
        }
    }
}

struct Binder<'a> {
    model: &'a VectorHModel,
    scope: HashMap<String, Vec<VarId>>,
    next: VarId,
}

impl Binder<'_> {
    fn constant(&self, c: &Constant) -> Result<FpVector> {
        let model = self.model;
        match c {
            Constant::Zero => Ok(model.zero()),
            Constant::Basis(i) => {
                if *i == 0 || *i > model.d() {
                    return Err(Error::BasisOutOfRange { name: c.to_string(), dim: model.d() });
                }
                model.basis(*i)
            }
            Constant::AfterH(i) => {
                let idx = model.h() + i;
                if *i == 0 || idx > model.d() {
                    return Err(Error::BasisOutOfRange { name: c.to_string(), dim: model.d() });
                }
                model.basis(idx)
            }
        }
    }

    fn lookup(&self, name: &str) -> Result<VarId> {
        self.scope
            .get(name)
            .and_then(|s| s.last())
            .copied()
            .ok_or_else(|| Error::UnboundVariable(name.to_string()))
    }

    /// Accumulates `sign · t` into `acc`.
    fn term_into(&self, t: &Term, negate: bool, acc: &mut LinTerm) -> Result<()> {
        let p = self.model.p();
        for s in &t.summands {
            let c = s.coeff.unwrap_or(1);
            if c >= p as u64 {
                return Err(Error::ScalarOutOfRange { scalar: c, p });
            }
            let c = c as u32;
            let c = if negate { (p - c) % p } else { c };
            match &s.atom {
                Atom::Var(name) => {
                    let v = self.lookup(name)?;
                    acc.add_term(p, v, c);
                }
                Atom::Const(k) => {
                    let value = self.constant(k)?;
                    acc.constant.axpy_in_place(c, &value);
                }
            }
        }
        Ok(())
    }

    fn empty_term(&self) -> LinTerm {
        LinTerm { coeffs: Vec::new(), constant: self.model.zero() }
    }

    fn bind(&mut self, f: &Formula) -> Result<BFormula> {
        Ok(match f {
            Formula::Eq(l, r) => {
                let mut t = self.empty_term();
                self.term_into(l, false, &mut t)?;
                self.term_into(r, true, &mut t)?;
                BFormula::Zero(t)
            }
            Formula::InH(term) => {
                let mut t = self.empty_term();
                self.term_into(term, false, &mut t)?;
                BFormula::InH(t)
            }
            Formula::Not(g) => BFormula::Not(Box::new(self.bind(g)?)),
            Formula::And(a, b) => BFormula::And(Box::new(self.bind(a)?), Box::new(self.bind(b)?)),
            Formula::Or(a, b) => BFormula::Or(Box::new(self.bind(a)?), Box::new(self.bind(b)?)),
            Formula::Implies(a, b) => {
                BFormula::Or(Box::new(BFormula::Not(Box::new(self.bind(a)?))), Box::new(self.bind(b)?))
            }
            Formula::Exists { var, range, body } | Formula::Forall { var, range, body } => {
                let id = self.next;
                self.next += 1;
                self.scope.entry(var.clone()).or_default().push(id);
                let body = self.bind(body);
                if let Some(s) = self.scope.get_mut(var) {
                    s.pop();
                }
                let body = Box::new(body?);
                if matches!(f, Formula::Exists { .. }) {
                    BFormula::Exists { var: id, range: *range, body }
                } else {
                    BFormula::Forall { var: id, range: *range, body }
                }
            }
        })
    }
}

/// Resolves `formula` with the free variables `frees` (in that order) mapped
/// to indices `0..frees.len()`.
pub fn bind(model: &VectorHModel, formula: &Formula, frees: &[String]) -> Result<Bound> {
    let mut scope: HashMap<String, Vec<VarId>> = HashMap::new();
    for (i, name) in frees.iter().enumerate() {
        if scope.contains_key(name) {
            return Err(Error::DuplicateVariable(name.clone()));
        }
        scope.insert(name.clone(), vec![i]);
    }
    let mut binder = Binder { model, scope, next: frees.len() };
    let bound = binder.bind(formula)?;
    Ok(Bound { formula: bound, frees: frees.to_vec(), var_count: binder.next })
}
