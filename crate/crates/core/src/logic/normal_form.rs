//! Sets presented as `∃ z̄ ∈ H^k. ψ(x̄, z̄)`.

use crate::error::{Error, Result};
use crate::logic::count::{solve, Solved};
use crate::logic::linear::Tuple;
use crate::logic::parser::parse;
use crate::logic::syntax::{Formula, Range};
use crate::model::VectorHModel;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalFormSet {
    pub vars: Vec<String>,
    pub h_vars: Vec<String>,
    pub matrix: Formula,
}

impl NormalFormSet {
    /// Peels the leading block of `∃ z ∈ H` quantifiers off `formula`.
    pub fn from_formula(formula: &Formula, vars: &[String]) -> Result<Self> {
        let mut h_vars = Vec::new();
        let mut cur = formula;
        while let Formula::Exists { var, range: Range::H, body } = cur {
            if vars.contains(var) || h_vars.contains(var) {
                break;
            }
            h_vars.push(var.clone());
            cur = body;
        }
        let set = NormalFormSet { vars: vars.to_vec(), h_vars, matrix: cur.clone() };
        for v in set.matrix.free_vars() {
            if !set.vars.contains(&v) && !set.h_vars.contains(&v) {
                return Err(Error::UnboundVariable(v));
            }
        }
        Ok(set)
    }

    /// Parses `text`; with no `vars`, the free variables in order of first
    /// occurrence are used.
    pub fn parse(text: &str, vars: Option<&[String]>) -> Result<Self> {
        let f = parse(text)?;
        let vars = match vars {
            Some(v) => v.to_vec(),
            None => f.free_vars(),
        };
        Self::from_formula(&f, &vars)
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn h_arity(&self) -> usize {
        self.h_vars.len()
    }

    pub fn formula(&self) -> Formula {
        self.h_vars
            .iter()
            .rev()
            .fold(self.matrix.clone(), |body, z| Formula::exists(z, Range::H, body))
    }

    /// True when the matrix mentions neither `H` nor any constant other than `0`.
    pub fn is_l_matrix(&self) -> bool {
        self.matrix.is_l_formula() && self.matrix.basis_constants().is_empty()
    }

    pub fn solve(&self, model: &VectorHModel, budget: u64) -> Result<Solved> {
        solve(model, &self.formula(), &self.vars, budget)
    }

    /// The defined set as a sorted list of tuples.
    pub fn project_solutions(&self, model: &VectorHModel, budget: u64) -> Result<Vec<Tuple>> {
        let solved = self.solve(model, budget)?;
        solved.region.enumerate(budget).ok_or_else(|| Error::BudgetExceeded {
            needed: solved.region.count().to_string(),
            budget,
        })
    }
}
