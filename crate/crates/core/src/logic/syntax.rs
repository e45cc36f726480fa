//! Surface syntax of formulas and its pretty-printer.
//!
//! Printing inserts only the parentheses the grammar needs, so that
//! `parse(print(f)) == f` structurally.

use std::fmt;

/// Constant vectors: `0`, `e<i>` (the i-th standard basis vector) and
/// `e(h+<i>)`, the i-th basis vector after `H`, which names the same kind of
/// element in every member of a family.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constant {
    Zero,
    Basis(usize),
    AfterH(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Var(String),
    Const(Constant),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Summand {
    pub coeff: Option<u64>,
    pub atom: Atom,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub summands: Vec<Summand>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Range {
    All,
    H,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Eq(Term, Term),
    InH(Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists { var: String, range: Range, body: Box<Formula> },
    Forall { var: String, range: Range, body: Box<Formula> },
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term { summands: vec![Summand { coeff: None, atom: Atom::Var(name.to_string()) }] }
    }

    pub fn constant(c: Constant) -> Term {
        Term { summands: vec![Summand { coeff: None, atom: Atom::Const(c) }] }
    }

    pub fn zero() -> Term {
        Term::constant(Constant::Zero)
    }

    /// `self + coeff·name`.
    pub fn plus(mut self, coeff: u64, name: &str) -> Term {
        let coeff = if coeff == 1 { None } else { Some(coeff) };
        self.summands.push(Summand { coeff, atom: Atom::Var(name.to_string()) });
        self
    }

    pub fn plus_const(mut self, coeff: u64, c: Constant) -> Term {
        let coeff = if coeff == 1 { None } else { Some(coeff) };
        self.summands.push(Summand { coeff, atom: Atom::Const(c) });
        self
    }

    fn rename(&mut self, from: &str, to: &str) {
        for s in &mut self.summands {
            if let Atom::Var(v) = &mut s.atom {
                if v == from {
                    *v = to.to_string();
                }
            }
        }
    }
}

impl Formula {
    pub fn eq(l: Term, r: Term) -> Formula {
        Formula::Eq(l, r)
    }

    pub fn in_h(t: Term) -> Formula {
        Formula::InH(t)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn exists(var: &str, range: Range, body: Formula) -> Formula {
        Formula::Exists { var: var.to_string(), range, body: Box::new(body) }
    }

    pub fn forall(var: &str, range: Range, body: Formula) -> Formula {
        Formula::Forall { var: var.to_string(), range, body: Box::new(body) }
    }

    /// Left-nested disjunction of a nonempty list.
    pub fn disjunction(mut parts: Vec<Formula>) -> Option<Formula> {
        if parts.is_empty() {
            return None;
        }
        let first = parts.remove(0);
        Some(parts.into_iter().fold(first, Formula::or))
    }

    pub fn conjunction(mut parts: Vec<Formula>) -> Option<Formula> {
        if parts.is_empty() {
            return None;
        }
        let first = parts.remove(0);
        Some(parts.into_iter().fold(first, Formula::and))
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bound = Vec::new();
        self.collect_free(&mut bound, &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let visit_term = |t: &Term, bound: &Vec<String>, out: &mut Vec<String>| {
            for s in &t.summands {
                if let Atom::Var(v) = &s.atom {
                    if !bound.contains(v) && !out.contains(v) {
                        out.push(v.clone());
                    }
                }
            }
        };
        match self {
            Formula::Eq(l, r) => {
                visit_term(l, bound, out);
                visit_term(r, bound, out);
            }
            Formula::InH(t) => visit_term(t, bound, out),
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists { var, body, .. } | Formula::Forall { var, body, .. } => {
                bound.push(var.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// True when no `H(..)` atom and no H-ranged quantifier occurs.
    pub fn is_l_formula(&self) -> bool {
        match self {
            Formula::Eq(..) => true,
            Formula::InH(_) => false,
            Formula::Not(f) => f.is_l_formula(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => a.is_l_formula() && b.is_l_formula(),
            Formula::Exists { range, body, .. } | Formula::Forall { range, body, .. } => {
                *range == Range::All && body.is_l_formula()
            }
        }
    }

    /// Constants other than `0` mentioned anywhere in the formula.
    pub fn basis_constants(&self) -> Vec<Constant> {
        let mut out = Vec::new();
        self.visit_terms(&mut |t| {
            for s in &t.summands {
                if let Atom::Const(c) = &s.atom {
                    if *c != Constant::Zero && !out.contains(c) {
                        out.push(c.clone());
                    }
                }
            }
        });
        out
    }

    fn visit_terms(&self, f: &mut dyn FnMut(&Term)) {
        match self {
            Formula::Eq(l, r) => {
                f(l);
                f(r);
            }
            Formula::InH(t) => f(t),
            Formula::Not(g) => g.visit_terms(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.visit_terms(f);
                b.visit_terms(f);
            }
            Formula::Exists { body, .. } | Formula::Forall { body, .. } => body.visit_terms(f),
        }
    }

    /// Simultaneously renames free occurrences according to `map`.
    pub fn rename_free(&self, map: &[(String, String)]) -> Formula {
        // Route through fresh placeholder names so that swaps like z1<->z2 work.
        let tmp: Vec<(String, String, String)> = map
            .iter()
            .enumerate()
            .map(|(i, (from, to))| (from.clone(), format!("\u{0}tmp{i}"), to.clone()))
            .collect();
        let mut out = self.clone();
        for (from, mid, _) in &tmp {
            out = out.rename_one(from, mid);
        }
        for (_, mid, to) in &tmp {
            out = out.rename_one(mid, to);
        }
        out
    }

    fn rename_one(&self, from: &str, to: &str) -> Formula {
        match self {
            Formula::Eq(l, r) => {
                let (mut l, mut r) = (l.clone(), r.clone());
                l.rename(from, to);
                r.rename(from, to);
                Formula::Eq(l, r)
            }
            Formula::InH(t) => {
                let mut t = t.clone();
                t.rename(from, to);
                Formula::InH(t)
            }
            Formula::Not(f) => Formula::not(f.rename_one(from, to)),
            Formula::And(a, b) => Formula::and(a.rename_one(from, to), b.rename_one(from, to)),
            Formula::Or(a, b) => Formula::or(a.rename_one(from, to), b.rename_one(from, to)),
            Formula::Implies(a, b) => Formula::implies(a.rename_one(from, to), b.rename_one(from, to)),
            Formula::Exists { var, range, body } => {
                let body = if var == from { (**body).clone() } else { body.rename_one(from, to) };
                Formula::Exists { var: var.clone(), range: *range, body: Box::new(body) }
            }
            Formula::Forall { var, range, body } => {
                let body = if var == from { (**body).clone() } else { body.rename_one(from, to) };
                Formula::Forall { var: var.clone(), range: *range, body: Box::new(body) }
            }
        }
    }

    /// Top-level disjuncts, flattening nested `|`.
    pub fn disjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::Or(a, b) => {
                let mut out = a.disjuncts();
                out.extend(b.disjuncts());
                out
            }
            f => vec![f],
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Exists { .. } | Formula::Forall { .. } => 0,
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Not(_) => 4,
            Formula::Eq(..) | Formula::InH(_) => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let wrap = self.precedence() < min_prec;
        if wrap {
            write!(f, "(")?;
        }
        match self {
            Formula::Eq(l, r) => write!(f, "{l} = {r}")?,
            Formula::InH(t) => write!(f, "H({t})")?,
            Formula::Not(g) => {
                write!(f, "!")?;
                g.fmt_at(f, 4)?;
            }
            Formula::And(a, b) => {
                a.fmt_at(f, 3)?;
                write!(f, " & ")?;
                b.fmt_at(f, 4)?;
            }
            Formula::Or(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, " | ")?;
                b.fmt_at(f, 3)?;
            }
            Formula::Implies(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " -> ")?;
                b.fmt_at(f, 2)?;
            }
            Formula::Exists { var, range, body } | Formula::Forall { var, range, body } => {
                let kw = if matches!(self, Formula::Exists { .. }) { "exists" } else { "forall" };
                let r = if *range == Range::H { " in H" } else { "" };
                write!(f, "{kw} {var}{r}. ")?;
                body.fmt_at(f, 0)?;
            }
        }
        if wrap {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Zero => write!(f, "0"),
            Constant::Basis(i) => write!(f, "e{i}"),
            Constant::AfterH(i) => write!(f, "e(h+{i})"),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.summands.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if let Some(c) = s.coeff {
                write!(f, "{c}*")?;
            }
            match &s.atom {
                Atom::Var(v) => write!(f, "{v}")?,
                Atom::Const(c) => write!(f, "{c}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}
