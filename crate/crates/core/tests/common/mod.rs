#![allow(dead_code)]

use hstruct::logic::{Atom, Constant, Formula, Range, Summand, Term};
use rand::Rng;

/// Shape of the random formulas: `p`, `d`, `h` of the target model.
pub struct Gen {
    pub p: u32,
    pub d: usize,
    pub h: usize,
}

const BOUND: [&str; 3] = ["u", "v", "w"];

impl Gen {
    fn summand<R: Rng>(&self, rng: &mut R, scope: &[String]) -> Summand {
        let coeff = if self.p > 2 && rng.gen_bool(0.3) { Some(rng.gen_range(2..self.p as u64)) } else { None };
        if !scope.is_empty() && rng.gen_bool(0.7) {
            let v = &scope[rng.gen_range(0..scope.len())];
            return Summand { coeff, atom: Atom::Var(v.clone()) };
        }
        let c = match rng.gen_range(0..3) {
            0 => return Summand { coeff: None, atom: Atom::Const(Constant::Zero) },
            1 => Constant::Basis(rng.gen_range(1..=self.d)),
            _ if self.d > self.h => Constant::AfterH(rng.gen_range(1..=self.d - self.h)),
            _ => Constant::Basis(1),
        };
        Summand { coeff, atom: Atom::Const(c) }
    }

    pub fn term<R: Rng>(&self, rng: &mut R, scope: &[String]) -> Term {
        let n = rng.gen_range(1..=3);
        Term { summands: (0..n).map(|_| self.summand(rng, scope)).collect() }
    }

    fn atom<R: Rng>(&self, rng: &mut R, scope: &[String]) -> Formula {
        if rng.gen_bool(0.6) {
            Formula::eq(self.term(rng, scope), self.term(rng, scope))
        } else {
            Formula::in_h(self.term(rng, scope))
        }
    }

    /// A random formula over the variables in `scope`; at most two
    /// quantifiers over `M` are nested.
    pub fn formula<R: Rng>(&self, rng: &mut R, depth: usize, scope: &mut Vec<String>, m_quants: usize) -> Formula {
        if depth == 0 || rng.gen_bool(0.2) {
            return self.atom(rng, scope);
        }
        match rng.gen_range(0..6) {
            0 => Formula::not(self.formula(rng, depth - 1, scope, m_quants)),
            1 => Formula::and(self.formula(rng, depth - 1, scope, m_quants), self.formula(rng, depth - 1, scope, m_quants)),
            2 => Formula::or(self.formula(rng, depth - 1, scope, m_quants), self.formula(rng, depth - 1, scope, m_quants)),
            3 => Formula::implies(self.formula(rng, depth - 1, scope, m_quants), self.formula(rng, depth - 1, scope, m_quants)),
            _ => {
                let Some(var) = BOUND.iter().find(|b| !scope.iter().any(|s| s == *b)) else {
                    return self.atom(rng, scope);
                };
                let range = if m_quants >= 2 || rng.gen_bool(0.5) { Range::H } else { Range::All };
                let used = m_quants + usize::from(range == Range::All);
                scope.push(var.to_string());
                let body = self.formula(rng, depth - 1, scope, used);
                scope.pop();
                if rng.gen_bool(0.5) {
                    Formula::exists(var, range, body)
                } else {
                    Formula::forall(var, range, body)
                }
            }
        }
    }
}

/// Rank of a list of coordinate vectors over `F_p`, by plain elimination.
pub fn rank_mod_p(p: u32, rows: &[Vec<u32>]) -> usize {
    let p = p as u64;
    let mut m: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|&x| x as u64 % p).collect()).collect();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&r| m[r][c] != 0) else { continue };
        m.swap(rank, piv);
        let inv = (1..p).find(|&x| x * m[rank][c] % p == 1).expect("p prime");
        for x in m[rank].iter_mut() {
            *x = *x * inv % p;
        }
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let f = m[r][c];
                let pivot = m[rank].clone();
                for (x, y) in m[r].iter_mut().zip(&pivot) {
                    *x = (*x + p * p - f * y) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

pub fn unit(d: usize, i: usize) -> Vec<u32> {
    let mut v = vec![0; d];
    v[i - 1] = 1;
    v
}
