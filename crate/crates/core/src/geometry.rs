//! Linear-span pregeometry: dimensions, H-bases and SU-rank pairs.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::logic::linear::inv_mod;
use crate::logic::region::Sign;
use crate::logic::{NormalFormSet, Tuple};
use crate::model::{FpVector, VectorHModel};

/// A subspace of `F_p^d` in reduced row echelon form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubspaceBasis {
    p: u32,
    d: usize,
    rows: Vec<FpVector>,
    pivots: Vec<usize>,
}

/// Row-reduces `vectors`, choosing pivot columns in `order`.
fn reduce_in_order(p: u32, vectors: &[FpVector], order: &[usize]) -> (Vec<FpVector>, Vec<usize>) {
    let mut rows: Vec<FpVector> = vectors.iter().filter(|v| !v.is_zero()).cloned().collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for &col in order {
        if r == rows.len() {
            break;
        }
        let Some(k) = (r..rows.len()).find(|&i| rows[i].get(col) != 0) else {
            continue;
        };
        rows.swap(r, k);
        let inv = inv_mod(rows[r].get(col), p);
        rows[r] = rows[r].scale_unchecked(inv);
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            let c = row.get(col);
            if i != r && c != 0 {
                row.axpy_in_place(p - c, &pivot);
            }
        }
        pivots.push(col);
        r += 1;
    }
    rows.truncate(r);
    (rows, pivots)
}

fn check_shapes(vectors: &[&FpVector]) -> Result<()> {
    if let Some(first) = vectors.first() {
        for v in vectors {
            if v.modulus() != first.modulus() {
                return Err(Error::ModulusMismatch { left: first.modulus(), right: v.modulus() });
            }
            if v.dim() != first.dim() {
                return Err(Error::DimensionMismatch { left: first.dim(), right: v.dim() });
            }
        }
    }
    Ok(())
}

impl SubspaceBasis {
    pub fn span(p: u32, d: usize, vectors: &[FpVector]) -> Result<Self> {
        let refs: Vec<&FpVector> = vectors.iter().collect();
        check_shapes(&refs)?;
        if let Some(v) = vectors.first() {
            if v.modulus() != p || v.dim() != d {
                return Err(Error::DimensionMismatch { left: v.dim(), right: d });
            }
        }
        let order: Vec<usize> = (0..d).collect();
        let (rows, pivots) = reduce_in_order(p, vectors, &order);
        Ok(SubspaceBasis { p, d, rows, pivots })
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[FpVector] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn contains(&self, v: &FpVector) -> bool {
        let mut r = v.clone();
        for (row, &c) in self.rows.iter().zip(&self.pivots) {
            let a = r.get(c);
            if a != 0 {
                r.axpy_in_place(self.p - a, row);
            }
        }
        r.is_zero()
    }
}

fn rank_of(vectors: &[FpVector]) -> usize {
    match vectors.first() {
        None => 0,
        Some(v) => {
            let order: Vec<usize> = (0..v.dim()).collect();
            reduce_in_order(v.modulus(), vectors, &order).0.len()
        }
    }
}

fn concat(a: &[FpVector], b: &[FpVector]) -> Vec<FpVector> {
    a.iter().chain(b).cloned().collect()
}

/// `dim(ā/B) = rank(ā ∪ B) − rank(B)`.
pub fn dim_over(tuple: &[FpVector], base: &[FpVector]) -> Result<usize> {
    let all = concat(tuple, base);
    check_shapes(&all.iter().collect::<Vec<_>>())?;
    Ok(rank_of(&all) - rank_of(base))
}

fn check_in_model(model: &VectorHModel, vectors: &[FpVector]) -> Result<()> {
    for v in vectors {
        if !model.contains(v) {
            if v.modulus() != model.p() {
                return Err(Error::ModulusMismatch { left: v.modulus(), right: model.p() });
            }
            return Err(Error::DimensionMismatch { left: v.dim(), right: model.d() });
        }
    }
    Ok(())
}

/// Large dimension `dim(ā / B ∪ H)`.
pub fn ldim(model: &VectorHModel, tuple: &[FpVector], base: &[FpVector]) -> Result<usize> {
    check_in_model(model, tuple)?;
    check_in_model(model, base)?;
    let base_h = concat(base, &model.h_elements());
    dim_over(tuple, &base_h)
}

/// `dim(A / H(A)) = dim(A / H)`, where `H(A) = A ∩ H`.
pub fn check_h_independent(model: &VectorHModel, set: &[FpVector]) -> Result<bool> {
    check_in_model(model, set)?;
    let h_part: Vec<FpVector> = set.iter().filter(|v| model.in_h(v)).cloned().collect();
    Ok(dim_over(set, &h_part)? == dim_over(set, &model.h_elements())?)
}

/// The H-basis of `ā` over an H-independent base `B`, as 1-based indices.
///
/// Row-reducing `ā ∪ B` with the columns of `J = {j : e_j ∉ span(B)}` last
/// isolates a basis of `span(ā ∪ B) ∩ span(e_J)`; its joint support is the
/// smallest `S ⊆ J` with that intersection inside `span(e_S)`.
pub fn hbasis(model: &VectorHModel, tuple: &[FpVector], base: &[FpVector]) -> Result<BTreeSet<usize>> {
    check_in_model(model, tuple)?;
    check_in_model(model, base)?;
    if !check_h_independent(model, base)? {
        return Err(Error::NotHIndependent);
    }
    let base_span = SubspaceBasis::span(model.p(), model.d(), base)?;
    let j: Vec<usize> = (0..model.h()).filter(|&i| !base_span.contains(&model.basis(i + 1).expect("i < h"))).collect();
    let mut order: Vec<usize> = (0..model.d()).filter(|c| !j.contains(c)).collect();
    order.extend(&j);
    let (rows, pivots) = reduce_in_order(model.p(), &concat(tuple, base), &order);
    let mut out = BTreeSet::new();
    for (row, pc) in rows.iter().zip(&pivots) {
        if j.contains(pc) {
            out.extend(row.support().map(|(i, _)| i + 1));
        }
    }
    Ok(out)
}

/// `(ldim(ā/B), |HB(ā/B)|)`.
pub fn su_rank_tuple(model: &VectorHModel, tuple: &[FpVector], base: &[FpVector]) -> Result<(u32, u32)> {
    let n = ldim(model, tuple, base)?;
    let k = hbasis(model, tuple, base)?.len();
    Ok((n as u32, k as u32))
}

/// `ā ∪ {e_i : i ∈ HB(ā)}`, the base over which relative invariants of
/// further tuples are taken.
pub fn closed_base(model: &VectorHModel, tuple: &[FpVector]) -> Result<Vec<FpVector>> {
    let hb = hbasis(model, tuple, &[])?;
    let mut out = tuple.to_vec();
    for i in hb {
        out.push(model.basis(i)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TupleProfile {
    pub ldim: u32,
    pub hbasis: BTreeSet<usize>,
    pub su: (u32, u32),
}

pub fn profile(model: &VectorHModel, tuple: &[FpVector], base: &[FpVector]) -> Result<TupleProfile> {
    let ldim = ldim(model, tuple, base)? as u32;
    let hb = hbasis(model, tuple, base)?;
    let su = (ldim, hb.len() as u32);
    Ok(TupleProfile { ldim, hbasis: hb, su })
}

impl fmt::Display for TupleProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hb: Vec<String> = self.hbasis.iter().map(|i| i.to_string()).collect();
        write!(f, "ldim={} hb={{{}}} su=({},{})", self.ldim, hb.join(","), self.su.0, self.su.1)
    }
}

/// How a set rank was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RankEvidence {
    /// Every solution tuple was profiled.
    Exhaustive,
    /// The complement is too small to exclude all tuples of full large
    /// dimension, so `(n, 0)` is attained.
    Generic,
    /// A lower bound from sampled solutions.
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SetRank {
    pub su: (u32, u32),
    pub evidence: RankEvidence,
}

const SET_RANK_SAMPLES: usize = 512;
const EXHAUSTIVE_LIMIT: u64 = 1 << 16;

fn max_su(model: &VectorHModel, tuples: &[Tuple]) -> Result<Option<(u32, u32)>> {
    let ranks: Result<Vec<(u32, u32)>> = tuples.par_iter().map(|t| su_rank_tuple(model, t, &[])).collect();
    Ok(ranks?.into_iter().max())
}

/// Lexicographic maximum of the SU-rank pair over the solution set of `nf`,
/// or `None` for the empty set.
pub fn su_rank_set_detailed(model: &VectorHModel, nf: &NormalFormSet, budget: u64) -> Result<Option<SetRank>> {
    let solved = nf.solve(model, budget)?;
    let region = solved.region;
    if region.is_empty() {
        return Ok(None);
    }
    let n = nf.arity();
    if region.sign() == Sign::Neg && n + model.h() <= model.d() {
        // Tuples whose images modulo span(H) are independent have rank (n, 0),
        // the largest possible; they cannot all be excluded.
        let (p, d, h) = (BigUint::from(model.p()), model.d() as u32, model.h() as u32);
        let generic = (0..n as u32).fold(BigUint::from(1u32), |acc, i| acc * (p.pow(d) - p.pow(h + i)));
        let excluded = model.card_power(n) - region.count();
        if generic > excluded {
            return Ok(Some(SetRank { su: (n as u32, 0), evidence: RankEvidence::Generic }));
        }
    }
    if let Some(all) = region.enumerate(budget.min(EXHAUSTIVE_LIMIT)) {
        let su = max_su(model, &all)?.expect("nonempty");
        return Ok(Some(SetRank { su, evidence: RankEvidence::Exhaustive }));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut samples: Vec<Tuple> = region.points().iter().cloned().collect();
    samples.sort();
    samples.truncate(SET_RANK_SAMPLES);
    samples.extend((0..SET_RANK_SAMPLES).filter_map(|_| region.sample(&mut rng)));
    match max_su(model, &samples)? {
        Some(su) => Ok(Some(SetRank { su, evidence: RankEvidence::Sampled })),
        None => Ok(None),
    }
}

pub fn su_rank_set(model: &VectorHModel, nf: &NormalFormSet, budget: u64) -> Result<Option<(u32, u32)>> {
    Ok(su_rank_set_detailed(model, nf, budget)?.map(|r| r.su))
}
