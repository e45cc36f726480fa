//! Definable subsets of `M^n` as finite unions of flats and their complements.

use std::collections::{HashMap, HashSet};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

use crate::logic::linear::{dedup, union_count, AffineFlat, Tuple};
use crate::model::FpVector;

/// A finite union of flats and isolated points.
#[derive(Clone, Debug, Default)]
pub struct Union {
    pub flats: Vec<AffineFlat>,
    pub points: HashSet<Tuple>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    /// The set is the union itself.
    Pos,
    /// The set is the complement of the union.
    Neg,
}

#[derive(Clone, Debug)]
pub struct Region {
    p: u32,
    d: usize,
    n: usize,
    sign: Sign,
    union: Union,
}

impl Union {
    fn contains(&self, t: &[FpVector]) -> bool {
        self.points.contains(t) || self.flats.iter().any(|f| f.contains(t))
    }

    fn is_empty(&self) -> bool {
        self.flats.is_empty() && self.points.is_empty()
    }

    fn is_full(&self) -> bool {
        self.flats.iter().any(|f| f.is_full())
    }

    fn count(&self) -> BigUint {
        union_count(&self.flats) + BigUint::from(self.points.len())
    }

    fn normalize(mut self) -> Union {
        if let Some(full) = self.flats.iter().find(|f| f.is_full()).cloned() {
            return Union { flats: vec![full], points: HashSet::new() };
        }
        let mut flats = Vec::new();
        for f in self.flats {
            match f.as_point() {
                Some(t) => {
                    self.points.insert(t);
                }
                None => flats.push(f),
            }
        }
        let flats = dedup(flats);
        self.points.retain(|t| !flats.iter().any(|f| f.contains(t)));
        Union { flats, points: self.points }
    }

    fn union(mut self, other: Union) -> Union {
        self.flats.extend(other.flats);
        self.points.extend(other.points);
        self.normalize()
    }

    fn intersect(&self, other: &Union) -> Union {
        let mut flats = Vec::new();
        for f in &self.flats {
            for g in &other.flats {
                if let Some(i) = f.intersect(g) {
                    flats.push(i);
                }
            }
        }
        let mut points: HashSet<Tuple> = self.points.iter().filter(|t| other.contains(t)).cloned().collect();
        points.extend(other.points.iter().filter(|t| self.contains(t)).cloned());
        Union { flats, points }.normalize()
    }

    /// `self \ other`, expanding flats into points when at most `limit`
    /// points are involved.
    fn difference(&self, other: &Union, limit: u64) -> Option<Union> {
        let mut out = Union { points: self.points.iter().filter(|t| !other.contains(t)).cloned().collect(), ..Default::default() };
        for f in &self.flats {
            if other.flats.iter().any(|g| f.is_subset_of(g)) {
                continue;
            }
            let touches = other.flats.iter().any(|g| f.intersect(g).is_some())
                || other.points.iter().any(|t| f.contains(t));
            if !touches {
                out.flats.push(f.clone());
                continue;
            }
            let pts = f.enumerate(limit)?;
            out.points.extend(pts.into_iter().filter(|t| !other.contains(t)));
        }
        Some(out.normalize())
    }
}

impl Region {
    pub fn empty(p: u32, d: usize, n: usize) -> Region {
        Region { p, d, n, sign: Sign::Pos, union: Union::default() }
    }

    pub fn full(p: u32, d: usize, n: usize) -> Region {
        Region { p, d, n, sign: Sign::Neg, union: Union::default() }
    }

    pub fn from_flat(flat: AffineFlat, p: u32, d: usize) -> Region {
        let n = flat.arity();
        let union = Union { flats: vec![flat], points: HashSet::new() };
        Region::empty(p, d, n).with(Sign::Pos, union)
    }

    pub fn from_points(points: impl IntoIterator<Item = Tuple>, p: u32, d: usize, n: usize) -> Region {
        let union = Union { flats: Vec::new(), points: points.into_iter().collect() };
        Region::empty(p, d, n).with(Sign::Pos, union)
    }

    fn with(&self, sign: Sign, union: Union) -> Region {
        let n = self.n;
        let mut union = union.normalize();
        let mut sign = sign;
        let full = if n == 0 { !union.is_empty() } else { union.is_full() };
        if full {
            sign = match sign {
                Sign::Pos => Sign::Neg,
                Sign::Neg => Sign::Pos,
            };
            union = Union::default();
        }
        Region { p: self.p, d: self.d, n, sign, union }
    }

    pub fn arity(&self) -> usize {
        self.n
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn flats(&self) -> &[AffineFlat] {
        &self.union.flats
    }

    pub fn points(&self) -> &HashSet<Tuple> {
        &self.union.points
    }

    pub fn is_empty(&self) -> bool {
        self.sign == Sign::Pos && self.union.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.sign == Sign::Neg && self.union.is_empty()
    }

    /// True when the region is an explicit finite list of tuples.
    pub fn is_point_set(&self) -> bool {
        self.sign == Sign::Pos && self.union.flats.is_empty()
    }

    pub fn contains(&self, t: &[FpVector]) -> bool {
        let inside = self.union.contains(t);
        match self.sign {
            Sign::Pos => inside,
            Sign::Neg => !inside,
        }
    }

    fn universe(&self) -> BigUint {
        BigUint::from(self.p).pow((self.d * self.n) as u32)
    }

    pub fn count(&self) -> BigUint {
        let inside = self.union.count();
        match self.sign {
            Sign::Pos => inside,
            Sign::Neg => self.universe() - inside,
        }
    }

    pub fn not(&self) -> Region {
        let sign = match self.sign {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        };
        Region { sign, ..self.clone() }
    }

    pub fn or(&self, other: &Region, limit: u64) -> Option<Region> {
        debug_assert_eq!(self.n, other.n);
        Some(match (self.sign, other.sign) {
            (Sign::Pos, Sign::Pos) => self.with(Sign::Pos, self.union.clone().union(other.union.clone())),
            (Sign::Neg, Sign::Neg) => self.with(Sign::Neg, self.union.intersect(&other.union)),
            (Sign::Pos, Sign::Neg) => self.with(Sign::Neg, other.union.difference(&self.union, limit)?),
            (Sign::Neg, Sign::Pos) => self.with(Sign::Neg, self.union.difference(&other.union, limit)?),
        })
    }

    pub fn and(&self, other: &Region, limit: u64) -> Option<Region> {
        Some(self.not().or(&other.not(), limit)?.not())
    }

    /// `∃ X_var`: the image under deleting coordinate `var`.
    pub fn project_out(&self, var: usize, limit: u64) -> Option<Region> {
        let n = self.n - 1;
        let base = Region::empty(self.p, self.d, n);
        let drop = |t: &Tuple| {
            let mut t = t.clone();
            t.remove(var);
            t
        };
        match self.sign {
            Sign::Pos => {
                let union = Union {
                    flats: self.union.flats.iter().map(|f| f.project_out(var)).collect(),
                    points: self.union.points.iter().map(drop).collect(),
                };
                Some(base.with(Sign::Pos, union))
            }
            Sign::Neg => {
                // A fibre of the excluded union is all of M only through a flat
                // that ignores `var`, unless the point-sized fibres can cover M.
                let (cyl, rest): (Vec<&AffineFlat>, Vec<&AffineFlat>) =
                    self.union.flats.iter().partition(|f| f.independent_of(var));
                let mut excluded = Union {
                    flats: cyl.iter().map(|f| f.project_out(var)).collect(),
                    points: HashSet::new(),
                };
                let pieces = BigUint::from(rest.len() + self.union.points.len());
                let card_m = BigUint::from(self.p).pow(self.d as u32);
                if pieces >= card_m {
                    let mut fibres: HashMap<Tuple, HashSet<FpVector>> = HashMap::new();
                    let mut budget = limit;
                    for f in &rest {
                        let pts = f.enumerate(budget)?;
                        budget = budget.saturating_sub(pts.len() as u64);
                        for t in pts {
                            let z = t[var].clone();
                            fibres.entry(drop(&t)).or_default().insert(z);
                        }
                    }
                    for t in &self.union.points {
                        fibres.entry(drop(t)).or_default().insert(t[var].clone());
                    }
                    let card = card_m.to_usize()?;
                    for (x, zs) in fibres {
                        if zs.len() == card {
                            excluded.points.insert(x);
                        }
                    }
                }
                Some(base.with(Sign::Neg, excluded))
            }
        }
    }

    /// Every tuple, sorted, when there are at most `limit`.
    pub fn enumerate(&self, limit: u64) -> Option<Vec<Tuple>> {
        let mut out: Vec<Tuple> = match self.sign {
            Sign::Pos => {
                let mut set: HashSet<Tuple> = self.union.points.clone();
                let mut left = limit.checked_sub(set.len() as u64)?;
                for f in &self.union.flats {
                    let pts = f.enumerate(left)?;
                    left = left.checked_sub(pts.len() as u64)?;
                    set.extend(pts);
                }
                set.into_iter().collect()
            }
            Sign::Neg => {
                let all = AffineFlat::full(self.p, self.d, self.n).enumerate(limit)?;
                all.into_iter().filter(|t| !self.union.contains(t)).collect()
            }
        };
        out.sort();
        Some(out)
    }

    /// A random member, or `None` if none was found.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Tuple> {
        match self.sign {
            Sign::Pos => {
                let weights: Vec<f64> = self
                    .union
                    .flats
                    .iter()
                    .map(|f| f.count().to_f64().unwrap_or(f64::MAX))
                    .chain(std::iter::once(self.union.points.len() as f64))
                    .collect();
                let total: f64 = weights.iter().sum();
                if total == 0.0 {
                    return None;
                }
                let mut x = rng.gen_range(0.0..total);
                for (i, w) in weights.iter().enumerate() {
                    if x < *w {
                        if i < self.union.flats.len() {
                            return Some(self.union.flats[i].sample(rng));
                        }
                        let k = rng.gen_range(0..self.union.points.len());
                        let mut pts: Vec<&Tuple> = self.union.points.iter().collect();
                        pts.sort();
                        return Some(pts[k].clone());
                    }
                    x -= w;
                }
                None
            }
            Sign::Neg => {
                let all = AffineFlat::full(self.p, self.d, self.n);
                (0..1000).map(|_| all.sample(rng)).find(|t| !self.union.contains(t))
            }
        }
    }

    pub fn is_count_zero(&self) -> bool {
        self.count().is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::linear::Row;

    fn vec1(p: u32, c: u32) -> FpVector {
        FpVector::from_coords(p, &[c]).unwrap()
    }

    #[test]
    fn boolean_algebra_on_points_and_flats() {
        let (p, d) = (3, 1);
        let a = Region::from_points(vec![vec![vec1(p, 1)]], p, d, 1);
        let b = Region::from_points(vec![vec![vec1(p, 2)]], p, d, 1);
        let ab = a.or(&b, 100).unwrap();
        assert_eq!(ab.count(), BigUint::from(2u32));
        assert_eq!(ab.not().count(), BigUint::from(1u32));
        assert!(a.and(&b, 100).unwrap().is_empty());
        assert_eq!(ab.not().or(&a, 100).unwrap().count(), BigUint::from(2u32));
        assert!(ab.not().or(&ab, 100).unwrap().is_full());
    }

    #[test]
    fn projection_of_complement() {
        let (p, d) = (3, 1);
        // {(x, z) : z != x}: every x has a witness.
        let diag = AffineFlat::from_rows(p, d, 2, vec![Row { coeffs: vec![1, 2], rhs: vec1(p, 0) }]).unwrap();
        let r = Region::from_flat(diag, p, d).not();
        assert!(r.project_out(1, 100).unwrap().is_full());
        // {(x, z) : x != 0}: projection is x != 0.
        let x0 = AffineFlat::from_rows(p, d, 2, vec![Row { coeffs: vec![1, 0], rhs: vec1(p, 0) }]).unwrap();
        let r = Region::from_flat(x0, p, d).not();
        assert_eq!(r.project_out(1, 100).unwrap().count(), BigUint::from(2u32));
    }

    #[test]
    fn small_fibres_are_checked_exactly() {
        let (p, d) = (2, 1);
        // Complement of {(0,0), (0,1)} in M^2 with |M| = 2: x = 0 has no witness.
        let pts = vec![vec![vec1(p, 0), vec1(p, 0)], vec![vec1(p, 0), vec1(p, 1)]];
        let r = Region::from_points(pts, p, d, 2).not();
        let proj = r.project_out(1, 100).unwrap();
        assert_eq!(proj.count(), BigUint::from(1u32));
        assert!(proj.contains(&[vec1(p, 1)]));
    }
}
