//! Affine flats of `M^n` cut out by scalar equations.
//!
//! An equation `Σ_j c_j X_j = b` has scalar coefficients and a vector
//! right-hand side, so it constrains every coordinate of `F_p^d` the same way.
//! The solution set of a consistent system of rank `r` therefore has exactly
//! `p^{d(n-r)}` elements.

use num_bigint::BigUint;
use num_traits::Zero;
use rand::Rng;

use crate::model::FpVector;

pub type Tuple = Vec<FpVector>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Row {
    pub coeffs: Vec<u32>,
    pub rhs: FpVector,
}

/// A nonempty affine flat, stored as a system in reduced row echelon form
/// with monic pivots sorted by column.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffineFlat {
    p: u32,
    d: usize,
    n: usize,
    rows: Vec<Row>,
}

pub(crate) fn inv_mod(a: u32, p: u32) -> u32 {
    let (mut t, mut new_t) = (0i64, 1i64);
    let (mut r, mut new_r) = (p as i64, a as i64);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    t.rem_euclid(p as i64) as u32
}

impl Row {
    fn pivot(&self) -> Option<usize> {
        self.coeffs.iter().position(|&c| c != 0)
    }

    fn scale(&mut self, c: u32, p: u32) {
        for x in &mut self.coeffs {
            *x = ((*x as u64 * c as u64) % p as u64) as u32;
        }
        self.rhs = self.rhs.scale_unchecked(c);
    }

    /// `self += c · other`.
    fn axpy(&mut self, c: u32, other: &Row, p: u32) {
        if c == 0 {
            return;
        }
        for (x, &y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x = ((*x as u64 + c as u64 * y as u64) % p as u64) as u32;
        }
        self.rhs.axpy_in_place(c, &other.rhs);
    }
}

/// Reduces `rows` in place. Returns `false` when the system is inconsistent.
fn rref(p: u32, n: usize, rows: &mut Vec<Row>) -> bool {
    let mut r = 0;
    for col in 0..n {
        let Some(k) = (r..rows.len()).find(|&i| rows[i].coeffs[col] != 0) else {
            continue;
        };
        rows.swap(r, k);
        let inv = inv_mod(rows[r].coeffs[col], p);
        rows[r].scale(inv, p);
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r {
                let c = row.coeffs[col];
                if c != 0 {
                    row.axpy(p - c, &pivot, p);
                }
            }
        }
        r += 1;
    }
    if rows[r..].iter().any(|row| !row.rhs.is_zero()) {
        return false;
    }
    rows.truncate(r);
    true
}

impl AffineFlat {
    /// All of `M^n`.
    pub fn full(p: u32, d: usize, n: usize) -> Self {
        AffineFlat { p, d, n, rows: Vec::new() }
    }

    /// The solution set of `rows`, or `None` when it is empty.
    pub fn from_rows(p: u32, d: usize, n: usize, mut rows: Vec<Row>) -> Option<Self> {
        debug_assert!(rows.iter().all(|r| r.coeffs.len() == n && r.rhs.dim() == d));
        rref(p, n, &mut rows).then_some(AffineFlat { p, d, n, rows })
    }

    /// The single point `t`.
    pub fn point(p: u32, d: usize, t: &[FpVector]) -> Self {
        let n = t.len();
        let rows = t
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut coeffs = vec![0; n];
                coeffs[i] = 1;
                Row { coeffs, rhs: v.clone() }
            })
            .collect();
        AffineFlat { p, d, n, rows }
    }

    pub fn arity(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn is_full(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_point(&self) -> bool {
        self.rows.len() == self.n
    }

    /// Number of free variables.
    pub fn free_dim(&self) -> usize {
        self.n - self.rows.len()
    }

    pub fn count(&self) -> BigUint {
        BigUint::from(self.p).pow((self.d * self.free_dim()) as u32)
    }

    /// `count()` when it is at most `limit`.
    pub fn count_within(&self, limit: u64) -> Option<u64> {
        let exp = (self.d * self.free_dim()) as u32;
        let mut acc: u64 = 1;
        for _ in 0..exp {
            acc = acc.checked_mul(self.p as u64)?;
            if acc > limit {
                return None;
            }
        }
        Some(acc)
    }

    pub fn as_point(&self) -> Option<Tuple> {
        self.is_point().then(|| self.rows.iter().map(|r| r.rhs.clone()).collect())
    }

    pub fn contains(&self, t: &[FpVector]) -> bool {
        self.rows.iter().all(|row| {
            let mut acc = row.rhs.neg();
            for (c, x) in row.coeffs.iter().zip(t) {
                acc.axpy_in_place(*c, x);
            }
            acc.is_zero()
        })
    }

    pub fn intersect(&self, other: &AffineFlat) -> Option<AffineFlat> {
        if self.rows.is_empty() {
            return Some(other.clone());
        }
        if other.rows.is_empty() {
            return Some(self.clone());
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        AffineFlat::from_rows(self.p, self.d, self.n, rows)
    }

    /// True when `self ⊆ other`.
    pub fn is_subset_of(&self, other: &AffineFlat) -> bool {
        match self.intersect(other) {
            Some(i) => i.rank() == self.rank(),
            None => false,
        }
    }

    /// True when membership does not depend on variable `var`.
    pub fn independent_of(&self, var: usize) -> bool {
        self.rows.iter().all(|r| r.coeffs[var] == 0)
    }

    /// The image under deleting coordinate `var`.
    pub fn project_out(&self, var: usize) -> AffineFlat {
        let p = self.p;
        let mut rows = self.rows.clone();
        if let Some(k) = rows.iter().position(|r| r.coeffs[var] != 0) {
            let pivot = rows.remove(k);
            let inv = inv_mod(pivot.coeffs[var], p);
            let mut pivot = pivot;
            pivot.scale(inv, p);
            for row in &mut rows {
                let c = row.coeffs[var];
                if c != 0 {
                    row.axpy(p - c, &pivot, p);
                }
            }
        }
        for row in &mut rows {
            row.coeffs.remove(var);
        }
        let n = self.n - 1;
        AffineFlat::from_rows(p, self.d, n, rows).expect("projection of a nonempty flat is nonempty")
    }

    /// Pads with `extra` unconstrained variables at the end.
    pub fn extend(&self, extra: usize) -> AffineFlat {
        let mut rows = self.rows.clone();
        for row in &mut rows {
            row.coeffs.extend(std::iter::repeat_n(0, extra));
        }
        AffineFlat { p: self.p, d: self.d, n: self.n + extra, rows }
    }

    fn pivots(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.pivot().expect("reduced rows are nonzero")).collect()
    }

    fn free_columns(&self) -> Vec<usize> {
        let pivots = self.pivots();
        (0..self.n).filter(|c| !pivots.contains(c)).collect()
    }

    /// The point with the given values of the free variables.
    fn complete(&self, free_cols: &[usize], values: &[FpVector]) -> Tuple {
        let p = self.p;
        let mut out: Tuple = vec![FpVector::zero(p, self.d); self.n];
        for (c, v) in free_cols.iter().zip(values) {
            out[*c] = v.clone();
        }
        for (row, pc) in self.rows.iter().zip(self.pivots()) {
            let mut x = row.rhs.clone();
            for &c in free_cols {
                let a = row.coeffs[c];
                if a != 0 {
                    x.axpy_in_place(p - a, &out[c]);
                }
            }
            out[pc] = x;
        }
        out
    }

    /// Every point, when there are at most `limit`.
    pub fn enumerate(&self, limit: u64) -> Option<Vec<Tuple>> {
        let total = self.count_within(limit)?;
        let free = self.free_columns();
        let per_var = self.d;
        let digits = free.len() * per_var;
        let mut counter = vec![0u32; digits];
        let mut out = Vec::with_capacity(total as usize);
        for _ in 0..total {
            let values: Vec<FpVector> = (0..free.len())
                .map(|i| {
                    FpVector::from_coords(self.p, &counter[i * per_var..(i + 1) * per_var])
                        .expect("digits below p")
                })
                .collect();
            out.push(self.complete(&free, &values));
            for digit in counter.iter_mut() {
                *digit += 1;
                if *digit < self.p {
                    break;
                }
                *digit = 0;
            }
        }
        Some(out)
    }

    /// A uniformly random point.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Tuple {
        let free = self.free_columns();
        let values: Vec<FpVector> = free
            .iter()
            .map(|_| {
                let coords: Vec<u32> = (0..self.d).map(|_| rng.gen_range(0..self.p)).collect();
                FpVector::from_coords(self.p, &coords).expect("digits below p")
            })
            .collect();
        self.complete(&free, &values)
    }
}

/// `|F_1 ∪ … ∪ F_k|` by inclusion–exclusion, pruning empty intersections.
pub fn union_count(flats: &[AffineFlat]) -> BigUint {
    let mut total = BigUint::zero();
    for (i, f) in flats.iter().enumerate() {
        let overlaps: Vec<AffineFlat> = flats[..i].iter().filter_map(|g| f.intersect(g)).collect();
        let covered = if overlaps.iter().any(|o| o.rank() == f.rank()) {
            f.count()
        } else {
            union_count(&dedup(overlaps))
        };
        total += f.count() - covered;
    }
    total
}

/// Drops duplicates and flats contained in another member.
pub fn dedup(flats: Vec<AffineFlat>) -> Vec<AffineFlat> {
    let mut out: Vec<AffineFlat> = Vec::with_capacity(flats.len());
    let mut sorted = flats;
    sorted.sort_by_key(|f| f.rank());
    // Flats of equal rank contain one another only when equal, and the
    // reduced form is canonical; only strictly larger flats need a subset test.
    let mut seen: std::collections::HashSet<AffineFlat> = std::collections::HashSet::new();
    let mut larger = 0;
    for f in sorted {
        while larger < out.len() && out[larger].rank() < f.rank() {
            larger += 1;
        }
        if seen.contains(&f) || out[..larger].iter().any(|g| f.is_subset_of(g)) {
            continue;
        }
        seen.insert(f.clone());
        out.push(f);
    }
    out
}
