//! Finite approximants `(F_p^d, H)` of H-structures.
//!
//! `H` is always the prefix `e_1, …, e_h` of the standard basis. Vectors are
//! stored with their base-`p` digits bit-packed into `u64` limbs, which gives
//! every vector a canonical encoding usable directly as a hash key.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

fn bits_per_entry(p: u32) -> u32 {
    32 - (p - 1).leading_zeros()
}

/// A vector of `F_p^d` with bit-packed coordinates.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FpVector {
    p: u32,
    dim: u32,
    limbs: Vec<u64>,
}

impl FpVector {
    fn layout(p: u32) -> (u32, usize) {
        let bits = bits_per_entry(p);
        (bits, (64 / bits) as usize)
    }

    pub fn zero(p: u32, dim: usize) -> Self {
        let (_, per) = Self::layout(p);
        FpVector { p, dim: dim as u32, limbs: vec![0; dim.div_ceil(per)] }
    }

    /// `e_i`, 1-based.
    pub fn basis(p: u32, dim: usize, i: usize) -> Result<Self> {
        if i == 0 || i > dim {
            return Err(Error::BasisOutOfRange { name: format!("e{i}"), dim });
        }
        let mut v = Self::zero(p, dim);
        v.set(i - 1, 1);
        Ok(v)
    }

    pub fn from_coords(p: u32, coords: &[u32]) -> Result<Self> {
        let mut v = Self::zero(p, coords.len());
        for (i, &c) in coords.iter().enumerate() {
            if c >= p {
                return Err(Error::ScalarOutOfRange { scalar: c as u64, p });
            }
            v.set(i, c);
        }
        Ok(v)
    }

    pub fn modulus(&self) -> u32 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// Coordinate `i`, 0-based.
    #[inline]
    pub fn get(&self, i: usize) -> u32 {
        let (bits, per) = Self::layout(self.p);
        let limb = self.limbs[i / per];
        let shift = (i % per) as u32 * bits;
        ((limb >> shift) & ((1u64 << bits) - 1)) as u32
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, value: u32) {
        let (bits, per) = Self::layout(self.p);
        let shift = (i % per) as u32 * bits;
        let mask = ((1u64 << bits) - 1) << shift;
        let limb = &mut self.limbs[i / per];
        *limb = (*limb & !mask) | ((value as u64) << shift);
    }

    pub fn coords(&self) -> Vec<u32> {
        (0..self.dim()).map(|i| self.get(i)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.iter().all(|&l| l == 0)
    }

    fn check_compatible(&self, other: &FpVector) -> Result<()> {
        if self.p != other.p {
            return Err(Error::ModulusMismatch { left: self.p, right: other.p });
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }

    /// Coordinatewise sum mod p.
    pub fn add(&self, other: &FpVector) -> Result<FpVector> {
        self.check_compatible(other)?;
        Ok(self.axpy_unchecked(1, other))
    }

    /// Coordinatewise difference mod p.
    pub fn sub(&self, other: &FpVector) -> Result<FpVector> {
        self.check_compatible(other)?;
        Ok(self.axpy_unchecked(self.p - 1, other))
    }

    /// Scalar multiple `c·self`.
    pub fn scale(&self, c: u32) -> Result<FpVector> {
        if c >= self.p {
            return Err(Error::ScalarOutOfRange { scalar: c as u64, p: self.p });
        }
        Ok(self.scale_unchecked(c))
    }

    pub fn neg(&self) -> FpVector {
        self.scale_unchecked(self.p - 1)
    }

    pub(crate) fn scale_unchecked(&self, c: u32) -> FpVector {
        let mut out = FpVector::zero(self.p, self.dim());
        if c == 0 {
            return out;
        }
        let p = self.p as u64;
        for i in 0..self.dim() {
            let x = self.get(i);
            if x != 0 {
                out.set(i, ((x as u64 * c as u64) % p) as u32);
            }
        }
        out
    }

    /// `self + c·other`, assuming matching shapes.
    pub(crate) fn axpy_unchecked(&self, c: u32, other: &FpVector) -> FpVector {
        let mut out = self.clone();
        out.axpy_in_place(c, other);
        out
    }

    pub(crate) fn axpy_in_place(&mut self, c: u32, other: &FpVector) {
        if c == 0 {
            return;
        }
        let p = self.p as u64;
        let (bits, per) = Self::layout(self.p);
        let mask = (1u64 << bits) - 1;
        let dim = self.dim();
        for (li, limb) in self.limbs.iter_mut().enumerate() {
            let o = other.limbs[li];
            if o == 0 {
                continue;
            }
            let mut acc = 0u64;
            let count = per.min(dim - li * per);
            for j in 0..count {
                let shift = j as u32 * bits;
                let a = (*limb >> shift) & mask;
                let b = (o >> shift) & mask;
                let s = (a + b * c as u64) % p;
                acc |= s << shift;
            }
            *limb = acc;
        }
    }

    /// Nonzero coordinates as `(index, value)`, 0-based.
    pub fn support(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        (0..self.dim()).map(|i| (i, self.get(i))).filter(|&(_, c)| c != 0)
    }
}

impl Ord for FpVector {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.p, self.dim)
            .cmp(&(other.p, other.dim))
            .then_with(|| (0..self.dim()).map(|i| self.get(i)).cmp((0..other.dim()).map(|i| other.get(i))))
    }
}

impl PartialOrd for FpVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Renders as a linear combination of basis vectors, e.g. `e1+2e3`; the zero
/// vector renders as `0`.
impl fmt::Display for FpVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.support() {
            if !first {
                write!(f, "+")?;
            }
            first = false;
            if c == 1 {
                write!(f, "e{}", i + 1)?;
            } else {
                write!(f, "{}e{}", c, i + 1)?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl fmt::Debug for FpVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FpVector(p={}, {})", self.p, self)
    }
}

/// Serialized form used in experiment configs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub p: u32,
    pub m: usize,
}

/// `F_p^d` with `H = {e_1, …, e_h}`.
#[derive(Clone, Debug)]
pub struct VectorHModel {
    p: u32,
    d: usize,
    h: usize,
    inverses: Vec<u32>,
}

impl VectorHModel {
    /// The canonical family member `(F_p^{2m}, {e_1..e_m})`.
    pub fn new(p: u32, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidShape("m must be at least 1".into()));
        }
        Self::with_shape(p, 2 * m, m)
    }

    pub fn from_spec(spec: ModelSpec) -> Result<Self> {
        Self::new(spec.p, spec.m)
    }

    pub fn with_shape(p: u32, d: usize, h: usize) -> Result<Self> {
        if !is_prime(p as u64) {
            return Err(Error::NonPrime(p as u64));
        }
        if p >= 1 << 16 {
            return Err(Error::InvalidShape(format!("modulus {p} too large (must be < 65536)")));
        }
        if h == 0 || h >= d {
            return Err(Error::InvalidShape(format!("need 1 <= h < d, got h = {h}, d = {d}")));
        }
        let mut inverses = vec![0u32; p as usize];
        for a in 1..p {
            inverses[a as usize] = pow_mod(a, p - 2, p);
        }
        Ok(VectorHModel { p, d, h, inverses })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec { p: self.p, m: self.h }
    }

    /// `|M| = p^d`.
    pub fn card_m(&self) -> BigUint {
        BigUint::from(self.p).pow(self.d as u32)
    }

    /// `|M|` if it fits in a `u64`.
    pub fn card_m_u64(&self) -> Option<u64> {
        self.card_m().to_u64()
    }

    pub fn card_h(&self) -> usize {
        self.h
    }

    /// `|M|^n`.
    pub fn card_power(&self, n: usize) -> BigUint {
        if n == 0 {
            return BigUint::one();
        }
        BigUint::from(self.p).pow((self.d * n) as u32)
    }

    pub fn inv(&self, a: u32) -> u32 {
        debug_assert!(a != 0 && a < self.p);
        self.inverses[a as usize]
    }

    pub fn zero(&self) -> FpVector {
        FpVector::zero(self.p, self.d)
    }

    /// `e_i`, 1-based, `1 <= i <= d`.
    pub fn basis(&self, i: usize) -> Result<FpVector> {
        FpVector::basis(self.p, self.d, i)
    }

    pub fn vector(&self, coords: &[u32]) -> Result<FpVector> {
        if coords.len() != self.d {
            return Err(Error::DimensionMismatch { left: coords.len(), right: self.d });
        }
        FpVector::from_coords(self.p, coords)
    }

    pub fn h_elements(&self) -> Vec<FpVector> {
        (1..=self.h).map(|i| self.basis(i).expect("index within h < d")).collect()
    }

    /// The 1-based index `i` with `v = e_i` and `i <= h`, if `v ∈ H`.
    pub fn h_index(&self, v: &FpVector) -> Option<usize> {
        let mut support = v.support();
        match (support.next(), support.next()) {
            (Some((i, 1)), None) if i < self.h => Some(i + 1),
            _ => None,
        }
    }

    pub fn in_h(&self, v: &FpVector) -> bool {
        self.h_index(v).is_some()
    }

    pub fn contains(&self, v: &FpVector) -> bool {
        v.modulus() == self.p && v.dim() == self.d
    }

    fn check(&self, v: &FpVector) -> Result<()> {
        if v.modulus() != self.p {
            return Err(Error::ModulusMismatch { left: v.modulus(), right: self.p });
        }
        if v.dim() != self.d {
            return Err(Error::DimensionMismatch { left: v.dim(), right: self.d });
        }
        Ok(())
    }

    pub fn add(&self, u: &FpVector, v: &FpVector) -> Result<FpVector> {
        self.check(u)?;
        self.check(v)?;
        u.add(v)
    }

    pub fn scale(&self, c: u32, v: &FpVector) -> Result<FpVector> {
        self.check(v)?;
        v.scale(c)
    }

    /// Every element of `M`, in base-`p` counter order. Fails when `p^d`
    /// exceeds `limit`.
    pub fn elements(&self, limit: u64) -> Result<Elements> {
        match self.card_m_u64() {
            Some(n) if n <= limit => Ok(Elements { p: self.p, current: Some(self.zero()), remaining: n }),
            _ => Err(Error::BudgetExceeded { needed: self.card_m().to_string(), budget: limit }),
        }
    }
}

fn pow_mod(base: u32, mut exp: u32, p: u32) -> u32 {
    let p64 = p as u64;
    let mut acc = 1u64;
    let mut b = base as u64 % p64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % p64;
        }
        b = b * b % p64;
        exp >>= 1;
    }
    acc as u32
}

pub struct Elements {
    p: u32,
    current: Option<FpVector>,
    remaining: u64,
}

impl Iterator for Elements {
    type Item = FpVector;

    fn next(&mut self) -> Option<FpVector> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = self.current.clone()?;
        if let Some(cur) = self.current.as_mut() {
            for i in 0..cur.dim() {
                let c = cur.get(i) + 1;
                if c < self.p {
                    cur.set(i, c);
                    break;
                }
                cur.set(i, 0);
            }
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.remaining as usize;
        (n, Some(n))
    }
}
