//! The ordered semiring of dimension–measure triples `(n, k, mu)`.
//!
//! A triple records a dimension pair `(n, k)`, read as the SU-rank `ω·n + k`,
//! together with a measure. Addition keeps the lexicographically larger
//! dimension (summing measures on ties) and multiplication adds dimensions
//! and multiplies measures. `(0,0,0)` is the zero and `(0,0,1)` the unit.
//!
//! Measures are exact rationals whenever they come from exact counts; fitted
//! values are carried as `f64`. Comparisons always go through exact
//! arithmetic, since every finite `f64` is a rational number.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A nonnegative measure value.
#[derive(Clone, Debug)]
pub enum Measure {
    Exact(BigRational),
    Approx(f64),
}

impl Measure {
    pub fn zero() -> Self {
        Measure::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Measure::Exact(BigRational::one())
    }

    pub fn integer(n: u64) -> Self {
        Measure::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_count(n: &BigUint) -> Self {
        Measure::Exact(BigRational::from_integer(BigInt::from(n.clone())))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Measure::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Measure::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Measure::Exact(r) => Some(r),
            Measure::Approx(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Measure::Exact(r) => rational_to_f64(r),
            Measure::Approx(x) => *x,
        }
    }

    /// Exact rational view; `None` only for non-finite floats.
    fn rational(&self) -> Option<BigRational> {
        match self {
            Measure::Exact(r) => Some(r.clone()),
            Measure::Approx(x) => BigRational::from_float(*x),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Measure::Exact(r) => r.is_zero(),
            Measure::Approx(x) => *x == 0.0,
        }
    }

    fn is_positive(&self) -> bool {
        match self {
            Measure::Exact(r) => r.is_positive(),
            Measure::Approx(x) => *x > 0.0 && x.is_finite(),
        }
    }

    fn is_nonnegative_integer(&self) -> bool {
        match self {
            Measure::Exact(r) => r.is_integer() && !r.is_negative(),
            Measure::Approx(x) => x.is_finite() && *x >= 0.0 && x.fract() == 0.0,
        }
    }

    pub fn add(&self, other: &Measure) -> Measure {
        match (self, other) {
            (Measure::Exact(a), Measure::Exact(b)) => Measure::Exact(a + b),
            _ => Measure::Approx(self.to_f64() + other.to_f64()),
        }
    }

    pub fn mul(&self, other: &Measure) -> Measure {
        match (self, other) {
            (Measure::Exact(a), Measure::Exact(b)) => Measure::Exact(a * b),
            _ => Measure::Approx(self.to_f64() * other.to_f64()),
        }
    }

    /// Absolute difference as a float.
    pub fn distance(&self, other: &Measure) -> f64 {
        match (self, other) {
            (Measure::Exact(a), Measure::Exact(b)) => rational_to_f64(&(a - b).abs()),
            _ => (self.to_f64() - other.to_f64()).abs(),
        }
    }
}

impl PartialEq for Measure {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Measure {}

impl PartialOrd for Measure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Measure {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Measure::Approx(a), Measure::Approx(b)) => a.total_cmp(b),
            _ => match (self.rational(), other.rational()) {
                (Some(a), Some(b)) => a.cmp(&b),
                _ => self.to_f64().total_cmp(&other.to_f64()),
            },
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::Exact(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Measure::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            // Debug formatting always carries a '.', an exponent or a name,
            // which keeps floats distinguishable from exact integers.
            Measure::Approx(x) => write!(f, "{:?}", x),
        }
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidDimMeasure(format!("unparseable measure `{s}`"));
        let looks_float = s.contains(['.', 'e', 'E']) || s.contains("inf") || s.contains("NaN");
        if looks_float {
            return s.parse::<f64>().map(Measure::Approx).map_err(|_| bad());
        }
        let r = match s.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.trim().parse().map_err(|_| bad())?;
                let d: BigInt = d.trim().parse().map_err(|_| bad())?;
                if d.is_zero() {
                    return Err(bad());
                }
                BigRational::new(n, d)
            }
            None => BigRational::from_integer(s.parse::<BigInt>().map_err(|_| bad())?),
        };
        Ok(Measure::Exact(r))
    }
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    if let Some(x) = r.to_f64() {
        if x.is_finite() {
            return x;
        }
    }
    // Very large or very small parts: fall back to scaled logarithms.
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    let ln = crate::asymptotics::ln_biguint(&r.numer().abs().to_biguint().unwrap_or_default())
        - crate::asymptotics::ln_biguint(&r.denom().abs().to_biguint().unwrap_or_default());
    sign * ln.exp()
}

/// An element `(n, k, mu)` of the dimension–measure semiring.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct DimMeasure {
    n: u32,
    k: u32,
    mu: Measure,
}

impl DimMeasure {
    /// Builds a triple, enforcing that positive dimensions carry positive
    /// measure and that dimension `(0,0)` carries a nonnegative integer.
    pub fn new(n: u32, k: u32, mu: Measure) -> Result<Self> {
        if let Measure::Approx(x) = mu {
            if !x.is_finite() {
                return Err(Error::InvalidDimMeasure(format!("non-finite measure {x}")));
            }
        }
        if (n, k) == (0, 0) {
            if !mu.is_nonnegative_integer() {
                return Err(Error::InvalidDimMeasure(format!(
                    "dimension (0,0) needs a nonnegative integer measure, got {mu}"
                )));
            }
        } else if !mu.is_positive() {
            return Err(Error::InvalidDimMeasure(format!(
                "dimension ({n},{k}) needs a positive measure, got {mu}"
            )));
        }
        Ok(DimMeasure { n, k, mu })
    }

    pub fn zero() -> Self {
        DimMeasure { n: 0, k: 0, mu: Measure::zero() }
    }

    pub fn one() -> Self {
        DimMeasure { n: 0, k: 0, mu: Measure::one() }
    }

    /// The triple `(0, 0, |X|)` of a finite set.
    pub fn finite(size: &BigUint) -> Self {
        DimMeasure { n: 0, k: 0, mu: Measure::from_count(size) }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn dim(&self) -> (u32, u32) {
        (self.n, self.k)
    }

    pub fn measure(&self) -> &Measure {
        &self.mu
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == (0, 0) && self.mu.is_zero()
    }

    pub fn oplus(&self, other: &DimMeasure) -> DimMeasure {
        match self.dim().cmp(&other.dim()) {
            Ordering::Greater => self.clone(),
            Ordering::Less => other.clone(),
            Ordering::Equal => DimMeasure { n: self.n, k: self.k, mu: self.mu.add(&other.mu) },
        }
    }

    pub fn odot(&self, other: &DimMeasure) -> DimMeasure {
        if self.is_zero() || other.is_zero() {
            return DimMeasure::zero();
        }
        DimMeasure { n: self.n + other.n, k: self.k + other.k, mu: self.mu.mul(&other.mu) }
    }

    /// Lexicographic comparison on `(n, k, mu)`.
    pub fn compare(&self, other: &DimMeasure) -> Ordering {
        self.cmp(other)
    }

    /// Same dimension and measures within `tol`; exact equality when both
    /// measures are exact.
    pub fn approx_eq(&self, other: &DimMeasure, tol: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        match (&self.mu, &other.mu) {
            (Measure::Exact(a), Measure::Exact(b)) => a == b,
            (a, b) => a.distance(b) <= tol,
        }
    }
}

impl serde::Serialize for DimMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl fmt::Display for DimMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{};{})", self.n, self.k, self.mu)
    }
}

impl FromStr for DimMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidDimMeasure(format!("expected `(n,k;mu)`, got `{s}`"));
        let inner = s.trim().strip_prefix('(').and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
        let (dims, mu) = inner.split_once(';').ok_or_else(bad)?;
        let (n, k) = dims.split_once(',').ok_or_else(bad)?;
        let n: u32 = n.trim().parse().map_err(|_| bad())?;
        let k: u32 = k.trim().parse().map_err(|_| bad())?;
        DimMeasure::new(n, k, mu.parse()?)
    }
}

/// Names of the semiring laws checked by [`law_violations`].
pub const LAWS: [&str; 10] = [
    "oplus_associative",
    "oplus_commutative",
    "odot_associative",
    "odot_commutative",
    "distributive",
    "oplus_identity",
    "odot_identity",
    "absorption",
    "monotone_oplus",
    "monotone_odot",
];

/// The laws of [`LAWS`] that fail on `a, b, c`.
pub fn law_violations(a: &DimMeasure, b: &DimMeasure, c: &DimMeasure) -> Vec<&'static str> {
    let (zero, one) = (DimMeasure::zero(), DimMeasure::one());
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let checks = [
        a.oplus(b).oplus(c) == a.oplus(&b.oplus(c)),
        a.oplus(b) == b.oplus(a),
        a.odot(b).odot(c) == a.odot(&b.odot(c)),
        a.odot(b) == b.odot(a),
        a.odot(&b.oplus(c)) == a.odot(b).oplus(&a.odot(c)),
        a.oplus(&zero) == *a,
        a.odot(&one) == *a,
        a.odot(&zero) == zero,
        lo.oplus(c) <= hi.oplus(c),
        lo.odot(c) <= hi.odot(c),
    ];
    LAWS.iter().zip(checks).filter(|(_, ok)| !ok).map(|(name, _)| *name).collect()
}

/// A random triple with an exact measure: occasionally zero, otherwise of
/// dimension below `(3,3)` with a small rational measure.
pub fn random_triple<R: rand::Rng + ?Sized>(rng: &mut R) -> DimMeasure {
    if rng.gen_ratio(1, 8) {
        return DimMeasure::zero();
    }
    let (n, k) = (rng.gen_range(0..3), rng.gen_range(0..3));
    let mu = if (n, k) == (0, 0) {
        Measure::integer(rng.gen_range(0..6))
    } else {
        Measure::ratio(rng.gen_range(1..50), rng.gen_range(1..20))
    };
    DimMeasure::new(n, k, mu).expect("valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dm(n: u32, k: u32, num: i64, den: i64) -> DimMeasure {
        DimMeasure::new(n, k, Measure::ratio(num, den)).unwrap()
    }

    #[test]
    fn oplus_examples() {
        assert_eq!(dm(0, 2, 1, 2).oplus(&dm(0, 2, 1, 1)), dm(0, 2, 3, 2));
        assert_eq!(dm(1, 0, 1, 1).oplus(&dm(0, 5, 9, 1)), dm(1, 0, 1, 1));
        assert_eq!(DimMeasure::zero().oplus(&dm(0, 2, 1, 2)), dm(0, 2, 1, 2));
    }

    #[test]
    fn odot_examples() {
        assert_eq!(dm(0, 1, 1, 1).odot(&dm(0, 1, 1, 1)), dm(0, 2, 1, 1));
        assert_eq!(DimMeasure::zero().odot(&dm(3, 1, 7, 1)), DimMeasure::zero());
        assert_eq!(dm(1, 2, 1, 2).odot(&dm(2, 1, 4, 1)), dm(3, 3, 2, 1));
    }

    #[test]
    fn compare_examples() {
        assert_eq!(dm(0, 2, 1, 2).compare(&dm(0, 2, 1, 1)), Ordering::Less);
        assert_eq!(dm(1, 0, 1, 1000).compare(&dm(0, 9, 99, 1)), Ordering::Greater);
        assert_eq!(dm(0, 0, 3, 1).compare(&dm(0, 0, 3, 1)), Ordering::Equal);
    }

    #[test]
    fn invariants_rejected() {
        assert!(DimMeasure::new(0, 1, Measure::zero()).is_err());
        assert!(DimMeasure::new(0, 0, Measure::ratio(1, 2)).is_err());
        assert!(DimMeasure::new(1, 0, Measure::Approx(f64::NAN)).is_err());
        assert!(DimMeasure::new(0, 0, Measure::integer(4)).is_ok());
    }

    #[test]
    fn render_and_parse() {
        let a = dm(0, 2, 1, 2);
        assert_eq!(a.to_string(), "(0,2;1/2)");
        assert_eq!("(0,2;1/2)".parse::<DimMeasure>().unwrap(), a);
        assert_eq!(dm(0, 0, 3, 1).to_string(), "(0,0;3)");
        let f = DimMeasure::new(0, 2, Measure::Approx(1.0)).unwrap();
        assert_eq!(f.to_string(), "(0,2;1.0)");
        let back: DimMeasure = f.to_string().parse().unwrap();
        assert!(!back.measure().is_exact());
        assert!("(0,2)".parse::<DimMeasure>().is_err());
    }

    #[test]
    fn mixed_exact_and_float_compare_exactly() {
        let exact = dm(0, 2, 1, 2);
        let float = DimMeasure::new(0, 2, Measure::Approx(0.5)).unwrap();
        assert_eq!(exact.compare(&float), Ordering::Equal);
        let bigger = DimMeasure::new(0, 2, Measure::Approx(0.5000001)).unwrap();
        assert_eq!(exact.compare(&bigger), Ordering::Less);
    }

    proptest! {
        #[test]
        fn rational_render_roundtrip(n in 0u32..4, k in 0u32..4, num in 1i64..1000, den in 1i64..1000) {
            let mu = if (n, k) == (0, 0) { Measure::integer(num as u64) } else { Measure::ratio(num, den) };
            let a = DimMeasure::new(n, k, mu).unwrap();
            let back: DimMeasure = a.to_string().parse().unwrap();
            prop_assert_eq!(back.to_string(), a.to_string());
            prop_assert_eq!(back, a);
        }
    }
}
