//! Sweeps over families of models and fits of dimension and measure.
//!
//! Counts are exact; limits are replaced by regressions over the sweep.
//! A fitted triple `(n, k, μ)` reads `|X| ≈ μ · |M|^n · |H|^k`.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::{count, NormalFormSet, Strategy};
use crate::model::{is_prime, ModelSpec, VectorHModel};
use crate::semiring::{DimMeasure, Measure};

/// Natural logarithm of a big integer, `-inf` for zero.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// A grid of primes and sizes; member `(p, m)` is `(F_p^{2m}, {e_1..e_m})`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    #[serde(rename = "p")]
    pub p_values: Vec<u32>,
    #[serde(rename = "m")]
    pub m_values: Vec<usize>,
}

impl FamilySpec {
    pub fn new(p_values: Vec<u32>, m_values: Vec<usize>) -> Result<Self> {
        let spec = FamilySpec { p_values, m_values };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_values.is_empty() || self.m_values.is_empty() {
            return Err(Error::InvalidFamily("empty prime or size list".into()));
        }
        if let Some(&p) = self.p_values.iter().find(|&&p| !is_prime(p as u64)) {
            return Err(Error::NonPrime(p as u64));
        }
        if self.m_values.contains(&0) {
            return Err(Error::InvalidFamily("sizes must be at least 1".into()));
        }
        if self.m_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidFamily("sizes must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn members(&self) -> Vec<ModelSpec> {
        let mut out = Vec::new();
        for &p in &self.p_values {
            for &m in &self.m_values {
                out.push(ModelSpec { p, m });
            }
        }
        out
    }
}

/// A union of grids, as used for two-axis fits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Family {
    pub grids: Vec<FamilySpec>,
}

impl Family {
    pub fn new(grids: Vec<FamilySpec>) -> Result<Self> {
        if grids.is_empty() {
            return Err(Error::InvalidFamily("no grids".into()));
        }
        for g in &grids {
            g.validate()?;
        }
        Ok(Family { grids })
    }

    pub fn single(p: u32, m: usize) -> Result<Self> {
        Family::new(vec![FamilySpec::new(vec![p], vec![m])?])
    }

    /// Distinct members sorted by `(p, m)`.
    pub fn members(&self) -> Vec<ModelSpec> {
        let mut out: Vec<ModelSpec> = self.grids.iter().flat_map(|g| g.members()).collect();
        out.sort_by_key(|s| (s.p, s.m));
        out.dedup();
        out
    }
}

impl From<FamilySpec> for Family {
    fn from(spec: FamilySpec) -> Self {
        Family { grids: vec![spec] }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub p: u32,
    pub m: usize,
    pub card_m: BigUint,
    pub card_h: usize,
    /// `None` marks a member whose count exceeded the budget.
    pub count: Option<BigUint>,
}

impl SweepRow {
    pub fn new(spec: ModelSpec, count: Option<BigUint>) -> Self {
        let card_m = BigUint::from(spec.p).pow(2 * spec.m as u32);
        SweepRow { p: spec.p, m: spec.m, card_m, card_h: spec.m, count }
    }

    pub fn ln_card_m(&self) -> f64 {
        ln_biguint(&self.card_m)
    }

    pub fn ln_card_h(&self) -> f64 {
        (self.card_h as f64).ln()
    }

    fn ln_count(&self) -> Option<f64> {
        self.count.as_ref().filter(|c| !c.is_zero()).map(ln_biguint)
    }

    pub fn log_m_ratio(&self) -> Option<f64> {
        self.ln_count().map(|l| l / self.ln_card_m())
    }

    pub fn log_h_ratio(&self) -> Option<f64> {
        let den = self.ln_card_h();
        if den <= 0.0 {
            return None;
        }
        self.ln_count().map(|l| l / den)
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

fn fmt_ratio(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.12}")).unwrap_or_default()
}

impl SweepResult {
    pub const CSV_HEADER: &'static str = "p,m,cardM,cardH,count,logM_ratio,logH_ratio";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let count = r.count.as_ref().map_or_else(|| "gap".to_string(), |c| c.to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.p,
                r.m,
                r.card_m,
                r.card_h,
                count,
                fmt_ratio(r.log_m_ratio()),
                fmt_ratio(r.log_h_ratio())
            ));
        }
        out
    }

    pub fn counts(&self) -> Vec<Option<BigUint>> {
        self.rows.iter().map(|r| r.count.clone()).collect()
    }

    pub fn complete_rows(&self) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.count.is_some()).collect()
    }

    pub fn has_gaps(&self) -> bool {
        self.rows.iter().any(|r| r.count.is_none())
    }
}

/// Exact counts of `nf` on every member, computed in parallel. Members over
/// budget become gaps; other errors abort the sweep.
pub fn sweep(family: &Family, nf: &NormalFormSet, budget: u64) -> Result<SweepResult> {
    let formula = nf.formula();
    sweep_formula(family, &formula, &nf.vars, budget)
}

pub fn sweep_formula(family: &Family, formula: &crate::logic::Formula, vars: &[String], budget: u64) -> Result<SweepResult> {
    let rows: Result<Vec<SweepRow>> = family
        .members()
        .into_par_iter()
        .map(|spec| {
            let model = VectorHModel::from_spec(spec)?;
            match count(&model, formula, vars, Strategy::Auto, budget) {
                Ok(c) => Ok(SweepRow::new(spec, Some(c))),
                Err(e) if e.is_budget() => Ok(SweepRow::new(spec, None)),
                Err(e) => Err(e),
            }
        })
        .collect();
    Ok(SweepResult { rows: rows? })
}

/// Ordinary least squares `y ≈ a + b x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
}

pub fn linear_fit(points: &[(f64, f64)]) -> Option<LineFit> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = points.iter().map(|p| (p.1 - intercept - slope * p.0).abs()).fold(0.0, f64::max);
    Some(LineFit { slope, intercept, max_residual })
}

/// Common slope of several groups, each with its own intercept.
pub fn pooled_slope(groups: &[Vec<(f64, f64)>]) -> Option<f64> {
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for g in groups.iter().filter(|g| g.len() >= 2) {
        let n = g.len() as f64;
        let mx = g.iter().map(|p| p.0).sum::<f64>() / n;
        let my = g.iter().map(|p| p.1).sum::<f64>() / n;
        sxx += g.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        sxy += g.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    }
    (sxx > 1e-12).then(|| sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Denominator {
    M,
    H,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoarseDim {
    /// `None` when every count is zero.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub max_residual: Option<f64>,
    /// `log|X| / log|den|` per usable row.
    pub ratios: Vec<f64>,
    /// True when the ratios move monotonically along the sweep.
    pub monotone: bool,
    pub rows_used: usize,
}

/// Regression slope of `log|X|` against `log|M|` or `log|H|`.
pub fn coarse_dim(result: &SweepResult, den: Denominator) -> Result<CoarseDim> {
    let complete = result.complete_rows();
    if !complete.is_empty() && complete.iter().all(|r| r.count.as_ref().is_some_and(|c| c.is_zero())) {
        return Ok(CoarseDim { slope: None, intercept: None, max_residual: None, ratios: vec![], monotone: true, rows_used: 0 });
    }
    let mut rows: Vec<&SweepRow> = complete.into_iter().filter(|r| r.ln_count().is_some()).collect();
    if den == Denominator::H {
        rows.retain(|r| r.card_h > 1);
    }
    if rows.len() < 3 {
        return Err(Error::InsufficientData(format!("coarse dimension needs 3 rows with positive counts, have {}", rows.len())));
    }
    let x = |r: &SweepRow| match den {
        Denominator::M => r.ln_card_m(),
        Denominator::H => r.ln_card_h(),
    };
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (x(r), r.ln_count().expect("filtered"))).collect();
    let fit = linear_fit(&points).ok_or_else(|| Error::InsufficientData("denominator does not vary".into()))?;
    let ratios: Vec<f64> = points.iter().map(|(a, b)| b / a).collect();
    let diffs: Vec<f64> = ratios.windows(2).map(|w| w[1] - w[0]).collect();
    let monotone = diffs.iter().all(|d| *d >= -1e-12) || diffs.iter().all(|d| *d <= 1e-12);
    Ok(CoarseDim {
        slope: Some(fit.slope),
        intercept: Some(fit.intercept),
        max_residual: Some(fit.max_residual),
        ratios,
        monotone,
        rows_used: rows.len(),
    })
}

/// Coefficients (constant term first) of the unique polynomial of degree
/// `< xs.len()` through the points.
pub fn interpolate(xs: &[BigRational], ys: &[BigRational]) -> Vec<BigRational> {
    let n = xs.len();
    let mut coeffs = vec![BigRational::zero(); n];
    // Newton divided differences, then expansion into the monomial basis.
    let mut dd = ys.to_vec();
    for j in 1..n {
        for i in (j..n).rev() {
            dd[i] = (&dd[i] - &dd[i - 1]) / (&xs[i] - &xs[i - j]);
        }
    }
    let mut basis = vec![BigRational::one()];
    for (j, c) in dd.iter().enumerate() {
        for (i, b) in basis.iter().enumerate() {
            coeffs[i] += c * b;
        }
        if j + 1 < n {
            let mut next = vec![BigRational::zero(); basis.len() + 1];
            for (i, b) in basis.iter().enumerate() {
                next[i + 1] += b;
                next[i] -= b * &xs[j];
            }
            basis = next;
        }
    }
    coeffs
}

pub fn poly_eval(coeffs: &[BigRational], x: &BigRational) -> BigRational {
    coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
}

fn big(x: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x.clone()))
}

/// Exact polynomial of degree `deg` through `points`, confirmed either by
/// the points beyond the first `deg + 1`, or (when none remain) by integral
/// coefficients if `integral_fallback` is set. Returns the coefficients and
/// whether extra points confirmed them.
pub fn exact_polynomial(points: &[(BigRational, BigRational)], deg: usize, integral_fallback: bool) -> Option<(Vec<BigRational>, bool)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    if pts.len() < deg + 1 {
        return None;
    }
    let (xs, ys): (Vec<BigRational>, Vec<BigRational>) = pts[..=deg].iter().cloned().unzip();
    let coeffs = interpolate(&xs, &ys);
    if coeffs.iter().skip(deg + 1).any(|c| !c.is_zero()) {
        return None;
    }
    let coeffs: Vec<BigRational> = coeffs.into_iter().take(deg + 1).collect();
    let extra = &pts[deg + 1..];
    if !extra.is_empty() {
        return extra.iter().all(|(x, y)| poly_eval(&coeffs, x) == *y).then_some((coeffs, true));
    }
    (integral_fallback && coeffs.iter().all(|c| c.is_integer())).then_some((coeffs, false))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimFit {
    pub triple: DimMeasure,
    pub n_slope: Option<f64>,
    pub k_slope: Option<f64>,
    pub k_given: u32,
    pub k_consistent: bool,
    /// `exact` (constant or verified polynomial), or `extrapolated`.
    pub method: String,
    pub rows_used: usize,
}

const K_TOLERANCE: f64 = 0.25;

fn group_by<K: Ord, T: Clone>(rows: &[T], key: impl Fn(&T) -> K) -> BTreeMap<K, Vec<T>> {
    let mut out: BTreeMap<K, Vec<T>> = BTreeMap::new();
    for r in rows {
        out.entry(key(r)).or_default().push(r.clone());
    }
    out
}

fn factorial(k: u32) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, i| acc * i)
}

pub fn k_factorial(k: u32) -> BigUint {
    factorial(k)
}

/// Fits `(n, k, μ)` with `|X| ≈ μ |M|^n |H|^k`.
///
/// `n` is the slope of `log|X|` in `log|M|` at fixed `m` (varying `p`); `k`
/// is the slope of `log|X| − n log|M|` in `log m` at fixed `p`. The measure
/// is the leading coefficient of an exact polynomial in `m` when one fits
/// every row, and otherwise an extrapolation of `|X| / (|M|^n m^k)`.
pub fn fit_dim_measure(result: &SweepResult, k_given: u32) -> Result<DimFit> {
    let rows: Vec<SweepRow> = result.complete_rows().into_iter().cloned().collect();
    if rows.is_empty() {
        return Err(Error::InsufficientData("no complete rows".into()));
    }
    let counts: Vec<&BigUint> = rows.iter().map(|r| r.count.as_ref().expect("complete")).collect();
    let exact = |triple: DimMeasure, n_slope, k_slope| DimFit {
        k_consistent: (triple.k() as f64 - k_given as f64).abs() <= K_TOLERANCE,
        triple,
        n_slope,
        k_slope,
        k_given,
        method: "exact".into(),
        rows_used: rows.len(),
    };
    if counts.iter().all(|c| *c == counts[0]) {
        return Ok(exact(DimMeasure::finite(counts[0]), Some(0.0), Some(0.0)));
    }
    if counts.iter().any(|c| c.is_zero()) {
        return Err(Error::InsufficientData("some but not all counts vanish".into()));
    }
    let ln_x = |r: &SweepRow| ln_biguint(r.count.as_ref().expect("complete"));

    // n from the p-axis, falling back to a single-axis slope.
    let by_m = group_by(&rows, |r| r.m);
    let groups: Vec<Vec<(f64, f64)>> = by_m.values().map(|g| g.iter().map(|r| (r.ln_card_m(), ln_x(r))).collect()).collect();
    let n_slope = match pooled_slope(&groups) {
        Some(s) => s,
        None => {
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.ln_card_m(), ln_x(r))).collect();
            linear_fit(&pts).ok_or_else(|| Error::InsufficientData("sizes do not vary".into()))?.slope
        }
    };
    let n = n_slope.round().max(0.0) as u32;

    // k from the m-axis after removing |M|^n.
    let by_p = group_by(&rows, |r| r.p);
    let resid = |r: &SweepRow| ln_x(r) - n as f64 * r.ln_card_m();
    let groups: Vec<Vec<(f64, f64)>> = by_p.values().map(|g| g.iter().map(|r| (r.ln_card_h(), resid(r))).collect()).collect();
    let k_slope = pooled_slope(&groups);
    let k = k_slope.map_or(0.0, |s| s.round().max(0.0)) as u32;

    // μ: exact polynomial in m of degree k for r = |X| / |M|^n.
    let ratio = |r: &SweepRow| big(r.count.as_ref().expect("complete")) / big(&r.card_m.pow(n));
    let mut mu: Option<Measure> = None;
    let mut method = "extrapolated".to_string();
    let mut poly: Option<Vec<BigRational>> = None;
    for g in by_p.values() {
        let pts: Vec<(BigRational, BigRational)> =
            g.iter().map(|r| (BigRational::from_integer(BigInt::from(r.m)), ratio(r))).collect();
        if pts.len() < k as usize + 2 {
            continue;
        }
        if let Some((c, true)) = exact_polynomial(&pts, k as usize, false) {
            poly = Some(c);
            break;
        }
    }
    if let Some(c) = poly {
        let all_fit = rows.iter().all(|r| poly_eval(&c, &BigRational::from_integer(BigInt::from(r.m))) == ratio(r));
        if all_fit && c[k as usize].is_positive() {
            mu = Some(Measure::Exact(c[k as usize].clone()));
            method = "exact".into();
        }
    }
    let mu = match mu {
        Some(m) => m,
        None => {
            // ν(m) = r / m^k, extrapolated to 1/m → 0 along the richest p-group.
            let best = by_p.values().max_by_key(|g| g.len()).expect("nonempty");
            let pts: Vec<(f64, f64)> = best
                .iter()
                .map(|r| {
                    let nu = crate::semiring::rational_to_f64(&ratio(r)) / (r.m as f64).powi(k as i32);
                    (1.0 / r.m as f64, nu)
                })
                .collect();
            let est = match linear_fit(&pts) {
                Some(f) if pts.len() >= 3 => f.intercept,
                _ => pts.iter().min_by(|a, b| a.0.total_cmp(&b.0)).map(|p| p.1).unwrap_or(0.0),
            };
            Measure::Approx(est)
        }
    };
    let triple = if (n, k) == (0, 0) {
        return Err(Error::InsufficientData("non-constant counts of dimension (0,0)".into()));
    } else {
        DimMeasure::new(n, k, mu)?
    };
    Ok(DimFit {
        k_consistent: (k_slope.unwrap_or(0.0) - k_given as f64).abs() <= K_TOLERANCE,
        triple,
        n_slope: Some(n_slope),
        k_slope,
        k_given,
        method,
        rows_used: rows.len(),
    })
}

/// Minimum of `|X| / |H|^n` over the sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBound {
    pub n: u32,
    pub min_ratio: f64,
    pub floor: f64,
    pub holds: bool,
}

pub fn lower_bound_diagnostic(result: &SweepResult, n: u32, floor: f64) -> Result<LowerBound> {
    let rows = result.complete_rows();
    if rows.is_empty() {
        return Err(Error::InsufficientData("no complete rows".into()));
    }
    let min_ratio = rows
        .iter()
        .map(|r| {
            let den = BigUint::from(r.card_h).pow(n);
            crate::semiring::rational_to_f64(&(big(r.count.as_ref().expect("complete")) / big(&den)))
        })
        .fold(f64::INFINITY, f64::min);
    Ok(LowerBound { n, min_ratio, floor, holds: min_ratio >= floor })
}
