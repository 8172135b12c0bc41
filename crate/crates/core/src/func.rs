//! Finitely supported functions on the integers.
//!
//! [`WeightedFn`] keeps integer numerators together with one rational scale,
//! so sums and products over it stay exact. [`ComplexFn`] is the float
//! counterpart for arbitrary complex weights.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};

/// Anything that can be read as a list of `(n, f(n))` pairs.
pub trait FiniteFunction {
    fn terms(&self) -> Vec<(i64, Complex64)>;

    fn l1_norm(&self) -> f64 {
        self.terms().iter().map(|(_, v)| v.norm()).sum()
    }

    /// `(min, max)` of the support, or `None` when the function is zero.
    fn support_bounds(&self) -> Option<(i64, i64)> {
        let terms = self.terms();
        let lo = terms.iter().map(|t| t.0).min()?;
        let hi = terms.iter().map(|t| t.0).max()?;
        Some((lo, hi))
    }
}

/// `f(n) = numerator(n) * scale` on a finite set of integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedFn {
    points: Vec<(i64, i64)>,
    scale: Ratio<i64>,
}

impl WeightedFn {
    /// Duplicate positions are merged; zero numerators are dropped.
    pub fn new(points: impl IntoIterator<Item = (i64, i64)>, scale: Ratio<i64>) -> Self {
        let mut merged: BTreeMap<i64, i64> = BTreeMap::new();
        for (n, v) in points {
            *merged.entry(n).or_insert(0) += v;
        }
        let points = merged.into_iter().filter(|&(_, v)| v != 0).collect();
        WeightedFn { points, scale }
    }

    pub fn zero() -> Self {
        WeightedFn {
            points: Vec::new(),
            scale: Ratio::from_integer(1),
        }
    }

    /// Indicator of `[lo, hi]`.
    pub fn indicator(lo: i64, hi: i64) -> Self {
        Self::from_set((lo..=hi).collect::<Vec<_>>())
    }

    pub fn from_set(set: impl IntoIterator<Item = i64>) -> Self {
        Self::new(set.into_iter().map(|n| (n, 1)), Ratio::from_integer(1))
    }

    /// Sorted `(n, numerator)` pairs with nonzero numerators.
    pub fn points(&self) -> &[(i64, i64)] {
        &self.points
    }

    pub fn scale(&self) -> Ratio<i64> {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn numerator_at(&self, n: i64) -> i64 {
        self.points
            .binary_search_by_key(&n, |p| p.0)
            .map(|i| self.points[i].1)
            .unwrap_or(0)
    }

    pub fn value_exact(&self, n: i64) -> BigRational {
        ratio_to_big(self.scale) * BigRational::from_integer(BigInt::from(self.numerator_at(n)))
    }

    pub fn value(&self, n: i64) -> f64 {
        self.numerator_at(n) as f64 * ratio_f64(self.scale)
    }

    pub fn numerator_sum(&self) -> i128 {
        self.points.iter().map(|&(_, v)| v as i128).sum()
    }

    /// `sum_n f(n)`, exactly.
    pub fn sum_exact(&self) -> BigRational {
        ratio_to_big(self.scale) * BigRational::from_integer(BigInt::from(self.numerator_sum()))
    }

    pub fn sum(&self) -> f64 {
        self.numerator_sum() as f64 * ratio_f64(self.scale)
    }

    pub fn max_abs_numerator(&self) -> i64 {
        self.points.iter().map(|p| p.1.abs()).max().unwrap_or(0)
    }

    /// Keeps the points for which `keep` is true.
    pub fn restrict(&self, mut keep: impl FnMut(i64) -> bool) -> Self {
        WeightedFn {
            points: self.points.iter().copied().filter(|&(n, _)| keep(n)).collect(),
            scale: self.scale,
        }
    }

    /// Replaces every numerator `v` at `n` by `g(n, v)`.
    pub fn map_numerators(&self, mut g: impl FnMut(i64, i64) -> i64) -> Self {
        Self::new(self.points.iter().map(|&(n, v)| (n, g(n, v))), self.scale)
    }
}

impl FiniteFunction for WeightedFn {
    fn terms(&self) -> Vec<(i64, Complex64)> {
        let s = ratio_f64(self.scale);
        self.points
            .iter()
            .map(|&(n, v)| (n, Complex64::new(v as f64 * s, 0.0)))
            .collect()
    }

    fn support_bounds(&self) -> Option<(i64, i64)> {
        Some((self.points.first()?.0, self.points.last()?.0))
    }
}

/// Complex weights, no exactness guarantees.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexFn {
    points: Vec<(i64, Complex64)>,
}

impl ComplexFn {
    pub fn new(points: impl IntoIterator<Item = (i64, Complex64)>) -> Self {
        let mut merged: BTreeMap<i64, Complex64> = BTreeMap::new();
        for (n, v) in points {
            *merged.entry(n).or_insert_with(Complex64::zero) += v;
        }
        ComplexFn {
            points: merged.into_iter().filter(|(_, v)| !v.is_zero()).collect(),
        }
    }

    pub fn points(&self) -> &[(i64, Complex64)] {
        &self.points
    }
}

impl FiniteFunction for ComplexFn {
    fn terms(&self) -> Vec<(i64, Complex64)> {
        self.points.clone()
    }
}

pub(crate) fn ratio_f64<T: Clone + ToPrimitive>(r: Ratio<T>) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn ratio_to_big(r: Ratio<i64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}
