//! Weighted solution counts for `c . x = 0`, exactly (meet in the middle over
//! partial-sum distributions) and through discrete orthogonality, plus the
//! K-trivial enumeration, the telescoping identity, the configuration gap and
//! the search for directions solving `c . x = 0 = c . x^2`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expsum::{fft_positive, fourier_grid};
use crate::func::{ratio_to_big, ComplexFn, FiniteFunction, WeightedFn};
use crate::majorant::{Majorant, WParams};

/// A diagonal form `c_1 y_1 + ... + c_s y_s`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "EquationRepr", into = "EquationRepr")]
pub struct Equation {
    coeffs: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct EquationRepr {
    c: Vec<i64>,
}

impl TryFrom<EquationRepr> for Equation {
    type Error = Error;
    fn try_from(r: EquationRepr) -> Result<Self> {
        Equation::new(r.c)
    }
}

impl From<Equation> for EquationRepr {
    fn from(e: Equation) -> Self {
        EquationRepr { c: e.coeffs }
    }
}

impl Equation {
    /// Needs at least two coefficients, all nonzero.
    pub fn new(coeffs: Vec<i64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::invalid("c", "need at least two coefficients"));
        }
        if coeffs.contains(&0) {
            return Err(Error::invalid("c", "coefficients must be nonzero"));
        }
        if coeffs.iter().any(|c| c.unsigned_abs() > 1 << 20) {
            return Err(Error::invalid("c", "coefficients must be below 2^20 in size"));
        }
        Ok(Equation { coeffs })
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn arity(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_sum_zero(&self) -> bool {
        self.coeffs.iter().sum::<i64>() == 0
    }

    /// `(#positive, #negative)`.
    pub fn signs(&self) -> (usize, usize) {
        let pos = self.coeffs.iter().filter(|&&c| c > 0).count();
        (pos, self.coeffs.len() - pos)
    }

    pub fn eval(&self, y: &[i64]) -> i128 {
        self.coeffs.iter().zip(y).map(|(&c, &v)| c as i128 * v as i128).sum()
    }

    pub fn eval_squares(&self, x: &[i64]) -> i128 {
        self.coeffs
            .iter()
            .zip(x)
            .map(|(&c, &v)| c as i128 * v as i128 * v as i128)
            .sum()
    }

    /// The same equation with coefficients reordered by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Equation {
        Equation {
            coeffs: perm.iter().map(|&i| self.coeffs[i]).collect(),
        }
    }
}

/// `{y : c . y = 0, d . y = 0 for every form d}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subspace {
    pub forms: Vec<Vec<i64>>,
}

impl Subspace {
    /// True when every form has coefficient sum zero, so the subspace
    /// contains the diagonal whenever `c` does.
    pub fn contains_diagonal(&self) -> bool {
        self.forms.iter().all(|d| d.iter().sum::<i64>() == 0)
    }
}

/// A finite union `K` of proper subspaces of the hyperplane `c . y = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubspaceFamily {
    pub equation: Equation,
    pub subspaces: Vec<Subspace>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyRepr {
    c: Vec<i64>,
    #[serde(default)]
    forms: Vec<Vec<i64>>,
    #[serde(default)]
    subspaces: Vec<Vec<Vec<i64>>>,
    #[serde(default)]
    preset: Option<String>,
}

impl SubspaceFamily {
    /// Each subspace is given by its extra forms; every subspace must be a
    /// proper subspace of the hyperplane.
    pub fn new(equation: Equation, subspaces: Vec<Subspace>) -> Result<Self> {
        let s = equation.arity();
        for sub in &subspaces {
            if sub.forms.is_empty() {
                return Err(Error::invalid("forms", "a subspace needs at least one form"));
            }
            if sub.forms.iter().any(|d| d.len() != s) {
                return Err(Error::invalid("forms", format!("every form needs {s} entries")));
            }
            let mut rows = vec![equation.coeffs.clone()];
            rows.extend(sub.forms.iter().cloned());
            if Elimination::new(&rows).rank < 2 {
                return Err(Error::invalid("forms", "form is proportional to c"));
            }
        }
        Ok(SubspaceFamily { equation, subspaces })
    }

    /// One subspace per form `d`.
    pub fn from_forms(equation: Equation, forms: Vec<Vec<i64>>) -> Result<Self> {
        let subs = forms.into_iter().map(|d| Subspace { forms: vec![d] }).collect();
        Self::new(equation, subs)
    }

    pub fn empty(equation: Equation) -> Self {
        SubspaceFamily {
            equation,
            subspaces: Vec::new(),
        }
    }

    /// `y_i = y_j` for every pair `i < j`.
    pub fn pairs_equal(equation: Equation) -> Self {
        let s = equation.arity();
        let mut forms = Vec::new();
        for i in 0..s {
            for j in i + 1..s {
                let mut d = vec![0; s];
                d[i] = 1;
                d[j] = -1;
                forms.push(d);
            }
        }
        Self::from_forms(equation, forms).expect("pair forms are independent of c")
    }

    /// The diagonal line `y_1 = ... = y_s`, as one subspace cut out by
    /// `y_i - y_{i+1}`.
    pub fn diagonal(equation: Equation) -> Result<Self> {
        let s = equation.arity();
        let forms = (0..s - 1)
            .map(|i| {
                let mut d = vec![0; s];
                d[i] = 1;
                d[i + 1] = -1;
                d
            })
            .collect();
        Self::new(equation, vec![Subspace { forms }])
    }

    /// Accepts `{"c": [...], "forms": [[...]], "subspaces": [[[...]]],
    /// "preset": "pairs" | "diagonal"}`; all listed pieces are united.
    pub fn from_json(text: &str) -> Result<Self> {
        let r: FamilyRepr = serde_json::from_str(text)?;
        let eq = Equation::new(r.c)?;
        let mut subs: Vec<Subspace> = r.forms.into_iter().map(|d| Subspace { forms: vec![d] }).collect();
        subs.extend(r.subspaces.into_iter().map(|forms| Subspace { forms }));
        match r.preset.as_deref() {
            None => {}
            Some("pairs") => subs.extend(Self::pairs_equal(eq.clone()).subspaces),
            Some("diagonal") => subs.extend(Self::diagonal(eq.clone())?.subspaces),
            Some(other) => return Err(Error::invalid("preset", format!("unknown preset `{other}`"))),
        }
        Self::new(eq, subs)
    }

    pub fn contains_diagonal(&self) -> Vec<bool> {
        self.subspaces.iter().map(Subspace::contains_diagonal).collect()
    }

    /// Whether `y` lies in some subspace of the family.
    pub fn contains(&self, y: &[i64]) -> bool {
        self.equation.eval(y) == 0 && self.subspaces.iter().any(|s| in_subspace(s, y))
    }
}

fn in_subspace(s: &Subspace, y: &[i64]) -> bool {
    s.forms
        .iter()
        .all(|d| d.iter().zip(y).map(|(&a, &b)| a as i128 * b as i128).sum::<i128>() == 0)
}

/// Reduced row echelon form over the rationals, with pivot columns expressed
/// in terms of the free ones: `y_p = sum_f coeff[p][f] y_f / denom[p]`.
struct Elimination {
    rank: usize,
    pivots: Vec<usize>,
    free: Vec<usize>,
    /// `(numerators over free columns, denominator)` per pivot.
    solve: Vec<(Vec<i128>, i128)>,
}

impl Elimination {
    fn new(rows: &[Vec<i64>]) -> Self {
        let s = rows[0].len();
        let mut m: Vec<Vec<Ratio<i128>>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| Ratio::from_integer(v as i128)).collect())
            .collect();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..s {
            let Some(pr) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
                continue;
            };
            m.swap(row, pr);
            let inv = m[row][col].recip();
            for v in m[row].iter_mut() {
                *v *= inv;
            }
            for r in 0..m.len() {
                if r != row && !m[r][col].is_zero() {
                    let factor = m[r][col];
                    for c in 0..s {
                        let sub = factor * m[row][c];
                        m[r][c] -= sub;
                    }
                }
            }
            pivots.push(col);
            row += 1;
            if row == m.len() {
                break;
            }
        }
        let free: Vec<usize> = (0..s).filter(|c| !pivots.contains(c)).collect();
        let solve = pivots
            .iter()
            .enumerate()
            .map(|(r, _)| {
                let coeffs: Vec<Ratio<i128>> = free.iter().map(|&f| -m[r][f]).collect();
                let denom = coeffs
                    .iter()
                    .fold(1i128, |acc, c| num_integer::lcm(acc, *c.denom()));
                let nums = coeffs.iter().map(|c| c.numer() * (denom / c.denom())).collect();
                (nums, denom)
            })
            .collect();
        Elimination {
            rank: pivots.len(),
            pivots,
            free,
            solve,
        }
    }
}

/// Per-coordinate lookup `y -> weight numerator`.
pub(crate) struct ValueTable {
    entries: Vec<(i64, i64)>,
    dense: Option<(i64, Vec<i64>)>,
    sparse: HashMap<i64, i64>,
}

impl ValueTable {
    pub(crate) fn new(mut entries: Vec<(i64, i64)>) -> Self {
        entries.sort_unstable();
        entries.retain(|e| e.1 != 0);
        let (lo, hi) = match (entries.first(), entries.last()) {
            (Some(a), Some(b)) => (a.0, b.0),
            _ => (0, -1),
        };
        let range = (hi - lo + 1).max(0) as u64;
        if range <= 1 << 26 {
            let mut dense = vec![0i64; range as usize];
            for &(y, v) in &entries {
                dense[(y - lo) as usize] += v;
            }
            ValueTable {
                entries,
                dense: Some((lo, dense)),
                sparse: HashMap::new(),
            }
        } else {
            let sparse = entries.iter().copied().collect();
            ValueTable {
                entries,
                dense: None,
                sparse,
            }
        }
    }

    #[inline]
    fn get(&self, y: i64) -> i64 {
        match &self.dense {
            Some((lo, d)) => {
                let i = y.wrapping_sub(*lo);
                if i >= 0 && (i as usize) < d.len() {
                    d[i as usize]
                } else {
                    0
                }
            }
            None => self.sparse.get(&y).copied().unwrap_or(0),
        }
    }
}

/// `sum over y in K with y_i in table_i of prod_i table_i(y_i)`, every tuple
/// counted once however many subspaces contain it.
pub(crate) fn family_sum(tables: &[ValueTable], family: &SubspaceFamily) -> Result<i128> {
    let s = family.equation.arity();
    if tables.len() != s {
        return Err(Error::invalid("fs", format!("need {s} functions")));
    }
    let mut total = 0i128;
    for (k, sub) in family.subspaces.iter().enumerate() {
        let mut rows = vec![family.equation.coeffs.clone()];
        rows.extend(sub.forms.iter().cloned());
        let elim = Elimination::new(&rows);
        let earlier = &family.subspaces[..k];
        total = total
            .checked_add(subspace_sum(tables, &elim, earlier)?)
            .ok_or(Error::Overflow("K-trivial count"))?;
    }
    Ok(total)
}

fn subspace_sum(tables: &[ValueTable], elim: &Elimination, earlier: &[Subspace]) -> Result<i128> {
    let s = tables.len();
    if elim.free.is_empty() {
        // only y = 0
        let y = vec![0i64; s];
        let w: i128 = tables.iter().map(|t| t.get(0) as i128).product();
        return Ok(if earlier.iter().any(|e| in_subspace(e, &y)) { 0 } else { w });
    }
    let first = elim.free[0];
    tables[first]
        .entries
        .par_iter()
        .map(|&(y0, w0)| {
            let mut y = vec![0i64; s];
            y[first] = y0;
            let mut acc = 0i128;
            let ok = walk(tables, elim, earlier, 1, w0 as i128, &mut y, &mut acc);
            if ok {
                Ok(acc)
            } else {
                Err(Error::Overflow("K-trivial count"))
            }
        })
        .try_reduce(|| 0i128, |a, b| a.checked_add(b).ok_or(Error::Overflow("K-trivial count")))
}

fn walk(
    tables: &[ValueTable],
    elim: &Elimination,
    earlier: &[Subspace],
    depth: usize,
    weight: i128,
    y: &mut [i64],
    acc: &mut i128,
) -> bool {
    if depth < elim.free.len() {
        let f = elim.free[depth];
        for &(v, w) in &tables[f].entries {
            y[f] = v;
            let Some(next) = weight.checked_mul(w as i128) else {
                return false;
            };
            if !walk(tables, elim, earlier, depth + 1, next, y, acc) {
                return false;
            }
        }
        return true;
    }
    let mut weight = weight;
    for (p, (nums, den)) in elim.pivots.iter().zip(&elim.solve) {
        let lin: i128 = nums
            .iter()
            .zip(&elim.free)
            .map(|(&a, &f)| a * y[f] as i128)
            .sum();
        if lin % den != 0 {
            return true;
        }
        let v = lin / den;
        let Ok(v) = i64::try_from(v) else {
            return true;
        };
        let w = tables[*p].get(v);
        if w == 0 {
            return true;
        }
        y[*p] = v;
        match weight.checked_mul(w as i128) {
            Some(n) => weight = n,
            None => return false,
        }
    }
    if earlier.iter().any(|e| in_subspace(e, y)) {
        return true;
    }
    match acc.checked_add(weight) {
        Some(n) => {
            *acc = n;
            true
        }
        None => false,
    }
}

/// An exact weighted count `numerator * scale`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledCount {
    pub numerator: i128,
    pub scale: BigRational,
}

impl ScaledCount {
    pub fn exact(&self) -> BigRational {
        &self.scale * BigRational::from_integer(BigInt::from(self.numerator))
    }

    pub fn value(&self) -> f64 {
        self.exact().to_f64().unwrap_or(f64::NAN)
    }
}

fn product_scale(fs: &[&WeightedFn]) -> BigRational {
    fs.iter()
        .fold(BigRational::one(), |acc, f| acc * ratio_to_big(f.scale()))
}

fn check_arity(fs: &[&WeightedFn], eq: &Equation) -> Result<()> {
    if fs.len() != eq.arity() {
        return Err(Error::invalid(
            "fs",
            format!("{} functions for an equation in {} variables", fs.len(), eq.arity()),
        ));
    }
    Ok(())
}

/// Distribution of `sum_i c_i x_i` weighted by `prod_i f_i(x_i)`.
struct SumDist {
    lo: i64,
    weights: Vec<i128>,
}

impl SumDist {
    fn unit() -> Self {
        SumDist {
            lo: 0,
            weights: vec![1],
        }
    }

    fn extend(&self, c: i64, f: &WeightedFn) -> Result<SumDist> {
        let pts = f.points();
        if pts.is_empty() || self.weights.is_empty() {
            return Ok(SumDist {
                lo: 0,
                weights: Vec::new(),
            });
        }
        let (a, b) = (c * pts[0].0, c * pts[pts.len() - 1].0);
        let (fmin, fmax) = (a.min(b), a.max(b));
        let lo = self.lo + fmin;
        let len = self.weights.len() as i64 + fmax - fmin;
        if len > 1 << 27 {
            return Err(Error::invalid("fs", "partial-sum range exceeds 2^27"));
        }
        let mut out = vec![0i128; len as usize];
        for (i, &wl) in self.weights.iter().enumerate() {
            if wl == 0 {
                continue;
            }
            let base = self.lo + i as i64 - lo;
            for &(x, v) in pts {
                let slot = &mut out[(base + c * x) as usize];
                let term = wl.checked_mul(v as i128).ok_or(Error::Overflow("count"))?;
                *slot = slot.checked_add(term).ok_or(Error::Overflow("count"))?;
            }
        }
        Ok(SumDist { lo, weights: out })
    }

    fn get(&self, k: i64) -> i128 {
        let i = k - self.lo;
        if i >= 0 && (i as usize) < self.weights.len() {
            self.weights[i as usize]
        } else {
            0
        }
    }
}

/// Coordinate split minimising the larger of the two support products.
fn balanced_split(fs: &[&WeightedFn]) -> Vec<bool> {
    let s = fs.len();
    let logs: Vec<f64> = fs.iter().map(|f| (f.len().max(1) as f64).ln()).collect();
    let mut best = (f64::INFINITY, 0usize);
    for mask in 0..(1usize << s) {
        let left: f64 = (0..s).filter(|i| mask >> i & 1 == 1).map(|i| logs[i]).sum();
        let right: f64 = logs.iter().sum::<f64>() - left;
        let cost = left.max(right);
        if cost < best.0 - 1e-12 {
            best = (cost, mask);
        }
    }
    (0..s).map(|i| best.1 >> i & 1 == 1).collect()
}

/// `sum_{c . x = 0} prod_i f_i(x_i)`, exactly.
pub fn count_brute(fs: &[&WeightedFn], eq: &Equation) -> Result<ScaledCount> {
    check_arity(fs, eq)?;
    let split = balanced_split(fs);
    let mut left = SumDist::unit();
    let mut right = SumDist::unit();
    for (i, (&f, &c)) in fs.iter().zip(eq.coeffs()).enumerate() {
        if split[i] {
            left = left.extend(c, f)?;
        } else {
            right = right.extend(-c, f)?;
        }
    }
    let mut numerator = 0i128;
    for (i, &wl) in left.weights.iter().enumerate() {
        if wl != 0 {
            let wr = right.get(left.lo + i as i64);
            let t = wl.checked_mul(wr).ok_or(Error::Overflow("count"))?;
            numerator = numerator.checked_add(t).ok_or(Error::Overflow("count"))?;
        }
    }
    Ok(ScaledCount {
        numerator,
        scale: product_scale(fs),
    })
}

/// The largest `|c . x|` over the supports; any modulus above it is admissible.
pub fn max_abs_form(fs: &[&WeightedFn], eq: &Equation) -> i128 {
    let (mut hi, mut lo) = (0i128, 0i128);
    for (f, &c) in fs.iter().zip(eq.coeffs()) {
        if let Some((a, b)) = f.support_bounds() {
            let (u, v) = (c as i128 * a as i128, c as i128 * b as i128);
            hi += u.max(v);
            lo += u.min(v);
        }
    }
    hi.abs().max(lo.abs())
}

/// Smallest power of two exceeding `(sum |c_i|) N + 1`, `N` the largest
/// support point in absolute value.
pub fn default_modulus(fs: &[&WeightedFn], eq: &Equation) -> usize {
    let n = fs
        .iter()
        .filter_map(|f| f.support_bounds())
        .map(|(a, b)| a.unsigned_abs().max(b.unsigned_abs()))
        .max()
        .unwrap_or(0);
    let c: u64 = eq.coeffs().iter().map(|c| c.unsigned_abs()).sum();
    ((c * n + 2) as usize).next_power_of_two()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DftCount {
    pub modulus: usize,
    /// `(1/M) sum_t prod_i F_i(c_i t)` on the numerators, before scaling.
    pub raw_numerator: f64,
    /// Nearest integer to `raw_numerator`.
    pub rounded_numerator: f64,
    pub rounding_residual: f64,
    /// `rounded_numerator * scale`.
    pub value: f64,
}

/// The count by orthogonality modulo `M` (default [`default_modulus`]).
pub fn count_dft(fs: &[&WeightedFn], eq: &Equation, modulus: Option<usize>) -> Result<DftCount> {
    check_arity(fs, eq)?;
    let required = max_abs_form(fs, eq) + 1;
    let m = modulus.unwrap_or_else(|| default_modulus(fs, eq));
    if (m as i128) < required {
        return Err(Error::ModulusTooSmall {
            given: m,
            required: required as usize,
        });
    }
    let grids: Vec<Vec<Complex64>> = fs
        .par_iter()
        .map(|f| {
            let mut buf = vec![Complex64::new(0.0, 0.0); m];
            for &(n, v) in f.points() {
                buf[n.rem_euclid(m as i64) as usize] += v as f64;
            }
            fft_positive(&mut buf);
            buf
        })
        .collect();
    let coeffs: Vec<usize> = eq.coeffs().iter().map(|&c| c.rem_euclid(m as i64) as usize).collect();
    let total = (0..m)
        .into_par_iter()
        .fold_chunks(
            1 << 14,
            || (0.0f64, 0.0f64),
            |(sum, comp), t| {
                let mut prod = Complex64::new(1.0, 0.0);
                for (g, &c) in grids.iter().zip(&coeffs) {
                    prod *= g[(c as u128 * t as u128 % m as u128) as usize];
                }
                let y = prod.re - comp;
                let s = sum + y;
                (s, (s - sum) - y)
            },
        )
        .map(|(s, c)| s - c)
        .collect::<Vec<f64>>()
        .into_iter()
        .sum::<f64>();
    let raw = total / m as f64;
    let rounded = raw.round();
    let scale = product_scale(fs).to_f64().unwrap_or(f64::NAN);
    Ok(DftCount {
        modulus: m,
        raw_numerator: raw,
        rounded_numerator: rounded,
        rounding_residual: (raw - rounded).abs(),
        value: rounded * scale,
    })
}

/// Paired exact and orthogonality counts plus the K-trivial part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub brute_exact: String,
    pub brute: f64,
    pub dft: DftCount,
    /// `rounded DFT numerator == exact numerator`, meaningful while the
    /// numerator stays below `2^53`.
    pub agree: bool,
    pub ktrivial: Option<f64>,
    pub heuristic: f64,
}

/// Counts `c . x = 0` over `fs` both ways. When `family` is given the
/// K-trivial part is computed with `y_i = x_i` (the functions are read on
/// the values entering the subspace test). `n` sets `N^(s-1)`.
pub fn count_report(
    fs: &[&WeightedFn],
    eq: &Equation,
    family: Option<&SubspaceFamily>,
    n: u64,
) -> Result<CountReport> {
    let brute = count_brute(fs, eq)?;
    let dft = count_dft(fs, eq, None)?;
    let ktrivial = match family {
        Some(fam) => {
            let tables: Vec<ValueTable> = fs.iter().map(|f| ValueTable::new(f.points().to_vec())).collect();
            let numer = family_sum(&tables, fam)?;
            let exact = ScaledCount {
                numerator: numer,
                scale: product_scale(fs),
            };
            Some(exact.value())
        }
        None => None,
    };
    Ok(CountReport {
        brute_exact: brute.exact().to_string(),
        brute: brute.value(),
        agree: dft.rounded_numerator == brute.numerator as f64,
        dft,
        ktrivial,
        heuristic: (n as f64).powi(eq.arity() as i32 - 1),
    })
}

/// `#{x in [1, X]^s : (x_1^2, ..., x_s^2) in K}`.
pub fn count_ktrivial(x: u64, family: &SubspaceFamily) -> Result<u128> {
    let s = family.equation.arity();
    let entries: Vec<(i64, i64)> = (1..=x as i64).map(|v| (v * v, 1)).collect();
    let tables: Vec<ValueTable> = (0..s).map(|_| ValueTable::new(entries.clone())).collect();
    Ok(family_sum(&tables, family)? as u128)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KTrivialWeighted {
    pub exact: String,
    pub value: f64,
    /// `value / (mass^s / N^(1 + 1/5))`.
    pub ratio_to_mass_scale: f64,
    /// `value / N^(s - 1 - 1/5)`.
    pub ratio_to_saving_scale: f64,
}

/// `sum prod_i nu(n_i)` over tuples whose pullbacks `x_i = b1 sqrt(W n_i - b2)`
/// have `(x_i^2) in K`.
pub fn ktrivial_weighted(nu: &Majorant, p: &WParams, family: &SubspaceFamily) -> Result<KTrivialWeighted> {
    let s = family.equation.arity();
    let count = ktrivial_pullback(nu.weights(), p, family)?;
    let value = count.value();
    let n = nu.support_len() as f64;
    Ok(KTrivialWeighted {
        exact: count.exact().to_string(),
        value,
        ratio_to_mass_scale: value / (nu.mass().powi(s as i32) / n.powf(1.2)),
        ratio_to_saving_scale: value / n.powf(s as f64 - 1.2),
    })
}

/// `sum prod_i f(n_i)` over tuples with `(x_i^2) in K`, where
/// `x_i = b1 sqrt(W n_i - b2)`; `f` must live on the support of `nu_b`.
pub fn ktrivial_pullback(f: &WeightedFn, p: &WParams, family: &SubspaceFamily) -> Result<ScaledCount> {
    let s = family.equation.arity();
    // x^2 = b1^2 (W n - b2) and K is a union of linear spaces, so testing
    // W n - b2 is the same as testing x^2.
    let mut entries = Vec::with_capacity(f.len());
    for &(n, v) in f.points() {
        let t = p.modulus() as i128 * n as i128 - p.b2() as i128;
        if t < 0 || !crate::arith::is_square(t) {
            return Err(Error::invalid("f", format!("n = {n} is not in the support of nu_b")));
        }
        entries.push((i64::try_from(t).map_err(|_| Error::Overflow("pullback"))?, v));
    }
    let tables: Vec<ValueTable> = (0..s).map(|_| ValueTable::new(entries.clone())).collect();
    Ok(ScaledCount {
        numerator: family_sum(&tables, family)?,
        scale: (0..s).fold(BigRational::one(), |acc, _| acc * ratio_to_big(f.scale())),
    })
}

/// Checks `prod f(x_i) - prod g(x_i) = sum_j (f - g)(x_j) prod_{i<j} f(x_i)
/// prod_{i>j} g(x_i)` exactly at every tuple.
pub fn telescope_check(f: &WeightedFn, g: &WeightedFn, tuples: &[Vec<i64>]) -> bool {
    tuples.iter().all(|x| {
        let fv: Vec<BigRational> = x.iter().map(|&v| f.value_exact(v)).collect();
        let gv: Vec<BigRational> = x.iter().map(|&v| g.value_exact(v)).collect();
        let lhs = fv.iter().product::<BigRational>() - gv.iter().product::<BigRational>();
        let rhs: BigRational = (0..x.len())
            .map(|j| {
                let head: BigRational = fv[..j].iter().product();
                let tail: BigRational = gv[j + 1..].iter().product();
                (&fv[j] - &gv[j]) * head * tail
            })
            .sum();
        lhs == rhs
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigGap {
    /// `|count(f) - count(g)|`.
    pub gap: f64,
    /// `N^(s-1) (sup |f^ - g^| / N)^(1 - {p})`.
    pub rhs: f64,
    pub ratio: f64,
    pub sup_diff: f64,
    pub grid_points: usize,
}

/// Measures the configuration-control inequality for `f <= nu`, `|g| <= 1`
/// on `[1, N]`, with `f` and `g` used in every coordinate.
pub fn config_gap(
    f: &WeightedFn,
    g: &WeightedFn,
    nu: &Majorant,
    eq: &Equation,
    p_exp: f64,
) -> Result<ConfigGap> {
    let s = eq.arity() as f64;
    if !(p_exp >= s - 1.0 && p_exp < s) {
        return Err(Error::invalid("p", format!("need s - 1 <= p < s, got {p_exp}")));
    }
    let n = nu.support_len();
    for &(k, _) in f.points() {
        if f.value_exact(k).abs() > nu.weights().value_exact(k) {
            return Err(Error::invalid("f", format!("|f({k})| exceeds nu({k})")));
        }
    }
    for &(k, _) in g.points() {
        if k < 1 || k as u64 > n || g.value_exact(k).abs() > BigRational::one() {
            return Err(Error::invalid("g", format!("g({k}) violates |g| <= 1 on [1, N]")));
        }
    }
    let s_us = eq.arity();
    let cf = count_brute(&vec![f; s_us], eq)?.exact();
    let cg = count_brute(&vec![g; s_us], eq)?.exact();
    let gap = (cf - cg).abs().to_f64().unwrap_or(f64::NAN);
    let diff = ComplexFn::new(
        f.terms()
            .into_iter()
            .chain(g.terms().into_iter().map(|(k, v)| (k, -v))),
    );
    let m = 16 * n as usize;
    let sup = fourier_grid(&diff, m)?.sup_norm();
    let nf = n as f64;
    let frac = p_exp - p_exp.floor();
    let rhs = nf.powf(s - 1.0) * (sup / nf).powf(1.0 - frac);
    Ok(ConfigGap {
        gap,
        rhs,
        ratio: if rhs > 0.0 { gap / rhs } else { f64::INFINITY },
        sup_diff: sup,
        grid_points: m,
    })
}

/// True when `c . x = 0` and `c . x^2 = 0`.
pub fn solves_system(eq: &Equation, x: &[i64]) -> bool {
    eq.eval(x) == 0 && eq.eval_squares(x) == 0
}

/// Lexicographically smallest off-diagonal `x in [0, H]^s` solving both
/// `c . x = 0` and `c . x^2 = 0`.
pub fn system_direction(eq: &Equation, h: u64) -> Result<Option<Vec<i64>>> {
    if !eq.is_sum_zero() {
        return Err(Error::invalid("c", "the system needs sum(c) = 0"));
    }
    let s = eq.arity();
    let mut x = vec![0i64; s];
    fn rec(eq: &Equation, h: i64, i: usize, x: &mut [i64]) -> bool {
        if i == x.len() {
            return x.iter().any(|&v| v != x[0]) && solves_system(eq, x);
        }
        for v in 0..=h {
            x[i] = v;
            if rec(eq, h, i + 1, x) {
                return true;
            }
        }
        false
    }
    Ok(rec(eq, h as i64, 0, &mut x).then_some(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ind(n: i64) -> WeightedFn {
        WeightedFn::indicator(1, n)
    }

    #[test]
    fn equation_metadata() {
        let e = Equation::new(vec![1, 1, 1, 1, -4]).unwrap();
        assert!(e.is_sum_zero());
        assert_eq!(e.signs(), (4, 1));
        assert!(Equation::new(vec![1, 0, -1]).is_err());
        assert!(Equation::new(vec![3]).is_err());
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(json, r#"{"c":[1,1,1,1,-4]}"#);
        assert_eq!(serde_json::from_str::<Equation>(&json).unwrap(), e);
    }

    #[test]
    fn brute_small_examples() {
        let e = Equation::new(vec![1, -1]).unwrap();
        let f = ind(37);
        assert_eq!(count_brute(&[&f, &f], &e).unwrap().numerator, 37);
        let e3 = Equation::new(vec![1, 1, -2]).unwrap();
        let f = ind(10);
        assert_eq!(count_brute(&[&f, &f, &f], &e3).unwrap().numerator, 50);
        let a = WeightedFn::from_set([1, 2]);
        let b = WeightedFn::from_set([10, 11]);
        assert_eq!(count_brute(&[&a, &b], &e).unwrap().numerator, 0);
    }

    #[test]
    fn brute_against_naive() {
        let e = Equation::new(vec![2, 3, -1, -4]).unwrap();
        let fs: Vec<WeightedFn> = (0..4)
            .map(|i| WeightedFn::new((1..=12).map(|n| (n, (n * (i + 3)) % 7 - 2)), Ratio::new(1, 3)))
            .collect();
        let refs: Vec<&WeightedFn> = fs.iter().collect();
        let mut naive = 0i128;
        for a in 1..=12 {
            for b in 1..=12 {
                for c in 1..=12 {
                    for d in 1..=12 {
                        if e.eval(&[a, b, c, d]) == 0 {
                            naive += [a, b, c, d]
                                .iter()
                                .zip(&fs)
                                .map(|(&x, f)| f.numerator_at(x) as i128)
                                .product::<i128>();
                        }
                    }
                }
            }
        }
        let got = count_brute(&refs, &e).unwrap();
        assert_eq!(got.numerator, naive);
        assert_eq!(got.scale, BigRational::new(1.into(), 81.into()));
    }

    #[test]
    fn dft_examples() {
        let e = Equation::new(vec![1, -1]).unwrap();
        let f = ind(20);
        let d = count_dft(&[&f, &f], &e, Some(80)).unwrap();
        assert_eq!(d.rounded_numerator, 20.0);
        assert!(d.rounding_residual < 1e-9);
        match count_dft(&[&f, &f], &e, Some(10)) {
            Err(Error::ModulusTooSmall { given: 10, required: 20 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(default_modulus(&[&f, &f], &e) > 2 * 20 + 1);
    }

    #[test]
    fn ktrivial_diagonal_is_x() {
        for c in [vec![1, 1, 1, 1, -4], vec![2, 3, -5], vec![1, 1, -1, -1]] {
            let eq = Equation::new(c).unwrap();
            let fam = SubspaceFamily::diagonal(eq).unwrap();
            for x in [1u64, 7, 60] {
                assert_eq!(count_ktrivial(x, &fam).unwrap(), x as u128);
            }
        }
    }

    #[test]
    fn ktrivial_pairs_against_naive() {
        let eq = Equation::new(vec![1, 1, 1, 1, -4]).unwrap();
        let fam = SubspaceFamily::pairs_equal(eq.clone());
        let x = 14i64;
        let mut naive = 0u128;
        let mut t = [0i64; 5];
        for t0 in 1..=x {
            for t1 in 1..=x {
                for t2 in 1..=x {
                    for t3 in 1..=x {
                        for t4 in 1..=x {
                            t = [t0, t1, t2, t3, t4];
                            let y: Vec<i64> = t.iter().map(|v| v * v).collect();
                            if fam.contains(&y) {
                                naive += 1;
                            }
                        }
                    }
                }
            }
        }
        let _ = t;
        assert_eq!(count_ktrivial(x as u64, &fam).unwrap(), naive);
        assert!(naive >= x as u128);
    }

    #[test]
    fn empty_family_counts_nothing() {
        let eq = Equation::new(vec![1, 1, -2]).unwrap();
        let fam = SubspaceFamily::empty(eq);
        assert_eq!(count_ktrivial(30, &fam).unwrap(), 0);
    }

    #[test]
    fn family_json() {
        let fam = SubspaceFamily::from_json(r#"{"c":[1,1,-1,-1],"forms":[[1,-1,0,0]]}"#).unwrap();
        assert_eq!(fam.subspaces.len(), 1);
        assert_eq!(fam.contains_diagonal(), vec![true]);
        let fam = SubspaceFamily::from_json(r#"{"c":[1,1,-2],"preset":"pairs"}"#).unwrap();
        assert_eq!(fam.subspaces.len(), 3);
        assert!(SubspaceFamily::from_json(r#"{"c":[1,1,-2],"forms":[[2,2,-4]]}"#).is_err());
        assert!(SubspaceFamily::from_json(r#"{"c":[1,1,-2],"preset":"bogus"}"#).is_err());
    }

    #[test]
    fn ktrivial_weighted_diagonal() {
        let p = WParams::new(300, 3, 1, 23).unwrap();
        let nu = crate::majorant::wtricked_majorant(&p).unwrap();
        let eq = Equation::new(vec![1, 1, 1, 1, -4]).unwrap();
        let fam = SubspaceFamily::diagonal(eq.clone()).unwrap();
        let got = ktrivial_weighted(&nu, &p, &fam).unwrap();
        let direct: f64 = nu.weights().points().iter().map(|&(n, _)| nu.value(n).powi(5)).sum();
        assert!((got.value - direct).abs() <= 1e-9 * direct);
        let empty = ktrivial_weighted(&nu, &p, &SubspaceFamily::empty(eq)).unwrap();
        assert_eq!(empty.value, 0.0);
    }

    #[test]
    fn telescoping() {
        let f = WeightedFn::new(vec![(1, 3), (2, -1), (5, 4)], Ratio::new(2, 3));
        let g = WeightedFn::new(vec![(1, 1), (2, 7)], Ratio::new(1, 5));
        let tuples: Vec<Vec<i64>> = (0..100)
            .map(|i| vec![i % 6, (i * 7) % 6, (i * 13) % 6])
            .collect();
        assert!(telescope_check(&f, &g, &tuples));
        assert!(telescope_check(&f, &f, &tuples));
    }

    #[test]
    fn config_gap_edges() {
        let p = WParams::new(60, 3, 1, 23).unwrap();
        let nu = crate::majorant::wtricked_majorant(&p).unwrap();
        let n = nu.support_len() as i64;
        let eq = Equation::new(vec![1, 1, -2]).unwrap();
        let g = WeightedFn::indicator(1, n);
        let r = config_gap(&g, &g, &nu, &eq, 2.5);
        // the indicator is not dominated by nu
        assert!(r.is_err());
        let f = nu.weights().clone();
        let zero = WeightedFn::zero();
        let r = config_gap(&f, &zero, &nu, &eq, 2.5).unwrap();
        let fc = count_brute(&[&f, &f, &f], &eq).unwrap().value();
        assert!((r.gap - fc).abs() <= 1e-9 * fc);
        assert!((r.sup_diff - nu.mass()).abs() <= 1e-9 * nu.mass());
        let small = nu.weights().restrict(|k| nu.value(k) >= 1.0).map_numerators(|_, _| 1);
        let small = WeightedFn::new(small.points().to_vec(), Ratio::from_integer(1));
        let r = config_gap(&small, &small, &nu, &eq, 2.0).unwrap();
        assert_eq!(r.gap, 0.0);
        assert!(config_gap(&f, &f, &nu, &eq, 3.0).is_err());
    }

    #[test]
    fn system_search() {
        let e = Equation::new(vec![1, 1, -1, -1]).unwrap();
        assert_eq!(system_direction(&e, 3).unwrap(), Some(vec![0, 1, 0, 1]));
        let e = Equation::new(vec![1, 1, 1, 1, -4]).unwrap();
        assert_eq!(system_direction(&e, 6).unwrap(), None);
        let e = Equation::new(vec![1, -1, 1]).unwrap();
        assert!(system_direction(&e, 3).is_err());
    }

    fn instance() -> impl Strategy<Value = (Vec<i64>, Vec<Vec<(i64, i64)>>)> {
        (3usize..=5).prop_flat_map(|s| {
            let coeffs = prop::collection::vec(
                (1i64..=5, any::<bool>()).prop_map(|(c, neg)| if neg { -c } else { c }),
                s,
            );
            let n = 4i64..=64;
            (coeffs, n).prop_flat_map(move |(c, n)| {
                let f = prop::collection::vec((1..=n, -3i64..=3), 1..12);
                (Just(c), prop::collection::vec(f, s))
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn dft_matches_brute((c, pts) in instance()) {
            let eq = Equation::new(c).unwrap();
            let fs: Vec<WeightedFn> = pts.into_iter().map(|p| WeightedFn::new(p, Ratio::from_integer(1))).collect();
            let refs: Vec<&WeightedFn> = fs.iter().collect();
            let b = count_brute(&refs, &eq).unwrap();
            let d = count_dft(&refs, &eq, None).unwrap();
            prop_assert_eq!(d.rounded_numerator, b.numerator as f64);
            prop_assert!(d.rounding_residual < 1e-6);
        }

        #[test]
        fn brute_is_permutation_symmetric((c, pts) in instance(), seed in any::<u64>()) {
            let eq = Equation::new(c).unwrap();
            let fs: Vec<WeightedFn> = pts.into_iter().map(|p| WeightedFn::new(p, Ratio::from_integer(1))).collect();
            let s = fs.len();
            let mut perm: Vec<usize> = (0..s).collect();
            let mut r = seed;
            for i in (1..s).rev() {
                r = r.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (r >> 33) as usize % (i + 1));
            }
            let refs: Vec<&WeightedFn> = fs.iter().collect();
            let prefs: Vec<&WeightedFn> = perm.iter().map(|&i| &fs[i]).collect();
            prop_assert_eq!(
                count_brute(&refs, &eq).unwrap().numerator,
                count_brute(&prefs, &eq.permuted(&perm)).unwrap().numerator
            );
        }

        #[test]
        fn system_solutions_are_translation_invariant(t in 0i64..=5) {
            for c in [vec![1, 1, -1, -1], vec![1, 2, -2, -1], vec![2, 1, 1, -1, -3]] {
                let eq = Equation::new(c).unwrap();
                if let Some(x) = system_direction(&eq, 4).unwrap() {
                    let shifted: Vec<i64> = x.iter().map(|v| v + t).collect();
                    prop_assert!(solves_system(&eq, &shifted));
                }
            }
        }
    }
}
