//! Fourier transforms of finite functions, the quadratic sums `S_q(a, z)`,
//! the integral `I(beta)`, and the major-arc / Weyl / decay diagnostics for
//! the W-tricked majorant.
//!
//! Convention: `f^(alpha) = sum_n f(n) e(alpha n)` with `e(x) = exp(2 pi i x)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use num_integer::Integer;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::FiniteFunction;
use crate::majorant::{wtricked_majorant, Majorant, WParams};

/// Dense grids up to this many points are transformed in one piece.
const DENSE_LIMIT: u64 = 1 << 23;
/// Chunk length for larger grids; grid sizes are rounded up to a multiple.
const CHUNK: usize = 1 << 22;

pub fn e(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * x)
}

/// `e(num / den)` for integers, reducing the numerator exactly first.
pub fn e_ratio(num: i128, den: u128) -> Complex64 {
    let r = num.rem_euclid(den as i128) as u128;
    e(r as f64 / den as f64)
}

/// Fractional part of `alpha * n`, keeping the rounding error of the product.
pub(crate) fn frac_product(alpha: f64, n: i64) -> f64 {
    let nf = n as f64;
    let p = alpha * nf;
    let err = alpha.mul_add(nf, -p);
    (p - p.floor()) + err
}

/// `||x||`, the distance to the nearest integer.
pub fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    pub fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, &mut self.re_c, z.re);
        neumaier(&mut self.im, &mut self.im_c, z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }
}

pub fn fourier_at<F: FiniteFunction + ?Sized>(f: &F, alpha: f64) -> Complex64 {
    let mut acc = CompensatedSum::default();
    for (n, v) in f.terms() {
        acc.add(v * e(frac_product(alpha, n)));
    }
    acc.value()
}

/// `f^(t / m)` with the phase `t n mod m` reduced exactly.
pub fn fourier_at_rational<F: FiniteFunction + ?Sized>(f: &F, t: i64, m: u64) -> Complex64 {
    let mut acc = CompensatedSum::default();
    for (n, v) in f.terms() {
        acc.add(v * e_ratio(n as i128 * t as i128, m as u128));
    }
    acc.value()
}

/// Samples `values[t] = f^(t / m)` for `t in [0, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierGrid {
    pub m: usize,
    pub values: Vec<Complex64>,
}

impl FourierGrid {
    pub fn alpha(&self, t: usize) -> f64 {
        t as f64 / self.m as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `(1/m) sum_t |values[t]|^p`.
    pub fn power_mean(&self, p: f64) -> f64 {
        let total: f64 = self.values.iter().map(|v| v.norm().powf(p)).sum();
        total / self.m as f64
    }
}

/// Inverse (positive-exponent) FFT of `buf` in place.
pub(crate) fn fft_positive(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(buf.len()).process(buf);
}

/// Exact DFT of the weight vector reduced modulo `m`.
pub fn fourier_grid<F: FiniteFunction + ?Sized>(f: &F, m: usize) -> Result<FourierGrid> {
    let span = f.support_bounds().map(|(lo, hi)| (hi - lo + 1) as usize).unwrap_or(0);
    if m == 0 || m < span {
        return Err(Error::invalid(
            "M",
            format!("grid size {m} is smaller than the support length {span}"),
        ));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (n, v) in f.terms() {
        buf[n.rem_euclid(m as i64) as usize] += v;
    }
    fft_positive(&mut buf);
    Ok(FourierGrid { m, values: buf })
}

fn check_residue(z: i128, p: &WParams) -> Result<i128> {
    let m = p.modulus() as i128;
    let t = z * z + p.b2() as i128;
    if t.rem_euclid(m) != 0 {
        return Err(Error::invalid(
            "z",
            format!("z = {z} does not satisfy z^2 + b2 = 0 mod W for b2 = {}, W = {m}", p.b2()),
        ));
    }
    Ok(t / m)
}

fn unit_roots(q: u64) -> Vec<Complex64> {
    (0..q).map(|k| e(k as f64 / q as f64)).collect()
}

/// `S_q(a, z) = sum_{r=1}^{q} e(a (W r^2 + 2 z r + (z^2 + b2) / W) / q)`.
pub fn gauss_sum(q: u64, a: i64, z: i64, p: &WParams) -> Result<Complex64> {
    if q < 1 {
        return Err(Error::invalid("q", "need q >= 1"));
    }
    let c0 = check_residue(z as i128, p)?;
    let roots = unit_roots(q);
    let qi = q as i128;
    let (w, a, z) = (p.modulus() as i128 % qi, (a as i128).rem_euclid(qi), z as i128 % qi);
    let c0 = c0 % qi;
    let mut acc = CompensatedSum::default();
    for r in 1..=qi {
        let h = ((w * r % qi) * r + 2 * z * r + c0).rem_euclid(qi);
        acc.add(roots[(a * h % qi) as usize]);
    }
    Ok(acc.value())
}

/// `S_q(a, z)` for every `a in [0, q)` coprime to `q`.
pub fn gauss_sums_coprime(q: u64, z: i64, p: &WParams) -> Result<Vec<(u64, Complex64)>> {
    if q < 1 {
        return Err(Error::invalid("q", "need q >= 1"));
    }
    let c0 = check_residue(z as i128, p)?;
    let roots = unit_roots(q);
    let qi = q as i128;
    let (w, z, c0) = (p.modulus() as i128 % qi, z as i128 % qi, c0 % qi);
    let mut hist = vec![0u64; q as usize];
    for r in 1..=qi {
        hist[((w * r % qi) * r + 2 * z * r + c0).rem_euclid(qi) as usize] += 1;
    }
    let occupied: Vec<(u64, u64)> = hist
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(j, &c)| (j as u64, c))
        .collect();
    Ok((0..q)
        .filter(|&a| a.gcd(&q) == 1)
        .map(|a| {
            let mut acc = CompensatedSum::default();
            for &(j, c) in &occupied {
                acc.add(roots[(a * j % q) as usize] * c as f64);
            }
            (a, acc.value())
        })
        .collect())
}

/// `sum_z q^{-1} S_q(a, z)` over the admissible residues `z in [1, W]`.
pub fn residue_average(q: u64, a: i64, p: &WParams) -> Result<Complex64> {
    let mut acc = CompensatedSum::default();
    for z in p.residues() {
        acc.add(gauss_sum(q, a, z as i64, p)? / q as f64);
    }
    Ok(acc.value())
}

/// `I(beta) = int_0^N e(beta t) dt`.
pub fn integral_i(beta: f64, n: u64) -> Complex64 {
    if beta == 0.0 {
        return Complex64::new(n as f64, 0.0);
    }
    // beta N = k + h; the (-1)^k factors of e(beta N / 2) and sin(pi beta N) cancel
    let h = frac_product(beta, n as i64);
    e(h / 2.0) * ((PI * h).sin() / (PI * beta))
}

fn check_coprime(q: u64, a: i64) -> Result<()> {
    if q < 1 {
        return Err(Error::invalid("q", "need q >= 1"));
    }
    if (a.rem_euclid(q as i64) as u64).gcd(&q) != 1 {
        return Err(Error::invalid("a", format!("gcd(a, q) != 1 for a = {a}, q = {q}")));
    }
    Ok(())
}

fn check_nearest(alpha: f64, q: u64, a: i64) -> Result<f64> {
    let d = (q as f64 * alpha - a as f64).abs();
    if d > 0.5 + 1e-12 {
        return Err(Error::invalid(
            "a",
            format!("|q alpha - a| = {d} exceeds 1/2, so a is not the nearest integer to q alpha"),
        ));
    }
    Ok(d)
}

/// `(1/sigma) sum_z q^{-1} S_q(a, z) I(alpha - a/q)`.
pub fn major_arc_main(alpha: f64, q: u64, a: i64, p: &WParams) -> Result<Complex64> {
    check_coprime(q, a)?;
    let avg = residue_average(q, a, p)?;
    Ok(avg * integral_i(alpha - a as f64 / q as f64, p.nb()) / p.sigma() as f64)
}

/// `|nu^(alpha) - main term| / (sqrt(N W) (q + N ||q alpha||))`.
pub fn major_arc_error(nu: &Majorant, p: &WParams, alpha: f64, q: u64, a: i64) -> Result<f64> {
    check_coprime(q, a)?;
    let d = check_nearest(alpha, q, a)?;
    let n = p.nb() as f64;
    let main = major_arc_main(alpha, q, a, p)?;
    let full = fourier_at(nu.weights(), alpha);
    Ok((full - main).norm() / ((n * p.modulus() as f64).sqrt() * (q as f64 + n * d)))
}

/// The right-hand side of the Weyl bound without its implied constant.
pub fn weyl_bound(p: &WParams, q: u64, dist: f64) -> f64 {
    let n = p.nb() as f64;
    let w = p.modulus() as f64;
    let tail = if dist > 0.0 {
        (1.0 / q as f64).min(1.0 / (dist * n))
    } else {
        1.0 / q as f64
    };
    let inner = (w * n).powf(-0.5) + dist + q as f64 / n + tail;
    n * (w * n.ln().max(1.0)).sqrt() * inner.sqrt()
}

/// `|nu^(alpha)|` over the Weyl bound.
pub fn weyl_ratio(nu: &Majorant, p: &WParams, alpha: f64, q: u64, a: i64) -> Result<f64> {
    if p.b1() as u128 * p.modulus() as u128 > p.x() as u128 {
        return Err(Error::invalid(
            "b1",
            format!("b1 W = {} exceeds X = {}", p.b1() as u128 * p.modulus() as u128, p.x()),
        ));
    }
    check_coprime(q, a)?;
    let d = check_nearest(alpha, q, a)?;
    Ok(fourier_at(nu.weights(), alpha).norm() / weyl_bound(p, q, d))
}

/// The `q <= q_max` with `||q alpha||` smallest, and the nearest `a`.
pub fn dirichlet_approximation(alpha: f64, q_max: u64) -> (u64, i64) {
    let mut best = (1u64, alpha.round() as i64, dist_to_int(alpha));
    for q in 2..=q_max.max(1) {
        let d = dist_to_int(q as f64 * alpha);
        if d < best.2 - 1e-15 {
            best = (q, (q as f64 * alpha).round() as i64, d);
        }
    }
    let g = (best.1.unsigned_abs()).gcd(&best.0).max(1);
    (best.0 / g, best.1 / g as i64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// `max_t |nu^(t/M) - 1_[N]^(t/M)| / N`.
    pub sup_ratio: f64,
    /// Additive slack `2 pi mass / M` between the grid maximum and the true
    /// supremum, in the units of `sup_ratio`.
    pub bernstein_slack: f64,
    pub argmax_alpha: f64,
    pub grid_points: u64,
    pub n: u64,
    pub mass: f64,
}

pub fn decay_sup(p: &WParams, grid_factor: u64) -> Result<DecayReport> {
    decay_sup_of(&wtricked_majorant(p)?, grid_factor)
}

/// Decay diagnostic for any majorant on `[1, N]`. The grid has at least
/// `grid_factor * N` points; large grids are rounded up to a multiple of the
/// transform chunk.
pub fn decay_sup_of(nu: &Majorant, grid_factor: u64) -> Result<DecayReport> {
    if grid_factor < 8 {
        return Err(Error::invalid("grid_factor", "need grid_factor >= 8"));
    }
    let n = nu.support_len();
    let mut m = grid_factor
        .checked_mul(n)
        .ok_or(Error::Overflow("grid size"))?;
    if m > DENSE_LIMIT {
        m = m.div_ceil(CHUNK as u64) * CHUNK as u64;
    }
    let points: Vec<(i64, f64)> = nu.weights().terms().iter().map(|&(k, v)| (k, v.re)).collect();
    let (sup, t) = sup_minus_interval(&points, n, m);
    Ok(DecayReport {
        sup_ratio: sup / n as f64,
        bernstein_slack: TAU * nu.mass() / m as f64,
        argmax_alpha: t as f64 / m as f64,
        grid_points: m,
        n,
        mass: nu.mass(),
    })
}

fn better(l: (f64, u64), r: (f64, u64)) -> (f64, u64) {
    if r.0 > l.0 || (r.0 == l.0 && r.1 < l.1) {
        r
    } else {
        l
    }
}

/// `max_t |g^(t/m)|` for `g = f - 1_[1, n]`, with its arg max.
pub(crate) fn sup_minus_interval(points: &[(i64, f64)], n: u64, m: u64) -> (f64, u64) {
    if m <= DENSE_LIMIT {
        let mut buf = vec![Complex64::new(0.0, 0.0); m as usize];
        for &(k, v) in points {
            buf[k.rem_euclid(m as i64) as usize] += v;
        }
        for k in 1..=n {
            buf[(k % m) as usize] -= 1.0;
        }
        fft_positive(&mut buf);
        return buf
            .iter()
            .enumerate()
            .map(|(t, v)| (v.norm(), t as u64))
            .fold((0.0, 0), better);
    }
    assert_eq!(m % CHUNK as u64, 0, "large grids must be chunk multiples");
    let l = m / CHUNK as u64;
    (0..l)
        .into_par_iter()
        .map_init(
            || {
                let fft = FftPlanner::<f64>::new().plan_fft_inverse(CHUNK);
                (fft, vec![Complex64::new(0.0, 0.0); CHUNK])
            },
            |(fft, buf), t0| {
                fold_chunk(points, n, m, l, t0, buf);
                fft.process(buf);
                buf.iter()
                    .enumerate()
                    .map(|(tp, v)| (v.norm(), t0 + l * tp as u64))
                    .fold((0.0, 0), better)
            },
        )
        .reduce(|| (0.0, 0), better)
}

/// Folds `g(k) e(k t0 / m)` modulo the chunk length, so that one FFT of the
/// chunk yields `g^` on the grid points `t0 + l t'`.
fn fold_chunk(points: &[(i64, f64)], n: u64, m: u64, l: u64, t0: u64, buf: &mut [Complex64]) {
    let p = CHUNK as u64;
    buf.fill(Complex64::new(0.0, 0.0));

    // 1_[1, n] folded: bucket j collects e(j t0/m) * sum_k omega^k, omega = e(t0/l)
    let k_top = (n / p + 1) as usize;
    let mut prefix = Vec::with_capacity(k_top + 2);
    prefix.push(Complex64::new(0.0, 0.0));
    for k in 0..=k_top {
        let pw = e_ratio(t0 as i128 * k as i128, l as u128);
        let last = *prefix.last().expect("nonempty");
        prefix.push(last + pw);
    }
    let step = e_ratio(t0 as i128, m as u128);
    let mut cur = Complex64::new(1.0, 0.0);
    for j in 0..p.min(n + 1) {
        if j % 1024 == 0 {
            cur = e_ratio(j as i128 * t0 as i128, m as u128);
        }
        let k0 = usize::from(j == 0);
        let k1 = ((n - j) / p) as usize;
        if k1 >= k0 {
            buf[j as usize] -= cur * (prefix[k1 + 1] - prefix[k0]);
        }
        cur *= step;
    }

    for &(k, v) in points {
        let idx = k.rem_euclid(p as i64) as usize;
        buf[idx] += v * e_ratio(k as i128 * t0 as i128, m as u128);
    }
}

/// One major arc `|alpha - a/q| <= radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorArc {
    pub q: u64,
    pub a: u64,
    pub center: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcDecomposition {
    pub tau: f64,
    pub n: u64,
    pub q_max: u64,
    pub radius: f64,
    pub arcs: Vec<MajorArc>,
}

/// Major arcs around `a/q` with `0 <= a < q <= N^tau`, `gcd(a, q) = 1`, of
/// radius `N^(-1 + tau)`.
pub fn arcs(n: u64, tau: f64) -> Result<ArcDecomposition> {
    if !(tau > 0.0 && tau < 0.5) {
        return Err(Error::invalid("tau", format!("need 0 < tau < 1/2, got {tau}")));
    }
    if n < 1 {
        return Err(Error::invalid("N", "need N >= 1"));
    }
    let nf = n as f64;
    let q_max = (nf.powf(tau) + 1e-9).floor().max(1.0) as u64;
    let arcs = (1..=q_max)
        .flat_map(|q| {
            (0..q)
                .filter(move |a| a.gcd(&q) == 1)
                .map(move |a| MajorArc {
                    q,
                    a,
                    center: a as f64 / q as f64,
                })
        })
        .collect();
    Ok(ArcDecomposition {
        tau,
        n,
        q_max,
        radius: nf.powf(-1.0 + tau),
        arcs,
    })
}

impl ArcDecomposition {
    /// `2 radius * #arcs`, the union bound on the measure.
    pub fn measure_bound(&self) -> f64 {
        2.0 * self.radius * self.arcs.len() as f64
    }

    /// The arc containing `alpha`, if any.
    pub fn locate(&self, alpha: f64) -> Option<&MajorArc> {
        self.arcs
            .iter()
            .find(|arc| dist_to_int(alpha - arc.center) <= self.radius)
    }

    pub fn is_major(&self, alpha: f64) -> bool {
        self.locate(alpha).is_some()
    }

    /// Exact measure of the union on the circle.
    pub fn measure(&self) -> f64 {
        let mut ivs: Vec<(f64, f64)> = self
            .arcs
            .iter()
            .flat_map(|arc| {
                let (lo, hi) = (arc.center - self.radius, arc.center + self.radius);
                // unwrap intervals crossing 0 or 1
                let mut parts = vec![(lo.max(0.0), hi.min(1.0))];
                if lo < 0.0 {
                    parts.push((1.0 + lo, 1.0));
                }
                if hi > 1.0 {
                    parts.push((0.0, hi - 1.0));
                }
                parts
            })
            .collect();
        ivs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut total = 0.0;
        let mut cur: Option<(f64, f64)> = None;
        for (lo, hi) in ivs {
            match cur {
                Some((cl, ch)) if lo <= ch => cur = Some((cl, ch.max(hi))),
                Some((cl, ch)) => {
                    total += ch - cl;
                    cur = Some((lo, hi));
                }
                None => cur = Some((lo, hi)),
            }
        }
        if let Some((cl, ch)) = cur {
            total += ch - cl;
        }
        total.min(1.0)
    }

    pub fn is_pairwise_disjoint(&self) -> bool {
        let mut centers: Vec<f64> = self.arcs.iter().map(|a| a.center).collect();
        centers.sort_by(f64::total_cmp);
        if centers.len() < 2 {
            return 2.0 * self.radius < 1.0;
        }
        let wrap = 1.0 - centers[centers.len() - 1] + centers[0];
        centers.windows(2).map(|w| w[1] - w[0]).chain([wrap]).all(|gap| gap > 2.0 * self.radius)
    }
}
