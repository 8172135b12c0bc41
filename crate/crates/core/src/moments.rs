//! Moments of Fourier transforms: exact even moments by additive energy,
//! Riemann sums otherwise, restriction and fourth-moment ratios, and the
//! large spectrum.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::ScaledCount;
use crate::error::{Error, Result};
use crate::expsum::fourier_grid;
use crate::func::{ratio_to_big, FiniteFunction, WeightedFn};
use crate::majorant::{wtricked_majorant, Majorant, WParams};

/// Largest dense convolution buffer.
const MAX_RANGE: i64 = 1 << 27;

fn convolve(a: &(i64, Vec<i128>), f: &WeightedFn) -> Result<(i64, Vec<i128>)> {
    let pts = f.points();
    let (lo_f, hi_f) = (pts[0].0, pts[pts.len() - 1].0);
    let len = a.1.len() as i64 + hi_f - lo_f;
    if len > MAX_RANGE {
        return Err(Error::invalid("f", "support too wide for exact convolution"));
    }
    let lo = a.0 + lo_f;
    let mut out = vec![0i128; len as usize];
    for (i, &wa) in a.1.iter().enumerate() {
        if wa == 0 {
            continue;
        }
        for &(n, v) in pts {
            let slot = &mut out[i + (n - lo_f) as usize];
            let t = wa.checked_mul(v as i128).ok_or(Error::Overflow("energy"))?;
            *slot = slot.checked_add(t).ok_or(Error::Overflow("energy"))?;
        }
    }
    Ok((lo, out))
}

/// `int |f^|^(2k)`, i.e. the weighted count of `x_1 + ... + x_k = y_1 + ...
/// + y_k`, exactly, as `numerator * scale^(2k)`.
pub fn moment_even(f: &WeightedFn, k: u32) -> Result<ScaledCount> {
    if k < 1 {
        return Err(Error::invalid("k", "need k >= 1"));
    }
    let scale = (0..2 * k).fold(BigRational::one(), |acc, _| acc * ratio_to_big(f.scale()));
    if f.is_empty() {
        return Ok(ScaledCount { numerator: 0, scale });
    }
    let mut g = (0i64, vec![1i128]);
    for _ in 0..k {
        g = convolve(&g, f)?;
    }
    let mut numerator = 0i128;
    for &v in &g.1 {
        let sq = v.checked_mul(v).ok_or(Error::Overflow("energy"))?;
        numerator = numerator.checked_add(sq).ok_or(Error::Overflow("energy"))?;
    }
    Ok(ScaledCount { numerator, scale })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMoment {
    pub p: f64,
    pub value: f64,
    /// `pi p D L1^p / M`, with `D` half the support span: a bound on the
    /// Riemann-sum error from the derivative of `|f^|^p`.
    pub slack: f64,
    pub m: usize,
}

/// `(1/M) sum_t |f^(t/M)|^p`.
pub fn moment_quadrature<F: FiniteFunction + ?Sized>(f: &F, p: f64, m: usize) -> Result<QuadratureMoment> {
    if !(p >= 1.0) {
        return Err(Error::invalid("p", format!("need p >= 1, got {p}")));
    }
    let (lo, hi) = f.support_bounds().unwrap_or((0, 0));
    let span = (hi - lo + 1) as usize;
    if m < 8 * span {
        return Err(Error::invalid(
            "M",
            format!("need M >= 8 * span = {}, got {m}", 8 * span),
        ));
    }
    let grid = fourier_grid(f, m)?;
    let half_span = (hi - lo) as f64 / 2.0;
    Ok(QuadratureMoment {
        p,
        value: grid.power_mean(p),
        slack: PI * p * half_span * f.l1_norm().powf(p) / m as f64,
        m,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionReport {
    pub p: f64,
    pub n: u64,
    pub m: usize,
    pub seed: u64,
    /// `moment / N^(p-1)` per trial; trial 0 is `nu` itself.
    pub trial_ratios: Vec<f64>,
    pub ratio: f64,
}

/// Sign-and-mask perturbations of `nu`: trial 0 is `nu`, trial `i` keeps each
/// point with probability `{1/4, 1/2, 1}[i mod 3]` and flips signs at random.
pub fn restriction_trials(nu: &Majorant, trials: usize, seed: u64) -> Vec<WeightedFn> {
    let densities = [0.25, 0.5, 1.0];
    (0..trials)
        .map(|i| {
            if i == 0 {
                return nu.weights().clone();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let density = densities[i % 3];
            let pts: Vec<(i64, i64)> = nu
                .weights()
                .points()
                .iter()
                .filter_map(|&(n, v)| {
                    let keep = rng.random_bool(density);
                    let sign = if rng.random_bool(0.5) { 1 } else { -1 };
                    keep.then_some((n, sign * v))
                })
                .collect();
            WeightedFn::new(pts, nu.weights().scale())
        })
        .collect()
}

/// `max_phi int |phi^|^p / N^(p-1)` over [`restriction_trials`].
pub fn restriction_ratio(params: &WParams, p: f64, trials: usize, seed: u64) -> Result<RestrictionReport> {
    if !(p > 4.0) {
        return Err(Error::invalid("p", format!("need p > 4, got {p}")));
    }
    if trials < 1 {
        return Err(Error::invalid("trials", "need trials >= 1"));
    }
    let nu = wtricked_majorant(params)?;
    let n = nu.support_len();
    let m = (8 * n as usize).next_power_of_two();
    let phis = restriction_trials(&nu, trials, seed);
    let scale = (n as f64).powf(p - 1.0);
    let ratios = phis
        .par_iter()
        .map(|phi| {
            if phi.is_empty() {
                return Ok(0.0);
            }
            Ok(moment_quadrature(phi, p, m)?.value / scale)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RestrictionReport {
        p,
        n,
        m,
        seed,
        ratio: ratios.iter().copied().fold(0.0, f64::max),
        trial_ratios: ratios,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourthMomentReport {
    pub n: u64,
    pub energy: String,
    /// `int |nu^|^4 / N^3`.
    pub ratio: f64,
    /// `(C, N^(C / log log N))` for `C in {1, 2, 4}`.
    pub curves: Vec<(f64, f64)>,
}

pub fn fourth_moment_ratio(params: &WParams) -> Result<FourthMomentReport> {
    fourth_moment_ratio_of(&wtricked_majorant(params)?)
}

pub fn fourth_moment_ratio_of(nu: &Majorant) -> Result<FourthMomentReport> {
    let e = moment_even(nu.weights(), 2)?;
    let n = nu.support_len();
    let nf = n as f64;
    let loglog = nf.ln().ln();
    Ok(FourthMomentReport {
        n,
        energy: e.exact().to_string(),
        ratio: e.value() / nf.powi(3),
        curves: [1.0, 2.0, 4.0]
            .iter()
            .map(|&c| (c, if loglog > 0.0 { nf.powf(c / loglog) } else { f64::NAN }))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub delta: f64,
    pub n: u64,
    pub grid_points: usize,
    /// Selected frequencies, pairwise at least `1/N` apart on the circle.
    pub points: Vec<f64>,
    /// `R = points.len()`.
    pub r: usize,
    /// `2R/N`.
    pub measure_estimate: f64,
}

/// Greedy maximal `1/N`-separated subset of `{t / 16N : |phi^| > delta N}`,
/// taken in order of decreasing `|phi^|`. The caller is responsible for
/// `|phi| <= nu`.
pub fn large_spectrum<F: FiniteFunction + ?Sized>(phi: &F, delta: f64, n: u64) -> Result<SpectrumReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", format!("need 0 < delta < 1, got {delta}")));
    }
    if n < 1 {
        return Err(Error::invalid("N", "need N >= 1"));
    }
    const SEP: usize = 16;
    let m = SEP * n as usize;
    let grid = fourier_grid(phi, m)?;
    let threshold = delta * n as f64;
    let mut cand: Vec<(f64, usize)> = grid
        .values
        .iter()
        .enumerate()
        .filter_map(|(t, v)| (v.norm() > threshold).then(|| (v.norm(), t)))
        .collect();
    cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut blocked = vec![false; m];
    let mut chosen = Vec::new();
    for (_, t) in cand {
        if blocked[t] {
            continue;
        }
        chosen.push(t);
        for d in 0..SEP {
            blocked[(t + d) % m] = true;
            blocked[(t + m - d) % m] = true;
        }
    }
    chosen.sort_unstable();
    let r = chosen.len();
    Ok(SpectrumReport {
        delta,
        n,
        grid_points: m,
        points: chosen.iter().map(|&t| t as f64 / m as f64).collect(),
        r,
        measure_estimate: 2.0 * r as f64 / n as f64,
    })
}

/// `sum_n |f(n)|^2` exactly.
pub fn l2_squared(f: &WeightedFn) -> BigRational {
    let s: i128 = f.points().iter().map(|&(_, v)| v as i128 * v as i128).sum();
    ratio_to_big(f.scale()) * ratio_to_big(f.scale()) * BigRational::from_integer(BigInt::from(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorant::plain_majorant;
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn ind(n: i64) -> WeightedFn {
        WeightedFn::indicator(1, n)
    }

    #[test]
    fn even_moment_examples() {
        assert_eq!(moment_even(&ind(2), 2).unwrap().numerator, 6);
        for n in 1..=20i64 {
            let e = moment_even(&ind(n), 2).unwrap().numerator;
            assert_eq!(e, (2 * n * n * n + n) as i128 / 3);
            let mut brute = 0i128;
            for a in 1..=n {
                for b in 1..=n {
                    for c in 1..=n {
                        let d = a + b - c;
                        if (1..=n).contains(&d) {
                            brute += 1;
                        }
                    }
                }
            }
            assert_eq!(e, brute);
        }
        let point = WeightedFn::new(vec![(7, 3)], Ratio::new(1, 2));
        let e = moment_even(&point, 3).unwrap();
        assert_eq!(e.exact(), BigRational::new(729.into(), 64.into()));
    }

    #[test]
    fn quadrature_examples() {
        let f = ind(16);
        let q = moment_quadrature(&f, 2.0, 128).unwrap();
        assert!((q.value - 16.0).abs() < 1e-9 * 16.0);
        let q4 = moment_quadrature(&f, 4.0, 512).unwrap();
        let exact = moment_even(&f, 2).unwrap().value();
        assert!((q4.value - exact).abs() <= q4.slack);
        assert!((q4.value - exact).abs() < 1e-6 * exact);
        assert!(moment_quadrature(&f, 4.0, 100).is_err());
        let p = WParams::new(200, 3, 1, 23).unwrap();
        let nu = wtricked_majorant(&p).unwrap();
        let m = (8 * nu.support_len() as usize).next_power_of_two();
        let q5 = moment_quadrature(nu.weights(), 5.0, m).unwrap();
        assert!(q5.value.is_finite() && q5.value > 0.0);
    }

    #[test]
    fn restriction_is_deterministic_and_contains_nu() {
        let p = WParams::new(100, 3, 1, 23).unwrap();
        let a = restriction_ratio(&p, 4.2, 1, 9).unwrap();
        let b = restriction_ratio(&p, 4.2, 1, 9).unwrap();
        assert_eq!(a, b);
        let nu = wtricked_majorant(&p).unwrap();
        assert_eq!(&restriction_trials(&nu, 3, 1)[0], nu.weights());
        let c = restriction_ratio(&p, 5.0, 6, 3).unwrap();
        assert_eq!(c.trial_ratios.len(), 6);
        assert!(restriction_ratio(&p, 4.0, 1, 0).is_err());
        // every trial is dominated by nu
        for phi in restriction_trials(&nu, 7, 5) {
            for &(n, v) in phi.points() {
                assert!(v.abs() <= nu.weights().numerator_at(n));
            }
        }
    }

    #[test]
    fn fourth_moment_examples() {
        let r = fourth_moment_ratio_of(&plain_majorant(100).unwrap()).unwrap();
        assert!(r.ratio > 0.0 && r.ratio.is_finite());
        assert_eq!(r.curves.len(), 3);
        let p = WParams::new(300, 3, 1, 23).unwrap();
        let r = fourth_moment_ratio(&p).unwrap();
        assert!(r.ratio > 0.0);
    }

    #[test]
    fn spectrum_examples() {
        let p = WParams::new(300, 3, 1, 23).unwrap();
        let nu = wtricked_majorant(&p).unwrap();
        let n = nu.support_len();
        let top = large_spectrum(nu.weights(), 0.95, n).unwrap();
        assert!(top.r <= 1);
        let mut last = usize::MAX;
        for delta in [0.05, 0.1, 0.2, 0.4, 0.8] {
            let rep = large_spectrum(nu.weights(), delta, n).unwrap();
            assert!(rep.r <= last);
            last = rep.r;
            let m = rep.grid_points as f64;
            for w in rep.points.windows(2) {
                assert!(w[1] - w[0] >= 16.0 / m - 1e-12);
            }
        }
        assert!(large_spectrum(nu.weights(), 1.0, n).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn parseval(pts in prop::collection::vec((-40i64..40, -9i64..9), 0..30)) {
            let f = WeightedFn::new(pts, Ratio::from_integer(1));
            let e = moment_even(&f, 1).unwrap();
            prop_assert_eq!(e.exact(), l2_squared(&f));
        }

        #[test]
        fn energy_lower_bound(pts in prop::collection::vec((0i64..30, 1i64..5), 1..20)) {
            let f = WeightedFn::new(pts, Ratio::from_integer(1));
            let (lo, hi) = f.support_bounds().unwrap();
            let l1 = f.numerator_sum() as f64;
            let range = (2 * (hi - lo) + 1) as f64;
            let e = moment_even(&f, 2).unwrap().value();
            prop_assert!(e >= l1.powi(4) / range - 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn quadrature_nests_exact(pts in prop::collection::vec((0i64..24, -4i64..5), 1..16), k in 1u32..=3) {
            let f = WeightedFn::new(pts, Ratio::from_integer(1));
            prop_assume!(!f.is_empty());
            let (lo, hi) = f.support_bounds().unwrap();
            let m = 8 * (hi - lo + 1) as usize;
            let q = moment_quadrature(&f, 2.0 * k as f64, m).unwrap();
            let exact = moment_even(&f, k).unwrap().value();
            prop_assert!((q.value - exact).abs() <= q.slack + 1e-9 * exact.max(1.0));
        }
    }
}
