//! End-to-end acceptance checks. Runs every criterion, prints one PASS/FAIL
//! line each, and exits non-zero if any fails.

use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quadroth::arith::{smooth_numbers_upto, SmoothnessContext};
use quadroth::counting::{count_brute, count_dft, count_ktrivial, telescope_check, Equation, SubspaceFamily};
use quadroth::expsum::{arcs, decay_sup_of, gauss_sums_coprime, major_arc_error, residue_average};
use quadroth::func::WeightedFn;
use quadroth::majorant::{plain_majorant, select_b, wtricked_majorant, WParams};
use quadroth::moments::{large_spectrum, moment_even, restriction_ratio};
use quadroth::regularity::{rado_number, Budget, RadoStatus};

const GAUSS_TOL: f64 = 1e-9;
const VANISH_TOL: f64 = 1e-9;
const DECAY_SPREAD: f64 = 4.0;
const PLAIN_DECAY_FLOOR: f64 = 0.4;
const ARC_SPREAD: f64 = 10.0;
const KTRIVIAL_SLOPE: f64 = 2.7;
const RESTRICTION_SPREAD: f64 = 5.0;
const SPECTRUM_CONSTANT: f64 = 1.0;
const SELECTION_CONSTANT: f64 = 0.1;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::MIN, f64::max);
    let min = v.iter().copied().fold(f64::MAX, f64::min);
    max / min
}

fn gauss_magnitude() -> Outcome {
    let ctx = SmoothnessContext::new(5).unwrap();
    let mut worst: f64 = f64::MIN;
    let mut sums = 0usize;
    for b2 in ctx.admissible_b2() {
        let p = WParams::with_context(1, ctx.clone(), 1, b2).unwrap();
        for z in p.residues() {
            for q in 1..=500u64 {
                let bound = 2.0 * (q as f64).sqrt();
                for (_, s) in gauss_sums_coprime(q, z as i64, &p).unwrap() {
                    worst = worst.max(s.norm() - bound);
                    sums += 1;
                }
            }
        }
    }
    check(worst <= GAUSS_TOL, format!("{sums} sums, max |S| - 2 sqrt q = {worst:.3e}"))
}

fn smooth_vanishing() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0usize;
    for w in [3u64, 5] {
        let ctx = SmoothnessContext::new(w).unwrap();
        for b2 in ctx.admissible_b2() {
            let p = WParams::with_context(1, ctx.clone(), 1, b2).unwrap();
            for q in smooth_numbers_upto(200, w).into_iter().filter(|&q| q >= 2) {
                for a in (1..q).filter(|a| a.gcd(&q) == 1) {
                    worst = worst.max(residue_average(q, a as i64, &p).unwrap().norm());
                    cases += 1;
                }
            }
        }
    }
    check(worst <= VANISH_TOL, format!("{cases} averages, max = {worst:.3e}"))
}

fn sigma_structure() -> Outcome {
    let mut bad = Vec::new();
    let mut checked = 0usize;
    for w in [3u64, 5, 7] {
        let ctx = SmoothnessContext::new(w).unwrap();
        let full = ctx.full_sigma();
        for b2 in (1..=ctx.modulus()).filter(|b| b.gcd(&ctx.modulus()) == 1) {
            let s = quadroth::arith::sigma_count(ctx.modulus(), b2).unwrap();
            checked += 1;
            if s != 0 && s != full {
                bad.push((w, b2, s));
            }
        }
    }
    check(bad.is_empty(), format!("{checked} residues, exceptions {bad:?}"))
}

fn counting_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = Vec::new();
    for i in 0..50 {
        let s = rng.random_range(3..=5usize);
        let coeffs: Vec<i64> = (0..s)
            .map(|_| {
                let c = rng.random_range(1..=5i64);
                if rng.random_bool(0.5) {
                    c
                } else {
                    -c
                }
            })
            .collect();
        let eq = Equation::new(coeffs).unwrap();
        let n = rng.random_range(1..=64i64);
        let fs: Vec<WeightedFn> = (0..s)
            .map(|_| {
                let pts: Vec<(i64, i64)> = (1..=n)
                    .filter_map(|x| rng.random_bool(0.6).then(|| (x, rng.random_range(-3..=3i64))))
                    .collect();
                WeightedFn::new(pts, Ratio::from_integer(1))
            })
            .collect();
        let refs: Vec<&WeightedFn> = fs.iter().collect();
        let brute = count_brute(&refs, &eq).unwrap().numerator;
        let dft = count_dft(&refs, &eq, None).unwrap().rounded_numerator;
        if brute as f64 != dft {
            mismatches.push((i, brute, dft));
        }
    }
    check(mismatches.is_empty(), format!("50 instances, mismatches {mismatches:?}"))
}

fn even_moment() -> Outcome {
    let mut bad = Vec::new();
    for n in 1..=256i64 {
        let m = moment_even(&WeightedFn::indicator(1, n), 2).unwrap().exact();
        let closed = BigRational::from_integer(BigInt::from((2 * n * n * n + n) / 3));
        let mut ok = m == closed;
        if n <= 20 {
            let mut brute = 0i64;
            for a in 1..=n {
                for b in 1..=n {
                    for c in 1..=n {
                        let d = a + b - c;
                        brute += (1..=n).contains(&d) as i64;
                    }
                }
            }
            ok &= BigRational::from_integer(BigInt::from(brute)) == closed;
        }
        if !ok {
            bad.push(n);
        }
    }
    check(bad.is_empty(), format!("N in 1..=256, failures {bad:?}"))
}

fn decay_trend() -> Outcome {
    let mut scaled = Vec::new();
    let mut parts = Vec::new();
    for w in [3u64, 5, 7] {
        let ctx = SmoothnessContext::new(w).unwrap();
        let m = ctx.modulus();
        let x = m.pow(4);
        let p = WParams::with_context(x, ctx, m * m, m - 1).unwrap();
        let nu = wtricked_majorant(&p).unwrap();
        let rep = decay_sup_of(&nu, 8).unwrap();
        let v = rep.sup_ratio * (w as f64).sqrt();
        parts.push(format!("w={w}: N={} sup*sqrt(w)={v:.4}", rep.n));
        scaled.push(v);
    }
    let s = spread(&scaled);
    let mut plain_min: f64 = f64::MAX;
    for x in [50u64, 100, 1000] {
        plain_min = plain_min.min(decay_sup_of(&plain_majorant(x).unwrap(), 16).unwrap().sup_ratio);
    }
    check(
        s < DECAY_SPREAD && plain_min >= PLAIN_DECAY_FLOOR,
        format!("{}; spread {s:.3}; plain min {plain_min:.4}", parts.join(", ")),
    )
}

fn major_arc_fit() -> Outcome {
    let mut all = Vec::new();
    for x in [100u64, 300, 1000] {
        let p = WParams::new(x, 3, 1, 23).unwrap();
        let nu = wtricked_majorant(&p).unwrap();
        let n = p.nb();
        // arcs of radius 10/N around a/q with q <= 10
        let dec = arcs(n, 10f64.ln() / (n as f64).ln()).unwrap();
        for arc in &dec.arcs {
            for k in 0..50 {
                let beta = -dec.radius + 2.0 * dec.radius * k as f64 / 49.0;
                all.push(major_arc_error(&nu, &p, arc.center + beta, arc.q, arc.a as i64).unwrap());
            }
        }
    }
    all.sort_by(f64::total_cmp);
    let median = all[all.len() / 2];
    let max = all[all.len() - 1];
    let r = max / median;
    check(r < ARC_SPREAD, format!("{} points, max {max:.4}, median {median:.4}, max/median {r:.3}", all.len()))
}

fn ktrivial_growth() -> Outcome {
    let eq = Equation::new(vec![1, 1, 1, 1, -4]).unwrap();
    let fam = SubspaceFamily::pairs_equal(eq);
    let xs = [50u64, 100, 200, 400];
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .map(|&x| ((x as f64).ln(), (count_ktrivial(x, &fam).unwrap() as f64).ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let counts: Vec<u64> = pts.iter().map(|p| p.1.exp().round() as u64).collect();
    check(slope <= KTRIVIAL_SLOPE, format!("counts {counts:?}, slope {slope:.3}"))
}

fn restriction_stability() -> Outcome {
    let ratios: Vec<f64> = [100u64, 200, 400]
        .iter()
        .map(|&x| restriction_ratio(&WParams::new(x, 3, 1, 23).unwrap(), 5.0, 20, 7).unwrap().ratio)
        .collect();
    let s = spread(&ratios);
    check(s <= RESTRICTION_SPREAD, format!("ratios {ratios:.4?}, max/min {s:.3}"))
}

fn spectrum_bound() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for x in [100u64, 1000] {
        let p = WParams::new(x, 3, 1, 23).unwrap();
        let nu = wtricked_majorant(&p).unwrap();
        for delta in [0.1, 0.2, 0.4] {
            let rep = large_spectrum(nu.weights(), delta, nu.support_len()).unwrap();
            let v = rep.measure_estimate * delta.powf(4.5) * rep.n as f64;
            parts.push(format!("X={x} d={delta}: R={} -> {v:.4}", rep.r));
            worst = worst.max(v);
        }
    }
    check(worst <= SPECTRUM_CONSTANT, format!("{}; max {worst:.4}", parts.join(", ")))
}

fn selection_statistic() -> Outcome {
    let x = 400u64;
    let mut parts = Vec::new();
    let mut ok = true;
    for delta in [1.0, 0.5, 0.25] {
        let a: Vec<u64> = (1..=(delta * x as f64) as u64).collect();
        let sel = select_b(&a, x, 3).unwrap();
        let target = SELECTION_CONSTANT * delta * delta * sel.params.nb() as f64;
        ok &= sel.statistic >= target;
        parts.push(format!(
            "d={delta}: b=({},{}) stat {:.1} vs {target:.1} (constant {:.3})",
            sel.params.b1(),
            sel.params.b2(),
            sel.statistic,
            sel.statistic / (delta * delta * sel.params.nb() as f64)
        ));
    }
    check(ok, parts.join(", "))
}

/// Smallest `m` with a distinct-entry solution of `a^2 + b^2 + c^2 + d^2 = 4e^2`
/// in `[1, m]`, by direct scan.
fn first_solution_scan(limit: i64) -> Option<i64> {
    (1..=limit).find(|&m| {
        (1..=m).any(|e| {
            let t = 4 * e * e;
            (1..=m).any(|a| {
                (a + 1..=m).any(|b| {
                    (b + 1..=m).any(|c| {
                        let r = t - a * a - b * b - c * c;
                        if r <= c * c {
                            return false;
                        }
                        let d = (r as f64).sqrt().round() as i64;
                        d * d == r && d <= m && ![a, b, c, d].contains(&e) && [a, b, c, d, e].contains(&m)
                    })
                })
            })
        })
    })
}

fn rado_exactness() -> Outcome {
    let eq = Equation::new(vec![1, 1, 1, 1, -4]).unwrap();
    let res = rado_number(&eq, 1, 1000, Budget::default()).unwrap();
    let scan = first_solution_scan(1000);
    check(
        res.status == RadoStatus::RegularAtN && Some(res.n as i64) == scan,
        format!("search n = {} ({:?}), scan {scan:?}, witness {:?}", res.n, res.status, res.witness),
    )
}

fn telescoping() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut failures = 0;
    for _ in 0..10 {
        let random_fn = |rng: &mut ChaCha8Rng| {
            let pts: Vec<(i64, i64)> = (-10..=30).map(|x| (x, rng.random_range(-20..=20i64))).collect();
            WeightedFn::new(pts, Ratio::new(rng.random_range(1..=7), rng.random_range(1..=9)))
        };
        let f = random_fn(&mut rng);
        let g = random_fn(&mut rng);
        let tuples: Vec<Vec<i64>> = (0..1000)
            .map(|_| {
                let s = rng.random_range(2..=6usize);
                (0..s).map(|_| rng.random_range(-12..=32i64)).collect()
            })
            .collect();
        failures += !telescope_check(&f, &g, &tuples) as usize;
    }
    check(failures == 0, format!("10 pairs x 1000 tuples, {failures} failing pairs"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("gauss sum magnitude", gauss_magnitude),
        ("smooth vanishing", smooth_vanishing),
        ("sigma structure", sigma_structure),
        ("counting oracle equivalence", counting_oracle),
        ("even moment closed form", even_moment),
        ("Fourier decay trend", decay_trend),
        ("major arc error", major_arc_fit),
        ("K-trivial growth", ktrivial_growth),
        ("restriction ratio stability", restriction_stability),
        ("large spectrum bound", spectrum_bound),
        ("dense-set statistic", selection_statistic),
        ("r = 1 Rado exactness", rado_exactness),
        ("telescoping identity", telescoping),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{:>2}] {name} ({:.1}s): {detail}", i + 1, t.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
