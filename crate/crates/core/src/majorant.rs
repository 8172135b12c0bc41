//! Majorants on the squares.
//!
//! The plain majorant puts weight `2x` on `x^2`. The W-tricked majorant
//! `nu_b` lives on `[1, N_b]` and puts weight `2 sqrt(Wn - b2) / sigma(b2)` on
//! each `n` with `b1^2 (Wn - b2) = x^2` for some `x in [1, X]`. Writing
//! `x = b1 y`, the support is `n = (y^2 + b2) / W` over `y <= X / b1` with
//! `y^2 = -b2 (mod W)`, and the weight is `y * (2 / sigma)`.

use std::io::Write;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{self, SmoothnessContext};
use crate::error::{Error, Result};
use crate::func::{ratio_f64, WeightedFn};

/// Residue data `(b1, b2)` for a fixed `(X, w)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WParams {
    x: u64,
    ctx: SmoothnessContext,
    b1: u64,
    b2: u64,
    sigma: u64,
    nb: u64,
}

impl WParams {
    pub fn new(x: u64, w: u64, b1: u64, b2: u64) -> Result<Self> {
        Self::with_context(x, SmoothnessContext::new(w)?, b1, b2)
    }

    pub fn with_context(x: u64, ctx: SmoothnessContext, b1: u64, b2: u64) -> Result<Self> {
        if x < 1 {
            return Err(Error::invalid("X", "need X >= 1"));
        }
        if b1 < 1 || !ctx.is_smooth(b1) {
            return Err(Error::invalid("b1", format!("b1 = {b1} is not {}-smooth", ctx.w())));
        }
        if (b1 as u128) * (b1 as u128) > x as u128 {
            return Err(Error::invalid("b1", format!("b1 = {b1} exceeds sqrt(X) for X = {x}")));
        }
        let modulus = ctx.modulus();
        let sigma = arith::sigma_count(modulus, b2)?;
        if sigma == 0 {
            return Err(Error::invalid(
                "b2",
                format!("-{b2} is not a square modulo W = {modulus}, so sigma(b2) = 0"),
            ));
        }
        let nb = (x as u128 * x as u128 / (b1 as u128 * b1 as u128 * modulus as u128)) as u64 + 1;
        Ok(WParams {
            x,
            ctx,
            b1,
            b2,
            sigma,
            nb,
        })
    }

    pub fn x(&self) -> u64 {
        self.x
    }
    pub fn w(&self) -> u64 {
        self.ctx.w()
    }
    pub fn context(&self) -> &SmoothnessContext {
        &self.ctx
    }
    /// `W`.
    pub fn modulus(&self) -> u64 {
        self.ctx.modulus()
    }
    pub fn b1(&self) -> u64 {
        self.b1
    }
    pub fn b2(&self) -> u64 {
        self.b2
    }
    /// `sigma(b2)`.
    pub fn sigma(&self) -> u64 {
        self.sigma
    }
    /// `N_b = floor(X^2 / (b1^2 W)) + 1`.
    pub fn nb(&self) -> u64 {
        self.nb
    }

    /// Largest `y` with `b1 y <= X`.
    pub fn y_max(&self) -> u64 {
        self.x / self.b1
    }

    /// `z in [1, W]` with `z^2 + b2 = 0 (mod W)`.
    pub fn residues(&self) -> Vec<u64> {
        arith::admissible_residues(self.modulus(), self.b2).expect("validated at construction")
    }

    /// `2 / sigma(b2)`.
    pub fn weight_scale(&self) -> Ratio<i64> {
        Ratio::new(2, self.sigma as i64)
    }

    /// Maps `y` to `n = (y^2 + b2) / W` when `y^2 = -b2 (mod W)`.
    pub fn lift_root(&self, y: u64) -> Option<u64> {
        let m = self.modulus() as u128;
        let t = y as u128 * y as u128 + self.b2 as u128;
        (t % m == 0).then(|| (t / m) as u64)
    }
}

/// A nonnegative weight on `[1, N]` stored as integer numerators with a
/// common rational scale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Majorant {
    support_len: u64,
    weights: WeightedFn,
}

impl Majorant {
    /// `N`.
    pub fn support_len(&self) -> u64 {
        self.support_len
    }

    pub fn weights(&self) -> &WeightedFn {
        &self.weights
    }

    pub fn value(&self, n: i64) -> f64 {
        self.weights.value(n)
    }

    pub fn mass(&self) -> f64 {
        self.weights.sum()
    }

    /// `sum_n nu(n)` as an exact rational.
    pub fn mass_exact(&self) -> Ratio<i128> {
        let s = self.weights.scale();
        Ratio::new(self.weights.numerator_sum() * *s.numer() as i128, *s.denom() as i128)
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.max_abs_numerator() as f64 * ratio_f64(self.weights.scale())
    }

    /// `|mass - N| / sqrt(W N)`, the implied constant in the mass asymptotic.
    pub fn mass_defect_constant(&self, modulus: u64) -> f64 {
        (self.mass() - self.support_len as f64).abs() / (modulus as f64 * self.support_len as f64).sqrt()
    }

    /// CSV rows `n,numerator,scale`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let scale = self.weights.scale();
        let scale = format!("{}/{}", scale.numer(), scale.denom());
        wtr.write_record(["n", "numerator", "scale"]).map_err(csv_err)?;
        for &(n, v) in self.weights.points() {
            wtr.write_record([n.to_string(), v.to_string(), scale.clone()])
                .map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Weight `2x` at `x^2` for `x in [1, X]`, on `[1, X^2]`.
pub fn plain_majorant(x: u64) -> Result<Majorant> {
    if x < 1 {
        return Err(Error::invalid("X", "need X >= 1"));
    }
    let points = (1..=x as i64).map(|k| (k * k, k));
    Ok(Majorant {
        support_len: x * x,
        weights: WeightedFn::new(points, Ratio::from_integer(2)),
    })
}

pub fn wtricked_majorant(p: &WParams) -> Result<Majorant> {
    if p.sigma == 0 {
        return Err(Error::invalid("b2", "sigma(b2) = 0"));
    }
    let points = (1..=p.y_max())
        .filter_map(|y| p.lift_root(y).map(|n| (n as i64, y as i64)))
        .collect::<Vec<_>>();
    Ok(Majorant {
        support_len: p.nb,
        weights: WeightedFn::new(points, p.weight_scale()),
    })
}

/// `A_b = {n : b1^2 (Wn - b2) = x^2, x in A}`. Elements of `A` outside
/// `[1, X]` never lift.
pub fn lift_set(a: &[u64], p: &WParams) -> Vec<u64> {
    let mut out: Vec<u64> = a
        .iter()
        .filter(|&&x| x >= 1 && x <= p.x && x % p.b1 == 0)
        .filter_map(|&x| p.lift_root(x / p.b1))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// `1_{A_b} * nu_b`.
pub fn restricted_majorant(a: &[u64], p: &WParams) -> WeightedFn {
    let lifted = lift_set(a, p);
    let nu = wtricked_majorant(p).expect("validated params");
    nu.weights
        .restrict(|n| lifted.binary_search(&(n as u64)).is_ok())
}

/// `sum_n 1_{A_b}(n) nu_b(n)`, exactly.
pub fn lifted_statistic(a: &[u64], p: &WParams) -> Ratio<i128> {
    let numer: i128 = a
        .iter()
        .filter(|&&x| x >= 1 && x <= p.x && x % p.b1 == 0)
        .map(|&x| x / p.b1)
        .filter(|&y| p.lift_root(y).is_some())
        .map(|y| y as i128)
        .sum();
    Ratio::new(2 * numer, p.sigma as i128)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub params: WParams,
    /// `sum_n 1_{A_b}(n) nu_b(n)`.
    pub statistic: f64,
    /// `statistic / N_b`.
    pub ratio: f64,
    /// `|A| / X`.
    pub delta: f64,
    pub candidates: usize,
}

/// Exhaustive search over `w`-smooth `b1 <= sqrt(X)` and admissible `b2`
/// for the largest `sum 1_{A_b} nu_b / N_b`; ties go to the smallest `(b1, b2)`.
pub fn select_b(a: &[u64], x: u64, w: u64) -> Result<Selection> {
    if a.is_empty() {
        return Err(Error::invalid("A", "need |A| >= 1"));
    }
    let ctx = SmoothnessContext::new(w)?;
    let b1s = arith::smooth_numbers_upto(arith::isqrt(x as u128) as u64, w);
    let b2s = ctx.admissible_b2();
    assert!(!b2s.is_empty() || w < 2, "W - 1 is always admissible");
    let pairs: Vec<(u64, u64)> = b1s
        .iter()
        .flat_map(|&b1| b2s.iter().map(move |&b2| (b1, b2)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::NoAdmissibleResidue { w });
    }

    let score = |&(b1, b2): &(u64, u64)| -> Result<(Ratio<i128>, (u64, u64))> {
        let p = WParams::with_context(x, ctx.clone(), b1, b2)?;
        Ok((lifted_statistic(a, &p) / Ratio::from_integer(p.nb as i128), (b1, b2)))
    };
    // max by ratio, then by the smallest pair; associative, so the parallel
    // reduction is order independent
    let better = |l: (Ratio<i128>, (u64, u64)), r: (Ratio<i128>, (u64, u64))| {
        if r.0 > l.0 || (r.0 == l.0 && r.1 < l.1) {
            r
        } else {
            l
        }
    };
    let scored: Vec<_> = pairs.par_iter().map(score).collect::<Result<_>>()?;
    let best = scored.into_iter().reduce(better).expect("nonempty");

    let (b1, b2) = best.1;
    let params = WParams::with_context(x, ctx, b1, b2)?;
    let stat = lifted_statistic(a, &params);
    Ok(Selection {
        statistic: ratio_f64(stat),
        ratio: ratio_f64(best.0),
        delta: a.len() as f64 / x as f64,
        candidates: pairs.len(),
        params,
    })
}
