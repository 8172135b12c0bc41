//! Monochromatic solutions of `c . x^2 = 0` with distinct entries: exact
//! small Rado numbers, greedy solution-free sets, and the end-to-end
//! transference report.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::counting::{count_brute, count_dft, Equation, ScaledCount, SubspaceFamily};
use crate::error::{Error, Result};
use crate::expsum::{decay_sup_of, DecayReport};
use crate::majorant::{lift_set, restricted_majorant, select_b, wtricked_majorant, WParams};

fn require_sum_zero(eq: &Equation) -> Result<()> {
    if !eq.is_sum_zero() {
        return Err(Error::invalid("c", "need sum(c) = 0"));
    }
    Ok(())
}

/// Distinct-entry solutions drawn from `pool` (sorted, distinct) with
/// coordinate `pos` fixed to `v`; `v` must not occur in `pool`. Each
/// solution is returned as a tuple in coordinate order. Stops after `limit`.
fn solutions_through(eq: &Equation, pool: &[i64], pos: usize, v: i64, limit: usize) -> Vec<Vec<i64>> {
    let s = eq.arity();
    let c = eq.coeffs();
    let rest: Vec<usize> = (0..s).filter(|&i| i != pos).collect();
    let (left, right) = rest.split_at(rest.len() / 2);
    let target = -(c[pos] as i128 * v as i128 * v as i128);

    let mut table: HashMap<i128, Vec<Vec<i64>>> = HashMap::new();
    each_distinct(pool, left.len(), &mut |xs| {
        let sum: i128 = left.iter().zip(xs).map(|(&i, &x)| c[i] as i128 * x as i128 * x as i128).sum();
        table.entry(sum).or_default().push(xs.to_vec());
        true
    });
    let mut out = Vec::new();
    each_distinct(pool, right.len(), &mut |ys| {
        let sum: i128 = right.iter().zip(ys).map(|(&i, &y)| c[i] as i128 * y as i128 * y as i128).sum();
        if let Some(lefts) = table.get(&(target - sum)) {
            for xs in lefts {
                if xs.iter().any(|x| ys.contains(x)) {
                    continue;
                }
                let mut t = vec![0i64; s];
                t[pos] = v;
                for (&i, &x) in left.iter().zip(xs) {
                    t[i] = x;
                }
                for (&i, &y) in right.iter().zip(ys) {
                    t[i] = y;
                }
                out.push(t);
                if out.len() >= limit {
                    return false;
                }
            }
        }
        true
    });
    out
}

/// Calls `f` on every tuple of `k` pairwise distinct entries of `pool`
/// (ordered tuples) until it returns false.
fn each_distinct(pool: &[i64], k: usize, f: &mut dyn FnMut(&[i64]) -> bool) {
    fn rec(pool: &[i64], k: usize, used: &mut Vec<usize>, buf: &mut Vec<i64>, f: &mut dyn FnMut(&[i64]) -> bool) -> bool {
        if buf.len() == k {
            return f(buf);
        }
        for (i, &x) in pool.iter().enumerate() {
            if used.contains(&i) {
                continue;
            }
            used.push(i);
            buf.push(x);
            let go = rec(pool, k, used, buf, f);
            buf.pop();
            used.pop();
            if !go {
                return false;
            }
        }
        true
    }
    rec(pool, k, &mut Vec::new(), &mut Vec::new(), f);
}

/// Entry sets (sorted, without `m`) of distinct-entry solutions in `[1, m]`
/// whose largest entry is `m`.
fn solution_sets_with_max(eq: &Equation, m: i64) -> Vec<Vec<i64>> {
    let pool: Vec<i64> = (1..m).collect();
    let mut sets: Vec<Vec<i64>> = (0..eq.arity())
        .flat_map(|pos| solutions_through(eq, &pool, pos, m, usize::MAX))
        .map(|t| {
            let mut e: Vec<i64> = t.into_iter().filter(|&x| x != m).collect();
            e.sort_unstable();
            e
        })
        .collect();
    sets.sort();
    sets.dedup();
    sets
}

/// Lexicographically smallest distinct-entry solution in `[1, n]` that uses
/// `n`, in coordinate order.
fn witness_with_max(eq: &Equation, n: i64) -> Option<Vec<i64>> {
    let pool: Vec<i64> = (1..n).collect();
    (0..eq.arity())
        .flat_map(|pos| solutions_through(eq, &pool, pos, n, usize::MAX))
        .min()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_nodes: u64,
    pub max_millis: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_nodes: 50_000_000,
            max_millis: 120_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadoStatus {
    /// Every colouring of `[1, n]` has a monochromatic solution.
    RegularAtN,
    /// A solution-free colouring of `[1, n_max]` exists.
    NoWitnessUpToN,
    ExhaustedBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColoringResult {
    pub equation: Equation,
    pub r: u32,
    /// The Rado number when regular, else the largest `n` certified
    /// solution-free.
    pub n: u64,
    pub status: RadoStatus,
    /// A distinct-entry solution in `[1, n]` using `n`.
    pub witness: Option<Vec<i64>>,
    /// Colours (0-based) of `1, 2, ...` in the longest solution-free
    /// colouring found.
    pub certificate: Vec<u32>,
    pub nodes: u64,
    #[serde(skip)]
    pub elapsed_ms: u64,
}

struct Search<'a> {
    eq: &'a Equation,
    r: u32,
    n_max: usize,
    budget: Budget,
    start: Instant,
    nodes: u64,
    exhausted: bool,
    sets: Vec<Option<Vec<Vec<i64>>>>,
    colour: Vec<u32>,
    best: Vec<u32>,
}

impl Search<'_> {
    fn blocked(&mut self, m: usize, col: u32) -> bool {
        if self.sets[m].is_none() {
            self.sets[m] = Some(solution_sets_with_max(self.eq, m as i64));
        }
        let colour = &self.colour;
        self.sets[m]
            .as_ref()
            .expect("filled above")
            .iter()
            .any(|set| set.iter().all(|&x| colour[x as usize] == col))
    }

    /// Returns true once a colouring of `[1, n_max]` is found.
    fn dfs(&mut self, m: usize, used: u32) -> bool {
        if m > self.n_max {
            return true;
        }
        self.nodes += 1;
        if self.nodes > self.budget.max_nodes
            || (self.nodes % 1024 == 0 && self.start.elapsed() > Duration::from_millis(self.budget.max_millis))
        {
            self.exhausted = true;
            return false;
        }
        for col in 0..(used + 1).min(self.r) {
            if self.blocked(m, col) {
                continue;
            }
            self.colour[m] = col;
            if m > self.best.len() {
                self.best = self.colour[1..=m].to_vec();
            }
            if self.dfs(m + 1, used.max(col + 1)) {
                return true;
            }
            if self.exhausted {
                return false;
            }
        }
        self.colour[m] = u32::MAX;
        false
    }
}

/// Smallest `n <= n_max` such that every `r`-colouring of `[1, n]` has a
/// monochromatic distinct-entry solution of `c . x^2 = 0`.
pub fn rado_number(eq: &Equation, r: u32, n_max: u64, budget: Budget) -> Result<ColoringResult> {
    require_sum_zero(eq)?;
    if r < 1 {
        return Err(Error::invalid("r", "need r >= 1"));
    }
    if n_max < 1 {
        return Err(Error::invalid("n_max", "need n_max >= 1"));
    }
    let n_max_us = n_max as usize;
    let mut search = Search {
        eq,
        r,
        n_max: n_max_us,
        budget,
        start: Instant::now(),
        nodes: 0,
        exhausted: false,
        sets: vec![None; n_max_us + 1],
        colour: vec![u32::MAX; n_max_us + 1],
        best: Vec::new(),
    };
    let complete = search.dfs(1, 0);
    let depth = search.best.len() as u64;
    let (status, n, witness) = if complete {
        (RadoStatus::NoWitnessUpToN, n_max, None)
    } else if search.exhausted {
        (RadoStatus::ExhaustedBudget, depth, None)
    } else {
        let n = depth + 1;
        (RadoStatus::RegularAtN, n, witness_with_max(eq, n as i64))
    };
    Ok(ColoringResult {
        equation: eq.clone(),
        r,
        n,
        status,
        witness,
        certificate: search.best,
        nodes: search.nodes,
        elapsed_ms: search.start.elapsed().as_millis() as u64,
    })
}

/// True when `x` solves `c . x^2 = 0` with pairwise distinct entries in `[1, n]`.
pub fn is_distinct_solution(eq: &Equation, x: &[i64], n: u64) -> bool {
    x.len() == eq.arity()
        && x.iter().all(|&v| v >= 1 && v as u64 <= n)
        && x.iter().enumerate().all(|(i, a)| x[i + 1..].iter().all(|b| a != b))
        && eq.eval_squares(x) == 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFreeSet {
    pub x: u64,
    pub seed: u64,
    pub set: Vec<u64>,
    pub density: f64,
}

/// A maximal `A subset [1, X]` without distinct-entry solutions, built by
/// adding `1..=X` in a seeded random order.
pub fn solution_free_greedy(eq: &Equation, x: u64, seed: u64) -> Result<SolutionFreeSet> {
    require_sum_zero(eq)?;
    let mut order: Vec<i64> = (1..=x as i64).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut set: Vec<i64> = Vec::new();
    for v in order {
        let creates = (0..eq.arity()).any(|pos| !solutions_through(eq, &set, pos, v, 1).is_empty());
        if !creates {
            let at = set.partition_point(|&a| a < v);
            set.insert(at, v);
        }
    }
    Ok(SolutionFreeSet {
        x,
        seed,
        density: set.len() as f64 / x.max(1) as f64,
        set: set.into_iter().map(|v| v as u64).collect(),
    })
}

/// Number of ordered distinct-entry solutions with all entries in `set`.
pub fn count_distinct_solutions(eq: &Equation, set: &[u64]) -> u64 {
    let mut pool: Vec<i64> = set.iter().map(|&v| v as i64).collect();
    pool.sort_unstable();
    pool.dedup();
    let mut total = 0u64;
    // classify by the entry in coordinate 0
    for (i, &v) in pool.iter().enumerate() {
        let others: Vec<i64> = pool.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x).collect();
        total += solutions_through(eq, &others, 0, v, usize::MAX).len() as u64;
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferenceReport {
    pub x: u64,
    pub params: WParams,
    pub delta: f64,
    /// `sum_n 1_{A_b}(n) nu_b(n)`.
    pub statistic: f64,
    pub delta_sq_nb: f64,
    pub mass: f64,
    pub max_weight: f64,
    pub lifted_size: usize,
    pub decay: DecayReport,
    pub equation: Equation,
    pub count_brute: f64,
    pub count_brute_exact: String,
    pub count_dft: f64,
    pub count_dft_rounding_residual: f64,
    pub ktrivial: f64,
    pub heuristic: f64,
}

/// Selects `b` for `A`, restricts `nu_b` to `A_b` and reports the pieces of
/// the transference argument for `f = 1_{A_b} nu_b`. K-triviality is tested
/// on the pullbacks `x_i^2`.
pub fn transference_statistic(
    a: &[u64],
    x: u64,
    w: u64,
    eq: &Equation,
    family: &SubspaceFamily,
) -> Result<TransferenceReport> {
    if family.equation != *eq {
        return Err(Error::invalid("K", "family belongs to a different equation"));
    }
    let sel = select_b(a, x, w)?;
    let p = sel.params;
    let nu = wtricked_majorant(&p)?;
    let f = restricted_majorant(a, &p);
    let s = eq.arity();
    let fs = vec![&f; s];
    let brute = count_brute(&fs, eq)?;
    let dft = count_dft(&fs, eq, None)?;
    let ktrivial = crate::counting::ktrivial_pullback(&f, &p, family)?;
    let nb = p.nb() as f64;
    Ok(TransferenceReport {
        x,
        delta: sel.delta,
        statistic: f.sum(),
        delta_sq_nb: sel.delta * sel.delta * nb,
        mass: nu.mass(),
        max_weight: nu.max_weight(),
        lifted_size: lift_set(a, &p).len(),
        decay: decay_sup_of(&nu, 8)?,
        equation: eq.clone(),
        count_brute: brute.value(),
        count_brute_exact: brute.exact().to_string(),
        count_dft: dft.value,
        count_dft_rounding_residual: dft.rounding_residual,
        ktrivial: ScaledCount::value(&ktrivial),
        heuristic: nb.powi(s as i32 - 1),
        params: p,
    })
}
