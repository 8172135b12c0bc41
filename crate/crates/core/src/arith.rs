//! Exact integer helpers: small primes, smoothness, the modulus `W`, square
//! roots of `-b2` modulo `W` and divisor counts.
//!
//! Everything here is trial-division scale. The largest modulus of interest
//! (`w <= 31`) is below `10^12`, so `u64` carries all residues and `u128` is
//! used for products.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All primes `<= w`, ascending.
pub fn primes_upto(w: u64) -> Vec<u64> {
    if w < 2 {
        return Vec::new();
    }
    let n = w as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        primes.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    primes
}

/// `8 * prod_{2 < p <= w} p`.
pub fn compute_w(w: u64) -> Result<u128> {
    if w < 2 {
        return Err(Error::invalid("w", format!("need w >= 2, got {w}")));
    }
    primes_upto(w)
        .into_iter()
        .filter(|&p| p > 2)
        .try_fold(8u128, |acc, p| acc.checked_mul(p as u128))
        .ok_or(Error::Overflow("W"))
}

/// The asymptotic choice `w = sqrt(log X)` is below 3 for every practical
/// `X`; this clamps it.
pub fn default_w(x: u64) -> u64 {
    let w = (x.max(1) as f64).ln().sqrt().floor() as u64;
    w.max(3)
}

/// True iff every prime factor of `n` is at most `w`.
pub fn is_smooth(n: u64, w: u64) -> bool {
    assert!(n >= 1, "is_smooth needs n >= 1");
    let mut m = n;
    for p in primes_upto(w) {
        while m % p == 0 {
            m /= p;
        }
        if m == 1 {
            break;
        }
    }
    m == 1
}

/// All `w`-smooth integers in `[1, limit]`, ascending.
pub fn smooth_numbers_upto(limit: u64, w: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    if limit == 0 {
        return Vec::new();
    }
    for p in primes_upto(w) {
        let mut extra = Vec::new();
        for &m in &out {
            let mut v = m;
            while let Some(next) = v.checked_mul(p).filter(|&x| x <= limit) {
                extra.push(next);
                v = next;
            }
        }
        out.extend(extra);
    }
    out.sort_unstable();
    out
}

/// Number of positive divisors of `|k|`.
pub fn divisor_count(k: i64) -> Result<u64> {
    if k == 0 {
        return Err(Error::invalid("k", "divisor count of 0 is undefined"));
    }
    let mut m = k.unsigned_abs();
    let mut count = 1u64;
    let mut p = 2u64;
    while p * p <= m {
        let mut e = 0;
        while m % p == 0 {
            m /= p;
            e += 1;
        }
        count *= e + 1;
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        count *= 2;
    }
    Ok(count)
}

/// Integer square root (floor).
pub fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

pub fn is_square(n: i128) -> bool {
    n >= 0 && {
        let r = isqrt(n as u128);
        r * r == n as u128
    }
}

fn check_b2(modulus: u64, b2: u64) -> Result<()> {
    if b2 < 1 || b2 > modulus {
        return Err(Error::invalid("b2", format!("need 1 <= b2 <= W = {modulus}")));
    }
    if b2.gcd(&modulus) != 1 {
        return Err(Error::invalid("b2", format!("b2 = {b2} is not coprime to W = {modulus}")));
    }
    Ok(())
}

/// The residues `z` in `[1, W]` with `z^2 + b2 = 0 (mod W)`, ascending.
pub fn admissible_residues(modulus: u64, b2: u64) -> Result<Vec<u64>> {
    check_b2(modulus, b2)?;
    let m = modulus as u128;
    let target = (m - b2 as u128 % m) % m;
    Ok((1..=modulus)
        .filter(|&z| (z as u128 * z as u128) % m == target)
        .collect())
}

/// `#{z in [1, W] : z^2 + b2 = 0 (mod W)}`.
pub fn sigma_count(modulus: u64, b2: u64) -> Result<u64> {
    Ok(admissible_residues(modulus, b2)?.len() as u64)
}

/// The smoothness cutoff together with its primes and modulus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothnessContext {
    w: u64,
    primes: Vec<u64>,
    modulus: u64,
}

impl SmoothnessContext {
    pub fn new(w: u64) -> Result<Self> {
        let modulus = u64::try_from(compute_w(w)?).map_err(|_| Error::Overflow("W"))?;
        Ok(SmoothnessContext {
            w,
            primes: primes_upto(w),
            modulus,
        })
    }

    pub fn w(&self) -> u64 {
        self.w
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// `W`.
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// `pi(w)`.
    pub fn prime_count(&self) -> u32 {
        self.primes.len() as u32
    }

    /// The only nonzero value `sigma_count` can take for this `W`.
    pub fn full_sigma(&self) -> u64 {
        2u64 << self.prime_count()
    }

    pub fn is_smooth(&self, n: u64) -> bool {
        is_smooth(n, self.w)
    }

    /// All `b2` in `[1, W]` coprime to `W` with `sigma_count(W, b2) > 0`.
    pub fn admissible_b2(&self) -> Vec<u64> {
        let m = self.modulus as u128;
        let mut squares = vec![false; self.modulus as usize];
        for z in 0..self.modulus {
            squares[((z as u128 * z as u128) % m) as usize] = true;
        }
        (1..=self.modulus)
            .filter(|&b2| b2.gcd(&self.modulus) == 1)
            .filter(|&b2| squares[((m - b2 as u128 % m) % m) as usize])
            .collect()
    }
}
