//! The averaging function `g_m : {0,1}^{m²} → {0, …, m}`.
//!
//! Words are listed by increasing Hamming weight and, inside a weight
//! level, in decreasing lexicographic order (position 0 most significant).
//! With `rank(x) ∈ [1, 2^{m²}]` the position in that list and
//! `k(m) = ⌈2^{m²}/m⌉`, the function is `g_m(x) = ⌊rank(x)/k(m)⌋`.
//!
//! Flipping one bit moves a word to an adjacent weight level, so its rank
//! moves by at most the size of two levels. Inside a level the decreasing
//! order keeps that shift below `k(m)`, which is what makes `g_m` change by
//! at most one under a single flip. Ranks are big integers; nothing here
//! enumerates the cube except [`verify_averaging_properties`].

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Result};

/// Largest `m` accepted by [`AveragingFunction::new`].
pub const MAX_M: u32 = 64;

/// Largest `m` for exhaustive verification (`2^{16}` words at `m = 4`).
pub const MAX_EXHAUSTIVE_M: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AveragingFunction {
    m: u32,
    bits: usize,
    k: BigUint,
    total: BigUint,
}

impl AveragingFunction {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 || m > MAX_M {
            return invalid(format!("m must lie in 1..={MAX_M}, got {m}"));
        }
        let bits = (m * m) as usize;
        let total = BigUint::one() << bits;
        let k = (&total + BigUint::from(m - 1)) / BigUint::from(m);
        Ok(Self { m, bits, k, total })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Word length `m²`.
    pub fn bits(&self) -> usize {
        self.bits
    }

    /// `k(m) = ⌈2^{m²}/m⌉`.
    pub fn k(&self) -> &BigUint {
        &self.k
    }

    /// `2^{m²}`.
    pub fn total(&self) -> &BigUint {
        &self.total
    }

    fn check_len(&self, x: &[bool]) -> Result<()> {
        if x.len() == self.bits {
            Ok(())
        } else {
            invalid(format!("expected a word of {} bits, got {}", self.bits, x.len()))
        }
    }

    /// Position of `x` in the weight-then-decreasing-lexicographic list,
    /// starting at 1.
    pub fn rank(&self, x: &[bool]) -> Result<BigUint> {
        self.check_len(x)?;
        let n = self.bits;
        let weight = x.iter().filter(|&&b| b).count();
        let mut rank = levels_below(n, weight);
        let mut walk = BinomialWalk::new(n, weight);
        for (i, &bit) in x.iter().enumerate() {
            if walk.ones == 0 {
                break;
            }
            if !bit {
                // Words sharing the prefix with a 1 here come first.
                rank += &walk.value;
            }
            walk.advance(i, bit);
        }
        Ok(rank + 1u32)
    }

    /// Inverse of [`rank`](Self::rank).
    pub fn unrank(&self, rank: &BigUint) -> Result<Vec<bool>> {
        if rank.is_zero() || rank > &self.total {
            return invalid(format!("rank {rank} outside [1, 2^{}]", self.bits));
        }
        let n = self.bits;
        let mut rest = rank - 1u32;
        let mut weight = 0;
        let mut level = BigUint::one();
        while rest >= level {
            rest -= &level;
            level = level * BigUint::from(n - weight) / BigUint::from(weight + 1);
            weight += 1;
        }
        let mut x = vec![false; n];
        let mut walk = BinomialWalk::new(n, weight);
        for (i, slot) in x.iter_mut().enumerate() {
            if walk.ones == 0 {
                break;
            }
            let bit = rest < walk.value;
            if !bit {
                rest -= &walk.value;
            }
            *slot = bit;
            walk.advance(i, bit);
        }
        Ok(x)
    }

    /// `g_m(x) = ⌊rank(x)/k(m)⌋ ∈ {0, …, m}`.
    pub fn eval(&self, x: &[bool]) -> Result<u32> {
        let r = self.rank(x)?;
        Ok((r / &self.k).to_u32().expect("g_m is at most m"))
    }
}

/// `Σ_{j<w} C(n, j)`.
fn levels_below(n: usize, w: usize) -> BigUint {
    let mut sum = BigUint::zero();
    let mut c = BigUint::one();
    for j in 0..w {
        sum += &c;
        c = c * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    sum
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut c = BigUint::one();
    for j in 0..k {
        c = c * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    c
}

/// Tracks `C(n − i − 1, r − 1)` while scanning position `i` with `r` ones
/// still to place.
struct BinomialWalk {
    value: BigUint,
    /// `n − i − 1`
    slots: usize,
    ones: usize,
}

impl BinomialWalk {
    fn new(n: usize, ones: usize) -> Self {
        let value = if ones == 0 {
            BigUint::zero()
        } else {
            binomial(n - 1, ones - 1)
        };
        Self {
            value,
            slots: n.saturating_sub(1),
            ones,
        }
    }

    fn advance(&mut self, _i: usize, bit: bool) {
        if self.slots == 0 {
            return;
        }
        let a = self.slots;
        let b = self.ones - 1;
        if bit {
            // C(a−1, b−1) = C(a, b)·b/a
            self.ones -= 1;
            self.value = if b == 0 {
                BigUint::zero()
            } else {
                &self.value * BigUint::from(b) / BigUint::from(a)
            };
        } else {
            // C(a−1, b) = C(a, b)·(a−b)/a
            self.value = &self.value * BigUint::from(a - b) / BigUint::from(a);
        }
        self.slots -= 1;
    }
}

/// `c₁(m) = max_{1 ≤ m′ ≤ m} 2·C(m′², ⌊m′²/2⌋)·m′ / 2^{m′²}`.
pub fn c1(m: u32) -> f64 {
    (1..=m)
        .map(|mm| {
            let n = (mm * mm) as usize;
            let num = binomial(n, n / 2) * BigUint::from(2 * mm);
            // Keep 60 bits of the ratio before converting.
            let scaled = (num << 60usize) >> n;
            scaled.to_f64().unwrap() / 2f64.powi(60)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragingReport {
    pub m: u32,
    pub k_m: String,
    /// `max_y λ(g_m = y)`, exact.
    pub max_level_prob: f64,
    /// `2c₁/m`
    pub level_bound: f64,
    pub level_ok: bool,
    /// Every one-bit flip changes `g_m` by at most 1.
    pub gradient_ok: bool,
    pub c1_value: f64,
    pub max_rank_shift: u64,
    /// `2·C(m², ⌊m²/2⌋)`
    pub rank_shift_bound: u64,
    pub bijective: bool,
    pub level_counts: Vec<u64>,
    pub holds: bool,
}

/// Exhaustive check of the level-set and one-bit-flip properties over all
/// `2^{m²}` words.
pub fn verify_averaging_properties(m: u32) -> Result<AveragingReport> {
    if m == 0 || m > MAX_EXHAUSTIVE_M {
        return invalid(format!(
            "exhaustive verification needs 1 <= m <= {MAX_EXHAUSTIVE_M}, got {m}"
        ));
    }
    let g = AveragingFunction::new(m)?;
    let n = g.bits();
    let size = 1usize << n;
    let word = |mask: usize| -> Vec<bool> { (0..n).map(|i| mask >> (n - 1 - i) & 1 == 1).collect() };

    let mut ranks = vec![0u64; size];
    let mut values = vec![0u32; size];
    let mut seen = vec![false; size];
    let mut bijective = true;
    for mask in 0..size {
        let x = word(mask);
        let r = g.rank(&x)?.to_u64().unwrap();
        ranks[mask] = r;
        values[mask] = g.eval(&x)?;
        let slot = (r as usize).wrapping_sub(1);
        if slot >= size || seen[slot] {
            bijective = false;
        } else {
            seen[slot] = true;
        }
    }

    let mut gradient_ok = true;
    let mut max_rank_shift = 0u64;
    for mask in 0..size {
        for q in 0..n {
            let other = mask ^ (1 << q);
            gradient_ok &= values[mask].abs_diff(values[other]) <= 1;
            max_rank_shift = max_rank_shift.max(ranks[mask].abs_diff(ranks[other]));
        }
    }

    let mut level_counts = vec![0u64; m as usize + 1];
    for &v in &values {
        level_counts[v as usize] += 1;
    }
    let max_level_prob = *level_counts.iter().max().unwrap() as f64 / size as f64;
    let c1_value = c1(m);
    let level_bound = 2.0 * c1_value / m as f64;
    let level_ok = max_level_prob <= level_bound;
    let rank_shift_bound = 2 * binomial(n, n / 2).to_u64().unwrap();

    Ok(AveragingReport {
        m,
        k_m: g.k().to_string(),
        max_level_prob,
        level_bound,
        level_ok,
        gradient_ok,
        c1_value,
        max_rank_shift,
        rank_shift_bound,
        bijective,
        level_counts,
        holds: gradient_ok && level_ok && bijective && max_rank_shift <= rank_shift_bound,
    })
}

/// `z(a) = Σ_i g_m(a_{i,·}) e_i` for a `d × m²` bit matrix.
pub fn random_vertex(rows: &[Vec<bool>], m: u32) -> Result<Vec<u32>> {
    let g = AveragingFunction::new(m)?;
    if rows.is_empty() {
        return invalid("bit matrix needs at least one row");
    }
    rows.iter().map(|row| g.eval(row)).collect()
}

/// Uniform `d × m²` bit matrix.
pub fn random_bits<R: Rng + ?Sized>(rng: &mut R, d: usize, m: u32) -> Vec<Vec<bool>> {
    let n = (m * m) as usize;
    (0..d).map(|_| (0..n).map(|_| rng.random::<bool>()).collect()).collect()
}

/// Parses a `0`/`1` string.
pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => invalid(format!("bit string may only contain 0 and 1, found {other:?}")),
        })
        .collect()
}
