//! Exact uniform sampling of integer partitions by bit-level divide and
//! conquer.
//!
//! With independent `Z_i ~ Geo(x^i)`, the least significant bits
//! `e_i ~ Bern(x^i / (1 + x^i))` are sampled first and `Z_i = e_i + 2 Z'_i`
//! with `Z'_i ~ Geo(x^{2i})`. Given `a = sum i e_i`, the rest must satisfy
//! `sum i Z'_i = (n - a) / 2`, an event of probability proportional to
//! `p((n - a) / 2) y^((n - a) / 2)` with `y = x^2`. Accepting `a` with that
//! probability, normalised by its maximum, and recursing on `(n - a) / 2`
//! gives an exactly uniform partition for any tilt in `(0, 1)`.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::SamplerRng;

/// A partition of `n`, stored as part-size multiplicities.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    pub n: u64,
    pub multiplicities: BTreeMap<u64, u64>,
}

impl Partition {
    fn from_parts(n: u64, parts: impl IntoIterator<Item = u64>) -> Self {
        let mut multiplicities = BTreeMap::new();
        for p in parts {
            *multiplicities.entry(p).or_insert(0) += 1;
        }
        Partition { n, multiplicities }
    }

    /// Parts in descending order.
    pub fn parts(&self) -> Vec<u64> {
        self.multiplicities
            .iter()
            .rev()
            .flat_map(|(&size, &count)| std::iter::repeat_n(size, count as usize))
            .collect()
    }

    pub fn is_valid(&self) -> bool {
        self.multiplicities.iter().map(|(s, c)| s * c).sum::<u64>() == self.n
            && !self.multiplicities.contains_key(&0)
    }

    pub fn has_distinct_parts(&self) -> bool {
        self.multiplicities.values().all(|&c| c == 1)
    }
}

/// `p(0..=n)` by Euler's pentagonal-number recurrence.
pub fn partition_counts(n: usize) -> Vec<BigUint> {
    let mut p = vec![BigUint::from(0u32); n + 1];
    p[0] = BigUint::from(1u32);
    for k in 1..=n {
        let mut plus = BigUint::from(0u32);
        let mut minus = BigUint::from(0u32);
        for j in 1.. {
            let g1 = j * (3 * j - 1) / 2;
            if g1 > k {
                break;
            }
            let sign_plus = j % 2 == 1;
            for g in [g1, g1 + j] {
                if g <= k {
                    if sign_plus {
                        plus += &p[k - g];
                    } else {
                        minus += &p[k - g];
                    }
                }
            }
        }
        p[k] = plus - minus;
    }
    p
}

/// `p_d(0..=n)`, partitions into distinct parts, by the 0/1 knapsack recurrence.
pub fn distinct_partition_counts(n: usize) -> Vec<BigUint> {
    let mut q = vec![BigUint::from(0u32); n + 1];
    q[0] = BigUint::from(1u32);
    for part in 1..=n {
        for k in (part..=n).rev() {
            let add = q[k - part].clone();
            q[k] += add;
        }
    }
    q
}

/// Natural logarithm of a positive big integer.
fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::MAX).ln();
    }
    let shift = bits - 64;
    let top = num_traits::ToPrimitive::to_f64(&(x >> shift)).unwrap_or(f64::MAX);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Default tilt `exp(-pi / sqrt(6 n))` for unrestricted partitions of `n`.
pub fn default_tilt(n: u64) -> f64 {
    (-std::f64::consts::PI / (6.0 * n.max(1) as f64).sqrt()).exp()
}

/// Default tilt `exp(-pi / sqrt(12 n))` for partitions of `n` into distinct parts.
pub fn default_distinct_tilt(n: u64) -> f64 {
    (-std::f64::consts::PI / (12.0 * n.max(1) as f64).sqrt()).exp()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Family {
    Unrestricted,
    Distinct,
}

/// `ln(count(l) y^l)` for `l = 0..=half`, and its maximum.
fn acceptance_logs(counts: &[BigUint], y: f64, half: usize) -> (Vec<f64>, f64) {
    let ln_y = y.ln();
    let logs: Vec<f64> = (0..=half).map(|l| ln_big(&counts[l]) + l as f64 * ln_y).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (logs, max)
}

fn check_tilt(x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("tilt {x} outside (0, 1)")));
    }
    Ok(())
}

fn sample_family(
    n: u64,
    tilt: Option<f64>,
    family: Family,
    rng: &mut SamplerRng,
    bits: &mut u64,
) -> Result<Vec<u64>> {
    let counts = match family {
        Family::Unrestricted => partition_counts(n as usize / 2),
        Family::Distinct => distinct_partition_counts(n as usize / 2),
    };
    let mut parts = Vec::new();
    // Parts found at depth d carry weight 2^d.
    let mut target = n;
    let mut scale = 1u64;
    let mut first = true;
    while target > 0 {
        let x = match (first, tilt) {
            (true, Some(x)) => x,
            _ => match family {
                Family::Unrestricted => default_tilt(target),
                Family::Distinct => default_distinct_tilt(target),
            },
        };
        check_tilt(x)?;
        first = false;
        let half = (target / 2) as usize;
        let (logs, max) = acceptance_logs(&counts, x * x, half);
        // Unrestricted: every i in 1..=target; distinct: only odd i.
        let step = if family == Family::Distinct { 2 } else { 1 };
        loop {
            let mut a = 0u64;
            let mut low = Vec::new();
            let mut xi = x;
            let mut i = 1u64;
            while i <= target {
                let p = xi / (1.0 + xi);
                *bits += 1;
                if rng.random::<f64>() < p {
                    a += i;
                    low.push(i);
                }
                if step == 2 {
                    xi *= x * x;
                } else {
                    xi *= x;
                }
                i += step;
            }
            if a > target || (target - a) % 2 == 1 {
                continue;
            }
            let rest = ((target - a) / 2) as usize;
            let s = (logs[rest] - max).exp();
            debug_assert!((0.0..=1.0 + 1e-12).contains(&s));
            *bits += 1;
            if rng.random::<f64>() < s {
                for part in low {
                    match family {
                        // Z_i = e_i + 2 Z'_i: deeper bits repeat the part.
                        Family::Unrestricted => parts.extend(std::iter::repeat_n(part, scale as usize)),
                        // X_{2i} = X'_i: deeper bits double the part size.
                        Family::Distinct => parts.push(part * scale),
                    }
                }
                target = rest as u64;
                scale *= 2;
                break;
            }
        }
    }
    Ok(parts)
}

/// Uniform partition of `n`. `tilt` sets the first-stage parameter `x`;
/// deeper stages use [`default_tilt`] of their own target.
pub fn sample_partition(n: u64, tilt: Option<f64>, rng: &mut SamplerRng) -> Result<(Partition, u64)> {
    let mut bits = 0;
    let parts = sample_family(n, tilt, Family::Unrestricted, rng, &mut bits)?;
    let p = Partition::from_parts(n, parts);
    debug_assert!(p.is_valid());
    Ok((p, bits))
}

/// Uniform partition of `n` into distinct parts: odd parts are sampled as a
/// Bernoulli stage, even parts `2s` come from a distinct partition of the
/// remaining half.
pub fn sample_distinct_partition(n: u64, tilt: Option<f64>, rng: &mut SamplerRng) -> Result<(Partition, u64)> {
    let mut bits = 0;
    let parts = sample_family(n, tilt, Family::Distinct, rng, &mut bits)?;
    let p = Partition::from_parts(n, parts);
    debug_assert!(p.is_valid() && p.has_distinct_parts());
    Ok((p, bits))
}
