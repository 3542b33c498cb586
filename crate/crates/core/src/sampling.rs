//! Seeding, random draws and run diagnostics shared by the samplers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator used by every sampler. Identical seeds give identical streams
/// for a fixed build.
pub type SamplerRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SamplerRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for sample `index` of a batch with master seed `master`:
/// the SplitMix64 finalizer applied to `master + (index + 1) * 0x9E3779B97F4A7C15`
/// (wrapping arithmetic). Stable across releases.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Default number of restarts a sampler may spend on dead states.
pub const DEFAULT_RESTART_BUDGET: u32 = 1000;

/// `PDC_RESTART_BUDGET` if set to a positive integer, else the default.
pub fn restart_budget_from_env() -> u32 {
    std::env::var("PDC_RESTART_BUDGET")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&b| b >= 1)
        .unwrap_or(DEFAULT_RESTART_BUDGET)
}

/// Counters collected while sampling one object.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerDiagnostics {
    /// Uniform variates drawn to decide bits. Forced bits draw nothing.
    pub bits_consumed: u64,
    pub restarts: u64,
    pub dead_states: u64,
    /// Per-level 0/1 matrices of the result, least significant level first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_bits: Option<Vec<Vec<Vec<u8>>>>,
}

impl SamplerDiagnostics {
    pub fn absorb(&mut self, other: &SamplerDiagnostics) {
        self.bits_consumed += other.bits_consumed;
        self.restarts += other.restarts;
        self.dead_states += other.dead_states;
    }
}

/// Chooses between two candidates with unnormalised weights `w0`, `w1`:
/// returns 0 with probability `w0 / (w0 + w1)`. A zero weight makes the
/// choice without drawing.
pub(crate) fn choose_bit(w0: f64, w1: f64, rng: &mut SamplerRng, diag: &mut SamplerDiagnostics) -> Result<u64> {
    if !(w0 >= 0.0 && w1 >= 0.0 && w0.is_finite() && w1.is_finite()) {
        return Err(Error::Domain(format!("invalid bit weights ({w0}, {w1})")));
    }
    match (w0 > 0.0, w1 > 0.0) {
        (false, false) => Err(Error::DeadState("both bit values have zero weight".into())),
        (true, false) => Ok(0),
        (false, true) => Ok(1),
        (true, true) => {
            diag.bits_consumed += 1;
            let u: f64 = rng.random();
            Ok(if u < w0 / (w0 + w1) { 0 } else { 1 })
        }
    }
}

/// Per-level bit matrices of a nonnegative table, `levels` deep.
pub fn bit_levels(entries: &[Vec<u64>], levels: usize) -> Vec<Vec<Vec<u8>>> {
    (0..levels)
        .map(|b| {
            entries
                .iter()
                .map(|row| row.iter().map(|&v| ((v >> b) & 1) as u8).collect())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        assert_eq!(derive_seed(0, 0), derive_seed(0, 0));
        let seeds: std::collections::HashSet<u64> = (0..10_000).map(|t| derive_seed(42, t)).collect();
        assert_eq!(seeds.len(), 10_000);
        assert_ne!(derive_seed(1, 0), derive_seed(0, 0));
    }

    #[test]
    fn zero_weight_bits_draw_nothing() {
        let mut rng = rng_from_seed(1);
        let mut d = SamplerDiagnostics::default();
        assert_eq!(choose_bit(0.0, 2.0, &mut rng, &mut d).unwrap(), 1);
        assert_eq!(choose_bit(3.0, 0.0, &mut rng, &mut d).unwrap(), 0);
        assert_eq!(d.bits_consumed, 0);
        assert!(choose_bit(0.0, 0.0, &mut rng, &mut d).unwrap_err().is_dead_state());
        choose_bit(1.0, 1.0, &mut rng, &mut d).unwrap();
        assert_eq!(d.bits_consumed, 1);
    }

    #[test]
    fn bit_levels_reassemble() {
        let t = vec![vec![5, 0], vec![2, 7]];
        let levels = bit_levels(&t, 3);
        for i in 0..2 {
            for j in 0..2 {
                let v: u64 = (0..3).map(|b| (levels[b][i][j] as u64) << b).sum();
                assert_eq!(v, t[i][j]);
            }
        }
    }
}
