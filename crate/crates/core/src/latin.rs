//! Latin squares assembled from a cascade of binary tables.
//!
//! With internal values `v = L - 1` in `0..n`, level `i` decides bit `i` of
//! every cell. Cells whose lower `i` bits equal `b` form residue class `b`;
//! each class at each level is an independent binary table whose line sums
//! count the values of that class with bit `i` set.

use serde::{Deserialize, Serialize};

use crate::binary::{BinaryConfig, BinarySampler, BinaryStrategy};
use crate::count::OracleLimits;
use crate::error::{Error, Result};
use crate::sampling::{rng_from_seed, SamplerDiagnostics, SamplerRng};
use crate::table::{MarginSpec, Mask};

/// An order-`n` Latin square with values `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatinSquare {
    n: usize,
    values: Vec<Vec<usize>>,
}

impl LatinSquare {
    pub fn new(values: Vec<Vec<usize>>) -> Result<Self> {
        let sq = LatinSquare::from_values_unchecked(values);
        if !sq.is_valid() {
            return Err(Error::Domain("not a Latin square".into()));
        }
        Ok(sq)
    }

    pub(crate) fn from_values_unchecked(values: Vec<Vec<usize>>) -> Self {
        LatinSquare { n: values.len(), values }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[Vec<usize>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Vec<usize>> {
        self.values
    }

    /// Every row and column is a permutation of `1..=n`.
    pub fn is_valid(&self) -> bool {
        let n = self.n;
        if self.values.iter().any(|r| r.len() != n) {
            return false;
        }
        fn line_ok(n: usize, cells: impl Iterator<Item = usize>) -> bool {
            let mut seen = vec![false; n + 1];
            for v in cells {
                if !(1..=n).contains(&v) || std::mem::replace(&mut seen[v], true) {
                    return false;
                }
            }
            true
        }
        (0..n).all(|i| line_ok(n, self.values[i].iter().copied()))
            && (0..n).all(|j| line_ok(n, self.values.iter().map(|r| r[j])))
    }
}

/// Number of bit levels for order `n`: `ceil(log2 n)`.
pub fn level_count(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// `#{v in 0..n : v mod 2^i = b and bit i of v is 1}`, the line sum of the
/// class-`b` table at level `i`.
pub fn level_class_targets(n: usize, i: usize, b: usize) -> u64 {
    let step = 1usize << i;
    if b >= step {
        return 0;
    }
    (0..n).filter(|&v| v % step == b && (v >> i) & 1 == 1).count() as u64
}

/// Number of cells per line in class `b` at level `i`.
fn class_size(n: usize, i: usize, b: usize) -> usize {
    (0..n).filter(|&v| v % (1 << i) == b).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestartScope {
    /// Resample the failing class table up to the budget, then restart the
    /// whole square once, then abort.
    RetryLevel,
    /// Restart the whole square up to the budget, then abort.
    RestartAll,
    /// Abort on the first dead state.
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestartPolicy {
    pub scope: RestartScope,
    pub budget: u32,
}

impl RestartPolicy {
    pub fn new(scope: RestartScope, budget: u32) -> Result<Self> {
        if budget == 0 {
            return Err(Error::Domain("restart budget must be at least 1".into()));
        }
        Ok(RestartPolicy { scope, budget })
    }
}

impl Default for RestartPolicy {
    fn default() -> Self {
        RestartPolicy {
            scope: RestartScope::RetryLevel,
            budget: crate::sampling::DEFAULT_RESTART_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatinConfig {
    pub strategy: BinaryStrategy,
    pub policy: RestartPolicy,
    pub limits: OracleLimits,
    pub flow_prune: bool,
}

impl Default for LatinConfig {
    fn default() -> Self {
        LatinConfig {
            strategy: BinaryStrategy::HWeight,
            policy: RestartPolicy::default(),
            limits: OracleLimits::default(),
            flow_prune: false,
        }
    }
}

/// Where a cascade gave up.
#[derive(Debug)]
struct ClassFailure {
    level: usize,
    class: usize,
    error: Error,
}

fn cascade(
    n: usize,
    config: &LatinConfig,
    class_budget: u32,
    rng: &mut SamplerRng,
    diag: &mut SamplerDiagnostics,
) -> std::result::Result<Vec<Vec<usize>>, ClassFailure> {
    let mut t = vec![vec![0usize; n]; n];
    let bin = BinaryConfig {
        strategy: config.strategy,
        limits: config.limits,
        restart_budget: class_budget,
        static_params: false,
        flow_prune: config.flow_prune,
    };
    for level in 0..level_count(n) {
        let step = 1usize << level;
        for class in 0..step {
            if class_size(n, level, class) == 0 {
                continue;
            }
            let fail = |error| ClassFailure { level, class, error };
            let target = level_class_targets(n, level, class);
            let mut zeros = Mask::empty(n, n);
            for i in 0..n {
                for j in 0..n {
                    zeros.set(i, j, t[i][j] != class);
                }
            }
            let margins = MarginSpec::new(vec![target; n], vec![target; n]).map_err(fail)?;
            let mut sampler = match BinarySampler::new(margins, zeros, bin.clone()) {
                Ok(s) => s,
                // An infeasible class table is a dead state of the cascade.
                Err(Error::Infeasible(msg)) => {
                    diag.dead_states += 1;
                    return Err(fail(Error::DeadState(msg)));
                }
                Err(e) => return Err(fail(e)),
            };
            let bits = sampler.sample_with_budget(rng, diag, class_budget).map_err(fail)?;
            for i in 0..n {
                for j in 0..n {
                    if bits[i][j] == 1 {
                        t[i][j] += step;
                    }
                }
            }
        }
    }
    Ok(t)
}

/// Samples a Latin square of order `n` using `rng`.
pub fn sample_latin_with(
    n: usize,
    config: &LatinConfig,
    rng: &mut SamplerRng,
) -> Result<(LatinSquare, SamplerDiagnostics)> {
    if n == 0 {
        return Err(Error::Domain("order must be at least 1".into()));
    }
    let mut diag = SamplerDiagnostics::default();
    let policy = config.policy;
    let (class_budget, square_restarts) = match policy.scope {
        RestartScope::RetryLevel => (policy.budget, 1),
        RestartScope::RestartAll => (0, policy.budget),
        RestartScope::Abort => (0, 0),
    };
    let mut square_attempts = 0u32;
    loop {
        match cascade(n, config, class_budget, rng, &mut diag) {
            Ok(t) => {
                let values = t.into_iter().map(|r| r.into_iter().map(|v| v + 1).collect()).collect();
                let square = LatinSquare::from_values_unchecked(values);
                if !square.is_valid() {
                    return Err(Error::Domain("cascade produced an invalid square".into()));
                }
                return Ok((square, diag));
            }
            Err(f) if f.error.is_dead_state() => {
                if square_attempts >= square_restarts {
                    return Err(Error::DeadState(format!(
                        "aborted at level {} class {} after {} restarts: {}",
                        f.level, f.class, diag.restarts, f.error
                    )));
                }
                square_attempts += 1;
                diag.restarts += 1;
            }
            Err(f) => return Err(f.error),
        }
    }
}

/// Samples a Latin square of order `n` from `seed`.
pub fn sample_latin_square(n: usize, config: &LatinConfig, seed: u64) -> Result<(LatinSquare, SamplerDiagnostics)> {
    sample_latin_with(n, config, &mut rng_from_seed(seed))
}

/// Bit matrices of `L - 1`, least significant first; at least one level.
pub fn parity_levels(square: &LatinSquare) -> Vec<Vec<Vec<u8>>> {
    let levels = level_count(square.order()).max(1);
    (0..levels)
        .map(|b| {
            square
                .values()
                .iter()
                .map(|row| row.iter().map(|&v| (((v - 1) >> b) & 1) as u8).collect())
                .collect()
        })
        .collect()
}

/// Inverse of [`parity_levels`]: `1 + sum_i 2^i level_i`.
pub fn reassemble(levels: &[Vec<Vec<u8>>]) -> Vec<Vec<usize>> {
    let n = levels.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| 1 + levels.iter().enumerate().map(|(b, l)| (l[i][j] as usize) << b).sum::<usize>())
                .collect()
        })
        .collect()
}
