//! Bit-by-bit sampling of nonnegative integer contingency tables.
//!
//! A table is built one binary level at a time. At level `b` every open cell
//! holds an unknown remaining value `v` (its entry is the accumulated lower
//! bits plus `2^b v`); the low bit of `v` is sampled cell by cell in
//! column-major order, with constraint propagation after each bit. When all
//! low bits are known the residual margins are even and are halved.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::count::{count_integer_tables, CountQuery, OracleLimits};
use crate::error::{Error, Result};
use crate::pmf::{
    column_parameters, conditioned_cell_pmf, convolve_truncated, mixed_column_sum_pmf, CellClass, DiscretePmf,
    TableKind,
};
use crate::sampling::{bit_levels, choose_bit, rng_from_seed, SamplerDiagnostics, SamplerRng, DEFAULT_RESTART_BUDGET};
use crate::table::{fill_in_place, Assignment, MarginSpec, Mask, MaskedTable};

/// How each low bit is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BitStrategy {
    /// Exact conditional law from completion counts. Uniform output.
    ExactCount,
    /// Independent-geometric proposal with the row/column rejection weight.
    Approximate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtConfig {
    pub strategy: BitStrategy,
    pub limits: OracleLimits,
    pub restart_budget: u32,
    /// Keep the per-level bit matrices in the diagnostics.
    pub keep_levels: bool,
}

impl Default for CtConfig {
    fn default() -> Self {
        CtConfig {
            strategy: BitStrategy::Approximate,
            limits: OracleLimits::default(),
            restart_budget: DEFAULT_RESTART_BUDGET,
            keep_levels: false,
        }
    }
}

/// Number of bit levels that can be needed when no margin exceeds `max_margin`.
pub fn max_levels(max_margin: u64) -> usize {
    (64 - max_margin.leading_zeros()) as usize
}

/// Column tilts `q_l = c_l / (open_l + c_l)` from the residual state, so that
/// the open cells of each column have expected sum equal to its residual.
pub fn level_tilts(t: &MaskedTable) -> Vec<f64> {
    let (m, n) = t.shape();
    let forced: Vec<u64> = (0..n).map(|j| (m - t.col_open_count(j)) as u64).collect();
    match column_parameters(t.col_residuals(), &forced, m as u64, TableKind::Integer) {
        Ok(p) => p.params,
        // A column with positive residual and no open cells; its tilt is
        // never consulted because the state is already contradictory.
        Err(_) => (0..n)
            .map(|j| {
                let (c, o) = (t.col_residual(j), t.col_open_count(j));
                if c == 0 || o == 0 {
                    0.0
                } else {
                    c as f64 / (o as u64 + c) as f64
                }
            })
            .collect(),
    }
}

fn class_of(t: &MaskedTable, i: usize, j: usize) -> CellClass {
    if t.is_even(i, j) {
        CellClass::Even
    } else {
        CellClass::Plain
    }
}

fn column_classes(t: &MaskedTable, j: usize, skip: Option<usize>) -> (u64, u64) {
    let mut even = 0;
    let mut plain = 0;
    for i in t.open_in_col(j) {
        if Some(i) == skip {
            continue;
        }
        match class_of(t, i, j) {
            CellClass::Even => even += 1,
            CellClass::Plain => plain += 1,
        }
    }
    (even, plain)
}

/// Rejection weight of a state at cell `(i, j)`: the probability, under
/// independent cells, that column `j` meets its residual, times the
/// probability that row `i` meets its residual when each of its open cells
/// follows its law conditioned on its own column's residual.
fn state_weight(t: &MaskedTable, i: usize, j: usize, tilts: &[f64]) -> f64 {
    let c = t.col_residual(j);
    let (ne, np) = column_classes(t, j, None);
    let col = match mixed_column_sum_pmf(tilts[j], ne, np, c) {
        Ok(p) => p.mass(c as i64),
        Err(_) => return 0.0,
    };
    if col == 0.0 {
        return 0.0;
    }
    let r = t.row_residual(i);
    let mut acc = DiscretePmf::point(0);
    for l in t.open_in_row(i) {
        let (re, rp) = column_classes(t, l, Some(i));
        match conditioned_cell_pmf(class_of(t, i, l), tilts[l], re, rp, t.col_residual(l)) {
            Ok(p) => acc = convolve_truncated(&acc, &p, r as i64),
            Err(_) => return 0.0,
        }
    }
    col * acc.mass(r as i64)
}

/// The approximate rejection weight `F(i, j, k)`: the state with the low bit
/// of `(i, j)` set to `k`, scored by [`state_weight`]. Zero when `k` does not
/// fit the residuals.
pub fn approx_rejection_f(i: usize, j: usize, k: u64, t: &MaskedTable, tilts: &[f64]) -> Result<f64> {
    let (m, n) = t.shape();
    if i >= m || j >= n || !t.is_open(i, j) || t.is_even(i, j) {
        return Err(Error::Domain(format!("low bit of cell ({i}, {j}) is not undecided")));
    }
    if tilts.len() != n {
        return Err(Error::Domain("one tilt per column required".into()));
    }
    let mut next = t.clone();
    match next.commit_low_bit(i, j, k) {
        Ok(()) => Ok(state_weight(&next, i, j, tilts)),
        Err(Error::Contradiction(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// The count query whose solutions are the completions of `t`.
pub fn completion_query(t: &MaskedTable) -> CountQuery {
    CountQuery::new(t.row_residuals().to_vec(), t.col_residuals().to_vec())
        .with_zeros(t.finalized_mask())
        .with_evens(t.even_mask())
}

/// Probability that the low bit of open cell `(i, j)` is 0 under the uniform
/// law on completions of `t`: `A(0) / (A(0) + A(1))` with `A(k)` the number
/// of completions whose cell has low bit `k`.
pub fn exact_bit_distribution(i: usize, j: usize, t: &MaskedTable, limits: &OracleLimits) -> Result<f64> {
    let mut a = [BigUint::zero(), BigUint::zero()];
    for k in 0..=1u64 {
        let mut next = t.clone();
        match next.commit_low_bit(i, j, k) {
            Ok(()) => a[k as usize] = count_integer_tables(&completion_query(&next), limits)?,
            Err(Error::Contradiction(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let total = &a[0] + &a[1];
    if total.is_zero() {
        return Err(Error::DeadState(format!("cell ({i}, {j}) has no completion")));
    }
    Ok(big_ratio(&a[0], &total))
}

fn big_ratio(num: &BigUint, den: &BigUint) -> f64 {
    // Scale both to at most 64 significant bits before converting.
    let shift = den.bits().saturating_sub(64);
    let n = (num >> shift).to_f64().unwrap_or(f64::MAX);
    let d = (den >> shift).to_f64().unwrap_or(f64::MAX);
    n / d
}

fn big_weight(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::MAX)
}

/// Probability of a cell's remaining value under the level proposal.
fn forced_probability(class: CellClass, q: f64, v: u64) -> f64 {
    match class {
        CellClass::Plain => (1.0 - q) * q.powi(v as i32),
        CellClass::Even if v % 2 == 1 => 0.0,
        CellClass::Even => (1.0 - q * q) * q.powi(v as i32),
    }
}

/// Reusable sampler for one instance.
#[derive(Debug)]
pub struct CtSampler {
    margins: MarginSpec,
    zeros: Mask,
    config: CtConfig,
    start: MaskedTable,
    start_forced: Vec<Assignment>,
    cache: HashMap<CountQuery, BigUint>,
}

impl CtSampler {
    pub fn new(margins: MarginSpec, zeros: Mask, config: CtConfig) -> Result<Self> {
        let mut start = MaskedTable::new(&margins, &zeros)?;
        let start_forced = match fill_in_place(&[], &mut start, TableKind::Integer) {
            Ok(f) => f,
            Err(Error::Contradiction(msg)) => return Err(Error::Infeasible(msg)),
            Err(e) => return Err(e),
        };
        if config.strategy == BitStrategy::ExactCount {
            let count = count_integer_tables(&completion_query(&start), &config.limits)?;
            if count.is_zero() {
                return Err(Error::Infeasible("no table has these margins and zeros".into()));
            }
        }
        Ok(CtSampler {
            margins,
            zeros,
            config,
            start,
            start_forced,
            cache: HashMap::new(),
        })
    }

    pub fn margins(&self) -> &MarginSpec {
        &self.margins
    }

    pub fn zeros(&self) -> &Mask {
        &self.zeros
    }

    /// One table, restarting from scratch on dead states.
    pub fn sample(&mut self, rng: &mut SamplerRng) -> Result<(Vec<Vec<u64>>, SamplerDiagnostics)> {
        let mut diag = SamplerDiagnostics::default();
        loop {
            match self.attempt(rng, &mut diag) {
                Ok(entries) => {
                    if self.config.keep_levels {
                        let levels = max_levels(self.margins.max_margin()).max(1);
                        diag.level_bits = Some(bit_levels(&entries, levels));
                    }
                    return Ok((entries, diag));
                }
                Err(e) if e.is_dead_state() => {
                    diag.dead_states += 1;
                    if diag.restarts >= u64::from(self.config.restart_budget) {
                        return Err(Error::DeadState(format!(
                            "restart budget of {} exhausted ({} dead states, {} bits drawn): {e}",
                            self.config.restart_budget, diag.dead_states, diag.bits_consumed
                        )));
                    }
                    diag.restarts += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn completions(&mut self, t: &MaskedTable) -> Result<BigUint> {
        let q = completion_query(t);
        if let Some(c) = self.cache.get(&q) {
            return Ok(c.clone());
        }
        let c = count_integer_tables(&q, &self.config.limits)?;
        self.cache.insert(q, c.clone());
        Ok(c)
    }

    fn attempt(&mut self, rng: &mut SamplerRng, diag: &mut SamplerDiagnostics) -> Result<Vec<Vec<u64>>> {
        let (m, n) = self.start.shape();
        let mut t = self.start.clone();
        let mut acc = vec![vec![0u64; n]; m];
        for &(i, j, v) in &self.start_forced {
            acc[i][j] = v;
        }
        let b_max = max_levels(self.margins.max_margin());
        let mut level = 0usize;
        while !t.is_complete() {
            if level >= b_max {
                return Err(Error::Domain(format!("residuals remain after {b_max} levels")));
            }
            let scale = 1u64 << level;
            let tilts = level_tilts(&t);
            for j in 0..n {
                for i in 0..m {
                    if !t.is_open(i, j) || t.is_even(i, j) {
                        continue;
                    }
                    let mut next: [Option<(MaskedTable, Vec<Assignment>)>; 2] = [None, None];
                    let mut weights = [0.0f64; 2];
                    for k in 0..=1u64 {
                        let mut cand = t.clone();
                        if cand.commit_low_bit(i, j, k).is_err() {
                            continue;
                        }
                        let classes = cand.even_mask();
                        let forced = match fill_in_place(&[], &mut cand, TableKind::Integer) {
                            Ok(f) => f,
                            Err(e) if e.is_dead_state() => continue,
                            Err(e) => return Err(e),
                        };
                        weights[k as usize] = match self.config.strategy {
                            BitStrategy::ExactCount => big_weight(&self.completions(&cand)?),
                            BitStrategy::Approximate => {
                                let q = tilts[j];
                                let seed = if k == 1 { q / (1.0 + q) } else { 1.0 / (1.0 + q) };
                                let forced_p: f64 = forced
                                    .iter()
                                    .map(|&(a, b, v)| {
                                        let class = if classes.get(a, b) { CellClass::Even } else { CellClass::Plain };
                                        forced_probability(class, tilts[b], v)
                                    })
                                    .product();
                                seed * forced_p * state_weight(&cand, i, j, &tilts)
                            }
                        };
                        next[k as usize] = Some((cand, forced));
                    }
                    let k = choose_bit(weights[0], weights[1], rng, diag)?;
                    let (cand, forced) = next[k as usize].take().expect("chosen bit has a state");
                    acc[i][j] += scale * k;
                    for (a, b, v) in forced {
                        acc[a][b] += scale * v;
                    }
                    t = cand;
                }
            }
            t.halve()?;
            level += 1;
        }
        debug_assert!(crate::table::validate_table(
            &acc,
            self.margins.rows(),
            self.margins.cols(),
            &self.zeros,
            TableKind::Integer
        ));
        Ok(acc)
    }
}

/// Samples one table with margins `margins`, zero on `zeros`, from `seed`.
pub fn sample_contingency_table(
    margins: &MarginSpec,
    zeros: &Mask,
    config: &CtConfig,
    seed: u64,
) -> Result<(Vec<Vec<u64>>, SamplerDiagnostics)> {
    let mut sampler = CtSampler::new(margins.clone(), zeros.clone(), config.clone())?;
    sampler.sample(&mut rng_from_seed(seed))
}
