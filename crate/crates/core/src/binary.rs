//! Sequential sampling of binary contingency tables with forced zeros.
//!
//! Cells are decided in column-major order. Each candidate value is pushed
//! through constraint propagation and scored by the probability of the cells
//! it forces under independent Bernoulli cells, times a rejection weight.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::count::{count_binary_tables, OracleLimits};
use crate::error::{Error, Result};
use crate::pmf::{poisson_binomial_pmf, TableKind};
use crate::sampling::{choose_bit, rng_from_seed, SamplerDiagnostics, SamplerRng, DEFAULT_RESTART_BUDGET};
use crate::table::{fill_in_place, Assignment, MarginSpec, Mask, MaskedTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinaryStrategy {
    /// Exact conditional law from completion counts. Uniform output.
    ExactCount,
    /// Poisson-binomial weight over all open cells of the row and column.
    HWeight,
    /// Poisson-binomial weight over the strictly later open cells only, with
    /// mask-unaware parameters `c_l / m`.
    BWeight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryConfig {
    pub strategy: BinaryStrategy,
    pub limits: OracleLimits,
    pub restart_budget: u32,
    /// H weight: use `c_l / (m - h_l)` from the original instance instead of
    /// residual parameters.
    pub static_params: bool,
    /// Give zero weight to choices after which no binary completion exists.
    pub flow_prune: bool,
}

impl Default for BinaryConfig {
    fn default() -> Self {
        BinaryConfig {
            strategy: BinaryStrategy::HWeight,
            limits: OracleLimits::default(),
            restart_budget: DEFAULT_RESTART_BUDGET,
            static_params: false,
            flow_prune: false,
        }
    }
}

/// Residual Bernoulli parameters `c_res_l / open_l`, clamped to `[0, 1]`.
pub fn residual_params(t: &MaskedTable) -> Vec<f64> {
    let (_, n) = t.shape();
    (0..n)
        .map(|l| match t.col_open_count(l) {
            0 => 0.0,
            o => (t.col_residual(l) as f64 / o as f64).clamp(0.0, 1.0),
        })
        .collect()
}

/// Mask-unaware parameters `c_res_l / m`, clamped to `[0, 1]`.
pub fn row_count_params(t: &MaskedTable) -> Vec<f64> {
    let (m, n) = t.shape();
    (0..n)
        .map(|l| (t.col_residual(l) as f64 / m as f64).clamp(0.0, 1.0))
        .collect()
}

/// Static parameters `c_l / (m - h_l)` of the original instance.
pub fn static_params(margins: &MarginSpec, zeros: &Mask) -> Vec<f64> {
    let (m, n) = margins.shape();
    (0..n)
        .map(|l| {
            let open = m - (0..m).filter(|&i| zeros.get(i, l)).count();
            if open == 0 {
                0.0
            } else {
                (margins.cols()[l] as f64 / open as f64).clamp(0.0, 1.0)
            }
        })
        .collect()
}

fn pb_at(p: &[f64], subset: &[usize], target: i64) -> f64 {
    if target < 0 || target as usize > subset.len() {
        return 0.0;
    }
    poisson_binomial_pmf(p, target, subset).unwrap_or(0.0)
}

fn weight_over(
    i: usize,
    j: usize,
    k: u64,
    t: &MaskedTable,
    p: &[f64],
    later_only: bool,
) -> f64 {
    let row_cells: Vec<usize> = t
        .open_in_row(i)
        .filter(|&l| l != j && (!later_only || l > j))
        .collect();
    let col_cells: Vec<usize> = t
        .open_in_col(j)
        .filter(|&l| l != i && (!later_only || l > i))
        .collect();
    let row = pb_at(p, &row_cells, t.row_residual(i) as i64 - k as i64);
    if row == 0.0 {
        return 0.0;
    }
    // Homogeneous column vector: every cell of column j carries p[j].
    let nu = vec![p[j]; t.shape().0];
    row * pb_at(&nu, &col_cells, t.col_residual(j) as i64 - k as i64)
}

/// `H(i, j, k)`: probability that the other open cells of row `i` supply
/// `r_res_i - k` and the other open cells of column `j` supply `c_res_j - k`,
/// with per-column Bernoulli parameters `p`.
pub fn rejection_h(i: usize, j: usize, k: u64, t: &MaskedTable, p: &[f64]) -> f64 {
    weight_over(i, j, k, t, p, false)
}

/// `B(i, j, k)`: as [`rejection_h`] over the open cells after `(i, j)` in
/// scan order (`l > j` in the row, `l > i` in the column).
pub fn rejection_b(i: usize, j: usize, k: u64, t: &MaskedTable, p: &[f64]) -> f64 {
    weight_over(i, j, k, t, p, true)
}

/// Reusable sampler for one binary instance.
#[derive(Debug)]
pub struct BinarySampler {
    margins: MarginSpec,
    zeros: Mask,
    config: BinaryConfig,
    start: MaskedTable,
    start_forced: Vec<Assignment>,
    fixed_params: Vec<f64>,
    cache: HashMap<(Vec<u64>, Vec<u64>, Mask), BigUint>,
}

impl BinarySampler {
    pub fn new(margins: MarginSpec, zeros: Mask, config: BinaryConfig) -> Result<Self> {
        let mut start = MaskedTable::new(&margins, &zeros)?;
        let start_forced = match fill_in_place(&[], &mut start, TableKind::Binary) {
            Ok(f) => f,
            Err(Error::Contradiction(msg)) => return Err(Error::Infeasible(msg)),
            Err(e) => return Err(e),
        };
        if !start.binary_feasible() {
            return Err(Error::Infeasible("no binary table has these margins and zeros".into()));
        }
        if config.strategy == BinaryStrategy::ExactCount {
            count_binary_tables(margins.rows(), margins.cols(), &zeros, &config.limits)?;
        }
        let fixed_params = static_params(&margins, &zeros);
        Ok(BinarySampler {
            margins,
            zeros,
            config,
            start,
            start_forced,
            fixed_params,
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
        let entries = self.sample_with_budget(rng, &mut diag, self.config.restart_budget)?;
        Ok((entries, diag))
    }

    /// As [`BinarySampler::sample`] with an explicit restart budget,
    /// accumulating into `diag`.
    pub fn sample_with_budget(
        &mut self,
        rng: &mut SamplerRng,
        diag: &mut SamplerDiagnostics,
        budget: u32,
    ) -> Result<Vec<Vec<u64>>> {
        let mut used = 0u32;
        loop {
            match self.sample_once(rng, diag) {
                Ok(t) => return Ok(t),
                Err(e) if e.is_dead_state() => {
                    diag.dead_states += 1;
                    if used >= budget {
                        return Err(Error::DeadState(format!(
                            "restart budget of {budget} exhausted: {e}"
                        )));
                    }
                    used += 1;
                    diag.restarts += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// A single pass with no restart. Dead states surface as errors.
    pub fn sample_once(&mut self, rng: &mut SamplerRng, diag: &mut SamplerDiagnostics) -> Result<Vec<Vec<u64>>> {
        let (m, n) = self.start.shape();
        let mut t = self.start.clone();
        let mut acc = vec![vec![0u64; n]; m];
        for &(i, j, v) in &self.start_forced {
            acc[i][j] = v;
        }
        for j in 0..n {
            for i in 0..m {
                if !t.is_open(i, j) {
                    continue;
                }
                let params = match (self.config.strategy, self.config.static_params) {
                    (BinaryStrategy::ExactCount, _) => Vec::new(),
                    (BinaryStrategy::HWeight, true) => self.fixed_params.clone(),
                    (BinaryStrategy::HWeight, false) => residual_params(&t),
                    (BinaryStrategy::BWeight, _) => row_count_params(&t),
                };
                let mut next: [Option<(MaskedTable, Vec<Assignment>)>; 2] = [None, None];
                let mut weights = [0.0f64; 2];
                for k in 0..=1u64 {
                    let mut cand = t.clone();
                    let forced = match fill_in_place(&[(i, j, k)], &mut cand, TableKind::Binary) {
                        Ok(f) => f,
                        Err(e) if e.is_dead_state() => continue,
                        Err(e) => return Err(e),
                    };
                    if self.config.flow_prune && !cand.binary_feasible() {
                        continue;
                    }
                    weights[k as usize] = match self.config.strategy {
                        BinaryStrategy::ExactCount => {
                            let c = self.completions(&cand)?;
                            c.to_f64().unwrap_or(f64::MAX)
                        }
                        BinaryStrategy::HWeight | BinaryStrategy::BWeight => {
                            let forced_p: f64 = forced
                                .iter()
                                .map(|&(_, b, v)| if v == 1 { params[b] } else { 1.0 - params[b] })
                                .product();
                            let w = if self.config.strategy == BinaryStrategy::HWeight {
                                rejection_h(i, j, 0, &cand, &params)
                            } else {
                                rejection_b(i, j, 0, &cand, &params)
                            };
                            forced_p * w
                        }
                    };
                    next[k as usize] = Some((cand, forced));
                }
                let k = choose_bit(weights[0], weights[1], rng, diag)?;
                let (cand, forced) = next[k as usize].take().expect("chosen bit has a state");
                for (a, b, v) in forced {
                    acc[a][b] = v;
                }
                t = cand;
            }
        }
        Ok(acc)
    }

    fn completions(&mut self, t: &MaskedTable) -> Result<BigUint> {
        let key = (t.row_residuals().to_vec(), t.col_residuals().to_vec(), t.finalized_mask());
        if let Some(c) = self.cache.get(&key) {
            return Ok(c.clone());
        }
        let c = count_binary_tables(&key.0, &key.1, &key.2, &self.config.limits)?;
        self.cache.insert(key, c.clone());
        Ok(c)
    }
}

/// Samples one binary table with margins `margins`, zero on `zeros`.
pub fn sample_binary_table(
    margins: &MarginSpec,
    zeros: &Mask,
    config: &BinaryConfig,
    seed: u64,
) -> Result<(Vec<Vec<u64>>, SamplerDiagnostics)> {
    let mut sampler = BinarySampler::new(margins.clone(), zeros.clone(), config.clone())?;
    sampler.sample(&mut rng_from_seed(seed))
}
