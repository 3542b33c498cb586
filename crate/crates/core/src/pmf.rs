//! Probability mass computations shared by every sampler.
//!
//! Conventions: `Geo(q)` has `P(k) = (1 - q) q^k`, `NB(m, q)` is the sum of
//! `m` independent `Geo(q)`, and a tilt of exactly `0` denotes the point mass
//! at zero (an empty column carries no mass to distribute).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on individual masses before they are considered invalid.
pub const MASS_TOLERANCE: f64 = 1e-12;
/// Tolerance on the total mass of a complete pmf.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A finite probability vector over the contiguous support
/// `offset, offset + 1, ..., offset + masses.len() - 1`.
///
/// A pmf built by truncating an infinite law sets `truncated`, in which case
/// the masses sum to at most one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePmf {
    pub offset: i64,
    pub masses: Vec<f64>,
    pub truncated: bool,
}

impl DiscretePmf {
    pub fn new(offset: i64, masses: Vec<f64>, truncated: bool) -> Result<Self> {
        let pmf = DiscretePmf {
            offset,
            masses,
            truncated,
        };
        pmf.check()?;
        Ok(pmf)
    }

    /// The point mass at `value`.
    pub fn point(value: i64) -> Self {
        DiscretePmf {
            offset: value,
            masses: vec![1.0],
            truncated: false,
        }
    }

    /// Mass at `k`, zero outside the stored support.
    pub fn mass(&self, k: i64) -> f64 {
        if k < self.offset {
            return 0.0;
        }
        self.masses
            .get((k - self.offset) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Largest support point with storage, if any.
    pub fn max_support(&self) -> Option<i64> {
        if self.masses.is_empty() {
            None
        } else {
            Some(self.offset + self.masses.len() as i64 - 1)
        }
    }

    /// Validates the mass and total-mass invariants.
    pub fn check(&self) -> Result<()> {
        for (idx, &m) in self.masses.iter().enumerate() {
            if !(0.0..=1.0 + MASS_TOLERANCE).contains(&m) {
                return Err(Error::Domain(format!(
                    "mass {m} at support point {} outside [0, 1]",
                    self.offset + idx as i64
                )));
            }
        }
        let total = self.total();
        if total > 1.0 + SUM_TOLERANCE {
            return Err(Error::Domain(format!("total mass {total} exceeds one")));
        }
        if !self.truncated && total < 1.0 - SUM_TOLERANCE {
            return Err(Error::Domain(format!(
                "complete pmf has total mass {total}"
            )));
        }
        Ok(())
    }
}

fn check_tilt(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("tilt {q} outside (0, 1)")))
    }
}

fn check_degenerate_tilt(q: f64) -> Result<()> {
    if (0.0..1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::Domain(format!("tilt {q} outside [0, 1)")))
    }
}

/// `P(Geo(q) = k) = (1 - q) q^k`.
pub fn geometric_pmf(q: f64, k: i64) -> Result<f64> {
    check_tilt(q)?;
    if k < 0 {
        return Err(Error::Domain(format!("negative value {k}")));
    }
    Ok((1.0 - q) * q.powi(k as i32))
}

/// `P(NB(m, q) = k) = C(m + k - 1, k) (1 - q)^m q^k`.
pub fn negative_binomial_pmf(m: u64, q: f64, k: i64) -> Result<f64> {
    check_tilt(q)?;
    if m == 0 {
        return Err(Error::Domain("negative binomial needs m >= 1".into()));
    }
    if k < 0 {
        return Err(Error::Domain(format!("negative value {k}")));
    }
    let masses = negative_binomial_masses(m, q, k as usize);
    Ok(masses[k as usize])
}

/// Masses of `NB(m, q)` on `0..=cap`, via the ratio recurrence
/// `P(k + 1) / P(k) = q (m + k) / (k + 1)`.
///
/// `m = 0` or `q = 0` gives the point mass at zero.
pub(crate) fn negative_binomial_masses(m: u64, q: f64, cap: usize) -> Vec<f64> {
    let mut out = vec![0.0; cap + 1];
    if m == 0 || q == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let mut p = (1.0 - q).powf(m as f64);
    out[0] = p;
    for k in 0..cap {
        p *= q * (m as f64 + k as f64) / (k as f64 + 1.0);
        out[k + 1] = p;
    }
    out
}

/// Probabilities that a sum of independent Bernoulli variables takes each
/// value `0..=p.len()`, evaluated through the discrete Fourier transform over
/// the `(p.len() + 1)`-th roots of unity.
pub fn poisson_binomial_distribution(p: &[f64]) -> Result<Vec<f64>> {
    for &pj in p {
        if !(0.0..=1.0).contains(&pj) {
            return Err(Error::Domain(format!("success probability {pj} outside [0, 1]")));
        }
    }
    let size = p.len() + 1;
    if size == 1 {
        return Ok(vec![1.0]);
    }
    let roots: Vec<Complex64> = (0..size)
        .map(|l| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * l as f64 / size as f64))
        .collect();
    // Characteristic function sampled at each root.
    let transform: Vec<Complex64> = roots
        .iter()
        .map(|&w| {
            p.iter()
                .fold(Complex64::new(1.0, 0.0), |acc, &pj| acc * (1.0 + (w - 1.0) * pj))
        })
        .collect();
    let mut out = Vec::with_capacity(size);
    for k in 0..size {
        let mut acc = Complex64::new(0.0, 0.0);
        for (l, z) in transform.iter().enumerate() {
            // C^{-lk} with the exponent reduced modulo the transform size.
            acc += roots[(size - (l * k) % size) % size] * z;
        }
        out.push((acc.re / size as f64).clamp(0.0, 1.0));
    }
    Ok(out)
}

/// `P(sum_{j in subset} B_j = k)` for independent `B_j ~ Bern(p[j])`.
///
/// An empty subset gives the indicator of `k = 0`.
pub fn poisson_binomial_pmf(p: &[f64], k: i64, subset: &[usize]) -> Result<f64> {
    if k < 0 || k as usize > subset.len() {
        return Err(Error::Domain(format!(
            "target {k} outside 0..={}",
            subset.len()
        )));
    }
    let mut selected = Vec::with_capacity(subset.len());
    for &j in subset {
        let pj = *p
            .get(j)
            .ok_or_else(|| Error::Domain(format!("index {j} outside parameter vector")))?;
        selected.push(pj);
    }
    Ok(poisson_binomial_distribution(&selected)?[k as usize])
}

/// Law of `sum_{t < n_even} 2 Geo(q^2) + sum_{t < n_plain} Geo(q)`,
/// truncated at `cap`.
pub fn mixed_column_sum_pmf(q: f64, n_even: u64, n_plain: u64, cap: u64) -> Result<DiscretePmf> {
    check_degenerate_tilt(q)?;
    let cap = cap as usize;
    let even = negative_binomial_masses(n_even, q * q, cap / 2);
    let plain = negative_binomial_masses(n_plain, q, cap);
    let mut masses = vec![0.0; cap + 1];
    for (half, &pe) in even.iter().enumerate() {
        let e = 2 * half;
        if pe == 0.0 {
            continue;
        }
        for (rest, &pp) in plain.iter().take(cap + 1 - e).enumerate() {
            masses[e + rest] += pe * pp;
        }
    }
    let truncated = q > 0.0 && n_even + n_plain > 0;
    Ok(DiscretePmf {
        offset: 0,
        masses,
        truncated,
    })
}

/// Whether a cell's remaining value is unrestricted or known to be even.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellClass {
    /// Distributed as `Geo(q)`.
    Plain,
    /// Distributed as `2 Geo(q^2)`.
    Even,
}

/// Conditional law of one cell of a column given the column total,
/// on the support `0..=column_total`.
///
/// `rest_even` and `rest_plain` count the other open cells of the column.
pub fn conditioned_cell_pmf(
    class: CellClass,
    q: f64,
    rest_even: u64,
    rest_plain: u64,
    column_total: u64,
) -> Result<DiscretePmf> {
    check_degenerate_tilt(q)?;
    let (all_even, all_plain) = match class {
        CellClass::Plain => (rest_even, rest_plain + 1),
        CellClass::Even => (rest_even + 1, rest_plain),
    };
    let total = mixed_column_sum_pmf(q, all_even, all_plain, column_total)?;
    let denom = total.mass(column_total as i64);
    if denom <= 0.0 {
        return Err(Error::ConditioningImpossible(format!(
            "column of {all_even} even and {all_plain} plain cells cannot sum to {column_total}"
        )));
    }
    let rest = mixed_column_sum_pmf(q, rest_even, rest_plain, column_total)?;
    let base = match class {
        CellClass::Plain => mixed_column_sum_pmf(q, 0, 1, column_total)?,
        CellClass::Even => mixed_column_sum_pmf(q, 1, 0, column_total)?,
    };
    let masses = (0..=column_total as i64)
        .map(|x| (base.mass(x) * rest.mass(column_total as i64 - x) / denom).clamp(0.0, 1.0))
        .collect();
    Ok(DiscretePmf {
        offset: 0,
        masses,
        truncated: false,
    })
}

/// `P(cell = x | column sum = column_total)`; see [`conditioned_cell_pmf`].
pub fn conditioned_cell_marginal(
    class: CellClass,
    q: f64,
    rest_even: u64,
    rest_plain: u64,
    column_total: u64,
    x: i64,
) -> Result<f64> {
    if x < 0 {
        return Err(Error::Domain(format!("negative cell value {x}")));
    }
    if class == CellClass::Even && x % 2 != 0 {
        return Err(Error::Domain(format!("odd value {x} for an even cell")));
    }
    Ok(conditioned_cell_pmf(class, q, rest_even, rest_plain, column_total)?.mass(x))
}

/// Law of the independent sum of `a` and `b`, dropping mass above `cap`.
pub fn convolve_truncated(a: &DiscretePmf, b: &DiscretePmf, cap: i64) -> DiscretePmf {
    let offset = a.offset + b.offset;
    let mut truncated = a.truncated || b.truncated;
    if cap < offset {
        let dropped = a.total() * b.total() > 0.0;
        return DiscretePmf {
            offset,
            masses: Vec::new(),
            truncated: truncated || dropped,
        };
    }
    let full_len = (a.masses.len() + b.masses.len()).saturating_sub(1);
    let len = full_len.min((cap - offset) as usize + 1);
    let mut masses = vec![0.0; len];
    for (x, &pa) in a.masses.iter().enumerate() {
        if pa == 0.0 || x >= len {
            continue;
        }
        for (y, &pb) in b.masses.iter().enumerate() {
            let s = x + y;
            if s >= len {
                if pb > 0.0 {
                    truncated = true;
                }
                break;
            }
            masses[s] += pa * pb;
        }
    }
    if len < full_len {
        truncated = true;
    }
    DiscretePmf {
        offset,
        masses,
        truncated,
    }
}

/// Integer tables use geometric cells, binary tables Bernoulli cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Integer,
    Binary,
}

/// Row-constant parameterisation of the independent cell model.
///
/// For integer tables `params[j]` is the geometric tilt
/// `q_j = c_j / (m - h_j + c_j)`, which makes the expected sum over the
/// `m - h_j` open cells of column `j` equal to `c_j`. For binary tables it is
/// the Bernoulli parameter `p_j = c_j / (m - h_j)`. A column with `c_j = 0`
/// gets parameter `0`, the point mass at zero.
///
/// Only column tilts are modelled; a general two-sided tilt
/// `1 - alpha_i beta_j` would give the same conditional law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnParams {
    pub kind: TableKind,
    pub params: Vec<f64>,
    /// Forced-zero count per column.
    pub forced_zeros: Vec<u64>,
}

impl ColumnParams {
    pub fn get(&self, j: usize) -> f64 {
        self.params[j]
    }
}

pub fn column_parameters(
    col_sums: &[u64],
    forced_zeros: &[u64],
    rows: u64,
    kind: TableKind,
) -> Result<ColumnParams> {
    if col_sums.len() != forced_zeros.len() {
        return Err(Error::Domain(
            "column sums and forced-zero counts differ in length".into(),
        ));
    }
    let mut params = Vec::with_capacity(col_sums.len());
    for (j, (&c, &h)) in col_sums.iter().zip(forced_zeros).enumerate() {
        if h > rows {
            return Err(Error::Domain(format!(
                "column {j} has {h} forced zeros but only {rows} rows"
            )));
        }
        let open = rows - h;
        if c == 0 {
            params.push(0.0);
            continue;
        }
        if open == 0 {
            return Err(Error::Infeasible(format!(
                "column {j} has sum {c} and no open cells"
            )));
        }
        match kind {
            TableKind::Integer => params.push(c as f64 / (open + c) as f64),
            TableKind::Binary => {
                if c > open {
                    return Err(Error::Infeasible(format!(
                        "binary column {j} has sum {c} but {open} open cells"
                    )));
                }
                params.push(c as f64 / open as f64);
            }
        }
    }
    Ok(ColumnParams {
        kind,
        params,
        forced_zeros: forced_zeros.to_vec(),
    })
}
