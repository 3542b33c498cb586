//! Exact counting and enumeration for small instances.
//!
//! Counts are exact big integers. Size limits are configuration: see
//! [`OracleLimits::from_env`].

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::latin::LatinSquare;
use crate::table::Mask;

/// Size limits for the exact oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    /// Largest row or column count for integer-table queries.
    pub max_dim: usize,
    /// Largest margin for integer-table queries.
    pub max_margin: u64,
    /// Largest row or column count for binary-table queries.
    pub binary_max_dim: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_dim: 6,
            max_margin: 12,
            binary_max_dim: 8,
        }
    }
}

impl OracleLimits {
    /// Defaults overridden by `PDC_ORACLE_MAX_DIM`, `PDC_ORACLE_MAX_MARGIN`
    /// and `PDC_BINARY_ORACLE_MAX_DIM` when set to valid integers.
    pub fn from_env() -> Self {
        fn read<T: std::str::FromStr>(key: &str) -> Option<T> {
            std::env::var(key).ok()?.trim().parse().ok()
        }
        let d = OracleLimits::default();
        OracleLimits {
            max_dim: read("PDC_ORACLE_MAX_DIM").unwrap_or(d.max_dim),
            max_margin: read("PDC_ORACLE_MAX_MARGIN").unwrap_or(d.max_margin),
            binary_max_dim: read("PDC_BINARY_ORACLE_MAX_DIM").unwrap_or(d.binary_max_dim),
        }
    }

    /// No effective limit; for callers that have already bounded the work.
    pub fn unbounded() -> Self {
        OracleLimits {
            max_dim: usize::MAX,
            max_margin: u64::MAX,
            binary_max_dim: usize::MAX,
        }
    }
}

/// A counting query: margins, forced zeros `zeros` and forced evens `evens`.
/// A cell in both masks is zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CountQuery {
    pub rows: Vec<u64>,
    pub cols: Vec<u64>,
    pub zeros: Mask,
    pub evens: Mask,
}

impl CountQuery {
    pub fn new(rows: Vec<u64>, cols: Vec<u64>) -> Self {
        let (m, n) = (rows.len(), cols.len());
        CountQuery {
            rows,
            cols,
            zeros: Mask::empty(m, n),
            evens: Mask::empty(m, n),
        }
    }

    pub fn with_zeros(mut self, zeros: Mask) -> Self {
        self.zeros = zeros;
        self
    }

    pub fn with_evens(mut self, evens: Mask) -> Self {
        self.evens = evens;
        self
    }

    fn check_shape(&self) -> Result<()> {
        let shape = (self.rows.len(), self.cols.len());
        if self.zeros.shape() != shape || self.evens.shape() != shape {
            return Err(Error::Domain("mask shape does not match margins".into()));
        }
        if shape.1 > 64 {
            return Err(Error::LimitExceeded("more than 64 columns".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Cell {
    Any = 0,
    Zero = 1,
    Even = 2,
}

fn cell_kind(zeros: &Mask, evens: &Mask, i: usize, j: usize) -> Cell {
    if zeros.get(i, j) {
        Cell::Zero
    } else if evens.get(i, j) {
        Cell::Even
    } else {
        Cell::Any
    }
}

/// Column-by-column recursion. Rows with equal residual and equal constraint
/// pattern on the remaining columns are interchangeable, so states are keyed
/// by the sorted list of `(pattern, residual)` pairs.
struct ColumnDp<'a> {
    cols: &'a [u64],
    cells: Vec<Vec<Cell>>,
    max_value: u64,
    memo: HashMap<(usize, Vec<(u128, u64)>), BigUint>,
}

impl ColumnDp<'_> {
    fn signature(&self, i: usize, from: usize) -> u128 {
        self.cells[i][from..]
            .iter()
            .fold(0u128, |acc, &c| (acc << 2) | c as u128)
    }

    fn count(&mut self, j: usize, residuals: Vec<u64>) -> BigUint {
        if j == self.cols.len() {
            return if residuals.iter().all(|&r| r == 0) {
                BigUint::one()
            } else {
                BigUint::zero()
            };
        }
        let mut key: Vec<(u128, u64)> = residuals
            .iter()
            .enumerate()
            .map(|(i, &r)| (self.signature(i, j), r))
            .collect();
        key.sort_unstable();
        let key = (j, key);
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        // Work on the canonical row order so the memo entry is well defined.
        let order: Vec<usize> = {
            let mut idx: Vec<usize> = (0..residuals.len()).collect();
            idx.sort_by_key(|&i| (self.signature(i, j), residuals[i]));
            idx
        };
        let canon_res: Vec<u64> = order.iter().map(|&i| residuals[i]).collect();
        let canon_cells: Vec<Cell> = order.iter().map(|&i| self.cells[i][j]).collect();
        let mut total = BigUint::zero();
        let mut next = canon_res.clone();
        let mut fillings = Vec::new();
        self.column_fillings(&canon_cells, &canon_res, 0, self.cols[j], &mut next, &mut fillings);
        // Rows are restored to original order for the recursive call so that
        // signatures stay attached to their rows.
        for filled in fillings {
            let mut back = vec![0; residuals.len()];
            for (pos, &i) in order.iter().enumerate() {
                back[i] = filled[pos];
            }
            total += self.count(j + 1, back);
        }
        self.memo.insert(key, total.clone());
        total
    }

    fn column_fillings(
        &self,
        cells: &[Cell],
        res: &[u64],
        i: usize,
        remaining: u64,
        next: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
    ) {
        if i == cells.len() {
            if remaining == 0 {
                out.push(next.clone());
            }
            return;
        }
        let capacity: u64 = (i + 1..cells.len())
            .map(|k| match cells[k] {
                Cell::Zero => 0,
                _ => res[k].min(self.max_value),
            })
            .sum();
        let hi = match cells[i] {
            Cell::Zero => 0,
            _ => res[i].min(remaining).min(self.max_value),
        };
        let step = if cells[i] == Cell::Even { 2 } else { 1 };
        let mut v = 0;
        while v <= hi {
            if remaining - v <= capacity {
                next[i] = res[i] - v;
                self.column_fillings(cells, res, i + 1, remaining - v, next, out);
            }
            v += step;
        }
        next[i] = res[i];
    }
}

fn run_dp(rows: &[u64], cols: &[u64], zeros: &Mask, evens: &Mask, max_value: u64) -> BigUint {
    if rows.iter().sum::<u64>() != cols.iter().sum::<u64>() {
        return BigUint::zero();
    }
    let cells = (0..rows.len())
        .map(|i| (0..cols.len()).map(|j| cell_kind(zeros, evens, i, j)).collect())
        .collect();
    let mut dp = ColumnDp {
        cols,
        cells,
        max_value,
        memo: HashMap::new(),
    };
    dp.count(0, rows.to_vec())
}

fn check_integer_limits(q: &CountQuery, limits: &OracleLimits) -> Result<()> {
    let (m, n) = (q.rows.len(), q.cols.len());
    if m > limits.max_dim || n > limits.max_dim {
        return Err(Error::LimitExceeded(format!(
            "{m}x{n} exceeds the {0}x{0} integer oracle limit",
            limits.max_dim
        )));
    }
    if let Some(&big) = q.rows.iter().chain(&q.cols).find(|&&v| v > limits.max_margin) {
        return Err(Error::LimitExceeded(format!(
            "margin {big} exceeds the integer oracle limit {}",
            limits.max_margin
        )));
    }
    Ok(())
}

fn check_binary_limits(rows: &[u64], cols: &[u64], limits: &OracleLimits) -> Result<()> {
    let (m, n) = (rows.len(), cols.len());
    if m > limits.binary_max_dim || n > limits.binary_max_dim {
        return Err(Error::LimitExceeded(format!(
            "{m}x{n} exceeds the {0}x{0} binary oracle limit",
            limits.binary_max_dim
        )));
    }
    Ok(())
}

/// Number of nonnegative integer tables with the query's margins, zero on
/// `zeros` and even on `evens`. Unbalanced margins count as zero tables.
pub fn count_integer_tables(q: &CountQuery, limits: &OracleLimits) -> Result<BigUint> {
    q.check_shape()?;
    check_integer_limits(q, limits)?;
    Ok(run_dp(&q.rows, &q.cols, &q.zeros, &q.evens, u64::MAX))
}

/// Number of 0/1 tables with margins `(rows, cols)` that vanish on `zeros`.
pub fn count_binary_tables(rows: &[u64], cols: &[u64], zeros: &Mask, limits: &OracleLimits) -> Result<BigUint> {
    let shape = (rows.len(), cols.len());
    if zeros.shape() != shape {
        return Err(Error::Domain("mask shape does not match margins".into()));
    }
    if shape.1 > 64 {
        return Err(Error::LimitExceeded("more than 64 columns".into()));
    }
    check_binary_limits(rows, cols, limits)?;
    Ok(run_dp(rows, cols, zeros, &Mask::empty(shape.0, shape.1), 1))
}

/// Streams every table counted by [`count_integer_tables`] to `sink`, by
/// cell-by-cell backtracking in row-major order.
pub fn enumerate_integer_tables<F>(q: &CountQuery, limits: &OracleLimits, sink: F) -> Result<()>
where
    F: FnMut(&[Vec<u64>]),
{
    q.check_shape()?;
    check_integer_limits(q, limits)?;
    backtrack_tables(&q.rows, &q.cols, &q.zeros, &q.evens, u64::MAX, sink);
    Ok(())
}

/// Streams every table counted by [`count_binary_tables`] to `sink`.
pub fn enumerate_binary_tables<F>(rows: &[u64], cols: &[u64], zeros: &Mask, limits: &OracleLimits, sink: F) -> Result<()>
where
    F: FnMut(&[Vec<u64>]),
{
    if zeros.shape() != (rows.len(), cols.len()) {
        return Err(Error::Domain("mask shape does not match margins".into()));
    }
    check_binary_limits(rows, cols, limits)?;
    let evens = Mask::empty(rows.len(), cols.len());
    backtrack_tables(rows, cols, zeros, &evens, 1, sink);
    Ok(())
}

fn backtrack_tables<F>(rows: &[u64], cols: &[u64], zeros: &Mask, evens: &Mask, max_value: u64, mut sink: F)
where
    F: FnMut(&[Vec<u64>]),
{
    struct State<'a, F> {
        m: usize,
        n: usize,
        zeros: &'a Mask,
        evens: &'a Mask,
        max_value: u64,
        row_res: Vec<u64>,
        col_res: Vec<u64>,
        table: Vec<Vec<u64>>,
        sink: F,
    }

    fn go<F: FnMut(&[Vec<u64>])>(s: &mut State<'_, F>, cell: usize) {
        if cell == s.m * s.n {
            if s.col_res.iter().all(|&c| c == 0) {
                (s.sink)(&s.table);
            }
            return;
        }
        let (i, j) = (cell / s.n, cell % s.n);
        let last_in_row = j + 1 == s.n;
        let lo;
        let hi;
        if s.zeros.get(i, j) {
            lo = 0;
            hi = 0;
        } else if last_in_row {
            lo = s.row_res[i];
            hi = s.row_res[i];
        } else {
            lo = 0;
            hi = s.row_res[i].min(s.col_res[j]).min(s.max_value);
        }
        if last_in_row && s.zeros.get(i, j) && s.row_res[i] != 0 {
            return;
        }
        for v in lo..=hi {
            if v > s.col_res[j] || v > s.max_value {
                break;
            }
            if s.evens.get(i, j) && v % 2 == 1 {
                continue;
            }
            s.row_res[i] -= v;
            s.col_res[j] -= v;
            s.table[i][j] = v;
            go(s, cell + 1);
            s.table[i][j] = 0;
            s.row_res[i] += v;
            s.col_res[j] += v;
        }
    }

    if rows.iter().sum::<u64>() != cols.iter().sum::<u64>() {
        return;
    }
    let (m, n) = (rows.len(), cols.len());
    let mut state = State {
        m,
        n,
        zeros,
        evens,
        max_value,
        row_res: rows.to_vec(),
        col_res: cols.to_vec(),
        table: vec![vec![0; n]; m],
        sink: &mut sink,
    };
    go(&mut state, 0);
}

/// Largest order accepted by [`enumerate_latin_squares`].
pub const LATIN_ENUMERATION_MAX: usize = 5;

/// Streams every Latin square of order `n` (values `1..=n`) to `sink`.
pub fn for_each_latin_square<F>(n: usize, mut sink: F) -> Result<()>
where
    F: FnMut(&[Vec<u8>]),
{
    if n > LATIN_ENUMERATION_MAX {
        return Err(Error::LimitExceeded(format!(
            "latin enumeration is limited to order {LATIN_ENUMERATION_MAX}"
        )));
    }
    if n == 0 {
        return Ok(());
    }
    let mut grid = vec![vec![0u8; n]; n];
    let mut row_used = vec![0u32; n];
    let mut col_used = vec![0u32; n];

    #[allow(clippy::too_many_arguments)]
    fn go<F: FnMut(&[Vec<u8>])>(
        n: usize,
        cell: usize,
        grid: &mut Vec<Vec<u8>>,
        row_used: &mut [u32],
        col_used: &mut [u32],
        sink: &mut F,
    ) {
        if cell == n * n {
            sink(grid);
            return;
        }
        let (i, j) = (cell / n, cell % n);
        for v in 0..n {
            let bit = 1u32 << v;
            if row_used[i] & bit != 0 || col_used[j] & bit != 0 {
                continue;
            }
            row_used[i] |= bit;
            col_used[j] |= bit;
            grid[i][j] = v as u8 + 1;
            go(n, cell + 1, grid, row_used, col_used, sink);
            row_used[i] &= !bit;
            col_used[j] &= !bit;
        }
        grid[i][j] = 0;
    }

    go(n, 0, &mut grid, &mut row_used, &mut col_used, &mut sink);
    Ok(())
}

/// Every Latin square of order `n ≤ 5`.
pub fn enumerate_latin_squares(n: usize) -> Result<Vec<LatinSquare>> {
    let mut out = Vec::new();
    for_each_latin_square(n, |g| {
        let values = g.iter().map(|r| r.iter().map(|&v| v as usize).collect()).collect();
        out.push(LatinSquare::from_values_unchecked(values));
    })?;
    Ok(out)
}
