//! Table state, constraint propagation and feasibility checks.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::pmf::TableKind;

/// Prescribed row and column sums. Construction rejects unbalanced margins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginSpec {
    rows: Vec<u64>,
    cols: Vec<u64>,
}

impl MarginSpec {
    pub fn new(rows: Vec<u64>, cols: Vec<u64>) -> Result<Self> {
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::InvalidMargins("tables need at least one row and one column".into()));
        }
        let (sr, sc) = (rows.iter().sum::<u64>(), cols.iter().sum::<u64>());
        if sr != sc {
            return Err(Error::InvalidMargins(format!(
                "row sums total {sr} but column sums total {sc}"
            )));
        }
        Ok(MarginSpec { rows, cols })
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn cols(&self) -> &[u64] {
        &self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    pub fn max_margin(&self) -> u64 {
        self.rows.iter().chain(&self.cols).copied().max().unwrap_or(0)
    }

    pub fn transpose(&self) -> MarginSpec {
        MarginSpec {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
        }
    }
}

/// A dense boolean matrix, used for forced-zero and forced-even patterns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Mask {
            rows,
            cols,
            bits: vec![false; rows * cols],
        }
    }

    /// Mask with the given zero-based cells set.
    pub fn from_cells(rows: usize, cols: usize, cells: &[(usize, usize)]) -> Result<Self> {
        let mut mask = Mask::empty(rows, cols);
        for &(i, j) in cells {
            if i >= rows || j >= cols {
                return Err(Error::Domain(format!("cell ({i}, {j}) outside {rows}x{cols}")));
            }
            mask.set(i, j, true);
        }
        Ok(mask)
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Domain("ragged mask".into()));
        }
        Ok(Mask {
            rows: rows.len(),
            cols,
            bits: rows.concat(),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.bits[i * self.cols + j] = value;
    }

    pub fn transpose(&self) -> Mask {
        let mut out = Mask::empty(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_rows(&self) -> Vec<Vec<bool>> {
        self.bits.chunks(self.cols.max(1)).map(<[bool]>::to_vec).collect()
    }
}

/// One forced or seeded assignment `(row, col, value)`.
pub type Assignment = (usize, usize, u64);

/// Mutable sampling state: finalized entries, the finalized mask `W`,
/// a mask of open cells whose remaining value must be even, and the residual
/// margins that the open cells still have to supply.
///
/// Residuals equal the original margins minus finalized entries minus any low
/// bits already committed through [`MaskedTable::commit_low_bit`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedTable {
    rows: usize,
    cols: usize,
    entries: Vec<u64>,
    finalized: Vec<bool>,
    even: Vec<bool>,
    row_res: Vec<u64>,
    col_res: Vec<u64>,
    row_open: Vec<usize>,
    col_open: Vec<usize>,
}

impl MaskedTable {
    /// Fresh state with every cell of `zeros` finalized to 0.
    pub fn new(margins: &MarginSpec, zeros: &Mask) -> Result<Self> {
        let (rows, cols) = margins.shape();
        if zeros.shape() != (rows, cols) {
            return Err(Error::Domain(format!(
                "mask is {:?} but margins are {rows}x{cols}",
                zeros.shape()
            )));
        }
        let mut t = MaskedTable {
            rows,
            cols,
            entries: vec![0; rows * cols],
            finalized: vec![false; rows * cols],
            even: vec![false; rows * cols],
            row_res: margins.rows().to_vec(),
            col_res: margins.cols().to_vec(),
            row_open: vec![cols; rows],
            col_open: vec![rows; cols],
        };
        for i in 0..rows {
            for j in 0..cols {
                if zeros.get(i, j) {
                    t.close(i, j);
                }
            }
        }
        Ok(t)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.cols + j
    }

    pub fn is_open(&self, i: usize, j: usize) -> bool {
        !self.finalized[self.idx(i, j)]
    }

    pub fn is_even(&self, i: usize, j: usize) -> bool {
        self.even[self.idx(i, j)]
    }

    pub fn entry(&self, i: usize, j: usize) -> u64 {
        self.entries[self.idx(i, j)]
    }

    pub fn row_residual(&self, i: usize) -> u64 {
        self.row_res[i]
    }

    pub fn col_residual(&self, j: usize) -> u64 {
        self.col_res[j]
    }

    pub fn row_residuals(&self) -> &[u64] {
        &self.row_res
    }

    pub fn col_residuals(&self) -> &[u64] {
        &self.col_res
    }

    pub fn row_open_count(&self, i: usize) -> usize {
        self.row_open[i]
    }

    pub fn col_open_count(&self, j: usize) -> usize {
        self.col_open[j]
    }

    pub fn open_in_row(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.cols).filter(move |&j| self.is_open(i, j))
    }

    pub fn open_in_col(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.rows).filter(move |&i| self.is_open(i, j))
    }

    pub fn is_complete(&self) -> bool {
        self.row_open.iter().all(|&o| o == 0)
    }

    /// The finalized mask `W`.
    pub fn finalized_mask(&self) -> Mask {
        Mask {
            rows: self.rows,
            cols: self.cols,
            bits: self.finalized.clone(),
        }
    }

    /// Open cells constrained to even remaining values.
    pub fn even_mask(&self) -> Mask {
        Mask {
            rows: self.rows,
            cols: self.cols,
            bits: self.even.clone(),
        }
    }

    /// Mask of open cells.
    pub fn open_mask(&self) -> Mask {
        Mask {
            rows: self.rows,
            cols: self.cols,
            bits: self.finalized.iter().map(|f| !f).collect(),
        }
    }

    pub fn entries(&self) -> Vec<Vec<u64>> {
        self.entries.chunks(self.cols).map(<[u64]>::to_vec).collect()
    }

    fn close(&mut self, i: usize, j: usize) {
        let k = self.idx(i, j);
        self.finalized[k] = true;
        self.even[k] = false;
        self.row_open[i] -= 1;
        self.col_open[j] -= 1;
    }

    /// Fixes the remaining value of an open cell.
    pub fn finalize(&mut self, i: usize, j: usize, value: u64, mode: TableKind) -> Result<()> {
        if i >= self.rows || j >= self.cols {
            return Err(Error::Domain(format!("cell ({i}, {j}) outside table")));
        }
        if !self.is_open(i, j) {
            return Err(Error::Domain(format!("cell ({i}, {j}) is already finalized")));
        }
        if mode == TableKind::Binary && value > 1 {
            return Err(Error::Contradiction(format!(
                "binary cell ({i}, {j}) cannot take value {value}"
            )));
        }
        if self.is_even(i, j) && value % 2 == 1 {
            return Err(Error::Contradiction(format!(
                "even cell ({i}, {j}) cannot take value {value}"
            )));
        }
        if value > self.row_res[i] || value > self.col_res[j] {
            return Err(Error::Contradiction(format!(
                "value {value} at ({i}, {j}) exceeds residuals ({}, {})",
                self.row_res[i], self.col_res[j]
            )));
        }
        self.row_res[i] -= value;
        self.col_res[j] -= value;
        let k = self.idx(i, j);
        self.entries[k] = value;
        self.close(i, j);
        Ok(())
    }

    /// Commits the least significant bit of an open cell: the bit is taken out
    /// of both residuals and the cell's remaining value becomes even.
    pub fn commit_low_bit(&mut self, i: usize, j: usize, bit: u64) -> Result<()> {
        if !self.is_open(i, j) || self.is_even(i, j) {
            return Err(Error::Domain(format!(
                "low bit of cell ({i}, {j}) is not undecided"
            )));
        }
        if bit > 1 {
            return Err(Error::Domain(format!("{bit} is not a bit")));
        }
        if bit > self.row_res[i] || bit > self.col_res[j] {
            return Err(Error::Contradiction(format!(
                "bit at ({i}, {j}) exceeds residuals"
            )));
        }
        self.row_res[i] -= bit;
        self.col_res[j] -= bit;
        let k = self.idx(i, j);
        self.even[k] = true;
        Ok(())
    }

    /// Moves to the next bit level: every open cell must have its low bit
    /// committed and every residual must be even; residuals are halved and the
    /// even flags cleared.
    pub fn halve(&mut self) -> Result<()> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.is_open(i, j) && !self.is_even(i, j) {
                    return Err(Error::Domain(format!(
                        "cell ({i}, {j}) still has an undecided low bit"
                    )));
                }
            }
        }
        if let Some(r) = self.row_res.iter().chain(&self.col_res).find(|&&r| r % 2 == 1) {
            return Err(Error::Contradiction(format!("odd residual {r} at end of level")));
        }
        self.row_res.iter_mut().for_each(|r| *r /= 2);
        self.col_res.iter_mut().for_each(|c| *c /= 2);
        self.even.iter_mut().for_each(|e| *e = false);
        Ok(())
    }

    /// Whether a 0/1 filling of the open cells meets the residuals.
    pub fn binary_feasible(&self) -> bool {
        binary_feasible(&self.row_res, &self.col_res, &self.open_mask())
    }
}

/// Outcome of [`deterministic_fill`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FillResult {
    /// Seeds followed by every propagated assignment, in order of application.
    pub forced: Vec<Assignment>,
    pub table: MaskedTable,
}

#[derive(Clone, Copy)]
enum Line {
    Row(usize),
    Col(usize),
}

/// Applies `seeds`, then repeatedly fixes uniquely determined cells until a
/// fixed point:
///
/// - a line with zero residual forces its open cells to 0;
/// - in binary mode, a line whose residual equals its open-cell count forces
///   them all to 1;
/// - in integer mode, a line with a single open cell forces it to the residual.
///
/// Any residual that would go negative, a binary line needing more ones than
/// it has open cells, or a line with positive residual and no open cells
/// yields [`Error::Contradiction`].
pub fn deterministic_fill(seeds: &[Assignment], t: &MaskedTable, mode: TableKind) -> Result<FillResult> {
    let mut table = t.clone();
    let forced = fill_in_place(seeds, &mut table, mode)?;
    Ok(FillResult { forced, table })
}

/// In-place form of [`deterministic_fill`]; returns the applied assignments.
/// On error the table is left in an unspecified partial state.
pub fn fill_in_place(seeds: &[Assignment], t: &mut MaskedTable, mode: TableKind) -> Result<Vec<Assignment>> {
    let mut forced = Vec::with_capacity(seeds.len());
    for &(i, j, v) in seeds {
        t.finalize(i, j, v, mode)?;
        forced.push((i, j, v));
    }

    let mut queue: VecDeque<Line> = (0..t.rows)
        .map(Line::Row)
        .chain((0..t.cols).map(Line::Col))
        .collect();
    let mut queued_rows = vec![true; t.rows];
    let mut queued_cols = vec![true; t.cols];
    let mut cells = Vec::new();

    while let Some(line) = queue.pop_front() {
        let (residual, open) = match line {
            Line::Row(i) => {
                queued_rows[i] = false;
                (t.row_res[i], t.row_open[i])
            }
            Line::Col(j) => {
                queued_cols[j] = false;
                (t.col_res[j], t.col_open[j])
            }
        };
        let describe = || match line {
            Line::Row(i) => format!("row {i}"),
            Line::Col(j) => format!("column {j}"),
        };
        if open == 0 {
            if residual > 0 {
                return Err(Error::Contradiction(format!(
                    "{} needs {residual} more but has no open cells",
                    describe()
                )));
            }
            continue;
        }
        if mode == TableKind::Binary && residual > open as u64 {
            return Err(Error::Contradiction(format!(
                "{} needs {residual} ones from {open} open cells",
                describe()
            )));
        }
        let value = if residual == 0 {
            0
        } else if mode == TableKind::Binary && residual == open as u64 {
            1
        } else if mode == TableKind::Integer && open == 1 {
            residual
        } else {
            continue;
        };

        cells.clear();
        match line {
            Line::Row(i) => cells.extend(t.open_in_row(i).map(|j| (i, j))),
            Line::Col(j) => cells.extend(t.open_in_col(j).map(|i| (i, j))),
        }
        for &(i, j) in &cells {
            t.finalize(i, j, value, mode)?;
            forced.push((i, j, value));
            // The crossing line lost an open cell and possibly some residual.
            match line {
                Line::Row(_) if !queued_cols[j] => {
                    queued_cols[j] = true;
                    queue.push_back(Line::Col(j));
                }
                Line::Col(_) if !queued_rows[i] => {
                    queued_rows[i] = true;
                    queue.push_back(Line::Row(i));
                }
                _ => {}
            }
        }
    }
    Ok(forced)
}

/// True iff `entries` has margins `(row_sums, col_sums)` exactly, is zero on
/// every cell of `zeros`, and (in binary mode) only holds 0 and 1.
pub fn validate_table(
    entries: &[Vec<u64>],
    row_sums: &[u64],
    col_sums: &[u64],
    zeros: &Mask,
    mode: TableKind,
) -> bool {
    let rows = row_sums.len();
    let cols = col_sums.len();
    if entries.len() != rows || entries.iter().any(|r| r.len() != cols) {
        return false;
    }
    if zeros.shape() != (rows, cols) {
        return false;
    }
    for (i, row) in entries.iter().enumerate() {
        if row.iter().sum::<u64>() != row_sums[i] {
            return false;
        }
        for (j, &v) in row.iter().enumerate() {
            if zeros.get(i, j) && v != 0 {
                return false;
            }
            if mode == TableKind::Binary && v > 1 {
                return false;
            }
        }
    }
    (0..cols).all(|j| entries.iter().map(|r| r[j]).sum::<u64>() == col_sums[j])
}

/// Whether some 0/1 table supported on the `open` cells has the given
/// margins, decided by max-flow from rows to columns through open cells.
pub fn binary_feasible(row_res: &[u64], col_res: &[u64], open: &Mask) -> bool {
    let (rows, cols) = (row_res.len(), col_res.len());
    if open.shape() != (rows, cols) {
        return false;
    }
    let total: u64 = row_res.iter().sum();
    if total != col_res.iter().sum::<u64>() {
        return false;
    }
    if total == 0 {
        return true;
    }
    let source = rows + cols;
    let sink = source + 1;
    let mut net = FlowNetwork::new(rows + cols + 2);
    for (i, &r) in row_res.iter().enumerate() {
        net.add_edge(source, i, r);
        for j in 0..cols {
            if open.get(i, j) {
                net.add_edge(i, rows + j, 1);
            }
        }
    }
    for (j, &c) in col_res.iter().enumerate() {
        net.add_edge(rows + j, sink, c);
    }
    net.max_flow(source, sink) == total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn worked_example() -> (MarginSpec, Mask) {
        let margins = MarginSpec::new(vec![10, 56, 13], vec![20, 14, 18, 27]).unwrap();
        let zeros = Mask::from_cells(3, 4, &[(0, 2), (1, 0), (2, 1), (2, 2), (2, 3)]).unwrap();
        (margins, zeros)
    }

    #[test]
    fn unbalanced_margins_rejected() {
        assert!(matches!(
            MarginSpec::new(vec![1, 2], vec![2]),
            Err(Error::InvalidMargins(_))
        ));
    }

    #[test]
    fn fill_reduces_worked_example_to_open_two_by_two() {
        let (margins, zeros) = worked_example();
        let t = MaskedTable::new(&margins, &zeros).unwrap();
        let res = deterministic_fill(&[], &t, TableKind::Integer).unwrap();
        let mut forced = res.forced.clone();
        forced.sort();
        assert_eq!(forced, vec![(0, 0, 7), (1, 2, 18), (2, 0, 13)]);
        let out = &res.table;
        let open: Vec<(usize, usize)> = (0..3)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|&(i, j)| out.is_open(i, j))
            .collect();
        assert_eq!(open, vec![(0, 1), (0, 3), (1, 1), (1, 3)]);
        assert_eq!(out.row_residuals(), &[3, 38, 0]);
        assert_eq!(out.col_residuals(), &[0, 14, 0, 27]);
    }

    #[test]
    fn no_forcing_at_interior_fixed_point() {
        let margins = MarginSpec::new(vec![2, 3], vec![1, 2, 2]).unwrap();
        let t = MaskedTable::new(&margins, &Mask::empty(2, 3)).unwrap();
        let res = deterministic_fill(&[], &t, TableKind::Integer).unwrap();
        assert!(res.forced.is_empty());
        assert_eq!(res.table, t);
    }

    #[test]
    fn saturated_binary_row_forced_to_ones() {
        let margins = MarginSpec::new(vec![2, 0], vec![1, 1]).unwrap();
        let t = MaskedTable::new(&margins, &Mask::empty(2, 2)).unwrap();
        let res = deterministic_fill(&[], &t, TableKind::Binary).unwrap();
        assert_eq!(res.table.entries(), vec![vec![1, 1], vec![0, 0]]);
        assert!(res.table.is_complete());
    }

    #[test]
    fn contradictions_are_reported() {
        let margins = MarginSpec::new(vec![1, 1], vec![1, 1]).unwrap();
        let t = MaskedTable::new(&margins, &Mask::empty(2, 2)).unwrap();
        assert!(matches!(
            deterministic_fill(&[(0, 0, 2)], &t, TableKind::Integer),
            Err(Error::Contradiction(_))
        ));
        assert!(matches!(
            deterministic_fill(&[(0, 0, 2)], &t, TableKind::Binary),
            Err(Error::Contradiction(_))
        ));
        let margins = MarginSpec::new(vec![3, 0], vec![2, 1]).unwrap();
        let t = MaskedTable::new(&margins, &Mask::empty(2, 2)).unwrap();
        assert!(deterministic_fill(&[], &t, TableKind::Binary).is_err());
    }

    #[test]
    fn even_cell_with_odd_residual_is_a_contradiction() {
        let margins = MarginSpec::new(vec![3], vec![3]).unwrap();
        let mut t = MaskedTable::new(&margins, &Mask::empty(1, 1)).unwrap();
        t.commit_low_bit(0, 0, 0).unwrap();
        assert!(deterministic_fill(&[], &t, TableKind::Integer).is_err());
        let mut t = MaskedTable::new(&margins, &Mask::empty(1, 1)).unwrap();
        t.commit_low_bit(0, 0, 1).unwrap();
        let res = deterministic_fill(&[], &t, TableKind::Integer).unwrap();
        assert_eq!(res.forced, vec![(0, 0, 2)]);
    }

    fn reference_six_by_six() -> Vec<Vec<u64>> {
        vec![
            vec![12, 12, 3, 0, 9, 4],
            vec![2, 7, 0, 11, 5, 5],
            vec![2, 9, 10, 0, 4, 5],
            vec![6, 1, 24, 3, 14, 2],
            vec![18, 2, 12, 32, 16, 20],
            vec![10, 19, 1, 4, 2, 14],
        ]
    }

    #[test]
    fn validates_reference_six_by_six_table() {
        let rows = [40, 30, 30, 50, 100, 50];
        let cols = [50; 6];
        let zeros = Mask::empty(6, 6);
        let mut table = reference_six_by_six();
        assert!(validate_table(&table, &rows, &cols, &zeros, TableKind::Integer));
        assert!(!validate_table(&table, &rows, &cols, &zeros, TableKind::Binary));
        let blank = vec![vec![0; 6]; 6];
        assert!(!validate_table(&blank, &rows, &cols, &zeros, TableKind::Integer));
        table[2][3] += 1;
        assert!(!validate_table(&table, &rows, &cols, &zeros, TableKind::Integer));
    }

    #[test]
    fn binary_feasibility_examples() {
        assert!(binary_feasible(&[0, 0], &[0, 0], &Mask::empty(2, 2)));
        let single = Mask::from_cells(1, 1, &[(0, 0)]).unwrap();
        assert!(binary_feasible(&[1], &[1], &single));
        assert!(!binary_feasible(&[1], &[0], &single));
        let mut all = Mask::empty(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                all.set(i, j, true);
            }
        }
        assert!(binary_feasible(&[2, 2, 2], &[2, 2, 2], &all));
    }

    // Exhaustive search over all 0/1 fillings of the open cells.
    fn brute_binary_feasible(rows: &[u64], cols: &[u64], open: &Mask) -> bool {
        let (m, n) = (rows.len(), cols.len());
        let cells: Vec<(usize, usize)> = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| open.get(i, j))
            .collect();
        (0u32..1 << cells.len()).any(|bits| {
            let mut r = vec![0u64; m];
            let mut c = vec![0u64; n];
            for (b, &(i, j)) in cells.iter().enumerate() {
                if bits >> b & 1 == 1 {
                    r[i] += 1;
                    c[j] += 1;
                }
            }
            r == rows && c == cols
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]
        #[test]
        fn flow_feasibility_matches_enumeration(
            m in 1usize..=4,
            n in 1usize..=4,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut open = Mask::empty(m, n);
            for i in 0..m {
                for j in 0..n {
                    open.set(i, j, rng.random_bool(0.7));
                }
            }
            let rows: Vec<u64> = (0..m).map(|_| rng.random_range(0..=3)).collect();
            let mut cols: Vec<u64> = (0..n).map(|_| rng.random_range(0..=3)).collect();
            // Rebalance the last column so totals agree most of the time.
            let diff = rows.iter().sum::<u64>() as i64 - cols[..n - 1].iter().sum::<u64>() as i64;
            if (0..=3).contains(&diff) {
                cols[n - 1] = diff as u64;
            }
            prop_assert_eq!(
                binary_feasible(&rows, &cols, &open),
                brute_binary_feasible(&rows, &cols, &open)
            );
        }

        #[test]
        fn fill_is_idempotent_and_balanced(
            rows in proptest::collection::vec(0u64..6, 1..5),
            n in 1usize..5,
            zero_bits in proptest::collection::vec(any::<bool>(), 16),
            binary in any::<bool>(),
        ) {
            let total: u64 = rows.iter().sum();
            let mut cols = vec![total / n as u64; n];
            cols[0] += total % n as u64;
            let m = rows.len();
            let mut zeros = Mask::empty(m, n);
            for i in 0..m {
                for j in 0..n {
                    zeros.set(i, j, zero_bits[(i * n + j) % 16] && (i + j) % 3 == 0);
                }
            }
            let margins = MarginSpec::new(rows, cols).unwrap();
            let mode = if binary { TableKind::Binary } else { TableKind::Integer };
            let t = MaskedTable::new(&margins, &zeros).unwrap();
            if let Ok(res) = deterministic_fill(&[], &t, mode) {
                let again = deterministic_fill(&[], &res.table, mode).unwrap();
                prop_assert!(again.forced.is_empty());
                prop_assert_eq!(&again.table, &res.table);
                let sr: u64 = res.table.row_residuals().iter().sum();
                let sc: u64 = res.table.col_residuals().iter().sum();
                prop_assert_eq!(sr, sc);
                // Replaying the forced list reproduces the table.
                let mut replay = t.clone();
                for &(i, j, v) in &res.forced {
                    replay.finalize(i, j, v, mode).unwrap();
                }
                prop_assert_eq!(replay, res.table);
            }
        }

        #[test]
        fn fill_fixed_point_ignores_seed_order(
            seed in any::<u64>(),
            binary in any::<bool>(),
        ) {
            use rand::{seq::SliceRandom, Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (m, n) = (rng.random_range(2..=4), rng.random_range(2..=4));
            let cap = if binary { 1 } else { 3 };
            // Margins of a random table, so a consistent completion exists.
            let table: Vec<Vec<u64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.random_range(0..=cap)).collect())
                .collect();
            let rows: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
            let cols: Vec<u64> = (0..n).map(|j| table.iter().map(|r| r[j]).sum()).collect();
            let margins = MarginSpec::new(rows, cols).unwrap();
            let t = MaskedTable::new(&margins, &Mask::empty(m, n)).unwrap();
            let mut seeds: Vec<Assignment> = Vec::new();
            for i in 0..m {
                for j in 0..n {
                    if rng.random_bool(0.3) {
                        // Occasionally perturb a value to provoke contradictions.
                        let v = if rng.random_bool(0.2) { table[i][j] + 1 } else { table[i][j] };
                        seeds.push((i, j, v.min(cap)));
                    }
                }
            }
            let mode = if binary { TableKind::Binary } else { TableKind::Integer };
            let first = deterministic_fill(&seeds, &t, mode);
            seeds.shuffle(&mut rng);
            let second = deterministic_fill(&seeds, &t, mode);
            match (first, second) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a.table, b.table),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "verdicts differ: {:?} vs {:?}", a.is_ok(), b.is_ok()),
            }
        }
    }
}
