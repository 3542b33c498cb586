//! JSON-lines output schema (version 1).

use pdc_core::latin::LatinSquare;
use pdc_core::pmf::TableKind;
use pdc_core::sampling::SamplerDiagnostics;
use pdc_core::table::{validate_table, Mask};
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub schema: u32,
    pub index: u64,
    pub seed: u64,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Body {
    Contingency(TableBody),
    Binary(TableBody),
    Latin { n: usize, values: Vec<Vec<usize>> },
    Partition { n: u64, parts: Vec<u64> },
    DistinctPartition { n: u64, parts: Vec<u64> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableBody {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<u64>>,
    pub mask: Vec<Vec<u8>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
}

impl TableBody {
    pub fn new(entries: Vec<Vec<u64>>, zeros: &Mask, row_sums: &[u64], col_sums: &[u64]) -> Self {
        let (rows, cols) = zeros.shape();
        let mask = zeros
            .to_rows()
            .into_iter()
            .map(|r| r.into_iter().map(u8::from).collect())
            .collect();
        TableBody {
            rows,
            cols,
            entries,
            mask,
            row_sums: row_sums.to_vec(),
            col_sums: col_sums.to_vec(),
        }
    }

    fn is_valid(&self, kind: TableKind) -> bool {
        let shape_ok = self.row_sums.len() == self.rows
            && self.col_sums.len() == self.cols
            && self.mask.len() == self.rows
            && self.mask.iter().all(|r| r.len() == self.cols);
        if !shape_ok {
            return false;
        }
        let rows: Vec<Vec<bool>> = self.mask.iter().map(|r| r.iter().map(|&b| b != 0).collect()).collect();
        match Mask::from_rows(&rows) {
            Ok(zeros) if zeros.shape() == (self.rows, self.cols) => {
                validate_table(&self.entries, &self.row_sums, &self.col_sums, &zeros, kind)
            }
            _ => false,
        }
    }
}

impl Body {
    /// Re-checks the sample against its own stated constraints.
    pub fn is_valid(&self) -> bool {
        match self {
            Body::Contingency(t) => t.is_valid(TableKind::Integer),
            Body::Binary(t) => t.is_valid(TableKind::Binary),
            Body::Latin { n, values } => values.len() == *n && LatinSquare::new(values.clone()).is_ok(),
            Body::Partition { n, parts } => partition_ok(*n, parts, false),
            Body::DistinctPartition { n, parts } => partition_ok(*n, parts, true),
        }
    }

    /// CSV rendering for tables and Latin squares.
    pub fn grid_csv(&self) -> Option<String> {
        match self {
            Body::Contingency(t) | Body::Binary(t) => pdc_core::io::table_to_csv(&t.entries).ok(),
            Body::Latin { values, .. } => {
                LatinSquare::new(values.clone()).ok().and_then(|s| pdc_core::io::latin_to_csv(&s).ok())
            }
            _ => None,
        }
    }
}

fn partition_ok(n: u64, parts: &[u64], distinct: bool) -> bool {
    parts.iter().all(|&p| p > 0)
        && parts.iter().sum::<u64>() == n
        && parts.windows(2).all(|w| if distinct { w[0] > w[1] } else { w[0] >= w[1] })
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsRecord<'a> {
    pub schema: u32,
    pub index: u64,
    pub seed: u64,
    #[serde(flatten)]
    pub diagnostics: &'a SamplerDiagnostics,
}
