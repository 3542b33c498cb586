//! JSON and CSV forms of tables, Latin squares and partitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latin::LatinSquare;
use crate::partition::Partition;
use crate::table::Mask;

/// `{"rows": m, "cols": n, "entries": [[..]], "mask": [[..]]}`; mask cells
/// are 1 where the entry is forced to zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRecord {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<u64>>,
    pub mask: Vec<Vec<u8>>,
}

impl TableRecord {
    pub fn new(entries: Vec<Vec<u64>>, mask: &Mask) -> Result<Self> {
        let rows = entries.len();
        let cols = entries.first().map_or(0, Vec::len);
        if entries.iter().any(|r| r.len() != cols) || mask.shape() != (rows, cols) {
            return Err(Error::Domain("entries and mask shapes disagree".into()));
        }
        let mask = mask
            .to_rows()
            .into_iter()
            .map(|r| r.into_iter().map(u8::from).collect())
            .collect();
        Ok(TableRecord { rows, cols, entries, mask })
    }

    pub fn zero_mask(&self) -> Result<Mask> {
        Mask::from_rows(
            &self
                .mask
                .iter()
                .map(|r| r.iter().map(|&b| b != 0).collect())
                .collect::<Vec<_>>(),
        )
    }

    fn check(&self) -> Result<()> {
        if !(self.entries.len() == self.rows && self.entries.iter().all(|r| r.len() == self.cols))
            || !(self.mask.len() == self.rows && self.mask.iter().all(|r| r.len() == self.cols))
        {
            return Err(Error::Serialization("table dimensions do not match rows/cols".into()));
        }
        if self.mask.iter().flatten().any(|&b| b > 1) {
            return Err(Error::Serialization("mask values must be 0 or 1".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: TableRecord = serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))?;
        t.check()?;
        Ok(t)
    }
}

fn grid_to_csv<T: ToString>(grid: &[Vec<T>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in grid {
        w.write_record(row.iter().map(ToString::to_string))
            .map_err(|e| Error::Serialization(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

fn grid_from_csv<T: std::str::FromStr>(s: &str) -> Result<Vec<Vec<T>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(s.as_bytes());
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Serialization(e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<T>().map_err(|_| Error::Serialization(format!("bad cell {f:?}"))))
            .collect::<Result<Vec<T>>>()?;
        out.push(row);
    }
    Ok(out)
}

/// Table entries as CSV, one line per row.
pub fn table_to_csv(entries: &[Vec<u64>]) -> Result<String> {
    grid_to_csv(entries)
}

pub fn table_from_csv(s: &str) -> Result<Vec<Vec<u64>>> {
    grid_from_csv(s)
}

/// `{"n": n, "values": [[..]]}` with 1-based values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatinRecord {
    pub n: usize,
    pub values: Vec<Vec<usize>>,
}

impl From<&LatinSquare> for LatinRecord {
    fn from(sq: &LatinSquare) -> Self {
        LatinRecord {
            n: sq.order(),
            values: sq.values().to_vec(),
        }
    }
}

impl LatinRecord {
    pub fn to_square(&self) -> Result<LatinSquare> {
        if self.values.len() != self.n {
            return Err(Error::Serialization("values do not have n rows".into()));
        }
        LatinSquare::new(self.values.clone())
    }
}

pub fn latin_to_csv(sq: &LatinSquare) -> Result<String> {
    grid_to_csv(sq.values())
}

pub fn latin_from_csv(s: &str) -> Result<LatinSquare> {
    LatinSquare::new(grid_from_csv(s)?)
}

/// Descending part list.
pub fn partition_to_json(p: &Partition) -> Result<String> {
    serde_json::to_string(&p.parts()).map_err(|e| Error::Serialization(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trips() {
        let mask = Mask::from_cells(2, 3, &[(0, 2)]).unwrap();
        let rec = TableRecord::new(vec![vec![1, 2, 0], vec![u64::MAX, 0, 7]], &mask).unwrap();
        let json = rec.to_json().unwrap();
        assert_eq!(
            json,
            r#"{"rows":2,"cols":3,"entries":[[1,2,0],[18446744073709551615,0,7]],"mask":[[0,0,1],[0,0,0]]}"#
        );
        let back = TableRecord::from_json(&json).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.to_json().unwrap(), json);
        assert_eq!(back.zero_mask().unwrap(), mask);
        let csv = table_to_csv(&rec.entries).unwrap();
        assert_eq!(table_from_csv(&csv).unwrap(), rec.entries);
        assert!(TableRecord::from_json(r#"{"rows":1,"cols":2,"entries":[[1]],"mask":[[0,0]]}"#).is_err());
    }

    #[test]
    fn latin_round_trips() {
        let sq = LatinSquare::new(vec![vec![1, 2], vec![2, 1]]).unwrap();
        let rec = LatinRecord::from(&sq);
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(json, r#"{"n":2,"values":[[1,2],[2,1]]}"#);
        let back: LatinRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_square().unwrap(), sq);
        assert_eq!(latin_from_csv(&latin_to_csv(&sq).unwrap()).unwrap(), sq);
    }
}
