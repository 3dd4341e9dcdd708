//! Protograph (base graph) description and its text format.
//!
//! The format is line oriented UTF-8: the first non-comment line holds
//! `nrows,ncols,kb`, every following line one `row,col,shift` triple.
//! Lines starting with `#` and blank lines are ignored.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// One nonzero base-graph entry: a cyclically shifted identity block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BaseEntry {
    pub row: usize,
    pub col: usize,
    pub shift: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseGraph {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Number of systematic base columns.
    pub k_b: usize,
    /// Entries in file order.
    pub entries: Vec<BaseEntry>,
}

const BG2_SETS: [&str; 8] = [
    include_str!("../../data/bg2/set0.csv"),
    include_str!("../../data/bg2/set1.csv"),
    include_str!("../../data/bg2/set2.csv"),
    include_str!("../../data/bg2/set3.csv"),
    include_str!("../../data/bg2/set4.csv"),
    include_str!("../../data/bg2/set5.csv"),
    include_str!("../../data/bg2/set6.csv"),
    include_str!("../../data/bg2/set7.csv"),
];

/// Odd factor `a` of each 5G lifting set; set `i` holds Z = a * 2^j.
const LIFTING_SET_BASE: [usize; 8] = [2, 3, 5, 7, 9, 11, 13, 15];

/// Index of the 5G lifting set containing `z`, if `z` is a standard lifting size.
pub fn lifting_set_index(z: usize) -> Option<usize> {
    if !(2..=384).contains(&z) {
        return None;
    }
    let mut odd = z;
    while odd.is_multiple_of(2) {
        odd /= 2;
    }
    let a = if odd == 1 { 2 } else { odd };
    LIFTING_SET_BASE.iter().position(|&x| x == a)
}

impl BaseGraph {
    pub fn parse(text: &str) -> Result<BaseGraph> {
        let mut header: Option<(usize, usize, usize)> = None;
        let mut entries = Vec::new();
        let mut seen = HashSet::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields = parse_triple(line, line_no)?;
            let Some((n_rows, n_cols, _)) = header else {
                let (n_rows, n_cols, k_b) = fields;
                if n_rows == 0 || n_cols == 0 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "base graph dimensions must be positive".into(),
                    });
                }
                if k_b > n_cols {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("kb = {k_b} exceeds ncols = {n_cols}"),
                    });
                }
                header = Some(fields);
                continue;
            };
            let (row, col, shift) = fields;
            if row >= n_rows || col >= n_cols {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("entry ({row},{col}) outside {n_rows}x{n_cols} base graph"),
                });
            }
            if !seen.insert((row, col)) {
                return Err(Error::Structure(format!(
                    "duplicate base entry ({row},{col}) at line {line_no}"
                )));
            }
            entries.push(BaseEntry { row, col, shift });
        }

        let Some((n_rows, n_cols, k_b)) = header else {
            return Err(Error::Parse {
                line: 0,
                msg: "missing header line \"nrows,ncols,kb\"".into(),
            });
        };
        if entries.is_empty() {
            return Err(Error::Structure("base graph has no entries".into()));
        }
        Ok(BaseGraph {
            n_rows,
            n_cols,
            k_b,
            entries,
        })
    }

    /// 5G NR base graph 2 with the shift set matching lifting size `z`.
    pub fn bg2(z: usize) -> Result<BaseGraph> {
        let set = lifting_set_index(z)
            .ok_or_else(|| Error::Config(format!("Z = {z} is not a 5G lifting size")))?;
        BaseGraph::parse(BG2_SETS[set])
    }

    /// Number of entries in base row `row`.
    pub fn row_degree(&self, row: usize) -> usize {
        self.entries.iter().filter(|e| e.row == row).count()
    }

    pub fn col_degree(&self, col: usize) -> usize {
        self.entries.iter().filter(|e| e.col == col).count()
    }
}

impl fmt::Display for BaseGraph {
    /// Writes the graph back out in the file format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{},{},{}", self.n_rows, self.n_cols, self.k_b)?;
        for e in &self.entries {
            writeln!(f, "{},{},{}", e.row, e.col, e.shift)?;
        }
        Ok(())
    }
}

fn parse_triple(line: &str, line_no: usize) -> Result<(usize, usize, usize)> {
    let mut it = line.split(',').map(str::trim);
    let mut next = |what: &str| -> Result<usize> {
        let field = it.next().ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("missing {what} field"),
        })?;
        field.parse::<usize>().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("invalid {what} field {field:?}"),
        })
    };
    let triple = (next("first")?, next("second")?, next("third")?);
    if it.next().is_some() {
        return Err(Error::Parse {
            line: line_no,
            msg: "expected exactly three comma-separated fields".into(),
        });
    }
    Ok(triple)
}
