use crate::code::{BaseGraph, CodeConfig};
use crate::error::{Error, Result};

/// One Z x Z block of the used base submatrix, in used-column coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockEntry {
    /// Base row (also the block row of the lifted matrix).
    pub row: usize,
    /// Position of the base column within the used columns.
    pub col: usize,
    /// Cyclic shift, already reduced modulo Z.
    pub shift: usize,
}

/// Sparse binary parity-check matrix stored as sorted per-row column lists.
#[derive(Debug, Clone)]
pub struct ParityCheckMatrix {
    z: usize,
    n_cols: usize,
    rows: Vec<Vec<usize>>,
    /// Used blocks sorted by (row, col); the index is the base-edge id.
    blocks: Vec<BlockEntry>,
}

/// Expands every used base entry (r, c, s) into ones at
/// (r*Z + i, c*Z + (i + s) mod Z).
pub fn lift(bg: &BaseGraph, cfg: &CodeConfig) -> Result<ParityCheckMatrix> {
    let z = cfg.z;
    let mut col_pos = vec![None; bg.n_cols];
    for (pos, &c) in cfg.base_columns().iter().enumerate() {
        if c >= bg.n_cols {
            return Err(Error::Config(format!(
                "configured base column {c} outside base graph"
            )));
        }
        col_pos[c] = Some(pos);
    }
    if cfg.n_base_rows_used > bg.n_rows {
        return Err(Error::Config(
            "configuration uses more rows than the base graph has".into(),
        ));
    }

    let mut blocks: Vec<BlockEntry> = bg
        .entries
        .iter()
        .filter(|e| e.row < cfg.n_base_rows_used)
        .filter_map(|e| {
            col_pos[e.col].map(|col| BlockEntry {
                row: e.row,
                col,
                shift: e.shift % z,
            })
        })
        .collect();
    blocks.sort_by_key(|b| (b.row, b.col));

    let mut rows = vec![Vec::new(); cfg.n_cn()];
    for b in &blocks {
        for i in 0..z {
            rows[b.row * z + i].push(b.col * z + (i + b.shift) % z);
        }
    }
    for r in &mut rows {
        r.sort_unstable();
    }
    Ok(ParityCheckMatrix {
        z,
        n_cols: cfg.n_vn(),
        rows,
        blocks,
    })
}

impl ParityCheckMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn z(&self) -> usize {
        self.z
    }

    /// Column indices of the ones in row `m`, ascending.
    pub fn row(&self, m: usize) -> &[usize] {
        &self.rows[m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[usize]> {
        self.rows.iter().map(Vec::as_slice)
    }

    pub fn blocks(&self) -> &[BlockEntry] {
        &self.blocks
    }

    pub fn n_ones(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, m: usize, l: usize) -> bool {
        self.rows[m].binary_search(&l).is_ok()
    }

    /// True iff H * c^T = 0 over GF(2).
    pub fn syndrome(&self, c: &[u8]) -> Result<bool> {
        if c.len() != self.n_cols {
            return Err(Error::dim("syndrome input", self.n_cols, c.len()));
        }
        Ok(self
            .rows
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &l| acc ^ (c[l] & 1)) == 0))
    }
}
