//! Systematic encoding by GF(2) elimination.
//!
//! The parity part of H (the columns after the first K) is inverted once per
//! code; encoding then costs one sparse syndrome of the information part and
//! one dense bit-packed matrix-vector product.

use crate::code::ParityCheckMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Encoder {
    k: usize,
    n_vn: usize,
    words: usize,
    /// Row j holds the GF(2) coefficients giving parity bit j from the
    /// information syndrome.
    inverse: Vec<u64>,
    /// Information-part column indices per check row.
    info_rows: Vec<Vec<usize>>,
}

impl Encoder {
    pub fn new(h: &ParityCheckMatrix, k: usize) -> Result<Encoder> {
        let m = h.n_rows();
        if h.n_cols() != k + m {
            return Err(Error::Structure(format!(
                "parity part is {m} rows by {} columns, not square",
                h.n_cols().saturating_sub(k)
            )));
        }
        let words = m.div_ceil(64);
        // augmented [A | I] with A the parity part of H
        let mut a = vec![0u64; m * words];
        let mut inv = vec![0u64; m * words];
        for (r, row) in h.rows().enumerate() {
            for &l in row.iter().filter(|&&l| l >= k) {
                let c = l - k;
                a[r * words + c / 64] ^= 1 << (c % 64);
            }
            inv[r * words + r / 64] |= 1 << (r % 64);
        }

        for col in 0..m {
            let (w, bit) = (col / 64, 1u64 << (col % 64));
            let pivot = (col..m).find(|&r| a[r * words + w] & bit != 0).ok_or_else(|| {
                Error::Structure(format!(
                    "parity part of H is singular (no pivot for column {})",
                    k + col
                ))
            })?;
            if pivot != col {
                swap_rows(&mut a, words, pivot, col);
                swap_rows(&mut inv, words, pivot, col);
            }
            for r in 0..m {
                if r != col && a[r * words + w] & bit != 0 {
                    xor_row(&mut a, words, col, r);
                    xor_row(&mut inv, words, col, r);
                }
            }
        }

        let info_rows = h
            .rows()
            .map(|row| row.iter().copied().filter(|&l| l < k).collect())
            .collect();
        Ok(Encoder {
            k,
            n_vn: k + m,
            words,
            inverse: inv,
            info_rows,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Full-length systematic codeword (punctured positions included).
    pub fn encode(&self, u: &[u8]) -> Result<Vec<u8>> {
        if u.len() != self.k {
            return Err(Error::dim("information word", self.k, u.len()));
        }
        let mut syn = vec![0u64; self.words];
        for (r, cols) in self.info_rows.iter().enumerate() {
            let bit = cols.iter().fold(0u8, |acc, &l| acc ^ (u[l] & 1));
            if bit != 0 {
                syn[r / 64] |= 1 << (r % 64);
            }
        }
        let mut c = Vec::with_capacity(self.n_vn);
        c.extend(u.iter().map(|b| b & 1));
        for row in self.inverse.chunks_exact(self.words) {
            let ones: u32 = row.iter().zip(&syn).map(|(a, b)| (a & b).count_ones()).sum();
            c.push((ones & 1) as u8);
        }
        Ok(c)
    }
}

fn swap_rows(buf: &mut [u64], words: usize, a: usize, b: usize) {
    for w in 0..words {
        buf.swap(a * words + w, b * words + w);
    }
}

fn xor_row(buf: &mut [u64], words: usize, src: usize, dst: usize) {
    for w in 0..words {
        let v = buf[src * words + w];
        buf[dst * words + w] ^= v;
    }
}
