use crate::code::BaseGraph;
use crate::error::{Error, Result};

/// A concrete lifted code instance drawn from a base graph.
///
/// The used base submatrix consists of the first `n_base_rows_used` base rows
/// and the columns in [`CodeConfig::base_columns`]: the first `K/Z`
/// systematic columns followed by the first `n_base_rows_used` parity
/// columns. Systematic base columns beyond `K/Z` are shortened away, which
/// is how 5G serves K < k_b * Z without transmitting filler bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeConfig {
    pub z: usize,
    pub k: usize,
    pub n: usize,
    pub n_base_cols_used: usize,
    pub n_base_rows_used: usize,
    /// Leading variable nodes that are never transmitted.
    pub punctured: usize,
    base_columns: Vec<usize>,
}

impl CodeConfig {
    /// Selects a code with 5G puncturing (first 2Z variable nodes).
    pub fn select(bg: &BaseGraph, k: usize, n: usize, z: usize) -> Result<CodeConfig> {
        CodeConfig::select_punctured(bg, k, n, z, 2)
    }

    /// Like [`CodeConfig::select`] with `punctured_cols` leading base columns
    /// punctured.
    pub fn select_punctured(
        bg: &BaseGraph,
        k: usize,
        n: usize,
        z: usize,
        punctured_cols: usize,
    ) -> Result<CodeConfig> {
        if z == 0 {
            return Err(Error::Config("lifting size Z must be positive".into()));
        }
        if k == 0 || !k.is_multiple_of(z) {
            return Err(Error::Config(format!(
                "K = {k} must be a positive multiple of Z = {z}"
            )));
        }
        if !n.is_multiple_of(z) {
            return Err(Error::Config(format!(
                "N + {punctured_cols}Z must be divisible by Z (N = {n}, Z = {z})"
            )));
        }
        let k_used = k / z;
        if k_used > bg.k_b {
            return Err(Error::Config(format!(
                "K/Z = {k_used} exceeds the {} systematic base columns",
                bg.k_b
            )));
        }
        if punctured_cols > k_used {
            return Err(Error::Config(format!(
                "{punctured_cols} punctured columns exceed K/Z = {k_used}"
            )));
        }
        let n_base_cols_used = n / z + punctured_cols;
        if n_base_cols_used <= k_used {
            return Err(Error::Config(format!(
                "N = {n} leaves no parity columns (K = {k})"
            )));
        }
        let n_base_rows_used = n_base_cols_used - k_used;
        if n_base_rows_used > bg.n_rows {
            return Err(Error::Config(format!(
                "n_base_rows_used = {n_base_rows_used} exceeds base graph rows {}",
                bg.n_rows
            )));
        }
        if bg.k_b + n_base_rows_used > bg.n_cols {
            return Err(Error::Config(format!(
                "parity base columns {}..{} exceed the {} base graph columns",
                bg.k_b,
                bg.k_b + n_base_rows_used,
                bg.n_cols
            )));
        }
        let base_columns = (0..k_used)
            .chain(bg.k_b..bg.k_b + n_base_rows_used)
            .collect();
        Ok(CodeConfig {
            z,
            k,
            n,
            n_base_cols_used,
            n_base_rows_used,
            punctured: punctured_cols * z,
            base_columns,
        })
    }

    /// Base-graph column index of each used column, in codeword order.
    pub fn base_columns(&self) -> &[usize] {
        &self.base_columns
    }

    /// Full codeword length including punctured positions.
    pub fn n_vn(&self) -> usize {
        self.n_base_cols_used * self.z
    }

    pub fn n_cn(&self) -> usize {
        self.n_base_rows_used * self.z
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bg2() -> BaseGraph {
        BaseGraph::bg2(22).unwrap()
    }

    #[test]
    fn rate_half() {
        let cfg = CodeConfig::select(&bg2(), 132, 264, 22).unwrap();
        assert_eq!(cfg.n_base_cols_used, 14);
        assert_eq!(cfg.n_base_rows_used, 8);
        assert_eq!(cfg.punctured, 44);
        assert_eq!(cfg.n_vn(), 308);
        assert_eq!(cfg.n_cn(), 176);
        assert_eq!(cfg.rate(), 0.5);
        assert_eq!(
            cfg.base_columns(),
            &[0, 1, 2, 3, 4, 5, 10, 11, 12, 13, 14, 15, 16, 17]
        );
    }

    #[test]
    fn rate_quarter_and_two_thirds() {
        let cfg = CodeConfig::select(&bg2(), 132, 528, 22).unwrap();
        assert_eq!((cfg.n_base_cols_used, cfg.n_base_rows_used), (26, 20));
        let cfg = CodeConfig::select(&bg2(), 132, 198, 22).unwrap();
        assert_eq!((cfg.n_base_cols_used, cfg.n_base_rows_used), (11, 5));
    }

    #[test]
    fn dimension_errors() {
        let bg = bg2();
        assert!(CodeConfig::select(&bg, 130, 264, 22).is_err());
        assert!(CodeConfig::select(&bg, 132, 265, 22).is_err());
        // 43 rows needed, 42 available
        assert!(CodeConfig::select(&bg, 132, 22 * 47, 22).is_err());
        assert!(CodeConfig::select(&bg, 22 * 11, 22 * 20, 22).is_err());
        assert!(CodeConfig::select(&bg, 132, 88, 22).is_err());
    }

    #[test]
    fn full_systematic_width_is_top_left() {
        let bg = BaseGraph::parse("2,4,2\n0,0,0\n0,1,1\n0,2,0\n1,1,0\n1,2,1\n1,3,0\n").unwrap();
        let cfg = CodeConfig::select_punctured(&bg, 4, 8, 2, 0).unwrap();
        assert_eq!(cfg.base_columns(), &[0, 1, 2, 3]);
        assert_eq!(cfg.punctured, 0);
    }
}
