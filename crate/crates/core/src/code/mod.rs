//! Quasi-cyclic LDPC code construction: base graphs, rate selection,
//! lifting, systematic encoding and syndrome checks.

mod base_graph;
mod config;
mod encoder;
mod matrix;

use serde::{Deserialize, Serialize};

pub use base_graph::{lifting_set_index, BaseEntry, BaseGraph};
pub use config::CodeConfig;
pub use encoder::Encoder;
pub use matrix::{lift, BlockEntry, ParityCheckMatrix};

use crate::error::{Error, Result};
use crate::graph::TannerGraph;

/// Names a code in configuration and parameter files.
///
/// `base_graph` is `"bg2"` for the shipped 5G table; any other name refers to
/// a base graph supplied separately (e.g. from a file given on the command
/// line).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub base_graph: String,
    pub k: usize,
    pub n: usize,
    pub z: usize,
}

impl CodeSpec {
    pub fn bg2(k: usize, n: usize, z: usize) -> CodeSpec {
        CodeSpec {
            base_graph: "bg2".into(),
            k,
            n,
            z,
        }
    }

    /// The (264,132) code with Z = 22.
    pub fn rate_half() -> CodeSpec {
        CodeSpec::bg2(132, 264, 22)
    }
}

impl std::fmt::Display for CodeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/k{}/n{}/z{}", self.base_graph, self.k, self.n, self.z)
    }
}

/// Everything derived from one code configuration. Immutable once built.
#[derive(Debug, Clone)]
pub struct Code {
    pub spec: CodeSpec,
    pub base: BaseGraph,
    pub cfg: CodeConfig,
    pub h: ParityCheckMatrix,
    pub graph: TannerGraph,
    pub encoder: Encoder,
}

impl Code {
    /// Builds the code named by `spec`. `custom` supplies the base graph when
    /// `spec.base_graph` is not `"bg2"`.
    pub fn build(spec: &CodeSpec, custom: Option<&BaseGraph>) -> Result<Code> {
        let base = match (spec.base_graph.as_str(), custom) {
            (_, Some(bg)) => bg.clone(),
            ("bg2", None) => BaseGraph::bg2(spec.z)?,
            (other, None) => {
                return Err(Error::Config(format!(
                    "code {other:?} needs a base-graph file"
                )))
            }
        };
        let cfg = CodeConfig::select(&base, spec.k, spec.n, spec.z)?;
        Code::from_parts(spec.clone(), base, cfg)
    }

    pub fn bg2(k: usize, n: usize, z: usize) -> Result<Code> {
        Code::build(&CodeSpec::bg2(k, n, z), None)
    }

    pub fn from_parts(spec: CodeSpec, base: BaseGraph, cfg: CodeConfig) -> Result<Code> {
        let h = lift(&base, &cfg)?;
        let graph = TannerGraph::from_matrix(&h);
        let encoder = Encoder::new(&h, cfg.k)?;
        Ok(Code {
            spec,
            base,
            cfg,
            h,
            graph,
            encoder,
        })
    }

    pub fn encode(&self, u: &[u8]) -> Result<Vec<u8>> {
        self.encoder.encode(u)
    }

    pub fn syndrome(&self, c: &[u8]) -> Result<bool> {
        self.h.syndrome(c)
    }

    pub fn transmit_view<'a>(&self, c_full: &'a [u8]) -> Result<&'a [u8]> {
        transmit_view(c_full, &self.cfg)
    }
}

/// Drops the punctured leading positions of a full codeword.
pub fn transmit_view<'a>(c_full: &'a [u8], cfg: &CodeConfig) -> Result<&'a [u8]> {
    if c_full.len() != cfg.n_vn() {
        return Err(Error::dim("full codeword", cfg.n_vn(), c_full.len()));
    }
    Ok(&c_full[cfg.punctured..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn transmit_view_drops_punctured() {
        let code = Code::bg2(132, 264, 22).unwrap();
        let mut c = vec![0u8; 308];
        c[44] = 1;
        let tx = code.transmit_view(&c).unwrap();
        assert_eq!(tx.len(), 264);
        assert_eq!(tx[0], 1);
        assert!(code.transmit_view(&c[..300]).is_err());
    }

    #[test]
    fn transmit_view_without_puncturing_is_identity() {
        let bg = BaseGraph::parse("2,4,2\n0,0,0\n0,1,1\n0,2,0\n1,1,0\n1,2,1\n1,3,0\n").unwrap();
        let cfg = CodeConfig::select_punctured(&bg, 4, 8, 2, 0).unwrap();
        let c = [1, 0, 1, 1, 0, 0, 1, 0];
        assert_eq!(transmit_view(&c, &cfg).unwrap(), &c);
    }

    #[test]
    fn codewords_are_closed_under_addition() {
        for n in [198, 264, 528] {
            let code = Code::bg2(132, n, 22).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            for _ in 0..50 {
                let a: Vec<u8> = (0..132).map(|_| rng.random_range(0..2)).collect();
                let b: Vec<u8> = (0..132).map(|_| rng.random_range(0..2)).collect();
                let ca = code.encode(&a).unwrap();
                let cb = code.encode(&b).unwrap();
                let sum: Vec<u8> = ca.iter().zip(&cb).map(|(x, y)| x ^ y).collect();
                assert!(code.syndrome(&ca).unwrap());
                assert!(code.syndrome(&sum).unwrap());
            }
        }
    }

    #[test]
    fn custom_code_needs_base_graph() {
        let spec = CodeSpec {
            base_graph: "tiny".into(),
            k: 4,
            n: 4,
            z: 2,
        };
        assert!(Code::build(&spec, None).is_err());
    }
}
