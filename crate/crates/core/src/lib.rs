//! Quantization-aware min-sum decoding for 5G QC-LDPC codes.
//!
//! The crate covers the whole loop: build a lifted code from a base graph,
//! simulate BPSK transmissions, decode with a bit-exact fixed-point min-sum
//! decoder under arbitrary per-message bitwidths, and learn those bitwidths
//! by gradient descent on a differentiable surrogate decoder in which every
//! quantizer is replaced by scaled uniform noise plus clipping.

pub mod channel;
pub mod code;
pub mod error;
pub mod files;
pub mod graph;
pub mod msdec;
pub mod quant;
pub mod rng;
pub mod sim;
pub mod surrogate;
pub mod trainer;

pub use error::{Error, Result};
