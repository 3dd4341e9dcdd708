//! BPSK over AWGN or ergodic Rayleigh fading, with coherent LLR demapping.
//!
//! Sign convention: a positive LLR favours bit 0, BPSK maps 0 to +1.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModel {
    Awgn,
    /// Per-symbol i.i.d. Rayleigh magnitude, known at the receiver.
    Rayleigh,
}

impl std::str::FromStr for ChannelModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "awgn" => Ok(ChannelModel::Awgn),
            "rayleigh" => Ok(ChannelModel::Rayleigh),
            other => Err(format!("unknown channel {other:?}")),
        }
    }
}

/// Noise variance per real dimension for unit-energy BPSK at the given
/// E_b/N_0 and code rate.
pub fn ebno_to_noise_var(ebno_db: f64, rate: f64) -> f64 {
    1.0 / (2.0 * rate * 10f64.powf(ebno_db / 10.0))
}

pub fn bpsk_modulate(c: &[u8]) -> Vec<f64> {
    c.iter().map(|&b| bpsk(b)).collect()
}

#[inline]
fn bpsk(b: u8) -> f64 {
    1.0 - 2.0 * f64::from(b & 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelObservation {
    pub y: Vec<f64>,
    /// Fading magnitude per symbol; all ones for AWGN.
    pub h: Vec<f64>,
    pub sigma2: f64,
}

pub fn transmit<R: Rng + ?Sized>(
    x: &[f64],
    model: ChannelModel,
    sigma2: f64,
    rng: &mut R,
) -> ChannelObservation {
    let sigma = sigma2.sqrt();
    let mut y = Vec::with_capacity(x.len());
    let mut h = Vec::with_capacity(x.len());
    for &xi in x {
        let gain = match model {
            ChannelModel::Awgn => 1.0,
            ChannelModel::Rayleigh => rayleigh(rng),
        };
        let n: f64 = rng.sample(StandardNormal);
        y.push(gain * xi + sigma * n);
        h.push(gain);
    }
    ChannelObservation { y, h, sigma2 }
}

/// Magnitude of a unit-mean-square circular complex Gaussian.
fn rayleigh<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    ((a * a + b * b) * 0.5).sqrt()
}

/// LLRs 2*h*y/sigma2 for the transmitted positions.
pub fn demap(obs: &ChannelObservation) -> Vec<f64> {
    let scale = 2.0 / obs.sigma2;
    obs.y
        .iter()
        .zip(&obs.h)
        .map(|(&y, &h)| scale * h * y)
        .collect()
}

/// Demaps into the full variable-node space; the first `punctured` entries
/// are exactly 0.
pub fn demap_full(obs: &ChannelObservation, punctured: usize) -> Vec<f64> {
    let mut llr = vec![0.0; punctured + obs.y.len()];
    for (dst, v) in llr[punctured..].iter_mut().zip(demap(obs)) {
        *dst = v;
    }
    llr
}

/// One frame through modulator, channel and demapper, written straight into
/// `llr` (full VN space). `c_tx` is the transmitted part of the codeword.
pub fn simulate_llrs<R: Rng + ?Sized>(
    c_tx: &[u8],
    model: ChannelModel,
    sigma2: f64,
    punctured: usize,
    rng: &mut R,
    llr: &mut [f64],
) {
    debug_assert_eq!(llr.len(), punctured + c_tx.len());
    let sigma = sigma2.sqrt();
    let scale = 2.0 / sigma2;
    llr[..punctured].fill(0.0);
    for (dst, &b) in llr[punctured..].iter_mut().zip(c_tx) {
        let gain = match model {
            ChannelModel::Awgn => 1.0,
            ChannelModel::Rayleigh => rayleigh(rng),
        };
        let n: f64 = rng.sample(StandardNormal);
        let y = gain * bpsk(b) + sigma * n;
        *dst = scale * gain * y;
    }
}
