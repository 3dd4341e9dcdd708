//! Monte Carlo BER/BLER sweeps.
//!
//! Frames are simulated in fixed-size blocks. Blocks run in parallel waves
//! and are merged in block order; the stop rule is evaluated after each
//! block in that order, so the result does not depend on the worker count.
//! Frame `f` at a grid point always uses the stream
//! `frame_rng(seed, DOMAIN_SWEEP, ebno.to_bits(), f)`.

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{ebno_to_noise_var, simulate_llrs, ChannelModel};
use crate::code::Code;
use crate::error::{Error, Result};
use crate::msdec::{decode_float, hard_bit, BitwidthAssignment, FixedDecoder};
use crate::rng::{frame_rng, DOMAIN_SWEEP};
use crate::surrogate::{forward_into, DecodeTrace, NoiseSource, ParamSet};

/// Frames per block.
pub const BLOCK: u64 = 32;

/// One simulated transmission.
#[derive(Debug, Clone)]
pub struct Frame {
    pub u: Vec<u8>,
    pub c: Vec<u8>,
    /// Channel LLRs over the full VN space, 0 at punctured positions.
    pub llr: Vec<f64>,
}

impl Frame {
    pub fn new(code: &Code) -> Frame {
        Frame {
            u: vec![0; code.cfg.k],
            c: vec![0; code.cfg.n_vn()],
            llr: vec![0.0; code.cfg.n_vn()],
        }
    }
}

/// Draws information bits, encodes and passes the codeword through the
/// channel.
pub fn draw_frame<R: Rng + ?Sized>(
    code: &Code,
    model: ChannelModel,
    sigma2: f64,
    rng: &mut R,
    frame: &mut Frame,
) -> Result<()> {
    for b in frame.u.iter_mut() {
        *b = rng.random::<bool>() as u8;
    }
    frame.c = code.encode(&frame.u)?;
    let tx = code.transmit_view(&frame.c)?;
    simulate_llrs(tx, model, sigma2, code.cfg.punctured, rng, &mut frame.llr);
    Ok(())
}

/// A decoder ready to run.
#[derive(Debug, Clone)]
pub enum Decoder {
    Float { n_iters: usize },
    Fixed(BitwidthAssignment),
    /// Surrogate decoder with fresh quantization noise per frame.
    Surrogate(ParamSet),
}

impl Decoder {
    pub fn check(&self, code: &Code) -> Result<()> {
        match self {
            Decoder::Float { n_iters } if *n_iters == 0 => {
                Err(Error::Config("n_iters must be at least 1".into()))
            }
            Decoder::Float { .. } => Ok(()),
            Decoder::Fixed(bw) => bw.validate(&code.graph).map_err(|e| {
                Error::Config(format!("bitwidth assignment does not fit the code: {e}"))
            }),
            Decoder::Surrogate(p) => {
                if p.n_vn() != code.graph.n_vn() || p.n_edges() != code.graph.n_edges() {
                    Err(Error::Config(
                        "surrogate parameters were built for a different code".into(),
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopRule {
    pub min_frame_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            min_frame_errors: 400,
            max_frames: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub ebno_db: f64,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub bler: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    frames: u64,
    bit_errors: u64,
    frame_errors: u64,
}

/// Runs every grid point in order.
pub fn run_sweep(
    code: &Code,
    decoder: &Decoder,
    channel: ChannelModel,
    grid: &[f64],
    stop: &StopRule,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Config("E_b/N_0 grid is empty".into()));
    }
    if stop.min_frame_errors == 0 || stop.max_frames == 0 {
        return Err(Error::Config(
            "min_frame_errors and max_frames must be at least 1".into(),
        ));
    }
    if let Some(x) = grid.iter().find(|x| !x.is_finite()) {
        return Err(Error::Config(format!("invalid E_b/N_0 value {x}")));
    }
    decoder.check(code)?;
    grid.iter()
        .map(|&ebno| run_point(code, decoder, channel, ebno, stop, seed))
        .collect()
}

pub fn run_point(
    code: &Code,
    decoder: &Decoder,
    channel: ChannelModel,
    ebno_db: f64,
    stop: &StopRule,
    seed: u64,
) -> Result<SweepRow> {
    let sigma2 = ebno_to_noise_var(ebno_db, code.cfg.rate());
    let n_blocks = stop.max_frames.div_ceil(BLOCK);
    let wave = 2 * rayon::current_num_threads() as u64;
    let mut acc = Counts::default();
    let mut next = 0u64;
    'outer: while next < n_blocks {
        let end = (next + wave).min(n_blocks);
        let results: Vec<Result<Counts>> = (next..end)
            .into_par_iter()
            .map(|b| {
                let first = b * BLOCK;
                let last = ((b + 1) * BLOCK).min(stop.max_frames);
                run_block(code, decoder, channel, sigma2, ebno_db, seed, first..last)
            })
            .collect();
        for r in results {
            let c = r?;
            acc.frames += c.frames;
            acc.bit_errors += c.bit_errors;
            acc.frame_errors += c.frame_errors;
            if acc.frame_errors >= stop.min_frame_errors {
                break 'outer;
            }
        }
        next = end;
    }
    let k = code.cfg.k as f64;
    Ok(SweepRow {
        ebno_db,
        frames: acc.frames,
        bit_errors: acc.bit_errors,
        frame_errors: acc.frame_errors,
        ber: acc.bit_errors as f64 / (acc.frames as f64 * k),
        bler: acc.frame_errors as f64 / acc.frames as f64,
    })
}

fn run_block(
    code: &Code,
    decoder: &Decoder,
    channel: ChannelModel,
    sigma2: f64,
    ebno_db: f64,
    seed: u64,
    frames: std::ops::Range<u64>,
) -> Result<Counts> {
    let graph = &code.graph;
    let k = code.cfg.k;
    let mut frame = Frame::new(code);
    let mut total = vec![0.0; graph.n_vn()];
    let mut fixed = match decoder {
        Decoder::Fixed(bw) => Some(FixedDecoder::new(graph, bw)?),
        _ => None,
    };
    let mut trace = match decoder {
        Decoder::Surrogate(p) => Some(DecodeTrace::new(graph, p.n_iters)),
        _ => None,
    };
    let mut counts = Counts::default();
    for f in frames {
        let mut rng = frame_rng(seed, DOMAIN_SWEEP, ebno_db.to_bits(), f);
        draw_frame(code, channel, sigma2, &mut rng, &mut frame)?;
        match decoder {
            Decoder::Float { n_iters } => {
                total.copy_from_slice(&decode_float(&frame.llr, graph, *n_iters)?.llr_total);
            }
            Decoder::Fixed(_) => {
                fixed
                    .as_mut()
                    .expect("fixed decoder")
                    .decode_into(&frame.llr, &mut total)?;
            }
            Decoder::Surrogate(p) => {
                let trace = trace.as_mut().expect("surrogate trace");
                let mut noise = NoiseSource::from_rng(rng);
                forward_into(&frame.llr, graph, p, &mut noise, trace)?;
                total.copy_from_slice(trace.llr_total());
            }
        }
        let errs = total[..k]
            .iter()
            .zip(&frame.u)
            .filter(|(&l, &u)| hard_bit(l) != u)
            .count() as u64;
        counts.frames += 1;
        counts.bit_errors += errs;
        counts.frame_errors += u64::from(errs > 0);
    }
    Ok(counts)
}

/// Runs `f` on a dedicated pool of `workers` threads (`0` = rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code() -> Code {
        Code::bg2(132, 264, 22).unwrap()
    }

    #[test]
    fn frames_are_codewords() {
        let code = code();
        let mut frame = Frame::new(&code);
        let mut rng = frame_rng(1, DOMAIN_SWEEP, 0, 0);
        draw_frame(&code, ChannelModel::Awgn, 0.5, &mut rng, &mut frame).unwrap();
        assert!(code.syndrome(&frame.c).unwrap());
        assert_eq!(&frame.c[..132], &frame.u[..]);
        assert!(frame.llr[..44].iter().all(|&l| l == 0.0));
        assert!(frame.llr[44..].iter().all(|&l| l != 0.0));
    }

    #[test]
    fn noiseless_channel_has_no_errors() {
        let code = code();
        let stop = StopRule {
            min_frame_errors: 1,
            max_frames: 1000,
        };
        let rows = run_sweep(
            &code,
            &Decoder::Float { n_iters: 10 },
            ChannelModel::Awgn,
            &[60.0],
            &stop,
            3,
        )
        .unwrap();
        assert_eq!(rows[0].frames, 1000);
        assert_eq!(rows[0].frame_errors, 0);
        assert_eq!(rows[0].bler, 0.0);
    }

    #[test]
    fn stop_rule_and_worker_invariance() {
        let code = code();
        let stop = StopRule {
            min_frame_errors: 20,
            max_frames: 5000,
        };
        let bw = BitwidthAssignment::uniform(&code.graph, 10, 3, 8.0);
        let dec = Decoder::Fixed(bw);
        let a = with_workers(1, || {
            run_sweep(&code, &dec, ChannelModel::Awgn, &[1.5, 2.0], &stop, 11)
        })
        .unwrap()
        .unwrap();
        let b = with_workers(3, || {
            run_sweep(&code, &dec, ChannelModel::Awgn, &[1.5, 2.0], &stop, 11)
        })
        .unwrap()
        .unwrap();
        assert_eq!(a, b);
        for row in &a {
            assert!(row.frame_errors >= 20);
            assert_eq!(row.frames % BLOCK, 0);
            assert_eq!(row.bler, row.frame_errors as f64 / row.frames as f64);
            assert_eq!(row.ber, row.bit_errors as f64 / (row.frames as f64 * 132.0));
        }
        // a point's result does not depend on the rest of the grid
        let c = run_sweep(&code, &dec, ChannelModel::Awgn, &[2.0], &stop, 11).unwrap();
        assert_eq!(c[0], a[1]);
    }

    #[test]
    fn max_frames_caps_partial_block() {
        let code = code();
        let stop = StopRule {
            min_frame_errors: 1_000_000,
            max_frames: 45,
        };
        let rows = run_sweep(
            &code,
            &Decoder::Float { n_iters: 5 },
            ChannelModel::Rayleigh,
            &[1.0],
            &stop,
            0,
        )
        .unwrap();
        assert_eq!(rows[0].frames, 45);
    }

    #[test]
    fn invalid_sweeps_rejected() {
        let code = code();
        let stop = StopRule::default();
        let float = Decoder::Float { n_iters: 10 };
        assert!(run_sweep(&code, &float, ChannelModel::Awgn, &[], &stop, 0).is_err());
        let zero = StopRule {
            min_frame_errors: 0,
            ..StopRule::default()
        };
        assert!(run_sweep(&code, &float, ChannelModel::Awgn, &[1.0], &zero, 0).is_err());
        let other = Code::bg2(132, 528, 22).unwrap();
        let bw = BitwidthAssignment::uniform(&other.graph, 10, 3, 8.0);
        let err = run_sweep(&code, &Decoder::Fixed(bw), ChannelModel::Awgn, &[1.0], &stop, 0);
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
