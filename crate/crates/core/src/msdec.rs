//! Flooding min-sum decoding with per-message bitwidths.
//!
//! Iteration structure (shared by the float, fixed-point and surrogate
//! decoders): the channel LLRs are quantized once, every q message starts
//! from its quantized channel LLR, and each of the `n_iters` iterations is a
//! check-node update (r quantized with `b_r[i]`) followed by a variable-node
//! update (q quantized with `b_q[i]`) that feeds the next iteration. After
//! the last check-node update the marginals are accumulated without
//! quantization. There is no early termination.
//!
//! A bitwidth of 0 or 1 forces the message to zero. [`UNQUANTIZED`] marks a
//! site whose quantizer is disabled.

use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};
use crate::graph::TannerGraph;
use crate::quant::{quantize_fixed, FixedPoint, MAX_BITS};

/// Bitwidth value that disables the quantizer at a site.
pub const UNQUANTIZED: u8 = 64;

/// Integer bitwidth for every quantizer site.
///
/// `b_q` and `b_r` are iteration-major, edge-minor with edges in the
/// Tanner graph order (sorted by check node, then variable node).
#[derive(Debug, Clone, PartialEq)]
pub struct BitwidthAssignment {
    pub l_limit: f64,
    pub n_iters: usize,
    pub b_ch: Vec<u8>,
    pub b_q: Vec<u8>,
    pub b_r: Vec<u8>,
}

impl BitwidthAssignment {
    /// Same bitwidth everywhere.
    pub fn uniform(graph: &TannerGraph, n_iters: usize, bits: u8, l_limit: f64) -> Self {
        let per_iter = n_iters * graph.n_edges();
        BitwidthAssignment {
            l_limit,
            n_iters,
            b_ch: vec![bits; graph.n_vn()],
            b_q: vec![bits; per_iter],
            b_r: vec![bits; per_iter],
        }
    }

    /// All quantizers disabled; decodes identically to [`decode_float`].
    pub fn disabled(graph: &TannerGraph, n_iters: usize, l_limit: f64) -> Self {
        Self::uniform(graph, n_iters, UNQUANTIZED, l_limit)
    }

    pub fn validate(&self, graph: &TannerGraph) -> Result<()> {
        if self.b_ch.len() != graph.n_vn() {
            return Err(Error::dim("b_ch", graph.n_vn(), self.b_ch.len()));
        }
        let per_iter = self.n_iters * graph.n_edges();
        if self.b_q.len() != per_iter {
            return Err(Error::dim("b_q", per_iter, self.b_q.len()));
        }
        if self.b_r.len() != per_iter {
            return Err(Error::dim("b_r", per_iter, self.b_r.len()));
        }
        if !(self.l_limit.is_finite() && self.l_limit > 0.0) {
            return Err(Error::Param(format!("L_limit = {}", self.l_limit)));
        }
        let bad = self
            .sites()
            .find(|&b| u32::from(b) > MAX_BITS && b != UNQUANTIZED);
        if let Some(b) = bad {
            return Err(Error::Param(format!(
                "bitwidth {b} exceeds {MAX_BITS} (use {UNQUANTIZED} to disable a quantizer)"
            )));
        }
        Ok(())
    }

    fn sites(&self) -> impl Iterator<Item = u8> + '_ {
        self.b_ch.iter().chain(&self.b_q).chain(&self.b_r).copied()
    }

    /// Mean bitwidth with channel sites counted once per iteration.
    pub fn mean_bitwidth(&self) -> f64 {
        let ch: u64 = self.b_ch.iter().map(|&b| u64::from(b)).sum();
        let msgs: u64 = self.b_q.iter().chain(&self.b_r).map(|&b| u64::from(b)).sum();
        let num = self.n_iters as u64 * ch + msgs;
        let den = self.n_iters * self.b_ch.len() + self.b_q.len() + self.b_r.len();
        num as f64 / den as f64
    }

    fn all_fixed(&self) -> bool {
        self.sites().all(|b| u32::from(b) <= MAX_BITS)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Hard decisions over the full VN space; 0 iff `llr_total >= 0`.
    pub hard: Vec<u8>,
    pub llr_total: Vec<f64>,
    pub iterations: usize,
}

impl DecodeResult {
    fn from_totals(llr_total: Vec<f64>, iterations: usize) -> Self {
        let hard = llr_total.iter().map(|&l| hard_bit(l)).collect();
        DecodeResult {
            hard,
            llr_total,
            iterations,
        }
    }
}

#[inline]
pub fn hard_bit(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

/// Message arithmetic needed by the min-sum kernel.
pub(crate) trait Msg:
    Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Neg<Output = Self>
{
    const ZERO: Self;
    const INF: Self;
    fn magnitude(self) -> Self;
    #[inline]
    fn is_neg(self) -> bool {
        self < Self::ZERO
    }
}

impl Msg for f64 {
    const ZERO: f64 = 0.0;
    const INF: f64 = f64::INFINITY;
    #[inline]
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Msg for i64 {
    const ZERO: i64 = 0;
    const INF: i64 = i64::MAX;
    #[inline]
    fn magnitude(self) -> i64 {
        self.abs()
    }
}

/// Extrinsic min-sum check-node update (sign(0) = +1; a degree-1 check
/// emits 0).
pub fn cn_update(q: &[f64], r: &mut [f64]) {
    cn_update_generic(q, r);
}

#[inline]
pub(crate) fn cn_update_generic<T: Msg>(q: &[T], r: &mut [T]) {
    debug_assert_eq!(q.len(), r.len());
    let s = cn_stats(q);
    for (j, (&qe, re)) in q.iter().zip(r.iter_mut()).enumerate() {
        *re = s.extrinsic(j, qe);
    }
}

/// Two smallest magnitudes (first minimum at the lowest index on ties) and
/// the parity of negative inputs of one check node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CnStats<T> {
    pub min1: T,
    pub min2: T,
    pub idx1: usize,
    pub idx2: usize,
    pub neg: bool,
    pub degree: usize,
}

#[inline]
pub(crate) fn cn_stats<T: Msg>(q: &[T]) -> CnStats<T> {
    let mut s = CnStats {
        min1: T::INF,
        min2: T::INF,
        idx1: 0,
        idx2: 0,
        neg: false,
        degree: q.len(),
    };
    for (j, &v) in q.iter().enumerate() {
        let m = v.magnitude();
        s.neg ^= v.is_neg();
        if m < s.min1 {
            s.min2 = s.min1;
            s.idx2 = s.idx1;
            s.min1 = m;
            s.idx1 = j;
        } else if m < s.min2 {
            s.min2 = m;
            s.idx2 = j;
        }
    }
    s
}

impl<T: Msg> CnStats<T> {
    /// Message towards input `j` whose own value is `qj`.
    #[inline]
    pub fn extrinsic(&self, j: usize, qj: T) -> T {
        if self.degree < 2 {
            return T::ZERO;
        }
        let mag = if j == self.idx1 { self.min2 } else { self.min1 };
        if self.neg ^ qj.is_neg() {
            -mag
        } else {
            mag
        }
    }

    /// Index of the input that determines the magnitude sent to `j`.
    #[inline]
    pub fn extrinsic_argmin(&self, j: usize) -> usize {
        if j == self.idx1 {
            self.idx2
        } else {
            self.idx1
        }
    }

    /// Product of the signs of all other inputs given this input's value `qj`
    /// (true = -1).
    #[inline]
    pub fn others_negative(&self, qj: T) -> bool {
        self.neg ^ qj.is_neg()
    }
}

/// Extrinsic variable-node update: q_e = llr_ch + sum of the other r.
pub fn vn_update(llr_ch: f64, r: &[f64], q: &mut [f64]) {
    let total = marginalize(llr_ch, r);
    for (qe, &re) in q.iter_mut().zip(r) {
        *qe = total - re;
    }
}

/// llr_ch plus all incoming r messages.
pub fn marginalize(llr_ch: f64, r: &[f64]) -> f64 {
    r.iter().fold(llr_ch, |acc, &x| acc + x)
}

/// Reusable message buffers.
#[derive(Debug, Clone)]
pub(crate) struct Workspace<T> {
    pub ch: Vec<T>,
    pub q: Vec<T>,
    pub r: Vec<T>,
    pub total: Vec<T>,
}

impl<T: Msg> Workspace<T> {
    pub fn new(graph: &TannerGraph) -> Self {
        Workspace {
            ch: vec![T::ZERO; graph.n_vn()],
            q: vec![T::ZERO; graph.n_edges()],
            r: vec![T::ZERO; graph.n_edges()],
            total: vec![T::ZERO; graph.n_vn()],
        }
    }
}

/// Runs the message-passing schedule on already quantized channel values in
/// `ws.ch`, leaving marginals in `ws.total`.
#[inline]
pub(crate) fn run_min_sum<T, QR, QQ>(
    graph: &TannerGraph,
    n_iters: usize,
    ws: &mut Workspace<T>,
    mut quant_r: QR,
    mut quant_q: QQ,
) where
    T: Msg,
    QR: FnMut(usize, usize, T) -> T,
    QQ: FnMut(usize, usize, T) -> T,
{
    let Workspace { ch, q, r, total } = ws;
    for (e, qe) in q.iter_mut().enumerate() {
        *qe = ch[graph.edge_vn(e)];
    }
    for it in 0..n_iters {
        for m in 0..graph.n_cn() {
            let range = graph.cn_edges(m);
            let s = cn_stats(&q[range.clone()]);
            for (j, e) in range.enumerate() {
                r[e] = quant_r(it, e, s.extrinsic(j, q[e]));
            }
        }
        if it + 1 == n_iters {
            break;
        }
        for l in 0..graph.n_vn() {
            let edges = graph.vn_edges(l);
            let tot = edges.iter().fold(ch[l], |acc, &e| acc + r[e as usize]);
            for &e in edges {
                let e = e as usize;
                q[e] = quant_q(it, e, tot - r[e]);
            }
        }
    }
    for l in 0..graph.n_vn() {
        total[l] = graph
            .vn_edges(l)
            .iter()
            .fold(ch[l], |acc, &e| acc + r[e as usize]);
    }
}

fn check_llr(llr_ch: &[f64], graph: &TannerGraph) -> Result<()> {
    if llr_ch.len() != graph.n_vn() {
        return Err(Error::dim("channel LLRs", graph.n_vn(), llr_ch.len()));
    }
    if llr_ch.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("channel LLRs"));
    }
    Ok(())
}

/// Unquantized min-sum reference decoder.
pub fn decode_float(llr_ch: &[f64], graph: &TannerGraph, n_iters: usize) -> Result<DecodeResult> {
    check_llr(llr_ch, graph)?;
    let mut ws = Workspace::<f64>::new(graph);
    ws.ch.copy_from_slice(llr_ch);
    run_min_sum(graph, n_iters, &mut ws, |_, _, v| v, |_, _, v| v);
    Ok(DecodeResult::from_totals(ws.total, n_iters))
}

/// Fixed-point decoder with per-site bitwidths.
pub fn decode_fixed(
    llr_ch: &[f64],
    graph: &TannerGraph,
    bw: &BitwidthAssignment,
) -> Result<DecodeResult> {
    FixedDecoder::new(graph, bw)?.decode(llr_ch)
}

/// Fixed-point decoder bound to one graph and assignment, reusing its
/// buffers across frames.
#[derive(Debug, Clone)]
pub struct FixedDecoder<'a> {
    graph: &'a TannerGraph,
    bw: &'a BitwidthAssignment,
    fx: FixedPoint,
    int: Option<Workspace<i64>>,
    real: Option<Workspace<f64>>,
}

impl<'a> FixedDecoder<'a> {
    pub fn new(graph: &'a TannerGraph, bw: &'a BitwidthAssignment) -> Result<Self> {
        bw.validate(graph)?;
        let fx = FixedPoint::new(bw.l_limit)?;
        let (int, real) = if bw.all_fixed() {
            (Some(Workspace::new(graph)), None)
        } else {
            (None, Some(Workspace::new(graph)))
        };
        Ok(FixedDecoder {
            graph,
            bw,
            fx,
            int,
            real,
        })
    }

    pub fn decode(&mut self, llr_ch: &[f64]) -> Result<DecodeResult> {
        let mut total = vec![0.0; self.graph.n_vn()];
        self.decode_into(llr_ch, &mut total)?;
        Ok(DecodeResult::from_totals(total, self.bw.n_iters))
    }

    /// Decodes and writes the marginal LLRs into `total`.
    pub fn decode_into(&mut self, llr_ch: &[f64], total: &mut [f64]) -> Result<()> {
        check_llr(llr_ch, self.graph)?;
        if total.len() != self.graph.n_vn() {
            return Err(Error::dim("output LLRs", self.graph.n_vn(), total.len()));
        }
        let graph = self.graph;
        let bw = self.bw;
        let n_edges = graph.n_edges();
        if let Some(ws) = &mut self.int {
            let fx = self.fx;
            for (l, (dst, &x)) in ws.ch.iter_mut().zip(llr_ch).enumerate() {
                *dst = fx.from_real(x, u32::from(bw.b_ch[l]));
            }
            run_min_sum(
                graph,
                bw.n_iters,
                ws,
                |it, e, v| fx.quantize(v, u32::from(bw.b_r[it * n_edges + e])),
                |it, e, v| fx.quantize(v, u32::from(bw.b_q[it * n_edges + e])),
            );
            for (dst, &v) in total.iter_mut().zip(&ws.total) {
                *dst = fx.to_real(v);
            }
        } else if let Some(ws) = &mut self.real {
            let l_limit = bw.l_limit;
            let quant = move |x: f64, b: u8| {
                if b == UNQUANTIZED {
                    x
                } else {
                    quantize_fixed(x, u32::from(b), l_limit).unwrap_or(x)
                }
            };
            for (l, (dst, &x)) in ws.ch.iter_mut().zip(llr_ch).enumerate() {
                *dst = quant(x, bw.b_ch[l]);
            }
            run_min_sum(
                graph,
                bw.n_iters,
                ws,
                |it, e, v| quant(v, bw.b_r[it * n_edges + e]),
                |it, e, v| quant(v, bw.b_q[it * n_edges + e]),
            );
            total.copy_from_slice(&ws.total);
        }
        Ok(())
    }
}
