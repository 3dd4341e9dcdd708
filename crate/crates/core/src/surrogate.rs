//! Differentiable surrogate of the quantized min-sum decoder.
//!
//! Every quantizer `Q(x)` of the fixed-point decoder is replaced by
//! `clip(x + alpha * n, +-(L_limit - alpha))` with `n ~ U(-0.5, 0.5)` drawn
//! fresh per site and per call. The forward pass records what the reverse
//! pass needs, and [`backward`] accumulates d(loss)/d(alpha) into the shared
//! parameters of a [`ParamSet`].
//!
//! Subgradient conventions: a clipped site passes no gradient to its input
//! and `-+1` to its step; a check node sends the gradient of each outgoing
//! message only to the extrinsic minimum input (lowest edge index on ties),
//! scaled by the product of the other signs and the sign of that input;
//! sign(0) = +1.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::TannerGraph;
use crate::msdec::cn_stats;

/// How quantizer sites share trainable step sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// One parameter per site.
    #[serde(rename = "NoWS")]
    NoWs,
    /// Lifted copies of a base edge share, per iteration and message
    /// direction; channel LLRs share per base column.
    #[serde(rename = "BG-WS")]
    BgWs,
    /// All edges of a base row share, per iteration and direction; one
    /// channel parameter.
    #[serde(rename = "CN-WS")]
    CnWs,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::NoWs, Scheme::BgWs, Scheme::CnWs];

    /// Parameter count for a graph and iteration count.
    pub fn n_params(self, graph: &TannerGraph, n_iters: usize) -> usize {
        match self {
            Scheme::NoWs => graph.n_vn() + 2 * n_iters * graph.n_edges(),
            Scheme::BgWs => graph.n_base_cols() + 2 * n_iters * graph.n_base_edges(),
            Scheme::CnWs => 1 + 2 * n_iters * graph.n_base_rows(),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::NoWs => "NoWS",
            Scheme::BgWs => "BG-WS",
            Scheme::CnWs => "CN-WS",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nows" | "no-ws" | "none" => Ok(Scheme::NoWs),
            "bg-ws" | "bgws" | "bg" => Ok(Scheme::BgWs),
            "cn-ws" | "cnws" | "cn" => Ok(Scheme::CnWs),
            _ => Err(Error::Config(format!("unknown weight-sharing scheme {s:?}"))),
        }
    }
}

/// Quantizer sites in canonical order: channel per VN, then q per
/// (iteration, edge), then r per (iteration, edge). A site's position in
/// this order is its parameter index under [`Scheme::NoWs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Channel(usize),
    Q { iter: usize, edge: usize },
    R { iter: usize, edge: usize },
}

/// Trainable step sizes plus the site -> parameter map of their scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub scheme: Scheme,
    pub l_limit: f64,
    pub n_iters: usize,
    pub alpha: Vec<f64>,
    n_vn: usize,
    n_edges: usize,
    site_map: Vec<u32>,
}

impl ParamSet {
    /// Every parameter set to `alpha`.
    pub fn uniform(
        graph: &TannerGraph,
        scheme: Scheme,
        n_iters: usize,
        alpha: f64,
        l_limit: f64,
    ) -> Result<ParamSet> {
        let n = scheme.n_params(graph, n_iters);
        ParamSet::from_alpha(graph, scheme, n_iters, l_limit, vec![alpha; n])
    }

    pub fn from_alpha(
        graph: &TannerGraph,
        scheme: Scheme,
        n_iters: usize,
        l_limit: f64,
        alpha: Vec<f64>,
    ) -> Result<ParamSet> {
        let expect = scheme.n_params(graph, n_iters);
        if alpha.len() != expect {
            return Err(Error::dim("parameter count", expect, alpha.len()));
        }
        if !(l_limit.is_finite() && l_limit > 0.0) {
            return Err(Error::Param(format!("L_limit must be positive, got {l_limit}")));
        }
        if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::Param(format!("step sizes must be positive, got {a}")));
        }
        Ok(ParamSet {
            scheme,
            l_limit,
            n_iters,
            alpha,
            n_vn: graph.n_vn(),
            n_edges: graph.n_edges(),
            site_map: build_site_map(graph, scheme, n_iters),
        })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn n_vn(&self) -> usize {
        self.n_vn
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn n_sites(&self) -> usize {
        self.site_map.len()
    }

    /// Parameter index for every site in canonical order.
    pub fn site_map(&self) -> &[u32] {
        &self.site_map
    }

    pub fn site_index(&self, site: Site) -> usize {
        let per_iter = self.n_iters * self.n_edges;
        match site {
            Site::Channel(l) => l,
            Site::Q { iter, edge } => self.n_vn + iter * self.n_edges + edge,
            Site::R { iter, edge } => self.n_vn + per_iter + iter * self.n_edges + edge,
        }
    }

    pub fn param_of(&self, site: Site) -> usize {
        self.site_map[self.site_index(site)] as usize
    }

    pub fn site_alpha(&self, site: Site) -> f64 {
        self.alpha[self.param_of(site)]
    }

    /// Per-site step sizes, i.e. the equivalent [`Scheme::NoWs`] parameters.
    pub fn expand(&self, graph: &TannerGraph) -> Result<ParamSet> {
        let alpha = self.site_map.iter().map(|&p| self.alpha[p as usize]).collect();
        ParamSet::from_alpha(graph, Scheme::NoWs, self.n_iters, self.l_limit, alpha)
    }

    /// Sums per-site values (e.g. [`Scheme::NoWs`] gradients) into this
    /// scheme's parameters.
    pub fn reduce_sites(&self, per_site: &[f64]) -> Result<Vec<f64>> {
        if per_site.len() != self.site_map.len() {
            return Err(Error::dim("per-site values", self.site_map.len(), per_site.len()));
        }
        let mut out = vec![0.0; self.alpha.len()];
        for (&p, &v) in self.site_map.iter().zip(per_site) {
            out[p as usize] += v;
        }
        Ok(out)
    }

    /// Complexity weight of each site: channel sites count once per
    /// iteration.
    pub fn site_weight(&self, site_index: usize) -> f64 {
        if site_index < self.n_vn {
            self.n_iters as f64
        } else {
            1.0
        }
    }

    pub(crate) fn check_graph(&self, graph: &TannerGraph) -> Result<()> {
        if self.n_vn != graph.n_vn() || self.n_edges != graph.n_edges() {
            return Err(Error::Trace(format!(
                "parameters built for {} VNs / {} edges, graph has {} / {}",
                self.n_vn,
                self.n_edges,
                graph.n_vn(),
                graph.n_edges()
            )));
        }
        Ok(())
    }
}

fn build_site_map(graph: &TannerGraph, scheme: Scheme, n_iters: usize) -> Vec<u32> {
    let n_vn = graph.n_vn();
    let n_edges = graph.n_edges();
    let mut map = Vec::with_capacity(n_vn + 2 * n_iters * n_edges);
    match scheme {
        Scheme::NoWs => map.extend(0..(n_vn + 2 * n_iters * n_edges) as u32),
        Scheme::BgWs => {
            let n_cols = graph.n_base_cols();
            let eb = graph.n_base_edges();
            map.extend((0..n_vn).map(|l| graph.vn_base_col(l) as u32));
            for dir in 0..2 {
                for it in 0..n_iters {
                    let base = n_cols + (dir * n_iters + it) * eb;
                    map.extend((0..n_edges).map(|e| (base + graph.base_edge(e)) as u32));
                }
            }
        }
        Scheme::CnWs => {
            let rb = graph.n_base_rows();
            map.extend(std::iter::repeat_n(0u32, n_vn));
            for dir in 0..2 {
                for it in 0..n_iters {
                    let base = 1 + (dir * n_iters + it) * rb;
                    map.extend((0..n_edges).map(|e| (base + graph.base_row(e)) as u32));
                }
            }
        }
    }
    map
}

/// Replayable stream of U(-0.5, 0.5) draws.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        NoiseSource {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn from_rng(rng: ChaCha8Rng) -> Self {
        NoiseSource { rng }
    }

    #[inline]
    pub fn draw(&mut self) -> f64 {
        self.rng.random::<f64>() - 0.5
    }
}

/// Value and local partials (d/dx, d/dalpha) of one surrogate quantizer.
#[inline]
pub fn surrogate_quantize(x: f64, alpha: f64, n: f64, l_limit: f64) -> (f64, f64, f64) {
    let clip = l_limit - alpha;
    if clip <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let v = x + alpha * n;
    if v > clip {
        (clip, 0.0, -1.0)
    } else if v < -clip {
        (-clip, 0.0, 1.0)
    } else {
        (v, 1.0, n)
    }
}

/// Recorded forward pass.
#[derive(Debug, Clone)]
pub struct DecodeTrace {
    n_iters: usize,
    n_edges: usize,
    ch: Vec<f64>,
    ch_da: Vec<f64>,
    /// q values entering the check-node update of each iteration.
    q_in: Vec<f64>,
    q_dx: Vec<f64>,
    q_da: Vec<f64>,
    r: Vec<f64>,
    r_dx: Vec<f64>,
    r_da: Vec<f64>,
    total: Vec<f64>,
}

impl DecodeTrace {
    pub fn new(graph: &TannerGraph, n_iters: usize) -> DecodeTrace {
        let per_iter = n_iters * graph.n_edges();
        DecodeTrace {
            n_iters,
            n_edges: graph.n_edges(),
            ch: vec![0.0; graph.n_vn()],
            ch_da: vec![0.0; graph.n_vn()],
            q_in: vec![0.0; per_iter],
            q_dx: vec![0.0; per_iter],
            q_da: vec![0.0; per_iter],
            r: vec![0.0; graph.n_edges()],
            r_dx: vec![0.0; per_iter],
            r_da: vec![0.0; per_iter],
            total: vec![0.0; graph.n_vn()],
        }
    }

    /// Marginal LLRs of the recorded pass.
    pub fn llr_total(&self) -> &[f64] {
        &self.total
    }

    /// Quantized channel LLRs of the recorded pass.
    pub fn llr_channel(&self) -> &[f64] {
        &self.ch
    }
}

/// Surrogate forward pass, allocating a fresh trace.
pub fn forward(
    llr_ch: &[f64],
    graph: &TannerGraph,
    params: &ParamSet,
    noise: &mut NoiseSource,
) -> Result<(Vec<f64>, DecodeTrace)> {
    let mut trace = DecodeTrace::new(graph, params.n_iters);
    forward_into(llr_ch, graph, params, noise, &mut trace)?;
    Ok((trace.total.clone(), trace))
}

/// Surrogate forward pass recording into an existing trace.
pub fn forward_into(
    llr_ch: &[f64],
    graph: &TannerGraph,
    params: &ParamSet,
    noise: &mut NoiseSource,
    trace: &mut DecodeTrace,
) -> Result<()> {
    params.check_graph(graph)?;
    if llr_ch.len() != graph.n_vn() {
        return Err(Error::dim("channel LLRs", graph.n_vn(), llr_ch.len()));
    }
    if trace.n_iters != params.n_iters || trace.n_edges != graph.n_edges() {
        *trace = DecodeTrace::new(graph, params.n_iters);
    }
    let n_vn = graph.n_vn();
    let n_edges = graph.n_edges();
    let n_iters = params.n_iters;
    let l_limit = params.l_limit;
    let map = &params.site_map;
    let alpha = &params.alpha;
    let q_base = n_vn;
    let r_base = n_vn + n_iters * n_edges;

    for l in 0..n_vn {
        let a = alpha[map[l] as usize];
        let (v, _, da) = surrogate_quantize(llr_ch[l], a, noise.draw(), l_limit);
        trace.ch[l] = v;
        trace.ch_da[l] = da;
    }
    for e in 0..n_edges {
        trace.q_in[e] = trace.ch[graph.edge_vn(e)];
    }

    for it in 0..n_iters {
        let off = it * n_edges;
        for m in 0..graph.n_cn() {
            let range = graph.cn_edges(m);
            let q = &trace.q_in[off + range.start..off + range.end];
            let s = cn_stats(q);
            for (j, e) in range.enumerate() {
                let msg = s.extrinsic(j, q[j]);
                let a = alpha[map[r_base + off + e] as usize];
                let (v, dx, da) = surrogate_quantize(msg, a, noise.draw(), l_limit);
                trace.r[e] = v;
                trace.r_dx[off + e] = dx;
                trace.r_da[off + e] = da;
            }
        }
        if it + 1 == n_iters {
            break;
        }
        let next = off + n_edges;
        for l in 0..n_vn {
            let edges = graph.vn_edges(l);
            let tot = edges
                .iter()
                .fold(trace.ch[l], |acc, &e| acc + trace.r[e as usize]);
            for &e in edges {
                let e = e as usize;
                let a = alpha[map[q_base + off + e] as usize];
                let (v, dx, da) = surrogate_quantize(tot - trace.r[e], a, noise.draw(), l_limit);
                trace.q_in[next + e] = v;
                trace.q_dx[off + e] = dx;
                trace.q_da[off + e] = da;
            }
        }
    }

    for l in 0..n_vn {
        trace.total[l] = graph
            .vn_edges(l)
            .iter()
            .fold(trace.ch[l], |acc, &e| acc + trace.r[e as usize]);
    }
    Ok(())
}

/// Reverse pass: adds d(loss)/d(alpha) to `grad` (one entry per parameter)
/// given d(loss)/d(llr_total).
pub fn backward(
    trace: &DecodeTrace,
    graph: &TannerGraph,
    params: &ParamSet,
    d_total: &[f64],
    grad: &mut [f64],
) -> Result<()> {
    params.check_graph(graph)?;
    if trace.n_iters != params.n_iters || trace.n_edges != graph.n_edges() {
        return Err(Error::Trace(format!(
            "trace has {} iterations / {} edges, parameters expect {} / {}",
            trace.n_iters,
            trace.n_edges,
            params.n_iters,
            graph.n_edges()
        )));
    }
    if d_total.len() != graph.n_vn() {
        return Err(Error::dim("loss gradient", graph.n_vn(), d_total.len()));
    }
    if grad.len() != params.len() {
        return Err(Error::dim("gradient buffer", params.len(), grad.len()));
    }

    let n_vn = graph.n_vn();
    let n_edges = graph.n_edges();
    let n_iters = params.n_iters;
    let map = &params.site_map;
    let q_base = n_vn;
    let r_base = n_vn + n_iters * n_edges;

    let mut g_ch = d_total.to_vec();
    let mut g_r: Vec<f64> = (0..n_edges).map(|e| d_total[graph.edge_vn(e)]).collect();
    let mut g_q = vec![0.0; n_edges];
    let mut g_rp = vec![0.0; n_edges];
    let mut g_qp = vec![0.0; n_edges];

    for it in (0..n_iters).rev() {
        let off = it * n_edges;
        if it + 1 < n_iters {
            // q_in[it + 1] = Q(ch + sum of other r), gradient held in g_q
            g_r.fill(0.0);
            for l in 0..n_vn {
                let edges = graph.vn_edges(l);
                let mut sum = 0.0;
                for &e in edges {
                    let e = e as usize;
                    let g = g_q[e];
                    grad[map[q_base + off + e] as usize] += g * trace.q_da[off + e];
                    let gp = g * trace.q_dx[off + e];
                    g_qp[e] = gp;
                    sum += gp;
                }
                g_ch[l] += sum;
                for &e in edges {
                    let e = e as usize;
                    g_r[e] += sum - g_qp[e];
                }
            }
        }
        for e in 0..n_edges {
            let g = g_r[e];
            grad[map[r_base + off + e] as usize] += g * trace.r_da[off + e];
            g_rp[e] = g * trace.r_dx[off + e];
        }
        g_q.fill(0.0);
        for m in 0..graph.n_cn() {
            let range = graph.cn_edges(m);
            let q = &trace.q_in[off + range.start..off + range.end];
            let s = cn_stats(q);
            if s.degree < 2 {
                continue;
            }
            for (j, e) in range.clone().enumerate() {
                let g = g_rp[e];
                if g == 0.0 {
                    continue;
                }
                let src = s.extrinsic_argmin(j);
                let flip = s.others_negative(q[j]) ^ (q[src] < 0.0);
                g_q[range.start + src] += if flip { -g } else { g };
            }
        }
    }
    for e in 0..n_edges {
        g_ch[graph.edge_vn(e)] += g_q[e];
    }
    for l in 0..n_vn {
        grad[map[l] as usize] += g_ch[l] * trace.ch_da[l];
    }
    Ok(())
}
