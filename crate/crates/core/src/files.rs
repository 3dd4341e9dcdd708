//! On-disk formats.
//!
//! Configs, bitwidth assignments and parameter sets are flat TOML tables;
//! training history and sweep results are CSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::code::{BaseGraph, Code, CodeSpec};
use crate::error::{Error, Result};
use crate::msdec::{BitwidthAssignment, UNQUANTIZED};
use crate::sim::{Decoder, StopRule, SweepRow};
use crate::surrogate::{ParamSet, Scheme};
use crate::trainer::{TrainConfig, TrainHistory};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn toml_err(e: toml::de::Error) -> Error {
    let msg = e.message().to_string();
    match e.span() {
        Some(span) => Error::Format(format!("{msg} (at byte {})", span.start)),
        None => Error::Format(msg),
    }
}

fn to_toml<T: Serialize>(v: &T) -> String {
    toml::to_string(v).expect("plain structs serialize")
}

pub fn read_base_graph(path: &Path) -> Result<BaseGraph> {
    BaseGraph::parse(&read_text(path)?)
}

// ---- training config --------------------------------------------------

pub fn parse_train_config(text: &str) -> Result<TrainConfig> {
    let cfg: TrainConfig = toml::from_str(text).map_err(toml_err)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn format_train_config(cfg: &TrainConfig) -> String {
    to_toml(cfg)
}

// ---- bitwidth assignment ----------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BitwidthFile {
    pub base_graph: String,
    pub k: usize,
    pub n: usize,
    pub z: usize,
    pub n_iters: usize,
    pub l_limit: f64,
    pub b_ch: Vec<u8>,
    pub b_q: Vec<u8>,
    pub b_r: Vec<u8>,
}

impl BitwidthFile {
    pub fn new(spec: &CodeSpec, bw: &BitwidthAssignment) -> BitwidthFile {
        BitwidthFile {
            base_graph: spec.base_graph.clone(),
            k: spec.k,
            n: spec.n,
            z: spec.z,
            n_iters: bw.n_iters,
            l_limit: bw.l_limit,
            b_ch: bw.b_ch.clone(),
            b_q: bw.b_q.clone(),
            b_r: bw.b_r.clone(),
        }
    }

    pub fn code_spec(&self) -> CodeSpec {
        CodeSpec {
            base_graph: self.base_graph.clone(),
            k: self.k,
            n: self.n,
            z: self.z,
        }
    }

    pub fn assignment(&self) -> BitwidthAssignment {
        BitwidthAssignment {
            l_limit: self.l_limit,
            n_iters: self.n_iters,
            b_ch: self.b_ch.clone(),
            b_q: self.b_q.clone(),
            b_r: self.b_r.clone(),
        }
    }

    /// The assignment, checked against `code`.
    pub fn for_code(&self, code: &Code) -> Result<BitwidthAssignment> {
        check_spec(&self.code_spec(), &code.spec)?;
        let bw = self.assignment();
        bw.validate(&code.graph)?;
        Ok(bw)
    }
}

/// Parses a bitwidth file, checking internal consistency of its arrays.
pub fn parse_bitwidths(text: &str) -> Result<BitwidthFile> {
    let f: BitwidthFile = toml::from_str(text).map_err(toml_err)?;
    if f.n_iters == 0 {
        return Err(Error::Format("n_iters must be at least 1".into()));
    }
    if f.b_q.len() != f.b_r.len() || !f.b_q.len().is_multiple_of(f.n_iters) {
        return Err(Error::Format(format!(
            "b_q ({}) and b_r ({}) must both hold n_iters = {} blocks of edges",
            f.b_q.len(),
            f.b_r.len(),
            f.n_iters
        )));
    }
    if !(f.l_limit.is_finite() && f.l_limit > 0.0) {
        return Err(Error::Format(format!("l_limit must be positive, got {}", f.l_limit)));
    }
    if let Some(b) = f
        .b_ch
        .iter()
        .chain(&f.b_q)
        .chain(&f.b_r)
        .find(|&&b| b > 32 && b != UNQUANTIZED)
    {
        return Err(Error::Format(format!("bitwidth {b} out of range")));
    }
    Ok(f)
}

pub fn format_bitwidths(spec: &CodeSpec, bw: &BitwidthAssignment) -> String {
    to_toml(&BitwidthFile::new(spec, bw))
}

pub fn read_bitwidths(path: &Path) -> Result<BitwidthFile> {
    parse_bitwidths(&read_text(path)?)
}

// ---- parameter sets -----------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub scheme: Scheme,
    pub base_graph: String,
    pub k: usize,
    pub n: usize,
    pub z: usize,
    pub n_iters: usize,
    pub l_limit: f64,
    pub e_base: usize,
    pub n_base_rows_used: usize,
    pub n_vn: usize,
    pub n_base_cols_used: usize,
    pub alpha: Vec<f64>,
}

impl ParamFile {
    pub fn new(spec: &CodeSpec, code: &Code, params: &ParamSet) -> ParamFile {
        ParamFile {
            scheme: params.scheme,
            base_graph: spec.base_graph.clone(),
            k: spec.k,
            n: spec.n,
            z: spec.z,
            n_iters: params.n_iters,
            l_limit: params.l_limit,
            e_base: code.graph.n_base_edges(),
            n_base_rows_used: code.graph.n_base_rows(),
            n_vn: code.graph.n_vn(),
            n_base_cols_used: code.graph.n_base_cols(),
            alpha: params.alpha.clone(),
        }
    }

    pub fn code_spec(&self) -> CodeSpec {
        CodeSpec {
            base_graph: self.base_graph.clone(),
            k: self.k,
            n: self.n,
            z: self.z,
        }
    }

    /// Parameter count implied by the header; `None` on overflow.
    pub fn expected_len(&self) -> Option<usize> {
        let per_dir = |per_iter: usize| per_iter.checked_mul(self.n_iters)?.checked_mul(2);
        match self.scheme {
            Scheme::NoWs => per_dir(self.e_base.checked_mul(self.z)?)?.checked_add(self.n_vn),
            Scheme::BgWs => per_dir(self.e_base)?.checked_add(self.n_base_cols_used),
            Scheme::CnWs => per_dir(self.n_base_rows_used)?.checked_add(1),
        }
    }

    pub fn for_code(&self, code: &Code) -> Result<ParamSet> {
        check_spec(&self.code_spec(), &code.spec)?;
        let g = &code.graph;
        if self.e_base != g.n_base_edges()
            || self.n_base_rows_used != g.n_base_rows()
            || self.n_vn != g.n_vn()
            || self.n_base_cols_used != g.n_base_cols()
        {
            return Err(Error::Format(format!(
                "header dimensions (E_base {}, rows {}) do not match code {} (E_base {}, rows {})",
                self.e_base,
                self.n_base_rows_used,
                code.spec,
                g.n_base_edges(),
                g.n_base_rows()
            )));
        }
        ParamSet::from_alpha(g, self.scheme, self.n_iters, self.l_limit, self.alpha.clone())
    }
}

pub fn parse_params(text: &str) -> Result<ParamFile> {
    let f: ParamFile = toml::from_str(text).map_err(toml_err)?;
    if f.n_iters == 0 || f.z == 0 {
        return Err(Error::Format("n_iters and z must be at least 1".into()));
    }
    match f.expected_len() {
        Some(n) if n == f.alpha.len() => {}
        Some(n) => {
            return Err(Error::Format(format!(
                "{} scheme needs {n} step sizes, file has {}",
                f.scheme,
                f.alpha.len()
            )))
        }
        None => return Err(Error::Format("header dimensions overflow".into())),
    }
    if !(f.l_limit.is_finite() && f.l_limit > 0.0) {
        return Err(Error::Format(format!("l_limit must be positive, got {}", f.l_limit)));
    }
    if let Some(a) = f.alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::Format(format!("step sizes must be positive, got {a}")));
    }
    Ok(f)
}

pub fn format_params(code: &Code, params: &ParamSet) -> String {
    to_toml(&ParamFile::new(&code.spec, code, params))
}

pub fn read_params(path: &Path) -> Result<ParamFile> {
    parse_params(&read_text(path)?)
}

fn check_spec(file: &CodeSpec, code: &CodeSpec) -> Result<()> {
    if file != code {
        return Err(Error::Config(format!(
            "file is for code {file}, but the code in use is {code}"
        )));
    }
    Ok(())
}

// ---- sweep config -------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Float,
    /// Same bitwidth at every site (`bits`).
    Uniform,
    /// Bitwidth assignment file (`file`).
    Bitwidths,
    /// Surrogate decoder: parameter file (`file`) or uniform `alpha`.
    Surrogate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub decoder: DecoderKind,
    pub bits: Option<u8>,
    pub alpha: Option<f64>,
    pub file: Option<PathBuf>,
    pub channel: ChannelModel,
    pub ebno_db: Vec<f64>,
    pub min_frame_errors: u64,
    pub max_frames: u64,
    pub seed: u64,
    pub workers: usize,
    pub n_iters: usize,
    pub l_limit: f64,
    pub base_graph: String,
    pub k: usize,
    pub n: usize,
    pub z: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let stop = StopRule::default();
        SweepConfig {
            decoder: DecoderKind::Float,
            bits: None,
            alpha: None,
            file: None,
            channel: ChannelModel::Awgn,
            ebno_db: Vec::new(),
            min_frame_errors: stop.min_frame_errors,
            max_frames: stop.max_frames,
            seed: 0,
            workers: 0,
            n_iters: 10,
            l_limit: 8.0,
            base_graph: "bg2".into(),
            k: 132,
            n: 264,
            z: 22,
        }
    }
}

impl SweepConfig {
    pub fn code_spec(&self) -> CodeSpec {
        CodeSpec {
            base_graph: self.base_graph.clone(),
            k: self.k,
            n: self.n,
            z: self.z,
        }
    }

    pub fn stop_rule(&self) -> StopRule {
        StopRule {
            min_frame_errors: self.min_frame_errors,
            max_frames: self.max_frames,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ebno_db.is_empty() {
            return Err(Error::Config("ebno_db grid is empty".into()));
        }
        if self.ebno_db.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("ebno_db values must be finite".into()));
        }
        if self.min_frame_errors == 0 || self.max_frames == 0 {
            return Err(Error::Config(
                "min_frame_errors and max_frames must be at least 1".into(),
            ));
        }
        if self.n_iters == 0 {
            return Err(Error::Config("n_iters must be at least 1".into()));
        }
        if !(self.l_limit.is_finite() && self.l_limit > 0.0) {
            return Err(Error::Config(format!("l_limit must be positive, got {}", self.l_limit)));
        }
        match self.decoder {
            DecoderKind::Uniform => match self.bits {
                Some(b) if b <= 32 => {}
                Some(b) => return Err(Error::Config(format!("bits = {b} exceeds 32"))),
                None => return Err(Error::Config("decoder = \"uniform\" needs bits".into())),
            },
            DecoderKind::Surrogate => {
                if let Some(a) = self.alpha {
                    if !(a.is_finite() && a > 0.0) {
                        return Err(Error::Config(format!("alpha must be positive, got {a}")));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Builds the decoder. `file` overrides the config's `file`; relative
    /// config paths are resolved against `base_dir`.
    pub fn decoder(&self, code: &Code, file: Option<&Path>, base_dir: &Path) -> Result<Decoder> {
        let path = || -> Result<PathBuf> {
            match (file, &self.file) {
                (Some(p), _) => Ok(p.to_path_buf()),
                (None, Some(p)) if p.is_relative() => Ok(base_dir.join(p)),
                (None, Some(p)) => Ok(p.clone()),
                (None, None) => Err(Error::Config(format!(
                    "decoder {:?} needs a file",
                    self.decoder
                ))),
            }
        };
        let dec = match self.decoder {
            DecoderKind::Float => Decoder::Float {
                n_iters: self.n_iters,
            },
            DecoderKind::Uniform => {
                let bits = self
                    .bits
                    .ok_or_else(|| Error::Config("decoder = \"uniform\" needs bits".into()))?;
                Decoder::Fixed(BitwidthAssignment::uniform(
                    &code.graph,
                    self.n_iters,
                    bits,
                    self.l_limit,
                ))
            }
            DecoderKind::Bitwidths => Decoder::Fixed(read_bitwidths(&path()?)?.for_code(code)?),
            DecoderKind::Surrogate => match (file, self.alpha) {
                (None, Some(a)) => Decoder::Surrogate(ParamSet::uniform(
                    &code.graph,
                    Scheme::CnWs,
                    self.n_iters,
                    a,
                    self.l_limit,
                )?),
                _ => Decoder::Surrogate(read_params(&path()?)?.for_code(code)?),
            },
        };
        dec.check(code)?;
        Ok(dec)
    }
}

pub fn parse_sweep_config(text: &str) -> Result<SweepConfig> {
    let cfg: SweepConfig = toml::from_str(text).map_err(toml_err)?;
    cfg.validate()?;
    Ok(cfg)
}

// ---- CSV output -----------------------------------------------------------

pub const RESULTS_HEADER: &str = "ebno_db,frames,bit_errors,frame_errors,ber,bler";
pub const HISTORY_HEADER: &str = "epoch,loss,bce,complexity,mean_bitwidth";

pub fn format_results(rows: &[SweepRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{:e},{},{},{},{:e},{:e}",
            r.ebno_db, r.frames, r.bit_errors, r.frame_errors, r.ber, r.bler
        );
    }
    out
}

pub fn format_history(history: &TrainHistory) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for e in &history.epochs {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{:e}",
            e.epoch, e.loss, e.bce, e.complexity, e.mean_bitwidth
        );
    }
    out
}
