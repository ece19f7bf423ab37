//! Data-aided MIMO frequency-domain LMS equalizer (overlap-save,
//! gradient-constrained, per-bin power normalized).
//!
//! Taps are `N`-point frequency responses whose impulse responses are
//! confined to lags `[-overlap/2, overlap/2)`. Each block of `N` input
//! samples yields `N - overlap` valid outputs taken from the middle of the
//! block, so the filter may look both forward and backward in time and the
//! identity start point is a single tap at lag zero.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PipelineConfig;
use crate::channel_sim::MimoChannel;
use crate::error::{invalid, Error, Result};
use crate::fft::FftPair;
use crate::linalg::CMat;
use crate::signal_core::io::Container;
use crate::signal_core::MimoSignal;
use crate::C64;

/// Forgetting factor of the per-bin input power estimate (per block).
const POWER_FORGETTING: f64 = 0.95;
/// Blocks averaged to seed the power estimate before adaptation starts.
const POWER_WARMUP_BLOCKS: usize = 16;
/// Regularization of the power normalization relative to the mean bin power.
const POWER_FLOOR: f64 = 1e-3;
const DIVERGENCE_WINDOW: usize = 10;
const DIVERGENCE_RISE_DB: f64 = 3.0;
/// A rising error only counts as divergence once the output error exceeds
/// the reference power; phase-noise tracking ripple stays far below.
const DIVERGENCE_LEVEL_DB: f64 = 0.0;

/// Converged equalizer: per-bin `M x M` weights and the adaptation trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerState {
    modes: usize,
    /// Entry-major: `taps[i * M + j][k]` is weight `(i, j)` at bin `k`.
    taps: Vec<Vec<C64>>,
    pub block_size: usize,
    pub overlap: usize,
    pub step_size: f64,
    pub sample_rate: f64,
    /// Per-block NMSE (dB) of every pass, in processing order.
    pub error_trace: Vec<f64>,
    pub blocks_per_pass: usize,
}

impl EqualizerState {
    fn identity(modes: usize, cfg: &PipelineConfig, sample_rate: f64) -> Self {
        let n = cfg.block_size;
        let taps = (0..modes * modes)
            .map(|e| {
                let v = if e / modes == e % modes { 1.0 } else { 0.0 };
                vec![C64::new(v, 0.0); n]
            })
            .collect();
        Self {
            modes,
            taps,
            block_size: n,
            overlap: cfg.overlap,
            step_size: cfg.lms_step,
            sample_rate,
            error_trace: Vec::new(),
            blocks_per_pass: 0,
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Weight matrix of bin `k` (FFT order).
    pub fn tap_matrix(&self, k: usize) -> CMat {
        CMat::from_fn(self.modes, self.modes, |i, j| self.taps[i * self.modes + j][k])
    }

    /// The weights as a channel on the `block_size`-point grid.
    pub fn to_channel(&self) -> Result<MimoChannel> {
        let matrices = (0..self.block_size).map(|k| self.tap_matrix(k)).collect();
        MimoChannel::new(matrices, self.sample_rate / self.block_size as f64)
    }

    /// NMSE (dB) of the last block of the final pass.
    pub fn final_nmse_db(&self) -> Option<f64> {
        self.error_trace.last().copied()
    }

    /// Mean NMSE (dB, averaged linearly) over the final pass.
    pub fn final_pass_nmse_db(&self) -> Option<f64> {
        let n = self.blocks_per_pass.min(self.error_trace.len());
        if n == 0 {
            return None;
        }
        let tail = &self.error_trace[self.error_trace.len() - n..];
        let lin = tail.iter().map(|d| 10f64.powf(d / 10.0)).sum::<f64>() / n as f64;
        Some(10.0 * lin.log10())
    }

    /// Writes `<stem>.json` (geometry and trace) and `<stem>.bin` (weights).
    pub fn save(&self, stem: impl AsRef<Path>) -> Result<()> {
        let stem = stem.as_ref();
        let bin = stem.with_extension("bin");
        let header = EqualizerHeader {
            modes: self.modes,
            block_size: self.block_size,
            overlap: self.overlap,
            step_size: self.step_size,
            sample_rate: self.sample_rate,
            blocks_per_pass: self.blocks_per_pass,
            error_trace: self.error_trace.clone(),
            payload: bin
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        };
        serde_json::to_writer_pretty(
            BufWriter::new(File::create(stem.with_extension("json"))?),
            &header,
        )?;
        Container {
            streams: self.taps.clone(),
            rate: self.sample_rate,
        }
        .save(bin)
    }

    pub fn load(json_path: impl AsRef<Path>) -> Result<Self> {
        let json_path = json_path.as_ref();
        let h: EqualizerHeader = serde_json::from_reader(File::open(json_path)?)?;
        let c = Container::load(json_path.with_file_name(&h.payload))?;
        if c.streams.len() != h.modes * h.modes || c.streams.iter().any(|s| s.len() != h.block_size) {
            return Err(Error::Format("tap payload does not match the header".into()));
        }
        Ok(Self {
            modes: h.modes,
            taps: c.streams,
            block_size: h.block_size,
            overlap: h.overlap,
            step_size: h.step_size,
            sample_rate: h.sample_rate,
            error_trace: h.error_trace,
            blocks_per_pass: h.blocks_per_pass,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct EqualizerHeader {
    modes: usize,
    block_size: usize,
    overlap: usize,
    step_size: f64,
    sample_rate: f64,
    blocks_per_pass: usize,
    error_trace: Vec<f64>,
    payload: String,
}

/// Equalizes `f_out` towards the known reference `f_in`.
///
/// Runs `cfg.lms_passes` passes over the capture; the returned field is the
/// output of the last pass.
pub fn fde_lms_equalize(
    f_in: &MimoSignal,
    f_out: &MimoSignal,
    cfg: &PipelineConfig,
) -> Result<(MimoSignal, EqualizerState)> {
    cfg.validate()?;
    f_in.check_same_shape(f_out)?;
    if f_in.is_empty() {
        return Err(invalid("cannot equalize empty captures"));
    }
    let mut lms = Lms::new(f_in.modes(), cfg, f_in.sample_rate());
    let out = lms.run(f_out.tributaries(), f_in.tributaries())?;
    Ok((MimoSignal::from_trusted(out, f_in.sample_rate()), lms.state))
}

struct Lms {
    m: usize,
    n: usize,
    half: usize,
    hop: usize,
    passes: usize,
    fft: FftPair,
    state: EqualizerState,
    power: Vec<f64>,
}

impl Lms {
    fn new(m: usize, cfg: &PipelineConfig, rate: f64) -> Self {
        let n = cfg.block_size;
        Self {
            m,
            n,
            half: cfg.overlap / 2,
            hop: n - cfg.overlap,
            passes: cfg.lms_passes,
            fft: FftPair::new(n),
            state: EqualizerState::identity(m, cfg, rate),
            power: vec![0.0; n],
        }
    }

    /// Spectra of the `m` input blocks whose valid outputs start at `pos`.
    fn input_block(&self, x: &[Vec<C64>], pos: usize, scratch: &mut [C64]) -> Vec<Vec<C64>> {
        let len = x[0].len();
        let start = pos as isize - self.half as isize;
        let lo = start.max(0) as usize;
        let hi = ((start + self.n as isize).max(0) as usize).min(len);
        x.iter()
            .map(|t| {
                let mut buf = vec![C64::new(0.0, 0.0); self.n];
                if lo < hi {
                    let off = (lo as isize - start) as usize;
                    buf[off..off + hi - lo].copy_from_slice(&t[lo..hi]);
                }
                self.fft.forward(&mut buf, scratch);
                buf
            })
            .collect()
    }

    fn accumulate_power(&self, spectra: &[Vec<C64>], acc: &mut [f64], weight: f64) {
        let scale = weight / self.m as f64;
        for s in spectra {
            for (p, v) in acc.iter_mut().zip(s) {
                *p += scale * v.norm_sqr();
            }
        }
    }

    fn run(&mut self, x: &[Vec<C64>], d: &[Vec<C64>]) -> Result<Vec<Vec<C64>>> {
        let len = x[0].len();
        let blocks = len.div_ceil(self.hop);
        let mut scratch = self.fft.scratch();

        // Seed the per-bin power estimate from the first blocks.
        let warm = blocks.min(POWER_WARMUP_BLOCKS);
        let mut init = vec![0.0; self.n];
        for b in 0..warm {
            let spectra = self.input_block(x, b * self.hop, &mut scratch);
            self.accumulate_power(&spectra, &mut init, 1.0 / warm as f64);
        }
        self.power = init;
        let floor = POWER_FLOOR * self.power.iter().sum::<f64>() / self.n as f64;
        if !(floor > 0.0) {
            return Err(invalid("equalizer input has zero power"));
        }

        let mut out = vec![vec![C64::new(0.0, 0.0); len]; self.m];
        self.state.blocks_per_pass = blocks;
        for _ in 0..self.passes {
            for b in 0..blocks {
                self.block(x, d, b, floor, &mut out, &mut scratch)?;
            }
        }
        Ok(out)
    }

    fn block(
        &mut self,
        x: &[Vec<C64>],
        d: &[Vec<C64>],
        b: usize,
        floor: f64,
        out: &mut [Vec<C64>],
        scratch: &mut [C64],
    ) -> Result<()> {
        let (m, n, half) = (self.m, self.n, self.half);
        let len = x[0].len();
        let pos = b * self.hop;
        let valid = self.hop.min(len - pos);
        let xs = self.input_block(x, pos, scratch);

        // Filter, keep the valid middle part, and form the error blocks.
        let mut err_energy = 0.0;
        let mut ref_energy = 0.0;
        let mut errors = Vec::with_capacity(m);
        for i in 0..m {
            let mut y = vec![C64::new(0.0, 0.0); n];
            for (j, xj) in xs.iter().enumerate() {
                let w = &self.state.taps[i * m + j];
                for ((yk, wk), xk) in y.iter_mut().zip(w).zip(xj) {
                    *yk += wk * xk;
                }
            }
            self.fft.inverse(&mut y, scratch);
            let mut e = vec![C64::new(0.0, 0.0); n];
            for t in 0..valid {
                let yv = y[half + t];
                let dv = d[i][pos + t];
                out[i][pos + t] = yv;
                let ev = dv - yv;
                e[half + t] = ev;
                err_energy += ev.norm_sqr();
                ref_energy += dv.norm_sqr();
            }
            self.fft.forward(&mut e, scratch);
            errors.push(e);
        }
        let nmse = if ref_energy > 0.0 {
            10.0 * (err_energy / ref_energy).max(1e-30).log10()
        } else {
            f64::NEG_INFINITY
        };
        self.check_divergence(nmse)?;

        let mut fresh = vec![0.0; n];
        self.accumulate_power(&xs, &mut fresh, 1.0);
        for (p, f) in self.power.iter_mut().zip(&fresh) {
            *p = POWER_FORGETTING * *p + (1.0 - POWER_FORGETTING) * f;
        }
        let inv_power: Vec<f64> = self.power.iter().map(|p| 1.0 / (p + floor)).collect();

        // Constrained gradient step for every weight entry.
        let mu = self.state.step_size;
        let fft = &self.fft;
        self.state.taps.par_iter_mut().enumerate().for_each_init(
            || fft.scratch(),
            |scratch, (entry, w)| {
                let (i, j) = (entry / m, entry % m);
                let mut g: Vec<C64> = errors[i]
                    .iter()
                    .zip(&xs[j])
                    .zip(&inv_power)
                    .map(|((e, x), ip)| e * x.conj() * *ip)
                    .collect();
                fft.inverse(&mut g, scratch);
                // Keep lags [-half, half) only.
                g[half..n - half].iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
                fft.forward(&mut g, scratch);
                for (wk, gk) in w.iter_mut().zip(&g) {
                    *wk += mu * gk;
                }
            },
        );
        Ok(())
    }

    fn check_divergence(&mut self, nmse: f64) -> Result<()> {
        let trace = &mut self.state.error_trace;
        trace.push(nmse);
        let block = trace.len() - 1;
        if nmse.is_nan() || nmse == f64::INFINITY {
            return Err(Error::Divergence {
                block,
                step_size: self.state.step_size,
            });
        }
        if trace.len() > DIVERGENCE_WINDOW {
            let w = &trace[trace.len() - DIVERGENCE_WINDOW - 1..];
            let rising = w.windows(2).all(|p| p[1] > p[0]);
            if rising && w[DIVERGENCE_WINDOW] - w[0] > DIVERGENCE_RISE_DB && nmse > DIVERGENCE_LEVEL_DB {
                return Err(Error::Divergence {
                    block,
                    step_size: self.state.step_size,
                });
            }
        }
        Ok(())
    }
}
