//! Mismatched-decoding mutual-information estimates.
//!
//! All estimators evaluate
//! `(1/N) sum_n log2 q(y_n | x_n) / sum_x' P(x') q(y_n | x')`
//! with a memoryless circular Gaussian auxiliary channel
//! `q(y | x) = CN(y; g x, s2)`, where the complex gain `g` is a
//! least-squares fit and `s2` the mean squared residual.

use std::collections::HashMap;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rings::{build_ring_constellation, RingConstellation};
use super::snr::{check_pair, ls_gain, residual_power};
use super::special::i0e;
use crate::error::{invalid, Error, Result};
use crate::signal_core::{resample_mimo, ComplexSignal, MimoSignal};
use crate::C64;

/// Terms whose exponent sits this far below the best one are dropped.
const PRUNE_EXPONENT: f64 = 40.0;
/// Input magnitudes beyond `r^2 / P = ln(n_rings) + TAIL_SPAN` are ignored.
const TAIL_SPAN: f64 = 40.0;
/// Quadrature nodes per noise standard deviation across each annulus.
const NODES_PER_SIGMA: f64 = 3.0;
const MIN_NODES: usize = 8;
const MAX_NODES: usize = 4096;
const CHUNK: usize = 1 << 14;

/// How the input side of the auxiliary channel is represented.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiMethod {
    /// `x_n` is the captured reference itself. The output density sums the
    /// auxiliary channel over the ring annuli of the Gaussian input with the
    /// phase integrated in closed form and the radius by Gauss-Legendre
    /// quadrature inside each annulus.
    #[default]
    ContinuousReference,
    /// `x_n` is the reference quantized onto the discrete ring constellation
    /// and the output density sums over its `n_rings * phase_points` points.
    /// The quantization error is charged to the noise, so this reads low at
    /// high SNR.
    QuantizedReference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiConfig {
    pub n_rings: usize,
    pub phase_points: usize,
    pub method: MiMethod,
}

impl Default for MiConfig {
    fn default() -> Self {
        Self {
            n_rings: 16,
            phase_points: 64,
            method: MiMethod::ContinuousReference,
        }
    }
}

/// Per-tributary MI at an assumed symbol rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub per_tributary_bits: Vec<f64>,
    pub total_bits: f64,
    pub assumed_baud: f64,
    /// Auxiliary-channel variance used for each tributary.
    pub noise_variance: Vec<f64>,
}

/// One report row per tributary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiRow {
    pub tributary: usize,
    pub bits_per_symbol: f64,
    pub assumed_baud: f64,
    pub snr_db: f64,
    pub distance_km: f64,
    pub launch_power_dbm: f64,
}

impl MiEstimate {
    pub fn mean_bits(&self) -> f64 {
        self.total_bits / self.per_tributary_bits.len() as f64
    }

    pub fn bits_per_second(&self) -> f64 {
        self.total_bits * self.assumed_baud
    }

    pub fn rows(&self, snr_db: &[f64], distance_km: f64, launch_power_dbm: f64) -> Vec<MiRow> {
        self.per_tributary_bits
            .iter()
            .enumerate()
            .map(|(m, &bits)| MiRow {
                tributary: m,
                bits_per_symbol: bits,
                assumed_baud: self.assumed_baud,
                snr_db: snr_db.get(m).copied().unwrap_or(f64::NAN),
                distance_km,
                launch_power_dbm,
            })
            .collect()
    }
}

/// MI in bits per sample between a Gaussian reference and its equalized
/// copy, both at one sample per symbol.
pub fn estimate_mi(f_in: &ComplexSignal, f_eq: &ComplexSignal, rings: &RingConstellation) -> Result<f64> {
    estimate_mi_with(f_in, f_eq, rings, MiMethod::default())
}

pub fn estimate_mi_with(
    f_in: &ComplexSignal,
    f_eq: &ComplexSignal,
    rings: &RingConstellation,
    method: MiMethod,
) -> Result<f64> {
    Ok(mi_detail(f_in.samples(), f_eq.samples(), rings, method)?.0)
}

/// MI over a known discrete input (e.g. 16QAM symbols) with uniform priors.
pub fn estimate_mi_discrete(symbols: &[C64], f_eq: &ComplexSignal, constellation: &[C64]) -> Result<f64> {
    let y = f_eq.samples();
    check_pair(symbols, y)?;
    if constellation.is_empty() {
        return Err(invalid("empty constellation"));
    }
    let g = ls_gain(symbols, y);
    let s2 = floored_variance(symbols, y, g);
    let scaled: Vec<C64> = constellation.iter().map(|c| g * c).collect();
    let log_prior = -(constellation.len() as f64).ln();
    let nats = chunked_mean(y.len(), |i| {
        let yn = y[i];
        let num = -(yn - g * symbols[i]).norm_sqr() / s2;
        let terms = scaled.iter().map(|c| log_prior - (yn - c).norm_sqr() / s2);
        num - log_sum_exp(terms)
    });
    Ok(clamp_bits(nats, constellation.len()))
}

/// Brings a field sampled at `signal.sample_rate()` to one sample per
/// symbol at `baud`: decimation when the ratio is an integer, band-limited
/// resampling otherwise.
pub fn to_symbol_rate(signal: &MimoSignal, baud: f64) -> Result<MimoSignal> {
    if !(baud.is_finite() && baud > 0.0) {
        return Err(invalid(format!("assumed baud must be positive, got {baud}")));
    }
    let ratio = signal.sample_rate() / baud;
    if ratio < 1.0 - 1e-9 {
        return Err(invalid(format!(
            "assumed baud {baud} exceeds the sample rate {}",
            signal.sample_rate()
        )));
    }
    let k = ratio.round();
    if (ratio - k).abs() < 1e-9 {
        signal.decimate(k as usize, 0)
    } else {
        resample_mimo(signal, baud)
    }
}

/// Per-tributary MI of an equalized field against its reference at the
/// assumed symbol rate. The constellation of each tributary is built from
/// the measured power of its reference.
pub fn estimate_mi_mimo(
    f_in: &MimoSignal,
    f_eq: &MimoSignal,
    cfg: &MiConfig,
    assumed_baud: f64,
) -> Result<MiEstimate> {
    if f_in.modes() != f_eq.modes() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} tributaries",
            f_in.modes(),
            f_eq.modes()
        )));
    }
    let x = to_symbol_rate(f_in, assumed_baud)?;
    let y = to_symbol_rate(f_eq, assumed_baud)?;
    let mut bits = Vec::with_capacity(x.modes());
    let mut variance = Vec::with_capacity(x.modes());
    for m in 0..x.modes() {
        let power = crate::signal_core::mean_power(x.tributary(m));
        let rings = build_ring_constellation(cfg.n_rings, power, cfg.phase_points)?;
        let (b, v) = mi_detail(x.tributary(m), y.tributary(m), &rings, cfg.method)?;
        bits.push(b);
        variance.push(v);
    }
    Ok(MiEstimate {
        total_bits: bits.iter().sum(),
        per_tributary_bits: bits,
        assumed_baud,
        noise_variance: variance,
    })
}

fn mi_detail(x: &[C64], y: &[C64], rings: &RingConstellation, method: MiMethod) -> Result<(f64, f64)> {
    check_pair(x, y)?;
    match method {
        MiMethod::ContinuousReference => Ok(continuous(x, y, rings)),
        MiMethod::QuantizedReference => Ok(quantized(x, y, rings)),
    }
}

fn continuous(x: &[C64], y: &[C64], rings: &RingConstellation) -> (f64, f64) {
    let g = ls_gain(x, y);
    let s2 = floored_variance(x, y, g);
    let gain = g.norm();
    let grid = RadialGrid::new(rings, gain / s2.sqrt());
    let reach = (PRUNE_EXPONENT * s2).sqrt();
    let nats = chunked_mean(y.len(), |i| {
        let yn = y[i];
        let a = yn.norm();
        let num = -(yn - g * x[i]).norm_sqr() / s2;
        let (lo, hi) = if gain > 0.0 {
            let lo = grid.r.partition_point(|&r| gain * r < a - reach);
            let hi = grid.r.partition_point(|&r| gain * r <= a + reach);
            if lo < hi {
                (lo, hi)
            } else {
                let k = lo.min(grid.r.len() - 1);
                (k, k + 1)
            }
        } else {
            (0, grid.r.len())
        };
        let term = |k: usize| {
            let r = gain * grid.r[k];
            (grid.log_w[k] - (a - r).powi(2) / s2, 2.0 * a * r / s2)
        };
        let linear: f64 = (lo..hi)
            .map(|k| {
                let (e, z) = term(k);
                e.exp() * i0e(z)
            })
            .sum();
        let den = if linear > 0.0 && linear.is_finite() {
            linear.ln()
        } else {
            log_sum_exp((lo..hi).map(|k| {
                let (e, z) = term(k);
                e + i0e(z).ln()
            }))
        };
        num - den
    });
    (clamp_bits(nats, rings.size()), s2)
}

/// Quadrature nodes in input magnitude with log-weights including the
/// Rayleigh density; one Gauss-Legendre panel per annulus.
struct RadialGrid {
    r: Vec<f64>,
    log_w: Vec<f64>,
}

impl RadialGrid {
    /// `resolution` is gain over noise standard deviation; node spacing
    /// scales inversely with it.
    fn new(rings: &RingConstellation, resolution: f64) -> Self {
        let p = rings.mean_power;
        let mut edges = rings.boundaries();
        let n = edges.len() - 1;
        edges[n] = (p * ((n as f64).ln() + TAIL_SPAN)).sqrt();
        let mut rules: HashMap<usize, GaussLegendre> = HashMap::new();
        let mut nodes = Vec::new();
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let k = ((NODES_PER_SIGMA * (b - a) * resolution).ceil() as usize + MIN_NODES).min(MAX_NODES);
            let rule = rules
                .entry(k)
                .or_insert_with(|| GaussLegendre::new(NonZeroUsize::new(k).expect("k >= MIN_NODES")));
            let half = 0.5 * (b - a);
            for &(t, wt) in rule.as_node_weight_pairs() {
                let r = a + half * (t + 1.0);
                let log_density = (2.0 * r / p).ln() - r * r / p;
                nodes.push((r, (wt * half).ln() + log_density));
            }
        }
        nodes.sort_by(|u, v| u.0.total_cmp(&v.0));
        Self {
            r: nodes.iter().map(|n| n.0).collect(),
            log_w: nodes.iter().map(|n| n.1).collect(),
        }
    }
}

fn quantized(x: &[C64], y: &[C64], rings: &RingConstellation) -> (f64, f64) {
    let edges = rings.boundaries();
    let xq: Vec<C64> = x
        .iter()
        .map(|&v| {
            let (k, p) = rings.quantize_index(v, &edges);
            rings.point(k, p)
        })
        .collect();
    let s2 = floored_variance(&xq, y, C64::new(1.0, 0.0));
    let points: Vec<Vec<C64>> = (0..rings.n_rings())
        .map(|k| (0..rings.phase_points).map(|p| rings.point(k, p)).collect())
        .collect();
    let log_prior: Vec<f64> = rings
        .priors
        .iter()
        .map(|q| (q / rings.phase_points as f64).ln())
        .collect();
    let nats = chunked_mean(y.len(), |i| {
        let yn = y[i];
        let a = yn.norm();
        let num = -(yn - xq[i]).norm_sqr() / s2;
        let nearest = rings
            .radii
            .iter()
            .map(|r| (a - r).powi(2))
            .fold(f64::INFINITY, f64::min);
        let terms = points
            .iter()
            .enumerate()
            .filter(|(k, _)| (a - rings.radii[*k]).powi(2) - nearest <= PRUNE_EXPONENT * s2)
            .flat_map(|(k, ring)| {
                let lp = log_prior[k];
                ring.iter().map(move |c| lp - (yn - c).norm_sqr() / s2)
            });
        num - log_sum_exp(terms)
    });
    (clamp_bits(nats, rings.size()), s2)
}

/// Residual variance with a floor that keeps noiseless inputs finite.
fn floored_variance(x: &[C64], y: &[C64], g: C64) -> f64 {
    let s2 = residual_power(x, y, g);
    let py = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / y.len() as f64;
    s2.max(1e-12 * py).max(f64::MIN_POSITIVE)
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Mean of `f(i)` over `0..n`, parallel over fixed chunks and summed in
/// order so the result does not depend on the thread count.
fn chunked_mean(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let chunks: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&f).sum::<f64>())
        .collect();
    chunks.iter().sum::<f64>() / n as f64
}

fn clamp_bits(nats: f64, points: usize) -> f64 {
    let bits = nats / std::f64::consts::LN_2;
    bits.clamp(0.0, (points as f64).log2())
}
