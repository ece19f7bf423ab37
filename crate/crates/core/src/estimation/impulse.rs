use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mdl::csv_error;
use crate::channel_sim::MimoChannel;
use crate::error::Result;
use crate::linalg::{self, CMat};
use crate::{fft, C64};

/// Taps within this many dB of the peak belong to the response support.
const SUPPORT_THRESHOLD_DB: f64 = 30.0;
/// Taps added on either side of the support before measuring the floor.
const SUPPORT_GUARD: usize = 32;
/// Taps this far below the unwindowed peak are structurally zero (outside
/// the equalizer's tap span) and do not count towards the noise floor.
const STRUCTURAL_ZERO: f64 = 1e-24;
const MAX_DYNAMIC_RANGE_DB: f64 = 300.0;

/// Spectral weighting applied before the inverse transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpectralWindow {
    Rectangular,
    /// Unit gain up to `passband`, raised-cosine roll-off to zero at
    /// `stopband` (Hz).
    RaisedCosineEdge {
        passband: f64,
        stopband: f64,
    },
}

impl SpectralWindow {
    /// Taper over the transition band of a receive filter with the given
    /// 3 dB bandwidth.
    pub fn for_filter(bandwidth: f64) -> Self {
        Self::RaisedCosineEdge {
            passband: bandwidth,
            stopband: 1.25 * bandwidth,
        }
    }

    pub fn gain(&self, f: f64) -> f64 {
        match *self {
            Self::Rectangular => 1.0,
            Self::RaisedCosineEdge { passband, stopband } => {
                let a = f.abs();
                if a <= passband {
                    1.0
                } else if a >= stopband {
                    0.0
                } else {
                    0.5 * (1.0 + (PI * (a - passband) / (stopband - passband)).cos())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    /// Index `len / 2` is zero delay.
    pub taps: Vec<CMat>,
    /// s
    pub tap_spacing: f64,
    /// Peak summed tap power over the median power of observed taps outside
    /// the response support.
    pub dynamic_range_db: f64,
}

impl ImpulseResponse {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn delay(&self, i: usize) -> f64 {
        (i as f64 - (self.len() / 2) as f64) * self.tap_spacing
    }

    /// Summed power of all matrix entries per tap.
    pub fn tap_power(&self) -> Vec<f64> {
        self.taps.iter().map(linalg::frobenius_sq).collect()
    }

    /// `time_s` followed by one `h_ij_db` power column per matrix entry.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let m = self.taps.first().map_or(0, |t| t.nrows());
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        let mut header = vec!["time_s".to_string()];
        for i in 0..m {
            for j in 0..m {
                header.push(format!("h{i}{j}_db"));
            }
        }
        w.write_record(&header).map_err(csv_error)?;
        for (k, t) in self.taps.iter().enumerate() {
            let mut row = vec![self.delay(k).to_string()];
            for i in 0..m {
                for j in 0..m {
                    row.push((10.0 * t[(i, j)].norm_sqr().max(1e-300).log10()).to_string());
                }
            }
            w.write_record(&row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Inverse DFT of every matrix entry after spectral weighting, centered
/// on zero delay.
pub fn impulse_response_from_channel(channel: &MimoChannel, window: SpectralWindow) -> ImpulseResponse {
    let n = channel.n_bins();
    let m = channel.modes();
    let rate = channel.span();
    let weights: Vec<f64> = (0..n).map(|k| window.gain(channel.frequency(k))).collect();
    let responses: Vec<CMat> = (0..n).map(|k| channel.response(k)).collect();

    let transform = |weighted: bool| -> Vec<CMat> {
        let mut taps = vec![CMat::zeros(m, m); n];
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for i in 0..m {
            for j in 0..m {
                for k in 0..n {
                    let w = if weighted { weights[k] } else { 1.0 };
                    buf[k] = responses[k][(i, j)] * w;
                }
                fft::ifft(&mut buf);
                for (t, v) in buf.iter().enumerate() {
                    taps[(t + n / 2) % n][(i, j)] = *v;
                }
            }
        }
        taps
    };
    let taps = transform(true);
    let raw_power: Vec<f64> = transform(false).iter().map(linalg::frobenius_sq).collect();
    let power: Vec<f64> = taps.iter().map(linalg::frobenius_sq).collect();
    let dynamic_range_db = dynamic_range(&power, &raw_power);
    ImpulseResponse {
        taps,
        tap_spacing: 1.0 / rate,
        dynamic_range_db,
    }
}

fn dynamic_range(power: &[f64], raw_power: &[f64]) -> f64 {
    let n = power.len();
    let peak = power.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let raw_peak = raw_power.iter().copied().fold(0.0, f64::max);
    let observed: Vec<bool> = raw_power
        .iter()
        .map(|&p| p > STRUCTURAL_ZERO * raw_peak)
        .collect();

    // Support: the shortest circular arc holding every tap above threshold.
    let threshold = peak * 10f64.powf(-SUPPORT_THRESHOLD_DB / 10.0);
    let strong: Vec<usize> = (0..n).filter(|&t| power[t] >= threshold).collect();
    let mut in_support = vec![false; n];
    let (mut gap, mut gap_end) = (0, strong[0]);
    for (i, &t) in strong.iter().enumerate() {
        let next = strong[(i + 1) % strong.len()];
        let g = (next + n - t) % n;
        let g = if g == 0 { n } else { g };
        if g > gap {
            gap = g;
            gap_end = next;
        }
    }
    let span = n - gap + 1;
    let start = (gap_end + n - SUPPORT_GUARD.min(n)) % n;
    for s in 0..(span + 2 * SUPPORT_GUARD).min(n) {
        in_support[(start + s) % n] = true;
    }

    let mut floor: Vec<f64> = (0..n)
        .filter(|&t| observed[t] && !in_support[t])
        .map(|t| power[t])
        .collect();
    if floor.is_empty() {
        return MAX_DYNAMIC_RANGE_DB;
    }
    floor.sort_by(f64::total_cmp);
    let median = floor[floor.len() / 2];
    (10.0 * (peak / median.max(peak * 1e-30)).log10()).clamp(0.0, MAX_DYNAMIC_RANGE_DB)
}
