//! Receive chain: resampling, filtering, dispersion compensation,
//! cross-correlation alignment, data-aided FDE-LMS MIMO equalization and
//! data-aided phase recovery.

mod align;
mod edc;
mod fde;
mod phase;
mod pipeline;

pub use align::{align_by_crosscorrelation, align_with_threshold, AlignmentResult};
pub use edc::apply_edc;
pub use fde::{fde_lms_equalize, EqualizerState};
pub use phase::phase_recovery;
pub use pipeline::{run_pipeline, PipelineOutput};

pub(crate) use pipeline::check_compatible;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const DEFAULT_ALIGN_THRESHOLD: f64 = 10.0;

/// Receive-chain settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Hz
    pub target_rate: f64,
    /// Single-sided 3 dB bandwidth of the receive filter, Hz.
    pub filter_bw: f64,
    pub filter_order: u32,
    /// Samples per assumed symbol.
    pub oversampling: f64,
    /// Phase-recovery averaging window, samples.
    pub phase_window: usize,
    /// Normalized LMS step size.
    pub lms_step: f64,
    pub lms_passes: usize,
    /// FFT length of the equalizer, a power of two.
    pub block_size: usize,
    /// Overlap-save overlap; the taps span `overlap` samples.
    pub overlap: usize,
    /// Largest alignment lag searched, samples.
    pub max_lag: usize,
    pub align_threshold: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            target_rate: 60e9,
            filter_bw: 15e9,
            filter_order: 4,
            oversampling: 2.0,
            phase_window: 200,
            lms_step: 0.05,
            lms_passes: 3,
            block_size: 4096,
            overlap: 2048,
            max_lag: 4096,
            align_threshold: DEFAULT_ALIGN_THRESHOLD,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("target_rate", self.target_rate)?;
        positive("filter_bw", self.filter_bw)?;
        positive("lms_step", self.lms_step)?;
        positive("align_threshold", self.align_threshold)?;
        if !(self.oversampling.is_finite() && self.oversampling >= 1.0) {
            return Err(invalid(format!(
                "oversampling must be at least 1, got {}",
                self.oversampling
            )));
        }
        if self.filter_order == 0 {
            return Err(invalid("filter_order must be at least 1"));
        }
        if self.phase_window == 0 {
            return Err(invalid("phase_window must be at least 1"));
        }
        if self.lms_passes == 0 {
            return Err(invalid("lms_passes must be at least 1"));
        }
        if !self.block_size.is_power_of_two() || self.block_size < 8 {
            return Err(invalid(format!(
                "block_size must be a power of two of at least 8, got {}",
                self.block_size
            )));
        }
        if self.overlap == 0 || self.overlap >= self.block_size || !self.overlap.is_multiple_of(2) {
            return Err(invalid(format!(
                "overlap must be even and in 2..block_size, got {}",
                self.overlap
            )));
        }
        Ok(())
    }

    /// Symbol rate implied by `oversampling` at `target_rate`.
    pub fn assumed_baud(&self) -> f64 {
        self.target_rate / self.oversampling
    }
}
