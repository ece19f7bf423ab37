//! Sampled complex baseband fields and the operations every other stage
//! builds on: noise generation, rate conversion, spectral filtering and
//! power measurement.

mod filter;
pub mod io;
mod resample;
pub(crate) mod wgn;

pub use filter::{gaussian_filter, Filtered, GaussianFilter};
pub use resample::{resample, resample_mimo};
pub use wgn::{generate_wgn, generate_wgn_mimo};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::C64;

/// A uniformly sampled complex waveform (one tributary).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    samples: Vec<C64>,
    sample_rate: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<C64>, sample_rate: f64) -> Result<Self> {
        check_rate(sample_rate)?;
        if let Some(i) = samples
            .iter()
            .position(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            return Err(invalid(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, sample_rate })
    }

    /// Builds a signal from values already known to be finite.
    pub(crate) fn from_trusted(samples: Vec<C64>, sample_rate: f64) -> Self {
        debug_assert!(sample_rate > 0.0);
        Self { samples, sample_rate }
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<C64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample duration of the whole buffer in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Keeps every `factor`-th sample starting at `offset`.
    pub fn decimate(&self, factor: usize, offset: usize) -> Result<Self> {
        if factor == 0 {
            return Err(invalid("decimation factor must be at least 1"));
        }
        let samples = self
            .samples
            .iter()
            .skip(offset)
            .step_by(factor)
            .copied()
            .collect();
        Ok(Self::from_trusted(samples, self.sample_rate / factor as f64))
    }
}

/// Mean of `|x|^2`.
pub fn measure_power(signal: &ComplexSignal) -> Result<f64> {
    if signal.is_empty() {
        return Err(invalid("cannot measure the power of an empty signal"));
    }
    Ok(mean_power(signal.samples()))
}

pub(crate) fn mean_power(samples: &[C64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64
}

fn check_rate(rate: f64) -> Result<()> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("sample rate must be positive, got {rate}")))
    }
}

/// `M` co-timed tributaries sharing one sample rate.
///
/// Tributary `m` is a polarization for a single-mode fiber or a
/// polarization/spatial-mode pair for a few-mode fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoSignal {
    tributaries: Vec<Vec<C64>>,
    sample_rate: f64,
}

impl MimoSignal {
    pub fn new(tributaries: Vec<Vec<C64>>, sample_rate: f64) -> Result<Self> {
        check_rate(sample_rate)?;
        if tributaries.is_empty() {
            return Err(invalid("a MIMO signal needs at least one tributary"));
        }
        let len = tributaries[0].len();
        if tributaries.iter().any(|t| t.len() != len) {
            return Err(Error::DimensionMismatch(
                "all tributaries must have equal length".into(),
            ));
        }
        for (m, t) in tributaries.iter().enumerate() {
            if t.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
                return Err(invalid(format!("tributary {m} holds non-finite samples")));
            }
        }
        Ok(Self {
            tributaries,
            sample_rate,
        })
    }

    pub(crate) fn from_trusted(tributaries: Vec<Vec<C64>>, sample_rate: f64) -> Self {
        debug_assert!(!tributaries.is_empty());
        Self {
            tributaries,
            sample_rate,
        }
    }

    pub fn from_signals(signals: Vec<ComplexSignal>) -> Result<Self> {
        let rate = signals
            .first()
            .map(|s| s.sample_rate())
            .ok_or_else(|| invalid("a MIMO signal needs at least one tributary"))?;
        if signals.iter().any(|s| s.sample_rate() != rate) {
            return Err(Error::DimensionMismatch(
                "all tributaries must share one sample rate".into(),
            ));
        }
        let tributaries = signals.into_iter().map(|s| s.into_samples()).collect();
        Self::new(tributaries, rate)
    }

    pub fn modes(&self) -> usize {
        self.tributaries.len()
    }

    pub fn len(&self) -> usize {
        self.tributaries[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn tributary(&self, m: usize) -> &[C64] {
        &self.tributaries[m]
    }

    pub fn tributaries(&self) -> &[Vec<C64>] {
        &self.tributaries
    }

    pub fn into_tributaries(self) -> Vec<Vec<C64>> {
        self.tributaries
    }

    pub fn signal(&self, m: usize) -> ComplexSignal {
        ComplexSignal::from_trusted(self.tributaries[m].clone(), self.sample_rate)
    }

    pub fn signals(&self) -> Vec<ComplexSignal> {
        (0..self.modes()).map(|m| self.signal(m)).collect()
    }

    /// Average of the per-tributary mean powers.
    pub fn power(&self) -> f64 {
        self.tributaries.iter().map(|t| mean_power(t)).sum::<f64>() / self.modes() as f64
    }

    /// Samples `[start, start + len)` of every tributary.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.len() {
            return Err(invalid(format!(
                "slice {start}..{} exceeds length {}",
                start + len,
                self.len()
            )));
        }
        let tributaries = self
            .tributaries
            .iter()
            .map(|t| t[start..start + len].to_vec())
            .collect();
        Ok(Self::from_trusted(tributaries, self.sample_rate))
    }

    pub fn decimate(&self, factor: usize, offset: usize) -> Result<Self> {
        if factor == 0 {
            return Err(invalid("decimation factor must be at least 1"));
        }
        let tributaries = self
            .tributaries
            .iter()
            .map(|t| t.iter().skip(offset).step_by(factor).copied().collect())
            .collect();
        Ok(Self::from_trusted(tributaries, self.sample_rate / factor as f64))
    }

    /// Applies `f` to every tributary in parallel.
    pub(crate) fn map_tributaries<F>(&self, f: F) -> Self
    where
        F: Fn(&[C64]) -> Vec<C64> + Sync,
    {
        let tributaries = self.tributaries.par_iter().map(|t| f(t)).collect();
        Self::from_trusted(tributaries, self.sample_rate)
    }

    pub(crate) fn check_same_shape(&self, other: &MimoSignal) -> Result<()> {
        if self.modes() != other.modes() {
            return Err(Error::DimensionMismatch(format!(
                "{} tributaries vs {}",
                self.modes(),
                other.modes()
            )));
        }
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch(format!(
                "length {} vs {}",
                self.len(),
                other.len()
            )));
        }
        if self.sample_rate != other.sample_rate {
            return Err(Error::DimensionMismatch(format!(
                "sample rate {} vs {}",
                self.sample_rate, other.sample_rate
            )));
        }
        Ok(())
    }
}

/// Normalized mean squared error `sum|a-b|^2 / sum|b|^2` in dB, `b` being
/// the reference.
pub fn nmse_db(estimate: &MimoSignal, reference: &MimoSignal) -> Result<f64> {
    estimate.check_same_shape(reference)?;
    let mut err = 0.0;
    let mut norm = 0.0;
    for (e, r) in estimate.tributaries().iter().zip(reference.tributaries()) {
        for (a, b) in e.iter().zip(r) {
            err += (a - b).norm_sqr();
            norm += b.norm_sqr();
        }
    }
    if norm == 0.0 {
        return Err(invalid("reference signal has zero power"));
    }
    Ok(10.0 * (err / norm).max(1e-30).log10())
}

/// Descriptive header stored alongside binary captures.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CaptureInfo {
    pub modes: usize,
    pub samples: usize,
    pub sample_rate: f64,
}

impl From<&MimoSignal> for CaptureInfo {
    fn from(s: &MimoSignal) -> Self {
        Self {
            modes: s.modes(),
            samples: s.len(),
            sample_rate: s.sample_rate(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_samples() {
        let err = ComplexSignal::new(vec![C64::new(f64::NAN, 0.0)], 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
        assert!(ComplexSignal::new(vec![], 0.0).is_err());
    }

    #[test]
    fn measure_power_trivial_cases() {
        let ones = ComplexSignal::new(vec![C64::new(1.0, 0.0); 16], 1.0).unwrap();
        assert_eq!(measure_power(&ones).unwrap(), 1.0);
        let zeros = ComplexSignal::new(vec![C64::new(0.0, 0.0); 16], 1.0).unwrap();
        assert_eq!(measure_power(&zeros).unwrap(), 0.0);
        let empty = ComplexSignal::new(vec![], 1.0).unwrap();
        assert!(matches!(measure_power(&empty), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn mimo_requires_equal_lengths() {
        let err = MimoSignal::new(vec![vec![C64::default(); 3], vec![C64::default(); 4]], 1.0);
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
        assert!(MimoSignal::new(vec![], 1.0).is_err());
    }
}
