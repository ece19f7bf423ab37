use std::f64::consts::LN_2;

use super::{ComplexSignal, MimoSignal};
use crate::error::{invalid, Result};
use crate::fft;
use crate::C64;

/// Zero-phase super-Gaussian low-pass,
/// `|H(f)| = exp(-ln2/2 * (|f|/B)^(2k))`, so `|H(B)|^2 = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFilter {
    bandwidth_3db: f64,
    order: u32,
}

/// Filter output plus the flag raised when the cutoff lies beyond Nyquist.
#[derive(Debug, Clone)]
pub struct Filtered<T> {
    pub signal: T,
    pub above_nyquist: bool,
}

impl GaussianFilter {
    pub fn new(bandwidth_3db: f64, order: u32) -> Result<Self> {
        if !(bandwidth_3db.is_finite() && bandwidth_3db > 0.0) {
            return Err(invalid(format!(
                "bandwidth must be positive, got {bandwidth_3db}"
            )));
        }
        if order == 0 {
            return Err(invalid("filter order must be at least 1"));
        }
        Ok(Self { bandwidth_3db, order })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth_3db
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Amplitude response at frequency `f` (Hz).
    pub fn gain(&self, f: f64) -> f64 {
        let x = (f.abs() / self.bandwidth_3db).powi(2 * self.order as i32);
        (-0.5 * LN_2 * x).exp()
    }

    pub fn apply(&self, signal: &ComplexSignal) -> Filtered<ComplexSignal> {
        let rate = signal.sample_rate();
        let out = self.filter_samples(signal.samples(), rate);
        Filtered {
            signal: ComplexSignal::from_trusted(out, rate),
            above_nyquist: self.above_nyquist(rate),
        }
    }

    pub fn apply_mimo(&self, signal: &MimoSignal) -> Filtered<MimoSignal> {
        let rate = signal.sample_rate();
        let above_nyquist = self.above_nyquist(rate);
        if above_nyquist {
            log::warn!(
                "filter bandwidth {} Hz exceeds Nyquist at {} S/s",
                self.bandwidth_3db,
                rate
            );
        }
        Filtered {
            signal: signal.map_tributaries(|t| self.filter_samples(t, rate)),
            above_nyquist,
        }
    }

    fn above_nyquist(&self, rate: f64) -> bool {
        self.bandwidth_3db > rate / 2.0
    }

    pub(crate) fn filter_samples(&self, input: &[C64], rate: f64) -> Vec<C64> {
        let n = input.len();
        if n == 0 {
            return Vec::new();
        }
        let mut buf = input.to_vec();
        fft::fft(&mut buf);
        for (k, v) in buf.iter_mut().enumerate() {
            *v *= self.gain(fft::bin_frequency(k, n, rate));
        }
        fft::ifft(&mut buf);
        buf
    }
}

pub fn gaussian_filter(
    signal: &ComplexSignal,
    bandwidth_3db: f64,
    order: u32,
) -> Result<Filtered<ComplexSignal>> {
    Ok(GaussianFilter::new(bandwidth_3db, order)?.apply(signal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_core::{generate_wgn, measure_power};
    use std::f64::consts::PI;

    fn tone(n: usize, rate: f64, f: f64) -> ComplexSignal {
        let s = (0..n)
            .map(|i| C64::from_polar(1.0, 2.0 * PI * f * i as f64 / rate))
            .collect();
        ComplexSignal::new(s, rate).unwrap()
    }

    #[test]
    fn fifteen_ghz_filter_on_60_gsps_is_valid() {
        let s = generate_wgn(6000, 60e9, 1.0, 1).unwrap();
        let out = gaussian_filter(&s, 15e9, 4).unwrap();
        assert!(!out.above_nyquist);
        assert_eq!(out.signal.len(), 6000);
    }

    #[test]
    fn dc_gain_is_unity() {
        let f = GaussianFilter::new(15e9, 4).unwrap();
        assert!((f.gain(0.0) - 1.0).abs() < 1e-12);
        let dc = ComplexSignal::new(vec![C64::new(0.3, -0.2); 256], 60e9).unwrap();
        let out = f.apply(&dc).signal;
        for v in out.samples() {
            assert!((v - C64::new(0.3, -0.2)).norm() < 1e-12);
        }
    }

    #[test]
    fn tone_at_cutoff_loses_half_its_power() {
        // analytic: |H(B)|^2 = exp(-ln 2) = 1/2
        let s = tone(60_000, 60e9, 15e9);
        let out = gaussian_filter(&s, 15e9, 4).unwrap().signal;
        let ratio = measure_power(&out).unwrap() / measure_power(&s).unwrap();
        assert!((ratio - 0.5).abs() < 0.5e-6);
    }

    #[test]
    fn cutoff_beyond_nyquist_is_flagged_not_rejected() {
        let s = generate_wgn(64, 20e9, 1.0, 1).unwrap();
        let out = gaussian_filter(&s, 15e9, 4).unwrap();
        assert!(out.above_nyquist);
        assert!(gaussian_filter(&s, 0.0, 4).is_err());
        assert!(gaussian_filter(&s, 1e9, 0).is_err());
    }

    #[test]
    fn two_passes_equal_squared_response() {
        let s = generate_wgn(4096, 60e9, 1.0, 5).unwrap();
        let f = GaussianFilter::new(15e9, 4).unwrap();
        let twice = f.apply(&f.apply(&s).signal).signal;
        let mut a = twice.samples().to_vec();
        fft::fft(&mut a);
        let mut b = s.samples().to_vec();
        fft::fft(&mut b);
        for (k, (x, y)) in a.iter().zip(&b).enumerate() {
            let g = f.gain(fft::bin_frequency(k, 4096, 60e9));
            let expect = y * g * g;
            assert!((x - expect).norm() <= 1e-10 * y.norm().max(1.0));
        }
    }
}
