//! Thin helpers over `rustfft`.
//!
//! All transforms use the unnormalized forward convention
//! `X[k] = sum_n x[n] exp(-j 2 pi k n / N)`; [`ifft`] divides by `N` so a
//! forward/inverse pair is the identity.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::C64;

/// Forward FFT in place.
pub fn fft(buf: &mut [C64]) {
    if buf.len() < 2 {
        return;
    }
    let plan = FftPlanner::new().plan_fft_forward(buf.len());
    plan.process(buf);
}

/// Inverse FFT in place, scaled by `1/N`.
pub fn ifft(buf: &mut [C64]) {
    if buf.len() < 2 {
        return;
    }
    let plan = FftPlanner::new().plan_fft_inverse(buf.len());
    plan.process(buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
}

/// Signed frequency of FFT bin `k` for an `n`-point transform at `rate`.
///
/// Bins `0..=(n-1)/2` are non-negative; the rest wrap to negative
/// frequencies (for even `n`, bin `n/2` is `-rate/2`).
#[inline]
pub fn bin_frequency(k: usize, n: usize, rate: f64) -> f64 {
    let signed = if k <= (n - 1) / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    };
    signed * rate / n as f64
}

pub fn frequencies(n: usize, rate: f64) -> Vec<f64> {
    (0..n).map(|k| bin_frequency(k, n, rate)).collect()
}

/// Forward and inverse plans of one size, reused across many blocks.
#[derive(Clone)]
pub struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
    len: usize,
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch_len,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn scratch(&self) -> Vec<C64> {
        vec![C64::new(0.0, 0.0); self.scratch_len]
    }

    pub fn forward(&self, buf: &mut [C64], scratch: &mut [C64]) {
        self.forward.process_with_scratch(buf, scratch);
    }

    /// Inverse transform, scaled by `1/N`.
    pub fn inverse(&self, buf: &mut [C64], scratch: &mut [C64]) {
        self.inverse.process_with_scratch(buf, scratch);
        let scale = 1.0 / self.len as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_frequencies_follow_numpy_convention() {
        assert_eq!(frequencies(4, 4.0), vec![0.0, 1.0, -2.0, -1.0]);
        assert_eq!(frequencies(5, 5.0), vec![0.0, 1.0, 2.0, -2.0, -1.0]);
    }

    #[test]
    fn round_trip_is_identity() {
        let orig: Vec<C64> = (0..37).map(|i| C64::new(i as f64, -(i as f64) * 0.5)).collect();
        let mut buf = orig.clone();
        fft(&mut buf);
        ifft(&mut buf);
        for (a, b) in orig.iter().zip(&buf) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}
