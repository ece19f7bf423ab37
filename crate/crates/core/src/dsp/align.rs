use serde::{Deserialize, Serialize};

use super::DEFAULT_ALIGN_THRESHOLD;
use crate::error::{invalid, Error, Result};
use crate::fft::FftPair;
use crate::signal_core::MimoSignal;
use crate::C64;

/// Samples on each side of the peak left out of the off-peak RMS.
const PEAK_GUARD: usize = 8;

/// Time offset and carrier phase between two captures of one noise field.
///
/// `lag` follows `f_out[n + lag] ~ f_in[n] * exp(j phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub lag: i64,
    pub phase: f64,
    /// Peak correlation magnitude over the RMS of the off-peak correlation.
    pub peak_ratio: f64,
}

impl AlignmentResult {
    /// Cuts both captures down to their common span.
    pub fn trim(&self, f_in: &MimoSignal, f_out: &MimoSignal) -> Result<(MimoSignal, MimoSignal)> {
        let shift = self.lag.unsigned_abs() as usize;
        let len = f_in.len().min(f_out.len());
        if shift >= len {
            return Err(invalid(format!("lag {} leaves no overlap", self.lag)));
        }
        let (a, b) = if self.lag >= 0 { (0, shift) } else { (shift, 0) };
        let n = (f_in.len() - a).min(f_out.len() - b);
        Ok((f_in.slice(a, n)?, f_out.slice(b, n)?))
    }
}

/// Aligns with the default detection threshold.
pub fn align_by_crosscorrelation(
    f_in: &MimoSignal,
    f_out: &MimoSignal,
    max_lag: usize,
) -> Result<AlignmentResult> {
    align_with_threshold(f_in, f_out, max_lag, DEFAULT_ALIGN_THRESHOLD)
}

/// Finds the lag in `-max_lag..=max_lag` maximizing the magnitude of the
/// cross-correlation summed over tributaries. Ties go to the smallest
/// `|lag|`. Fails with [`Error::NoCorrelation`] when the peak does not
/// stand `threshold` times above the off-peak RMS.
pub fn align_with_threshold(
    f_in: &MimoSignal,
    f_out: &MimoSignal,
    max_lag: usize,
    threshold: f64,
) -> Result<AlignmentResult> {
    if f_in.modes() != f_out.modes() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} tributaries",
            f_in.modes(),
            f_out.modes()
        )));
    }
    if f_in.sample_rate() != f_out.sample_rate() {
        return Err(Error::DimensionMismatch(format!(
            "sample rate {} vs {}",
            f_in.sample_rate(),
            f_out.sample_rate()
        )));
    }
    let n = f_in.len().max(f_out.len());
    if f_in.len().min(f_out.len()) < 2 * max_lag.max(1) {
        return Err(invalid(format!(
            "captures of {} and {} samples are too short for lags up to {max_lag}",
            f_in.len(),
            f_out.len()
        )));
    }
    let corr = correlate(f_in, f_out, n, max_lag);

    // Index i holds lag i - max_lag.
    let lag_of = |i: usize| i as i64 - max_lag as i64;
    let mut best = max_lag;
    for i in 0..corr.len() {
        let (a, b) = (corr[i].norm(), corr[best].norm());
        if a > b || (a == b && lag_of(i).abs() < lag_of(best).abs()) {
            best = i;
        }
    }
    let peak = corr[best];
    let off: Vec<f64> = corr
        .iter()
        .enumerate()
        .filter(|(i, _)| i.abs_diff(best) > PEAK_GUARD)
        .map(|(_, c)| c.norm_sqr())
        .collect();
    let rms = if off.is_empty() {
        0.0
    } else {
        (off.iter().sum::<f64>() / off.len() as f64).sqrt()
    };
    let peak_ratio = if rms > 0.0 {
        peak.norm() / rms
    } else if peak.norm() > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    if !(peak_ratio >= threshold) {
        return Err(Error::NoCorrelation {
            peak_ratio,
            threshold,
        });
    }
    Ok(AlignmentResult {
        lag: lag_of(best),
        phase: peak.arg(),
        peak_ratio,
    })
}

/// `c(l) = sum_m sum_n f_out[m][n + l] conj(f_in[m][n])` for
/// `l in -max_lag..=max_lag`, via zero-padded FFTs. Tributaries are
/// processed one at a time to bound memory on long captures.
fn correlate(f_in: &MimoSignal, f_out: &MimoSignal, n: usize, max_lag: usize) -> Vec<C64> {
    let len = fast_len(n + max_lag);
    let fft = FftPair::new(len);
    let mut scratch = fft.scratch();
    let mut acc = vec![C64::new(0.0, 0.0); 2 * max_lag + 1];
    let zero = C64::new(0.0, 0.0);
    for (a, b) in f_in.tributaries().iter().zip(f_out.tributaries()) {
        let mut x = a.clone();
        x.resize(len, zero);
        fft.forward(&mut x, &mut scratch);
        let mut y = b.clone();
        y.resize(len, zero);
        fft.forward(&mut y, &mut scratch);
        x.iter().zip(y.iter_mut()).for_each(|(u, v)| *v *= u.conj());
        drop(x);
        fft.inverse(&mut y, &mut scratch);
        for (i, c) in acc.iter_mut().enumerate() {
            let l = i as i64 - max_lag as i64;
            *c += y[l.rem_euclid(len as i64) as usize];
        }
    }
    acc
}

/// Smallest `2^a 3^b 5^c` not below `n`.
fn fast_len(n: usize) -> usize {
    let mut best = n.next_power_of_two();
    let mut p5 = 1;
    while p5 < best {
        let mut p35 = p5;
        while p35 < best {
            let mut v = p35;
            while v < n {
                v *= 2;
            }
            best = best.min(v);
            p35 *= 3;
        }
        p5 *= 5;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_core::generate_wgn_mimo;
    use std::f64::consts::PI;

    fn delayed(x: &MimoSignal, d: usize, phase: f64) -> MimoSignal {
        let rot = C64::from_polar(1.0, phase);
        let t = x
            .tributaries()
            .iter()
            .map(|t| {
                let mut v = vec![C64::new(0.0, 0.0); d];
                v.extend(t.iter().map(|s| s * rot));
                v.truncate(t.len());
                v
            })
            .collect();
        MimoSignal::new(t, x.sample_rate()).unwrap()
    }

    #[test]
    fn identical_captures_align_at_zero() {
        let x = generate_wgn_mimo(2, 20_000, 60e9, 1.0, 1).unwrap();
        let a = align_by_crosscorrelation(&x, &x, 2000).unwrap();
        assert_eq!(a.lag, 0);
        assert!(a.phase.abs() < 1e-12);
        assert!(a.peak_ratio > 50.0);
    }

    #[test]
    fn recovers_delay_and_rotation() {
        let x = generate_wgn_mimo(2, 50_000, 60e9, 1.0, 2).unwrap();
        let y = delayed(&x, 1000, PI / 4.0);
        let a = align_by_crosscorrelation(&x, &y, 4096).unwrap();
        assert_eq!(a.lag, 1000);
        assert!((a.phase - PI / 4.0).abs() < 1e-6);
        // Negative lag: swap the roles.
        let b = align_by_crosscorrelation(&y, &x, 4096).unwrap();
        assert_eq!(b.lag, -1000);
        let (fi, fo) = a.trim(&x, &y).unwrap();
        assert_eq!(fi.len(), 49_000);
        assert_eq!(
            fo.tributary(0)[0],
            x.tributary(0)[0] * C64::from_polar(1.0, PI / 4.0)
        );
    }

    #[test]
    fn independent_noise_is_rejected() {
        let x = generate_wgn_mimo(2, 1_000_000, 60e9, 1.0, 3).unwrap();
        let y = generate_wgn_mimo(2, 1_000_000, 60e9, 1.0, 4).unwrap();
        match align_by_crosscorrelation(&x, &y, 4096) {
            Err(Error::NoCorrelation { peak_ratio, .. }) => assert!(peak_ratio < 10.0),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn short_captures_and_mode_mismatch_are_errors() {
        let x = generate_wgn_mimo(2, 100, 60e9, 1.0, 5).unwrap();
        let y = generate_wgn_mimo(6, 100, 60e9, 1.0, 5).unwrap();
        assert!(align_by_crosscorrelation(&x, &x, 60).is_err());
        assert!(matches!(
            align_by_crosscorrelation(&x, &y, 10),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn fast_lengths() {
        assert_eq!(fast_len(1000), 1000);
        assert_eq!(fast_len(1001), 1024);
        assert_eq!(fast_len(12_004_096), 12_150_000);
        for n in [7usize, 97, 4099, 65537] {
            let l = fast_len(n);
            assert!(l >= n);
            let mut r = l;
            for p in [2, 3, 5] {
                while r.is_multiple_of(p) {
                    r /= p;
                }
            }
            assert_eq!(r, 1);
        }
    }
}
