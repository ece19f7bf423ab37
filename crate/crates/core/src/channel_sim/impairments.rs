use std::f64::consts::PI;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::signal_core::wgn::gaussian_samples;
use crate::signal_core::MimoSignal;
use crate::{rng, C64};

/// Adds independent circular Gaussian noise to every tributary at
/// `snr_db` below the mean per-tributary signal power. `f64::INFINITY`
/// returns the signal unchanged.
pub fn add_awgn(signal: &MimoSignal, snr_db: f64, seed: u64) -> Result<MimoSignal> {
    if snr_db == f64::INFINITY {
        return Ok(signal.clone());
    }
    if !snr_db.is_finite() {
        return Err(invalid(format!("SNR must be finite or +inf, got {snr_db}")));
    }
    let power = signal.power();
    if !(power > 0.0) {
        return Err(invalid("cannot set an SNR on a zero-power signal"));
    }
    Ok(add_noise_power(signal, power / 10f64.powf(snr_db / 10.0), seed))
}

/// Adds noise of absolute power `noise_power` per tributary.
pub(crate) fn add_noise_power(signal: &MimoSignal, noise_power: f64, seed: u64) -> MimoSignal {
    if noise_power <= 0.0 {
        return signal.clone();
    }
    let n = signal.len();
    let tributaries = signal
        .tributaries()
        .par_iter()
        .enumerate()
        .map(|(m, t)| {
            let noise = gaussian_samples(n, noise_power, seed, m as u64);
            t.iter().zip(noise).map(|(s, w)| s + w).collect()
        })
        .collect();
    MimoSignal::from_trusted(tributaries, signal.sample_rate())
}

/// Wiener phase noise `phi(n) = phi(n-1) + N(0, 2 pi linewidth / fs)`,
/// identical on every tributary (one shared LO).
pub fn apply_phase_noise(signal: &MimoSignal, linewidth: f64, seed: u64) -> Result<MimoSignal> {
    if !(linewidth.is_finite() && linewidth >= 0.0) {
        return Err(invalid(format!(
            "linewidth must be non-negative, got {linewidth}"
        )));
    }
    if linewidth == 0.0 {
        return Ok(signal.clone());
    }
    let phase = wiener_phase(signal.len(), linewidth, signal.sample_rate(), seed);
    let rot: Vec<C64> = phase.iter().map(|&p| C64::from_polar(1.0, p)).collect();
    Ok(signal.map_tributaries(|t| t.iter().zip(&rot).map(|(s, r)| s * r).collect()))
}

pub(crate) fn wiener_phase(n: usize, linewidth: f64, sample_rate: f64, seed: u64) -> Vec<f64> {
    let sd = (2.0 * PI * linewidth / sample_rate).sqrt();
    let normal = Normal::new(0.0, sd).expect("finite standard deviation");
    let mut rng = rng::stream(seed, 0);
    let mut acc = 0.0;
    (0..n)
        .map(|i| {
            if i > 0 {
                acc += normal.sample(&mut rng);
            }
            acc
        })
        .collect()
}

/// Multiplies by `exp(j 2 pi offset n / fs)`.
pub fn apply_frequency_offset(signal: &MimoSignal, offset: f64) -> Result<MimoSignal> {
    let nyquist = signal.sample_rate() / 2.0;
    if !(offset.is_finite() && offset.abs() < nyquist) {
        return Err(invalid(format!(
            "frequency offset {offset} Hz is not below Nyquist ({nyquist} Hz)"
        )));
    }
    if offset == 0.0 {
        return Ok(signal.clone());
    }
    let step = 2.0 * PI * offset / signal.sample_rate();
    Ok(signal.map_tributaries(|t| {
        t.iter()
            .enumerate()
            .map(|(n, s)| s * C64::from_polar(1.0, step * n as f64))
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft;
    use crate::signal_core::generate_wgn_mimo;

    fn noise_power(a: &MimoSignal, b: &MimoSignal) -> f64 {
        let mut acc = 0.0;
        for (x, y) in a.tributaries().iter().zip(b.tributaries()) {
            acc += x.iter().zip(y).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>();
        }
        acc / (a.len() * a.modes()) as f64
    }

    #[test]
    fn infinite_snr_is_identity() {
        let s = generate_wgn_mimo(2, 100, 1e9, 1.0, 1).unwrap();
        assert_eq!(add_awgn(&s, f64::INFINITY, 5).unwrap(), s);
    }

    #[test]
    fn measured_snr_matches_request() {
        let s = generate_wgn_mimo(1, 1_000_000, 40e9, 1.0, 1).unwrap();
        let y = add_awgn(&s, 10.0, 2).unwrap();
        let snr = 10.0 * (s.power() / noise_power(&y, &s)).log10();
        assert!((snr - 10.0).abs() < 0.1, "{snr}");
    }

    #[test]
    fn different_seeds_give_different_noise_of_equal_power() {
        let s = generate_wgn_mimo(1, 200_000, 40e9, 1.0, 1).unwrap();
        let a = add_awgn(&s, 10.0, 1).unwrap();
        let b = add_awgn(&s, 10.0, 2).unwrap();
        assert_ne!(a, b);
        let (pa, pb) = (noise_power(&a, &s), noise_power(&b, &s));
        assert!((pa / pb - 1.0).abs() < 0.02);
    }

    #[test]
    fn zero_linewidth_is_identity() {
        let s = generate_wgn_mimo(2, 100, 1e9, 1.0, 1).unwrap();
        assert_eq!(apply_phase_noise(&s, 0.0, 3).unwrap(), s);
    }

    #[test]
    fn phase_increment_variance() {
        let (lw, fs) = (10e3, 40e9);
        let phi = wiener_phase(1_000_000, lw, fs, 9);
        let inc: Vec<f64> = phi.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = inc.iter().sum::<f64>() / inc.len() as f64;
        let var = inc.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (inc.len() - 1) as f64;
        let expect = 2.0 * PI * lw / fs;
        assert!((var / expect - 1.0).abs() < 0.05, "{var} vs {expect}");
    }

    #[test]
    fn one_hertz_drift_is_small_over_a_capture() {
        // std of phi(N) = sqrt(2 pi * 1 Hz * N / fs), N / fs = 0.2 ms
        let expect = (2.0 * PI * 1.0 * 0.2e-3_f64).sqrt();
        let finals: Vec<f64> = (0..200)
            .map(|seed| {
                *wiener_phase(8_000_000 / 100, 1.0 * 100.0, 40e9, seed)
                    .last()
                    .unwrap()
            })
            .collect();
        // Same endpoint statistics with 100x fewer samples at 100x the linewidth.
        let sd = (finals.iter().map(|p| p * p).sum::<f64>() / finals.len() as f64).sqrt();
        assert!((sd / expect - 1.0).abs() < 0.2, "{sd} vs {expect}");
        assert!(expect < 0.05);
    }

    #[test]
    fn phase_noise_is_common_to_all_tributaries() {
        let s = MimoSignal::new(vec![vec![C64::new(1.0, 0.0); 1000]; 2], 1e9).unwrap();
        let y = apply_phase_noise(&s, 1e6, 4).unwrap();
        assert_eq!(y.tributary(0), y.tributary(1));
    }

    #[test]
    fn offset_moves_a_tone() {
        let (n, fs) = (1000, 10e9);
        let tone: Vec<C64> = (0..n)
            .map(|i| C64::from_polar(1.0, 2.0 * PI * 2e9 * i as f64 / fs))
            .collect();
        let s = MimoSignal::new(vec![tone], fs).unwrap();
        let mut spec = apply_frequency_offset(&s, 1e9).unwrap().tributary(0).to_vec();
        fft::fft(&mut spec);
        let peak = (0..n)
            .max_by(|&a, &b| spec[a].norm().total_cmp(&spec[b].norm()))
            .unwrap();
        assert!((fft::bin_frequency(peak, n, fs) - 3e9).abs() < 1.0);
    }

    #[test]
    fn offset_and_back_is_identity_and_nyquist_is_rejected() {
        let s = generate_wgn_mimo(2, 4096, 40e9, 1.0, 1).unwrap();
        let back = apply_frequency_offset(&apply_frequency_offset(&s, 1.3e9).unwrap(), -1.3e9).unwrap();
        for (a, b) in back
            .tributaries()
            .iter()
            .flatten()
            .zip(s.tributaries().iter().flatten())
        {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(apply_frequency_offset(&s, 20e9).is_err());
    }
}
