//! Root-raised-cosine 16QAM, the conventional-modulation reference.

use std::f64::consts::PI;

use rand::Rng;

use crate::channel_sim::spectral::spectral_map;
use crate::error::{invalid, Result};
use crate::rng::{self, tags};
use crate::signal_core::MimoSignal;
use crate::C64;

/// Square 16QAM with unit mean power, row-major from the top-left point.
pub fn qam16_constellation() -> Vec<C64> {
    let levels = [-3.0, -1.0, 1.0, 3.0];
    let scale = 1.0 / 10f64.sqrt();
    let mut pts = Vec::with_capacity(16);
    for &q in levels.iter().rev() {
        for &i in &levels {
            pts.push(C64::new(i * scale, q * scale));
        }
    }
    pts
}

/// Transmitted symbols and the shaped waveform.
#[derive(Debug, Clone)]
pub struct QamCapture {
    pub symbols: Vec<Vec<C64>>,
    pub signal: MimoSignal,
}

/// Uniform random 16QAM on every tributary, root-raised-cosine shaped at
/// `sample_rate` (circularly, over the whole capture) and scaled to
/// `mean_power`.
pub fn generate_qam16(
    modes: usize,
    n_symbols: usize,
    baud: f64,
    sample_rate: f64,
    rolloff: f64,
    mean_power: f64,
    seed: u64,
) -> Result<QamCapture> {
    if modes == 0 || n_symbols == 0 {
        return Err(invalid("need at least one tributary and one symbol"));
    }
    let sps = sample_rate / baud;
    if !(sps >= 1.0 && (sps - sps.round()).abs() < 1e-9) {
        return Err(invalid(format!(
            "sample rate must be an integer multiple of the baud, got {sps}"
        )));
    }
    if !(mean_power > 0.0) {
        return Err(invalid("mean power must be positive"));
    }
    let sps = sps.round() as usize;
    let constellation = qam16_constellation();
    let base = rng::derive_seed(seed, tags::QAM_SYMBOLS);
    let symbols: Vec<Vec<C64>> = (0..modes)
        .map(|m| {
            let mut r = rng::stream(base, m as u64);
            (0..n_symbols)
                .map(|_| constellation[r.random_range(0..16)])
                .collect()
        })
        .collect();
    let upsampled = symbols
        .iter()
        .map(|s| {
            let mut v = vec![C64::new(0.0, 0.0); n_symbols * sps];
            for (k, &x) in s.iter().enumerate() {
                v[k * sps] = x;
            }
            v
        })
        .collect();
    let shaped = rrc_filter(&MimoSignal::new(upsampled, sample_rate)?, baud, rolloff)?;
    let scale = (mean_power / shaped.power()).sqrt();
    let signal = shaped.map_tributaries(|t| t.iter().map(|v| v * scale).collect());
    Ok(QamCapture { symbols, signal })
}

/// Zero-phase root-raised-cosine filter, gain `sqrt(fs / baud)` in the
/// passband, so two passes are a Nyquist pulse sampling the symbols back
/// with unit gain.
pub fn rrc_filter(signal: &MimoSignal, baud: f64, rolloff: f64) -> Result<MimoSignal> {
    if !(baud > 0.0 && baud.is_finite()) {
        return Err(invalid("baud must be positive"));
    }
    if !(0.0..=1.0).contains(&rolloff) {
        return Err(invalid(format!("roll-off must be in [0, 1], got {rolloff}")));
    }
    let gain = (signal.sample_rate() / baud).sqrt();
    Ok(spectral_map(signal, |_, f, bin| {
        let h = gain * raised_cosine(f, baud, rolloff).sqrt();
        bin.iter_mut().for_each(|v| *v *= h);
    }))
}

fn raised_cosine(f: f64, baud: f64, rolloff: f64) -> f64 {
    let a = f.abs();
    let f1 = (1.0 - rolloff) * baud / 2.0;
    let f2 = (1.0 + rolloff) * baud / 2.0;
    if a <= f1 {
        1.0
    } else if a <= f2 {
        0.5 * (1.0 + (PI / (rolloff * baud) * (a - f1)).cos())
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constellation_has_unit_power_and_sixteen_distinct_points() {
        let c = qam16_constellation();
        let p = c.iter().map(|v| v.norm_sqr()).sum::<f64>() / 16.0;
        assert!((p - 1.0).abs() < 1e-12);
        for i in 0..16 {
            for j in 0..i {
                assert!((c[i] - c[j]).norm() > 0.5);
            }
        }
    }

    #[test]
    fn matched_filter_returns_the_symbols() {
        let q = generate_qam16(2, 3000, 30e9, 60e9, 0.1, 1.0, 1).unwrap();
        assert!((q.signal.power() - 1.0).abs() < 1e-12);
        let rx = rrc_filter(&q.signal, 30e9, 0.1).unwrap().decimate(2, 0).unwrap();
        for m in 0..2 {
            let g = crate::capacity::snr::ls_gain(&q.symbols[m], rx.tributary(m));
            let err = crate::capacity::snr::residual_power(&q.symbols[m], rx.tributary(m), g);
            assert!(err / g.norm_sqr() < 1e-20, "{err}");
        }
    }

    #[test]
    fn spectrum_is_confined_to_the_rolloff_band() {
        let q = generate_qam16(1, 4096, 30e9, 60e9, 0.1, 1.0, 2).unwrap();
        let mut s = q.signal.tributary(0).to_vec();
        crate::fft::fft(&mut s);
        let n = s.len();
        for (k, v) in s.iter().enumerate() {
            if crate::fft::bin_frequency(k, n, 60e9).abs() > 16.5e9 + 1.0 {
                assert!(v.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn bad_rates_are_rejected() {
        assert!(generate_qam16(1, 10, 30e9, 45e9, 0.1, 1.0, 1).is_err());
        assert!(generate_qam16(1, 10, 30e9, 60e9, 0.1, 0.0, 1).is_err());
    }
}
