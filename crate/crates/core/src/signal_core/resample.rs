//! Band-limited rate conversion by zero-padding or truncating the spectrum
//! of the whole capture. Exact for periodic signals, which is what a finite
//! capture is to the FFT.

use super::{ComplexSignal, MimoSignal};
use crate::error::{invalid, Result};
use crate::fft;
use crate::C64;

pub fn resample(signal: &ComplexSignal, new_rate: f64) -> Result<ComplexSignal> {
    check(new_rate)?;
    let out = resample_samples(signal.samples(), signal.sample_rate(), new_rate);
    Ok(ComplexSignal::from_trusted(out, new_rate))
}

pub fn resample_mimo(signal: &MimoSignal, new_rate: f64) -> Result<MimoSignal> {
    check(new_rate)?;
    let old = signal.sample_rate();
    let mut out = signal.map_tributaries(|t| resample_samples(t, old, new_rate));
    out.sample_rate = new_rate;
    Ok(out)
}

fn check(new_rate: f64) -> Result<()> {
    if new_rate.is_finite() && new_rate > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("target rate must be positive, got {new_rate}")))
    }
}

/// Output length `round(n * new / old)`.
pub(crate) fn output_len(n: usize, old_rate: f64, new_rate: f64) -> usize {
    (n as f64 * new_rate / old_rate).round() as usize
}

pub(crate) fn resample_samples(input: &[C64], old_rate: f64, new_rate: f64) -> Vec<C64> {
    let n_in = input.len();
    let n_out = output_len(n_in, old_rate, new_rate);
    if n_in == 0 || n_out == 0 {
        return Vec::new();
    }
    if n_out == n_in {
        return input.to_vec();
    }

    let mut spec = input.to_vec();
    fft::fft(&mut spec);

    let mut out = vec![C64::new(0.0, 0.0); n_out];
    let n_min = n_in.min(n_out);
    // Bins strictly inside the shared band copy straight across.
    let half = (n_min - 1) / 2;
    out[0] = spec[0];
    for k in 1..=half {
        out[k] = spec[k];
        out[n_out - k] = spec[n_in - k];
    }
    if n_min.is_multiple_of(2) {
        // The shared band ends on a Nyquist bin of the shorter transform.
        let k = n_min / 2;
        if n_in < n_out {
            let v = spec[k] * 0.5;
            out[k] = v;
            out[n_out - k] = v;
        } else {
            out[k] = spec[k] + spec[n_in - k];
        }
    }

    fft::ifft(&mut out);
    let gain = n_out as f64 / n_in as f64;
    out.iter_mut().for_each(|v| *v *= gain);
    out
}
