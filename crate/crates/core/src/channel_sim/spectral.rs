//! Whole-capture frequency-domain processing across tributaries.

use rayon::prelude::*;

use crate::fft;
use crate::signal_core::MimoSignal;
use crate::C64;

const BINS_PER_TASK: usize = 4096;

/// Spectra of all tributaries stored bin-major: bin `k` of tributary `m`
/// lives at `k * modes + m`.
pub(crate) struct BinMajorSpectrum {
    pub data: Vec<C64>,
    pub modes: usize,
    pub n: usize,
    pub rate: f64,
}

impl BinMajorSpectrum {
    pub fn from_signal(signal: &MimoSignal) -> Self {
        let modes = signal.modes();
        let n = signal.len();
        let spectra: Vec<Vec<C64>> = signal
            .tributaries()
            .par_iter()
            .map(|t| {
                let mut buf = t.clone();
                fft::fft(&mut buf);
                buf
            })
            .collect();
        let mut data = vec![C64::new(0.0, 0.0); n * modes];
        data.par_chunks_mut(BINS_PER_TASK * modes)
            .enumerate()
            .for_each(|(chunk, out)| {
                let k0 = chunk * BINS_PER_TASK;
                for (i, bin) in out.chunks_mut(modes).enumerate() {
                    for (m, v) in bin.iter_mut().enumerate() {
                        *v = spectra[m][k0 + i];
                    }
                }
            });
        Self {
            data,
            modes,
            n,
            rate: signal.sample_rate(),
        }
    }

    /// Runs `f(frequency, bin_values)` on every bin, in parallel.
    pub fn for_each_bin<F>(&mut self, f: F)
    where
        F: Fn(usize, f64, &mut [C64]) + Sync,
    {
        let (n, rate, modes) = (self.n, self.rate, self.modes);
        self.data
            .par_chunks_mut(BINS_PER_TASK * modes)
            .enumerate()
            .for_each(|(chunk, block)| {
                let k0 = chunk * BINS_PER_TASK;
                for (i, bin) in block.chunks_mut(modes).enumerate() {
                    let k = k0 + i;
                    f(k, fft::bin_frequency(k, n, rate), bin);
                }
            });
    }

    pub fn into_signal(self) -> MimoSignal {
        let Self { data, modes, n, rate } = self;
        let tributaries: Vec<Vec<C64>> = (0..modes)
            .into_par_iter()
            .map(|m| {
                let mut t: Vec<C64> = (0..n).map(|k| data[k * modes + m]).collect();
                fft::ifft(&mut t);
                t
            })
            .collect();
        MimoSignal::from_trusted(tributaries, rate)
    }
}

/// Applies a per-bin transform to the spectrum of every tributary.
pub(crate) fn spectral_map<F>(signal: &MimoSignal, f: F) -> MimoSignal
where
    F: Fn(usize, f64, &mut [C64]) + Sync,
{
    if signal.is_empty() {
        return signal.clone();
    }
    let mut spec = BinMajorSpectrum::from_signal(signal);
    spec.for_each_bin(f);
    spec.into_signal()
}
