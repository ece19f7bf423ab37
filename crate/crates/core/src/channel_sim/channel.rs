use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spectral::spectral_map;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMat};
use crate::signal_core::io::Container;
use crate::signal_core::MimoSignal;
use crate::{fft, C64};

/// Per-bin `M x M` transfer matrices on a uniform frequency grid, plus a
/// scalar phase per bin that carries chromatic dispersion.
///
/// Bins are stored in FFT order: bin `k` sits at
/// [`fft::bin_frequency`]`(k, n_bins, n_bins * bin_spacing)`. The simulated
/// link and the equalizer-based estimate share this type.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoChannel {
    modes: usize,
    bin_spacing: f64,
    matrices: Vec<CMat>,
    common_phase: Vec<f64>,
    unitary: bool,
}

impl MimoChannel {
    pub fn new(matrices: Vec<CMat>, bin_spacing: f64) -> Result<Self> {
        let n = matrices.len();
        Self::with_common_phase(matrices, vec![0.0; n], bin_spacing)
    }

    pub fn with_common_phase(matrices: Vec<CMat>, common_phase: Vec<f64>, bin_spacing: f64) -> Result<Self> {
        if matrices.is_empty() {
            return Err(invalid("a channel needs at least one frequency bin"));
        }
        if !(bin_spacing.is_finite() && bin_spacing > 0.0) {
            return Err(invalid(format!(
                "bin spacing must be positive, got {bin_spacing}"
            )));
        }
        if common_phase.len() != matrices.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} phase values for {} bins",
                common_phase.len(),
                matrices.len()
            )));
        }
        let modes = matrices[0].nrows();
        if modes == 0 {
            return Err(invalid("a channel needs at least one mode"));
        }
        for (k, h) in matrices.iter().enumerate() {
            if h.nrows() != modes || h.ncols() != modes {
                return Err(Error::DimensionMismatch(format!(
                    "bin {k} is not {modes}x{modes}"
                )));
            }
            if h.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(invalid(format!("bin {k} holds non-finite entries")));
            }
        }
        if common_phase.iter().any(|p| !p.is_finite()) {
            return Err(invalid("common phase must be finite"));
        }
        Ok(Self {
            modes,
            bin_spacing,
            matrices,
            common_phase,
            unitary: false,
        })
    }

    pub fn identity(modes: usize, n_bins: usize, bin_spacing: f64) -> Result<Self> {
        let mut ch = Self::new(vec![linalg::identity(modes); n_bins], bin_spacing)?;
        ch.unitary = true;
        Ok(ch)
    }

    /// Marks the channel as unitary after checking every bin's singular
    /// values are within `1e-9` of one.
    pub fn mark_unitary(mut self) -> Result<Self> {
        for (k, h) in self.matrices.iter().enumerate() {
            if linalg::singular_values(h).iter().any(|s| (s - 1.0).abs() > 1e-9) {
                return Err(invalid(format!("bin {k} is not unitary")));
            }
        }
        self.unitary = true;
        Ok(self)
    }

    pub(crate) fn set_unitary_unchecked(&mut self, unitary: bool) {
        self.unitary = unitary;
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_bins(&self) -> usize {
        self.matrices.len()
    }

    pub fn bin_spacing(&self) -> f64 {
        self.bin_spacing
    }

    /// Total span of the grid, `n_bins * bin_spacing` (Hz).
    pub fn span(&self) -> f64 {
        self.n_bins() as f64 * self.bin_spacing
    }

    pub fn frequency(&self, k: usize) -> f64 {
        fft::bin_frequency(k, self.n_bins(), self.span())
    }

    pub fn frequencies(&self) -> Vec<f64> {
        fft::frequencies(self.n_bins(), self.span())
    }

    pub fn matrix(&self, k: usize) -> &CMat {
        &self.matrices[k]
    }

    pub fn matrices(&self) -> &[CMat] {
        &self.matrices
    }

    pub fn common_phase(&self) -> &[f64] {
        &self.common_phase
    }

    /// Full response of bin `k`, common phase included.
    pub fn response(&self, k: usize) -> CMat {
        let rot = C64::from_polar(1.0, self.common_phase[k]);
        &self.matrices[k] * rot
    }

    /// Response at an arbitrary frequency by linear interpolation between
    /// neighbouring bins. The grid is treated as periodic with period
    /// [`span`](Self::span).
    pub fn response_at(&self, f: f64) -> CMat {
        let n = self.n_bins();
        if n == 1 {
            return self.response(0);
        }
        let pos = f / self.bin_spacing;
        let floor = pos.floor();
        let frac = pos - floor;
        let k0 = (floor as i64).rem_euclid(n as i64) as usize;
        let k1 = (k0 + 1) % n;
        let m = &self.matrices[k0] * C64::new(1.0 - frac, 0.0) + &self.matrices[k1] * C64::new(frac, 0.0);
        let phase = (1.0 - frac) * self.common_phase[k0] + frac * self.common_phase[k1];
        m * C64::from_polar(1.0, phase)
    }

    /// Resamples the channel onto another grid by [`response_at`](Self::response_at).
    pub fn interpolate_onto(&self, n_bins: usize, bin_spacing: f64) -> Result<Self> {
        let span = n_bins as f64 * bin_spacing;
        let matrices = (0..n_bins)
            .map(|k| self.response_at(fft::bin_frequency(k, n_bins, span)))
            .collect();
        let mut ch = Self::new(matrices, bin_spacing)?;
        ch.unitary = self.unitary;
        Ok(ch)
    }

    fn matches_grid(&self, n: usize, rate: f64) -> bool {
        self.n_bins() == n && ((self.span() - rate) / rate).abs() < 1e-12
    }
}

/// Multiplies the spectrum of `signal` by the channel, bin by bin.
///
/// When the channel grid matches the signal's FFT grid the bins are used
/// directly; otherwise the channel is interpolated with
/// [`MimoChannel::response_at`].
pub fn apply_channel(signal: &MimoSignal, channel: &MimoChannel) -> Result<MimoSignal> {
    if signal.modes() != channel.modes() {
        return Err(Error::DimensionMismatch(format!(
            "signal has {} tributaries, channel has {} modes",
            signal.modes(),
            channel.modes()
        )));
    }
    let m = channel.modes();
    if m > MAX_MODES {
        return Err(invalid(format!(
            "at most {MAX_MODES} modes are supported, got {m}"
        )));
    }
    let direct = channel.matches_grid(signal.len(), signal.sample_rate());
    Ok(spectral_map(signal, |k, f, bin| {
        let h = if direct {
            channel.response(k)
        } else {
            channel.response_at(f)
        };
        let mut out = [C64::new(0.0, 0.0); MAX_MODES];
        linalg::mat_vec(&h, bin, &mut out[..m]);
        bin.copy_from_slice(&out[..m]);
    }))
}

pub(crate) const MAX_MODES: usize = 16;

/// JSON side of a serialized channel; the matrices travel in a binary
/// [`Container`] with `M*M + 1` streams: entry `(i, j)` at stream
/// `i * M + j`, and the common phase (radians, real part) last.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChannelDescriptor {
    pub modes: usize,
    pub n_bins: usize,
    pub bin_spacing: f64,
    pub unitary: bool,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub config: Option<serde_json::Value>,
    pub payload: String,
}

impl MimoChannel {
    pub fn to_container(&self) -> Container {
        let m = self.modes;
        let mut streams = Vec::with_capacity(m * m + 1);
        for i in 0..m {
            for j in 0..m {
                streams.push(self.matrices.iter().map(|h| h[(i, j)]).collect());
            }
        }
        streams.push(self.common_phase.iter().map(|&p| C64::new(p, 0.0)).collect());
        Container {
            streams,
            rate: self.bin_spacing,
        }
    }

    pub fn from_container(modes: usize, container: &Container) -> Result<Self> {
        if container.streams.len() != modes * modes + 1 {
            return Err(Error::Format(format!(
                "expected {} streams for a {modes}-mode channel, found {}",
                modes * modes + 1,
                container.streams.len()
            )));
        }
        let n = container.streams[0].len();
        let matrices = (0..n)
            .map(|k| CMat::from_fn(modes, modes, |i, j| container.streams[i * modes + j][k]))
            .collect();
        let phase = container.streams[modes * modes].iter().map(|v| v.re).collect();
        Self::with_common_phase(matrices, phase, container.rate)
    }

    /// Writes `<stem>.json` and `<stem>.bin`.
    pub fn save(
        &self,
        stem: impl AsRef<Path>,
        seed: Option<u64>,
        config: Option<serde_json::Value>,
    ) -> Result<()> {
        let stem = stem.as_ref();
        let bin = stem.with_extension("bin");
        let desc = ChannelDescriptor {
            modes: self.modes,
            n_bins: self.n_bins(),
            bin_spacing: self.bin_spacing,
            unitary: self.unitary,
            seed,
            config,
            payload: bin
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        };
        serde_json::to_writer_pretty(BufWriter::new(File::create(stem.with_extension("json"))?), &desc)?;
        self.to_container().save(&bin)
    }

    /// Reads a channel written by [`save`](Self::save) given its JSON path.
    pub fn load(json_path: impl AsRef<Path>) -> Result<(Self, ChannelDescriptor)> {
        let json_path = json_path.as_ref();
        let desc: ChannelDescriptor = serde_json::from_reader(File::open(json_path)?)?;
        let bin = json_path.with_file_name(&desc.payload);
        let container = Container::load(bin)?;
        let mut ch = Self::from_container(desc.modes, &container)?;
        if ch.n_bins() != desc.n_bins {
            return Err(Error::Format(
                "descriptor and payload disagree on bin count".into(),
            ));
        }
        ch.unitary = desc.unitary;
        Ok((ch, desc))
    }
}
