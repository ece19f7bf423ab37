use crate::channel_sim::{Dispersion, MimoChannel};
use crate::dsp::{
    align_with_threshold, apply_edc, fde_lms_equalize, AlignmentResult, EqualizerState, PipelineConfig,
};
use crate::error::Result;
use crate::signal_core::{resample_mimo, GaussianFilter, MimoSignal};
use crate::{fft, C64};

/// Estimated channel plus the alignment and equalizer run it came from.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    /// `f_out ~ H f_in` on the equalizer's `block_size`-point grid, bulk
    /// delay and carrier phase included.
    pub channel: MimoChannel,
    pub alignment: AlignmentResult,
    pub state: EqualizerState,
}

/// Estimates `H` with `f_out ~ H f_in` by running the equalizer with the
/// received field as reference and the launched field as input.
///
/// Both captures are resampled and filtered as in the receive chain but no
/// dispersion compensation is applied, so the estimate holds the whole
/// channel. When `dispersion` is given, alignment runs on a compensated
/// copy of `f_out`, which keeps the correlation peak sharp over long links.
pub fn estimate_channel(
    f_in: &MimoSignal,
    f_out: &MimoSignal,
    dispersion: Option<&Dispersion>,
    cfg: &PipelineConfig,
) -> Result<ChannelEstimate> {
    cfg.validate()?;
    crate::dsp::check_compatible(f_in, f_out)?;
    let filter = GaussianFilter::new(cfg.filter_bw, cfg.filter_order)?;
    let f_in = filter.apply_mimo(&resample_mimo(f_in, cfg.target_rate)?).signal;
    let f_out = filter.apply_mimo(&resample_mimo(f_out, cfg.target_rate)?).signal;

    let alignment = match dispersion {
        Some(d) => {
            let compensated = apply_edc(&f_out, d)?;
            align_with_threshold(&f_in, &compensated, cfg.max_lag, cfg.align_threshold)?
        }
        None => align_with_threshold(&f_in, &f_out, cfg.max_lag, cfg.align_threshold)?,
    };
    let (f_in, f_out) = alignment.trim(&f_in, &f_out)?;
    let derotate = C64::from_polar(1.0, -alignment.phase);
    let f_out = f_out.map_tributaries(|t| t.iter().map(|v| v * derotate).collect());

    let (_, state) = fde_lms_equalize(&f_out, &f_in, cfg)?;

    // Put the alignment delay and phase back.
    let n = state.block_size;
    let rate = state.sample_rate;
    let matrices = (0..n)
        .map(|k| {
            let f = fft::bin_frequency(k, n, rate);
            let shift = -2.0 * std::f64::consts::PI * f * alignment.lag as f64 / rate + alignment.phase;
            state.tap_matrix(k) * C64::from_polar(1.0, shift)
        })
        .collect();
    let channel = MimoChannel::new(matrices, rate / n as f64)?;
    Ok(ChannelEstimate {
        channel,
        alignment,
        state,
    })
}

/// Multiplies every bin by `exp(-j phase(f))`, removing the bulk
/// dispersion from a channel (the frequency-domain counterpart of EDC).
pub fn remove_dispersion(channel: &MimoChannel, dispersion: &Dispersion) -> Result<MimoChannel> {
    dispersion.validate()?;
    let matrices = (0..channel.n_bins())
        .map(|k| channel.response(k) * C64::from_polar(1.0, -dispersion.phase(channel.frequency(k))))
        .collect();
    MimoChannel::new(matrices, channel.bin_spacing())
}
