use super::impairments::{add_noise_power, apply_frequency_offset, apply_phase_noise};
use super::multisection::MultiSectionModel;
use super::spectral::spectral_map;
use super::LinkConfig;
use crate::error::{invalid, Error, Result};
use crate::rng::{self, tags};
use crate::signal_core::MimoSignal;
use crate::C64;

/// Sends `signal` around the recirculating loop `n_recirculations` times.
///
/// Each pass applies the span's dispersion and coupling section in the
/// frequency domain, then adds amplifier and nonlinear-interference noise.
/// Every pass goes through the same fiber, so the coupling section is
/// drawn once per `seed`. LO phase noise and frequency offset are applied
/// once at the receiver.
pub fn run_link(
    signal: &MimoSignal,
    cfg: &LinkConfig,
    n_recirculations: usize,
    seed: u64,
) -> Result<MimoSignal> {
    cfg.validate()?;
    if n_recirculations == 0 {
        return Err(invalid("at least one recirculation is required"));
    }
    if signal.modes() != cfg.n_modes {
        return Err(Error::DimensionMismatch(format!(
            "signal has {} tributaries, link has {} modes",
            signal.modes(),
            cfg.n_modes
        )));
    }
    let section = if cfg.has_coupling() {
        Some(MultiSectionModel::random(
            cfg.n_modes,
            cfg.mdl_per_span,
            cfg.dgd_per_span,
            cfg.sections,
            rng::derive_seed(seed, tags::SPAN_CHANNEL),
        )?)
    } else {
        None
    };
    let span = cfg.dispersion(1);
    let has_dispersion = span.length_km != 0.0 && span.coefficient != 0.0;
    // Amplifier noise is referenced to the launched power, not to whatever
    // power is left after lossy spans.
    let noise_power = signal.power() * cfg.span_noise_fraction();

    let mut x = signal.clone();
    for pass in 0..n_recirculations {
        if has_dispersion || section.is_some() {
            x = spectral_map(&x, |_, f, bin| {
                if has_dispersion {
                    let rot = C64::from_polar(1.0, span.phase(f));
                    bin.iter_mut().for_each(|v| *v *= rot);
                }
                if let Some(model) = &section {
                    model.apply_bin(f, bin);
                }
            });
        }
        let noise_seed = rng::derive_seed(seed, tags::SPAN_NOISE ^ ((pass as u64) << 8));
        x = add_noise_power(&x, noise_power, noise_seed);
    }
    x = apply_phase_noise(&x, cfg.lo_linewidth, rng::derive_seed(seed, tags::PHASE_NOISE))?;
    apply_frequency_offset(&x, cfg.frequency_offset)
}
