//! Capacity estimation and channel characterization of fiber links with
//! white-Gaussian-noise test signals.
//!
//! The same noise instantiation is captured before and after the link. The
//! receive chain aligns both captures, equalizes the received field against
//! the launched one with a data-aided frequency-domain LMS equalizer, and
//! evaluates the mutual information between them. Swapping the roles of the
//! two captures turns the equalizer into a channel estimator whose taps
//! yield mode-dependent loss spectra and impulse responses.
//!
//! Module map:
//! - [`signal_core`]: sample buffers, WGN, resampling, Gaussian filtering
//! - [`channel_sim`]: dispersion, MIMO coupling/MDL, noise, loop simulation
//! - [`dsp`]: alignment, EDC, FDE-LMS, phase recovery, full receive chain
//! - [`capacity`]: ring constellations, MI and SNR estimation, 16QAM
//! - [`estimation`]: channel estimation, MDL spectra, impulse responses

pub mod capacity;
pub mod channel_sim;
pub mod dsp;
pub mod error;
pub mod estimation;
pub mod fft;
pub mod linalg;
pub mod rng;
pub mod signal_core;

pub use num_complex::Complex64 as C64;

pub use capacity::{
    build_ring_constellation, estimate_mi, estimate_mi_discrete, estimate_snr, MiEstimate, RingConstellation,
};

pub use channel_sim::{
    add_awgn, apply_channel, apply_chromatic_dispersion, apply_frequency_offset, apply_phase_noise, run_link,
    synthesize_mimo_channel, Dispersion, LinkConfig, MimoChannel,
};

pub use dsp::{
    align_by_crosscorrelation, apply_edc, fde_lms_equalize, phase_recovery, run_pipeline, AlignmentResult,
    EqualizerState, PipelineConfig, PipelineOutput,
};

pub use error::{Error, Result};

pub use estimation::{
    compare_channels, estimate_channel, impulse_response_from_channel, mdl_from_channel, ImpulseResponse,
    MdlSpectrum, SpectralWindow,
};

pub use signal_core::{gaussian_filter, generate_wgn, measure_power, resample, ComplexSignal, MimoSignal};
