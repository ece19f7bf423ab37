//! Channel estimation with the equalizer roles swapped, per-frequency SVD
//! for mode-dependent loss, and impulse responses from the estimated taps.

mod compare;
mod estimate;
mod impulse;
mod mdl;

pub use compare::{compare_channels, ChannelComparison};
pub use estimate::{estimate_channel, remove_dispersion, ChannelEstimate};
pub use impulse::{impulse_response_from_channel, ImpulseResponse, SpectralWindow};
pub use mdl::{mdl_from_channel, MdlSpectrum};
