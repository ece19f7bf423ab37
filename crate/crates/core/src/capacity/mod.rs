//! Mutual information between the launched and equalized fields, SNR
//! estimation, and the 16QAM reference.

mod mi;
pub mod qam;
mod rings;
pub(crate) mod snr;
mod special;

pub use mi::{
    estimate_mi, estimate_mi_discrete, estimate_mi_mimo, estimate_mi_with, to_symbol_rate, MiConfig,
    MiEstimate, MiMethod, MiRow,
};
pub use qam::{generate_qam16, qam16_constellation, rrc_filter, QamCapture};
pub use rings::{build_ring_constellation, quantize_to_rings, RingConstellation};
pub use snr::{estimate_snr, SNR_CAP_DB};
