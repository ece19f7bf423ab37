//! Linear MIMO fiber-link models: chromatic dispersion, mode coupling with
//! mode-dependent loss and group-delay spread, amplifier and
//! nonlinear-interference noise, laser phase noise, frequency offset and
//! recirculating-loop accumulation.

mod channel;
mod dispersion;
mod impairments;
mod link;
mod multisection;
pub(crate) mod spectral;

pub use channel::{apply_channel, ChannelDescriptor, MimoChannel};
pub use dispersion::{apply_chromatic_dispersion, Dispersion, SPEED_OF_LIGHT};
pub use impairments::{add_awgn, apply_frequency_offset, apply_phase_noise};
pub use link::run_link;
pub use multisection::{synthesize_mimo_channel, MultiSectionModel, DEFAULT_SECTIONS};

pub(crate) use channel::MAX_MODES;
pub(crate) use dispersion::apply_quadratic_phase;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// One loop span plus the receiver-side impairments.
///
/// Noise per span is split into amplifier noise and a nonlinear
/// interference term. `span_snr_db` is the amplifier-limited SNR of one
/// span at 0 dBm launch power (30 GHz reference bandwidth); amplifier noise
/// power is fixed, so its relative level falls as launch power rises.
/// The nonlinear term has power `nlin_coeff * P^3` (P in mW), i.e. a
/// relative level of `nlin_coeff * P^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    /// km
    pub span_length: f64,
    /// ps/(nm km)
    pub dispersion_coeff: f64,
    /// nm
    pub center_wavelength: f64,
    pub n_modes: usize,
    /// dB
    pub mdl_per_span: f64,
    /// seconds
    pub dgd_per_span: f64,
    /// Coupling sections per span.
    pub sections: usize,
    /// dB, `inf` for a noiseless amplifier chain.
    pub span_snr_db: f64,
    /// Hz
    pub lo_linewidth: f64,
    /// Hz
    pub frequency_offset: f64,
    /// dBm
    pub launch_power_dbm: f64,
    pub nlin_coeff: f64,
}

pub const DEFAULT_SPAN_SNR_DB: f64 = 25.0;

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            span_length: 78.0,
            dispersion_coeff: 17.0,
            center_wavelength: 1550.0,
            n_modes: 2,
            mdl_per_span: 0.0,
            dgd_per_span: 0.0,
            sections: DEFAULT_SECTIONS,
            span_snr_db: DEFAULT_SPAN_SNR_DB,
            lo_linewidth: 1e3,
            frequency_offset: 0.0,
            launch_power_dbm: 0.0,
            // Puts the optimum launch power at 0 dBm: d/dP (a/P + c P^2) = 0
            // at P = 1 mW when c = a/2.
            nlin_coeff: 0.5 * 10f64.powf(-DEFAULT_SPAN_SNR_DB / 10.0),
        }
    }
}

impl LinkConfig {
    /// Single-mode fiber loop span (two polarizations) with a little
    /// polarization-dependent loss and PMD. [`LinkConfig::default`] is the
    /// same span without coupling.
    pub fn smf() -> Self {
        Self {
            mdl_per_span: 0.05,
            dgd_per_span: 2e-12,
            ..Self::default()
        }
    }

    /// 96 km three-mode fiber span (six tributaries).
    pub fn three_mode_fiber() -> Self {
        Self {
            span_length: 96.0,
            n_modes: 6,
            mdl_per_span: 3.0,
            dgd_per_span: 0.5e-9,
            ..Self::default()
        }
    }

    /// A lossless, noiseless link carrying only chromatic dispersion.
    pub fn dispersion_only(span_length: f64, n_modes: usize) -> Self {
        Self {
            span_length,
            n_modes,
            span_snr_db: f64::INFINITY,
            lo_linewidth: 0.0,
            nlin_coeff: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(invalid(format!(
                    "{name} must be finite and non-negative, got {v}"
                )))
            }
        };
        nonneg("span_length", self.span_length)?;
        nonneg("mdl_per_span", self.mdl_per_span)?;
        nonneg("dgd_per_span", self.dgd_per_span)?;
        nonneg("lo_linewidth", self.lo_linewidth)?;
        nonneg("nlin_coeff", self.nlin_coeff)?;
        if !self.dispersion_coeff.is_finite() {
            return Err(invalid("dispersion_coeff must be finite"));
        }
        if !(self.center_wavelength.is_finite() && self.center_wavelength > 0.0) {
            return Err(invalid("center_wavelength must be positive"));
        }
        if self.n_modes == 0 || self.n_modes > MAX_MODES {
            return Err(invalid(format!(
                "n_modes must be in 1..={MAX_MODES}, got {}",
                self.n_modes
            )));
        }
        if self.n_modes > 1 && !self.n_modes.is_multiple_of(2) {
            return Err(invalid(format!("n_modes must be even, got {}", self.n_modes)));
        }
        if self.sections == 0 {
            return Err(invalid("sections must be at least 1"));
        }
        if self.span_snr_db.is_nan() || self.span_snr_db == f64::NEG_INFINITY {
            return Err(invalid("span_snr_db must be a number or +inf"));
        }
        if !self.frequency_offset.is_finite() || !self.launch_power_dbm.is_finite() {
            return Err(invalid("frequency_offset and launch_power_dbm must be finite"));
        }
        Ok(())
    }

    pub fn launch_power_mw(&self) -> f64 {
        10f64.powf(self.launch_power_dbm / 10.0)
    }

    /// Noise added per span relative to the signal power.
    pub fn span_noise_fraction(&self) -> f64 {
        let p = self.launch_power_mw();
        let ase = if self.span_snr_db == f64::INFINITY {
            0.0
        } else {
            10f64.powf(-self.span_snr_db / 10.0) / p
        };
        ase + self.nlin_coeff * p * p
    }

    /// Dispersion accumulated over `spans` spans.
    pub fn dispersion(&self, spans: usize) -> Dispersion {
        Dispersion {
            coefficient: self.dispersion_coeff,
            length_km: self.span_length * spans as f64,
            wavelength_nm: self.center_wavelength,
        }
    }

    pub fn distance_km(&self, spans: usize) -> f64 {
        self.span_length * spans as f64
    }

    pub fn has_coupling(&self) -> bool {
        self.n_modes >= 2 && (self.mdl_per_span > 0.0 || self.dgd_per_span > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_nlin_puts_optimum_at_zero_dbm() {
        let noise = |dbm: f64| {
            LinkConfig {
                launch_power_dbm: dbm,
                ..LinkConfig::default()
            }
            .span_noise_fraction()
        };
        assert!(noise(0.0) < noise(-0.5));
        assert!(noise(0.0) < noise(0.5));
    }

    #[test]
    fn validation_names_the_field() {
        let cfg = LinkConfig {
            span_length: -1.0,
            ..LinkConfig::default()
        };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("span_length"));
        assert!(LinkConfig {
            n_modes: 3,
            ..LinkConfig::default()
        }
        .validate()
        .is_err());
        assert!(LinkConfig::three_mode_fiber().validate().is_ok());
    }
}
