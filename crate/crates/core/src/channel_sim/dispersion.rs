use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::spectral::spectral_map;
use crate::error::{invalid, Result};
use crate::signal_core::MimoSignal;
use crate::C64;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Chromatic dispersion of a fiber length.
///
/// `coefficient` is D in ps/(nm km), `length_km` the fiber length and
/// `wavelength_nm` the carrier wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub coefficient: f64,
    pub length_km: f64,
    pub wavelength_nm: f64,
}

impl Dispersion {
    pub fn new(coefficient: f64, length_km: f64, wavelength_nm: f64) -> Result<Self> {
        let d = Self {
            coefficient,
            length_km,
            wavelength_nm,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength_nm.is_finite() && self.wavelength_nm > 0.0) {
            return Err(invalid(format!(
                "wavelength must be positive, got {}",
                self.wavelength_nm
            )));
        }
        if !self.coefficient.is_finite() || !self.length_km.is_finite() {
            return Err(invalid("dispersion coefficient and length must be finite"));
        }
        Ok(())
    }

    /// Quadratic phase `pi lambda^2 D L f^2 / c` at baseband offset `f` (Hz).
    pub fn phase(&self, f: f64) -> f64 {
        let lambda = self.wavelength_nm * 1e-9;
        let d = self.coefficient * 1e-6; // ps/(nm km) -> s/m^2
        let l = self.length_km * 1e3;
        PI * lambda * lambda * d * l * f * f / SPEED_OF_LIGHT
    }

    pub fn with_length(self, length_km: f64) -> Self {
        Self { length_km, ..self }
    }
}

/// Forward fiber dispersion: every tributary times `exp(+j phase(f))`.
pub fn apply_chromatic_dispersion(signal: &MimoSignal, dispersion: &Dispersion) -> Result<MimoSignal> {
    apply_quadratic_phase(signal, dispersion, 1.0)
}

pub(crate) fn apply_quadratic_phase(
    signal: &MimoSignal,
    dispersion: &Dispersion,
    sign: f64,
) -> Result<MimoSignal> {
    dispersion.validate()?;
    if dispersion.length_km == 0.0 || dispersion.coefficient == 0.0 {
        return Ok(signal.clone());
    }
    Ok(spectral_map(signal, |_, f, bin| {
        let rot = C64::from_polar(1.0, sign * dispersion.phase(f));
        bin.iter_mut().for_each(|v| *v *= rot);
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_core::generate_wgn_mimo;

    #[test]
    fn zero_length_is_identity() {
        let s = generate_wgn_mimo(2, 1024, 40e9, 1.0, 1).unwrap();
        let d = Dispersion::new(17.0, 0.0, 1550.0).unwrap();
        let out = apply_chromatic_dispersion(&s, &d).unwrap();
        for (a, b) in out
            .tributaries()
            .iter()
            .flatten()
            .zip(s.tributaries().iter().flatten())
        {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn phase_matches_hand_evaluation() {
        // pi * (1550e-9)^2 * 17e-6 * 78e3 * (15e9)^2 / c, evaluated independently
        let lambda: f64 = 1550e-9;
        let expect = std::f64::consts::PI * lambda.powi(2) * 17e-6 * 78e3 * 15e9_f64.powi(2) / 299_792_458.0;
        let d = Dispersion::new(17.0, 78.0, 1550.0).unwrap();
        assert!((d.phase(15e9) - expect).abs() < 1e-12);
        assert!((d.phase(15e9) - 7.51).abs() < 0.01);
        assert_eq!(d.phase(-15e9), d.phase(15e9));
    }

    #[test]
    fn rejects_nonpositive_wavelength() {
        assert!(Dispersion::new(17.0, 78.0, 0.0).is_err());
    }
}
