use crate::channel_sim::{apply_quadratic_phase, Dispersion};
use crate::error::Result;
use crate::signal_core::MimoSignal;

/// Electronic dispersion compensation: every tributary times
/// `exp(-j phase(f))`, the exact inverse of the forward fiber dispersion.
pub fn apply_edc(signal: &MimoSignal, dispersion: &Dispersion) -> Result<MimoSignal> {
    apply_quadratic_phase(signal, dispersion, -1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_sim::apply_chromatic_dispersion;
    use crate::fft;
    use crate::signal_core::{generate_wgn_mimo, nmse_db};
    use crate::C64;

    #[test]
    fn undoes_forward_dispersion() {
        let s = generate_wgn_mimo(2, 16384, 60e9, 1.0, 1).unwrap();
        let d = Dispersion::new(17.0, 1560.0, 1550.0).unwrap();
        let back = apply_edc(&apply_chromatic_dispersion(&s, &d).unwrap(), &d).unwrap();
        assert!(nmse_db(&back, &s).unwrap() < -100.0);
        assert_eq!(apply_edc(&s, &d.with_length(0.0)).unwrap(), s);
    }

    #[test]
    fn wrong_length_leaves_the_residual_quadratic_phase() {
        let (n, fs) = (4096, 60e9);
        let mut impulse = vec![C64::new(0.0, 0.0); n];
        impulse[0] = C64::new(1.0, 0.0);
        let s = MimoSignal::new(vec![impulse], fs).unwrap();
        let d = Dispersion::new(17.0, 78.0, 1550.0).unwrap();
        let out = apply_edc(&apply_chromatic_dispersion(&s, &d).unwrap(), &d.with_length(60.0)).unwrap();
        let mut spec = out.tributary(0).to_vec();
        fft::fft(&mut spec);
        let c = 299_792_458.0;
        for k in [1usize, 100, 1000, 3000] {
            let f = fft::bin_frequency(k, n, fs);
            let expect = std::f64::consts::PI * 1550e-9f64.powi(2) * 17e-6 * 18e3 * f * f / c;
            let diff = (spec[k] * C64::from_polar(1.0, -expect)).arg();
            assert!(diff.abs() < 1e-9, "bin {k}: {diff}");
        }
    }
}
