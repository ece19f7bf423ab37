//! Seeded multi-section coupling model.
//!
//! `H(f) = U(f) S V(f)^H` with `S` a frequency-flat diagonal of singular
//! values and `U`, `V` products of random unitaries interleaved with
//! diagonal delay elements. Because `U` and `V` are unitary at every
//! frequency the singular values of `H(f)` are exactly `S`, while the
//! delay elements make the coupling frequency dependent.

use std::f64::consts::PI;

use super::channel::{MimoChannel, MAX_MODES};
use super::spectral::spectral_map;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMat};
use crate::signal_core::MimoSignal;
use crate::{rng, C64};

pub const DEFAULT_SECTIONS: usize = 8;

#[derive(Debug, Clone)]
struct Section {
    delays: Vec<f64>,
    rotation: CMat,
}

#[derive(Debug, Clone)]
pub struct MultiSectionModel {
    modes: usize,
    singular_values: Vec<f64>,
    u_head: CMat,
    u_sections: Vec<Section>,
    v_head: CMat,
    v_sections: Vec<Section>,
}

impl MultiSectionModel {
    /// Draws a model with `sections` delay elements in total whose
    /// per-section differential delays add up to `dgd` seconds, and whose
    /// largest-to-smallest singular value ratio is `10^(mdl_db/20)`.
    pub fn random(modes: usize, mdl_db: f64, dgd: f64, sections: usize, seed: u64) -> Result<Self> {
        if modes < 2 || !modes.is_multiple_of(2) {
            return Err(invalid(format!(
                "mode count must be even and at least 2, got {modes}"
            )));
        }
        if modes > MAX_MODES {
            return Err(invalid(format!("at most {MAX_MODES} modes are supported")));
        }
        if !(mdl_db.is_finite() && mdl_db >= 0.0) {
            return Err(invalid(format!("MDL must be non-negative, got {mdl_db}")));
        }
        if !(dgd.is_finite() && dgd >= 0.0) {
            return Err(invalid(format!("DGD must be non-negative, got {dgd}")));
        }
        if sections == 0 {
            return Err(invalid("at least one section is required"));
        }

        let mut rng = rng::stream(seed, 0);
        let per_section = dgd / sections as f64;
        let delays: Vec<f64> = (0..modes)
            .map(|i| per_section * (i as f64 / (modes - 1) as f64 - 0.5))
            .collect();
        let mut draw = |count: usize| -> Vec<Section> {
            (0..count)
                .map(|_| Section {
                    delays: delays.clone(),
                    rotation: linalg::haar_unitary(modes, &mut rng),
                })
                .collect()
        };
        let u_count = sections.div_ceil(2);
        let u_sections = draw(u_count);
        let v_sections = draw(sections - u_count);
        let u_head = linalg::haar_unitary(modes, &mut rng);
        let v_head = linalg::haar_unitary(modes, &mut rng);

        // Log-spaced singular values centred on 0 dB.
        let singular_values = (0..modes)
            .map(|i| {
                let db = mdl_db * (0.5 - i as f64 / (modes - 1) as f64);
                10f64.powf(db / 20.0)
            })
            .collect();

        Ok(Self {
            modes,
            singular_values,
            u_head,
            u_sections,
            v_head,
            v_sections,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn is_unitary(&self) -> bool {
        self.singular_values.iter().all(|s| (s - 1.0).abs() < 1e-15)
    }

    fn unitary_factor(head: &CMat, sections: &[Section], f: f64) -> CMat {
        let mut acc = head.clone();
        for s in sections {
            let mut d = s.rotation.clone();
            for (i, tau) in s.delays.iter().enumerate() {
                let ph = C64::from_polar(1.0, -2.0 * PI * f * tau);
                d.row_mut(i).iter_mut().for_each(|v| *v *= ph);
            }
            acc *= d;
        }
        acc
    }

    /// `H(f)`.
    pub fn response_at(&self, f: f64) -> CMat {
        let u = Self::unitary_factor(&self.u_head, &self.u_sections, f);
        let v = Self::unitary_factor(&self.v_head, &self.v_sections, f);
        let mut us = u;
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).iter_mut().for_each(|x| *x *= *s);
        }
        us * v.adjoint()
    }

    /// Samples the model onto a uniform grid.
    pub fn sample(&self, n_bins: usize, bin_spacing: f64) -> Result<MimoChannel> {
        let span = n_bins as f64 * bin_spacing;
        let matrices = (0..n_bins)
            .map(|k| self.response_at(crate::fft::bin_frequency(k, n_bins, span)))
            .collect();
        let mut ch = MimoChannel::new(matrices, bin_spacing)?;
        ch.set_unitary_unchecked(self.is_unitary());
        Ok(ch)
    }

    /// Applies the model exactly (no grid interpolation) to a signal.
    pub fn apply(&self, signal: &MimoSignal) -> Result<MimoSignal> {
        if signal.modes() != self.modes {
            return Err(Error::DimensionMismatch(format!(
                "signal has {} tributaries, model has {} modes",
                signal.modes(),
                self.modes
            )));
        }
        Ok(spectral_map(signal, |_, f, bin| self.apply_bin(f, bin)))
    }

    /// `bin <- H(f) bin`, evaluated factor by factor as matrix-vector
    /// products.
    pub(crate) fn apply_bin(&self, f: f64, bin: &mut [C64]) {
        let m = self.modes;
        let mut tmp = [C64::new(0.0, 0.0); MAX_MODES];
        // V^H = (D_k R_k)^H ... (D_1 R_1)^H head^H, applied right to left.
        adjoint_mul(&self.v_head, bin, &mut tmp[..m]);
        bin.copy_from_slice(&tmp[..m]);
        for s in &self.v_sections {
            for (i, tau) in s.delays.iter().enumerate() {
                bin[i] *= C64::from_polar(1.0, 2.0 * PI * f * tau);
            }
            adjoint_mul(&s.rotation, bin, &mut tmp[..m]);
            bin.copy_from_slice(&tmp[..m]);
        }

        for (v, s) in bin.iter_mut().zip(&self.singular_values) {
            *v *= *s;
        }

        for s in self.u_sections.iter().rev() {
            linalg::mat_vec(&s.rotation, bin, &mut tmp[..m]);
            for (i, tau) in s.delays.iter().enumerate() {
                tmp[i] *= C64::from_polar(1.0, -2.0 * PI * f * tau);
            }
            bin.copy_from_slice(&tmp[..m]);
        }
        linalg::mat_vec(&self.u_head, bin, &mut tmp[..m]);
        bin.copy_from_slice(&tmp[..m]);
    }
}

fn adjoint_mul(a: &CMat, x: &[C64], y: &mut [C64]) {
    for (j, yj) in y.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (i, xi) in x.iter().enumerate() {
            acc += a[(i, j)].conj() * xi;
        }
        *yj = acc;
    }
}

/// Samples a seeded multi-section channel (default section count) onto
/// `n_bins` bins spaced `bin_spacing` apart.
pub fn synthesize_mimo_channel(
    modes: usize,
    mdl_db: f64,
    dgd: f64,
    n_bins: usize,
    bin_spacing: f64,
    seed: u64,
) -> Result<MimoChannel> {
    MultiSectionModel::random(modes, mdl_db, dgd, DEFAULT_SECTIONS, seed)?.sample(n_bins, bin_spacing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_sim::apply_channel;
    use crate::signal_core::generate_wgn_mimo;

    #[test]
    fn lossless_channel_is_unitary_everywhere() {
        let ch = synthesize_mimo_channel(6, 0.0, 0.0, 64, 1e9, 3).unwrap();
        assert!(ch.is_unitary());
        for h in ch.matrices() {
            for s in linalg::singular_values(h) {
                assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mdl_sets_singular_value_ratio() {
        // 20*log10(2) = 6.0206 dB
        let mdl = 20.0 * 2f64.log10();
        let ch = synthesize_mimo_channel(2, mdl, 50e-12, 128, 40e9 / 128.0, 9).unwrap();
        for h in ch.matrices() {
            let sv = linalg::singular_values(h);
            assert!((sv[0] / sv[1] - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn odd_mode_count_is_rejected() {
        assert!(matches!(
            synthesize_mimo_channel(3, 0.0, 0.0, 8, 1.0, 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn exact_application_matches_sampled_channel_on_grid() {
        let s = generate_wgn_mimo(4, 2048, 40e9, 1.0, 5).unwrap();
        let model = MultiSectionModel::random(4, 3.0, 200e-12, 8, 11).unwrap();
        let sampled = model.sample(2048, 40e9 / 2048.0).unwrap();
        let a = model.apply(&s).unwrap();
        let b = apply_channel(&s, &sampled).unwrap();
        for (x, y) in a
            .tributaries()
            .iter()
            .flatten()
            .zip(b.tributaries().iter().flatten())
        {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synthesize_mimo_channel(4, 2.0, 1e-10, 16, 1e9, 21).unwrap();
        let b = synthesize_mimo_channel(4, 2.0, 1e-10, 16, 1e9, 21).unwrap();
        assert_eq!(a, b);
    }
}
