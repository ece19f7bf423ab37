use super::{align_with_threshold, apply_edc, fde_lms_equalize, phase_recovery};
use super::{AlignmentResult, EqualizerState, PipelineConfig};
use crate::channel_sim::Dispersion;
use crate::error::{Error, Result};
use crate::signal_core::{resample_mimo, GaussianFilter, MimoSignal};
use crate::C64;

/// Co-trimmed reference and equalized fields plus diagnostics.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub f_in: MimoSignal,
    pub f_eq: MimoSignal,
    pub state: EqualizerState,
    pub alignment: AlignmentResult,
    /// The receive filter cutoff lay beyond Nyquist at the target rate.
    pub filter_above_nyquist: bool,
}

/// Full receive chain: resample, filter, EDC on `f_out_raw`, align and trim,
/// FDE-LMS against `f_in_raw`, phase recovery.
///
/// `dispersion` is the accumulated dispersion of the link the received
/// capture went through.
pub fn run_pipeline(
    f_in_raw: &MimoSignal,
    f_out_raw: &MimoSignal,
    dispersion: &Dispersion,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    check_compatible(f_in_raw, f_out_raw)?;
    let filter = GaussianFilter::new(cfg.filter_bw, cfg.filter_order)?;

    let f_in = resample_mimo(f_in_raw, cfg.target_rate)?;
    let f_out = resample_mimo(f_out_raw, cfg.target_rate)?;
    let f_in = filter.apply_mimo(&f_in);
    let filter_above_nyquist = f_in.above_nyquist;
    let f_in = f_in.signal;
    let f_out = filter.apply_mimo(&f_out).signal;
    let f_out = apply_edc(&f_out, dispersion)?;

    let alignment = align_with_threshold(&f_in, &f_out, cfg.max_lag, cfg.align_threshold)?;
    log::debug!(
        "aligned at lag {} (phase {:.3} rad, peak ratio {:.1})",
        alignment.lag,
        alignment.phase,
        alignment.peak_ratio
    );
    let (f_in, f_out) = alignment.trim(&f_in, &f_out)?;
    let derotate = C64::from_polar(1.0, -alignment.phase);
    let f_out = f_out.map_tributaries(|t| t.iter().map(|v| v * derotate).collect());

    let (f_eq, state) = fde_lms_equalize(&f_in, &f_out, cfg)?;
    let f_eq = phase_recovery(&f_in, &f_eq, cfg.phase_window)?;
    Ok(PipelineOutput {
        f_in,
        f_eq,
        state,
        alignment,
        filter_above_nyquist,
    })
}

pub(crate) fn check_compatible(a: &MimoSignal, b: &MimoSignal) -> Result<()> {
    if a.modes() != b.modes() {
        return Err(Error::DimensionMismatch(format!(
            "captures have {} and {} tributaries",
            a.modes(),
            b.modes()
        )));
    }
    if a.sample_rate() != b.sample_rate() {
        return Err(Error::DimensionMismatch(format!(
            "captures sampled at {} and {} S/s",
            a.sample_rate(),
            b.sample_rate()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_sim::{run_link, LinkConfig};
    use crate::signal_core::{generate_wgn_mimo, nmse_db};

    #[test]
    fn noiseless_dispersion_only_link_is_recovered() {
        let x = generate_wgn_mimo(2, 200_000, 40e9, 1.0, 1).unwrap();
        let link = LinkConfig::dispersion_only(78.0, 2);
        let y = run_link(&x, &link, 1, 2).unwrap();
        let out = run_pipeline(&x, &y, &link.dispersion(1), &PipelineConfig::default()).unwrap();
        assert_eq!(out.alignment.lag, 0);
        assert!(!out.filter_above_nyquist);
        let nmse = nmse_db(&out.f_eq, &out.f_in).unwrap();
        assert!(nmse < -35.0, "{nmse}");
    }

    #[test]
    fn mode_count_mismatch_is_a_dimension_error() {
        let x = generate_wgn_mimo(2, 20_000, 40e9, 1.0, 1).unwrap();
        let y = generate_wgn_mimo(6, 20_000, 40e9, 1.0, 1).unwrap();
        let d = LinkConfig::smf().dispersion(1);
        assert!(matches!(
            run_pipeline(&x, &y, &d, &PipelineConfig::default()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn unrelated_captures_fail_alignment() {
        let x = generate_wgn_mimo(2, 200_000, 40e9, 1.0, 1).unwrap();
        let y = generate_wgn_mimo(2, 200_000, 40e9, 1.0, 9).unwrap();
        let d = LinkConfig::smf().dispersion(0);
        assert!(matches!(
            run_pipeline(&x, &y, &d, &PipelineConfig::default()),
            Err(Error::NoCorrelation { .. })
        ));
    }
}
