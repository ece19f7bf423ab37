use serde::{Deserialize, Serialize};

use crate::channel_sim::MimoChannel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::C64;

/// NMSE values are reported no lower than this.
const FLOOR_DB: f64 = -120.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelComparison {
    /// Hz, ascending; only the compared bins.
    pub frequencies: Vec<f64>,
    pub nmse_db: Vec<f64>,
    /// Aggregate NMSE over the compared bins.
    pub summary_db: f64,
    /// Global complex factor applied to the estimate before comparing.
    pub gain: C64,
}

/// Per-bin Frobenius NMSE of `estimate` against `truth` after fitting one
/// complex scalar to the whole estimate, over bins with `|f| <= band`
/// (all bins for `None`). `truth` is interpolated onto the estimate grid
/// when the grids differ.
pub fn compare_channels(
    estimate: &MimoChannel,
    truth: &MimoChannel,
    band: Option<f64>,
) -> Result<ChannelComparison> {
    if estimate.modes() != truth.modes() {
        return Err(Error::DimensionMismatch(format!(
            "estimate is {0}x{0}, truth {1}x{1}",
            estimate.modes(),
            truth.modes()
        )));
    }
    let same_grid = estimate.n_bins() == truth.n_bins() && estimate.bin_spacing() == truth.bin_spacing();
    let truth = if same_grid {
        truth.clone()
    } else {
        truth.interpolate_onto(estimate.n_bins(), estimate.bin_spacing())?
    };
    let limit = band.unwrap_or(f64::INFINITY);
    let mut bins: Vec<usize> = (0..estimate.n_bins())
        .filter(|&k| estimate.frequency(k).abs() <= limit)
        .collect();
    if bins.is_empty() {
        return Err(crate::error::invalid("no bins inside the comparison band"));
    }
    bins.sort_by(|&a, &b| estimate.frequency(a).total_cmp(&estimate.frequency(b)));

    let pairs: Vec<_> = bins
        .iter()
        .map(|&k| (estimate.response(k), truth.response(k)))
        .collect();
    let (mut num, mut den) = (C64::new(0.0, 0.0), 0.0);
    for (e, t) in &pairs {
        num += e.iter().zip(t.iter()).map(|(a, b)| a.conj() * b).sum::<C64>();
        den += linalg::frobenius_sq(e);
    }
    let gain = if den > 0.0 { num / den } else { C64::new(1.0, 0.0) };

    let to_db = |err: f64, norm: f64| {
        if norm == 0.0 {
            if err == 0.0 {
                FLOOR_DB
            } else {
                f64::INFINITY
            }
        } else {
            (10.0 * (err / norm).log10()).max(FLOOR_DB)
        }
    };
    let (mut err_sum, mut norm_sum) = (0.0, 0.0);
    let nmse_db = pairs
        .iter()
        .map(|(e, t)| {
            let err = linalg::frobenius_sq(&(e * gain - t));
            let norm = linalg::frobenius_sq(t);
            err_sum += err;
            norm_sum += norm;
            to_db(err, norm)
        })
        .collect();
    Ok(ChannelComparison {
        frequencies: bins.iter().map(|&k| estimate.frequency(k)).collect(),
        nmse_db,
        summary_db: to_db(err_sum, norm_sum),
        gain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_sim::synthesize_mimo_channel;

    #[test]
    fn identical_and_rotated_estimates_hit_the_floor() {
        let h = synthesize_mimo_channel(4, 2.0, 1e-10, 256, 1e8, 1).unwrap();
        assert_eq!(compare_channels(&h, &h, None).unwrap().summary_db, FLOOR_DB);
        let rot = C64::from_polar(3.0, 1.1);
        let scaled = MimoChannel::new(h.matrices().iter().map(|m| m * rot).collect(), 1e8).unwrap();
        let c = compare_channels(&scaled, &h, None).unwrap();
        assert_eq!(c.summary_db, FLOOR_DB);
        assert!(c.nmse_db.iter().all(|&v| v == FLOOR_DB));
    }

    #[test]
    fn band_limits_and_mismatch() {
        let h = synthesize_mimo_channel(2, 0.0, 0.0, 64, 1e9, 1).unwrap();
        let c = compare_channels(&h, &h, Some(10e9)).unwrap();
        assert_eq!(c.frequencies.len(), 21);
        assert!(c.frequencies.windows(2).all(|w| w[1] > w[0]));
        let g = synthesize_mimo_channel(4, 0.0, 0.0, 64, 1e9, 1).unwrap();
        assert!(matches!(
            compare_channels(&h, &g, None),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn known_perturbation_gives_known_nmse() {
        let h = MimoChannel::identity(2, 32, 1e9).unwrap();
        let mut m = h.matrices().to_vec();
        m.iter_mut().for_each(|a| a[(0, 1)] = C64::new(0.1, 0.0));
        let e = MimoChannel::new(m, 1e9).unwrap();
        let c = compare_channels(&e, &h, None).unwrap();
        // Projection of the truth onto the estimate: g = 2 / 2.01.
        assert!((c.gain.re - 2.0 / 2.01).abs() < 1e-12);
        let residual = 2.0 - 4.0 / 2.01;
        assert!((c.summary_db - 10.0 * (residual / 2.0f64).log10()).abs() < 1e-9);
    }
}
