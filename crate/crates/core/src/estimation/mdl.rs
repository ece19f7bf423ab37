use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel_sim::MimoChannel;
use crate::error::{invalid, Result};
use crate::linalg;

/// A bin is singular when its smallest singular value is below this
/// fraction of the largest.
const SINGULAR_RATIO: f64 = 1e-12;

/// Mode-dependent loss per frequency (polarization-dependent loss for two
/// tributaries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdlSpectrum {
    /// Hz, ascending.
    pub frequencies: Vec<f64>,
    /// `20 log10(s_max / s_min)` per bin.
    pub mdl_db: Vec<f64>,
    /// Per bin, descending.
    pub singular_values: Vec<Vec<f64>>,
    /// Bins left out of the summaries.
    pub singular: Vec<bool>,
}

/// SVD of every bin with `|f| <= band` (all bins for `None`).
pub fn mdl_from_channel(channel: &MimoChannel, band: Option<f64>) -> Result<MdlSpectrum> {
    if channel.modes() < 2 {
        return Err(invalid("MDL needs at least two tributaries"));
    }
    let limit = band.unwrap_or(f64::INFINITY);
    let mut bins: Vec<usize> = (0..channel.n_bins())
        .filter(|&k| channel.frequency(k).abs() <= limit)
        .collect();
    bins.sort_by(|&a, &b| channel.frequency(a).total_cmp(&channel.frequency(b)));
    let singular_values: Vec<Vec<f64>> = bins
        .par_iter()
        .map(|&k| linalg::singular_values(channel.matrix(k)))
        .collect();
    let mut mdl_db = Vec::with_capacity(bins.len());
    let mut singular = Vec::with_capacity(bins.len());
    for s in &singular_values {
        let (hi, lo) = (s[0], s[s.len() - 1]);
        let flagged = !(lo >= SINGULAR_RATIO * hi) || hi == 0.0;
        singular.push(flagged);
        mdl_db.push(if flagged {
            f64::INFINITY
        } else {
            20.0 * (hi / lo).log10()
        });
    }
    Ok(MdlSpectrum {
        frequencies: bins.iter().map(|&k| channel.frequency(k)).collect(),
        mdl_db,
        singular_values,
        singular,
    })
}

impl MdlSpectrum {
    fn valid(&self) -> impl Iterator<Item = f64> + '_ {
        self.mdl_db
            .iter()
            .zip(&self.singular)
            .filter(|(_, s)| !**s)
            .map(|(v, _)| *v)
    }

    /// Mean over non-singular bins.
    pub fn mean_db(&self) -> Option<f64> {
        let n = self.valid().count();
        (n > 0).then(|| self.valid().sum::<f64>() / n as f64)
    }

    pub fn max_db(&self) -> Option<f64> {
        self.valid().reduce(f64::max)
    }

    /// `frequency_hz,mdl_db` rows; singular bins are skipped.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        w.write_record(["frequency_hz", "mdl_db"]).map_err(csv_error)?;
        for ((f, v), s) in self.frequencies.iter().zip(&self.mdl_db).zip(&self.singular) {
            if !s {
                w.write_record([f.to_string(), v.to_string()])
                    .map_err(csv_error)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_error(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Format(e.to_string())
}
