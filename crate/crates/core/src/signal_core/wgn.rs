use rand_distr::{Distribution, StandardNormal};

use super::{ComplexSignal, MimoSignal};
use crate::error::{invalid, Result};
use crate::rng;
use crate::C64;

/// Circularly-symmetric complex Gaussian noise with the given mean power.
///
/// Real and imaginary parts are independent with variance `mean_power / 2`.
pub fn generate_wgn(n_samples: usize, sample_rate: f64, mean_power: f64, seed: u64) -> Result<ComplexSignal> {
    check(n_samples, mean_power)?;
    let samples = gaussian_samples(n_samples, mean_power, seed, 0);
    ComplexSignal::new(samples, sample_rate)
}

/// `modes` mutually independent WGN tributaries (one stream per tributary).
pub fn generate_wgn_mimo(
    modes: usize,
    n_samples: usize,
    sample_rate: f64,
    mean_power: f64,
    seed: u64,
) -> Result<MimoSignal> {
    check(n_samples, mean_power)?;
    if modes == 0 {
        return Err(invalid("at least one tributary is required"));
    }
    let tributaries = (0..modes as u64)
        .map(|m| gaussian_samples(n_samples, mean_power, seed, m))
        .collect();
    MimoSignal::new(tributaries, sample_rate)
}

fn check(n_samples: usize, mean_power: f64) -> Result<()> {
    if n_samples == 0 {
        return Err(invalid("n_samples must be at least 1"));
    }
    if !(mean_power.is_finite() && mean_power > 0.0) {
        return Err(invalid(format!("mean power must be positive, got {mean_power}")));
    }
    Ok(())
}

pub(crate) fn gaussian_samples(n: usize, mean_power: f64, seed: u64, stream: u64) -> Vec<C64> {
    let mut rng = rng::stream(seed, stream);
    let sigma = (mean_power / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(sigma * re, sigma * im)
        })
        .collect()
}
