use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Result};
use crate::signal_core::ComplexSignal;
use crate::C64;

/// Auxiliary ring constellation matched to a circular Gaussian input.
///
/// Ring `k` represents the `k`-th of `n` equiprobable annuli of the
/// Rayleigh magnitude distribution; its radius is the conditional mean
/// magnitude inside the annulus, rescaled so the constellation carries
/// `mean_power`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingConstellation {
    pub radii: Vec<f64>,
    pub priors: Vec<f64>,
    pub phase_points: usize,
    /// Power of the Gaussian input the annuli were cut from.
    pub mean_power: f64,
}

pub fn build_ring_constellation(
    n_rings: usize,
    mean_power: f64,
    phase_points: usize,
) -> Result<RingConstellation> {
    if n_rings == 0 {
        return Err(invalid("at least one ring is required"));
    }
    if phase_points < 4 {
        return Err(invalid(format!(
            "phase_points must be at least 4, got {phase_points}"
        )));
    }
    if !(mean_power.is_finite() && mean_power > 0.0) {
        return Err(invalid(format!("mean power must be positive, got {mean_power}")));
    }
    // Unit-power Rayleigh: r^2 ~ Exp(1), density 2 r exp(-r^2).
    let b = unit_boundaries(n_rings);
    let partial = |r: f64| {
        // int_r^inf s * 2 s exp(-s^2) ds
        if r.is_infinite() {
            0.0
        } else {
            r * (-r * r).exp() + 0.5 * PI.sqrt() * erfc(r)
        }
    };
    let mut radii: Vec<f64> = b
        .windows(2)
        .map(|w| (partial(w[0]) - partial(w[1])) * n_rings as f64)
        .collect();
    let power = radii.iter().map(|r| r * r).sum::<f64>() / n_rings as f64;
    let scale = (mean_power / power).sqrt();
    radii.iter_mut().for_each(|r| *r *= scale);
    Ok(RingConstellation {
        radii,
        priors: vec![1.0 / n_rings as f64; n_rings],
        phase_points,
        mean_power,
    })
}

/// Annulus edges of a unit-power Rayleigh split into `n` equal-probability
/// pieces; the last edge is infinite.
fn unit_boundaries(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            if k == n {
                f64::INFINITY
            } else {
                (-(1.0 - k as f64 / n as f64).ln()).sqrt()
            }
        })
        .collect()
}

impl RingConstellation {
    pub fn n_rings(&self) -> usize {
        self.radii.len()
    }

    pub fn size(&self) -> usize {
        self.n_rings() * self.phase_points
    }

    /// Annulus edges in amplitude, `n_rings + 1` values from 0 to infinity.
    pub fn boundaries(&self) -> Vec<f64> {
        let s = self.mean_power.sqrt();
        unit_boundaries(self.n_rings())
            .into_iter()
            .map(|b| b * s)
            .collect()
    }

    pub fn point(&self, ring: usize, phase: usize) -> C64 {
        C64::from_polar(
            self.radii[ring],
            2.0 * PI * phase as f64 / self.phase_points as f64,
        )
    }

    /// All points, ring-major.
    pub fn points(&self) -> Vec<C64> {
        (0..self.n_rings())
            .flat_map(|k| (0..self.phase_points).map(move |p| (k, p)))
            .map(|(k, p)| self.point(k, p))
            .collect()
    }

    /// Ring of the annulus containing `|x|` (a value on an edge goes to the
    /// inner ring) and nearest phase index.
    pub fn quantize_index(&self, x: C64, edges: &[f64]) -> (usize, usize) {
        let a = x.norm();
        let inner = &edges[1..edges.len() - 1];
        let ring = inner.partition_point(|&b| b < a);
        let step = 2.0 * PI / self.phase_points as f64;
        let phase = (x.arg() / step).round().rem_euclid(self.phase_points as f64) as usize;
        (ring, phase % self.phase_points)
    }
}

/// Maps every sample to its constellation point.
pub fn quantize_to_rings(signal: &ComplexSignal, rings: &RingConstellation) -> Vec<C64> {
    let edges = rings.boundaries();
    signal
        .samples()
        .iter()
        .map(|&x| {
            let (k, p) = rings.quantize_index(x, &edges);
            rings.point(k, p)
        })
        .collect()
}
