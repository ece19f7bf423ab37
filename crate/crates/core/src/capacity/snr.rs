use crate::error::{invalid, Error, Result};
use crate::signal_core::ComplexSignal;
use crate::C64;

/// Reported in place of an infinite SNR.
pub const SNR_CAP_DB: f64 = 80.0;

/// SNR of `f_eq` against the reference `f_in` after a least-squares complex
/// gain fit, in dB, capped at [`SNR_CAP_DB`].
pub fn estimate_snr(f_in: &ComplexSignal, f_eq: &ComplexSignal) -> Result<f64> {
    check_pair(f_in.samples(), f_eq.samples())?;
    let (x, y) = (f_in.samples(), f_eq.samples());
    let px = x.iter().map(|v| v.norm_sqr()).sum::<f64>();
    if !(px > 0.0) {
        return Err(invalid("reference signal has zero power"));
    }
    let g = ls_gain(x, y);
    let err = residual_power(x, y, g) * x.len() as f64;
    let signal = g.norm_sqr() * px;
    if err <= signal * 10f64.powf(-SNR_CAP_DB / 10.0) {
        return Ok(SNR_CAP_DB);
    }
    Ok((10.0 * (signal / err).log10()).min(SNR_CAP_DB))
}

pub(crate) fn check_pair(x: &[C64], y: &[C64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "reference has {} samples, equalized field {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(invalid("empty signals"));
    }
    Ok(())
}

/// `g` minimizing `sum |y - g x|^2`.
pub(crate) fn ls_gain(x: &[C64], y: &[C64]) -> C64 {
    let (mut num, mut den) = (C64::new(0.0, 0.0), 0.0);
    for (a, b) in x.iter().zip(y) {
        num += b * a.conj();
        den += a.norm_sqr();
    }
    if den > 0.0 {
        num / den
    } else {
        C64::new(0.0, 0.0)
    }
}

/// Mean of `|y - g x|^2`.
pub(crate) fn residual_power(x: &[C64], y: &[C64], g: C64) -> f64 {
    x.iter().zip(y).map(|(a, b)| (b - g * a).norm_sqr()).sum::<f64>() / x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_core::generate_wgn;

    #[test]
    fn identical_and_scaled_copies_hit_the_cap() {
        let x = generate_wgn(1000, 1.0, 1.0, 1).unwrap();
        assert_eq!(estimate_snr(&x, &x).unwrap(), SNR_CAP_DB);
        let y = ComplexSignal::new(x.samples().iter().map(|v| v * 2.0).collect(), 1.0).unwrap();
        assert_eq!(estimate_snr(&x, &y).unwrap(), SNR_CAP_DB);
    }

    #[test]
    fn constructed_ten_db() {
        let x = generate_wgn(1_000_000, 1.0, 1.0, 1).unwrap();
        let n = generate_wgn(1_000_000, 1.0, 0.1, 2).unwrap();
        let y = ComplexSignal::new(
            x.samples().iter().zip(n.samples()).map(|(a, b)| a + b).collect(),
            1.0,
        )
        .unwrap();
        let snr = estimate_snr(&x, &y).unwrap();
        assert!((snr - 10.0).abs() < 0.1, "{snr}");
    }

    #[test]
    fn zero_reference_is_an_error() {
        let z = ComplexSignal::new(vec![C64::new(0.0, 0.0); 10], 1.0).unwrap();
        assert!(estimate_snr(&z, &z).is_err());
    }
}
